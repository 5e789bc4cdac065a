// bracket_field.hpp — fields of the form psi^lambda * h(s,theta).
//
// A BracketField stores the leading order lambda (a multiple of 1/2) and the
// smooth factor h as one radial SGridFunction per Fourier mode.  The actual
// field value is psi^lambda h = s^(2 lambda) h(s,theta); h itself is finite
// at s = 0, which is what makes every operation in the library regular at
// the stagnation point.
#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "flowline/sgrid.hpp"
#include "flowline/theta_series.hpp"

namespace flowline {

class BracketField {
public:
    BracketField() = default;
    BracketField(double lambda, int K, SGridPtr grid)
        : lambda_(lambda), K_(K), grid_(std::move(grid)),
          modes_(2 * K + 1, SGridFunction(grid_)) {}

    // Field psi^lambda * h0(s) with a single radial mode.
    static BracketField radial(double lambda, int K, const SGridFunction& h0) {
        BracketField f(lambda, K, h0.grid);
        f.mode(0) = h0;
        return f;
    }

    // The reference flow line family a = psi^(1/2), i.e. lambda = 1/2, h = 1.
    static BracketField reference(int K, const SGridPtr& grid) {
        BracketField f(0.5, K, grid);
        for (auto& v : f.mode(0).values) v = 1.0;
        return f;
    }

    double lambda() const { return lambda_; }
    int K() const { return K_; }
    const SGridPtr& grid() const { return grid_; }
    int n_radial() const { return grid_->size(); }

    SGridFunction& mode(int k) { return modes_[static_cast<std::size_t>(k + K_)]; }
    const SGridFunction& mode(int k) const { return modes_[static_cast<std::size_t>(k + K_)]; }

    // Multiplying by psi^alpha shifts lambda and leaves h untouched.
    BracketField shifted_lambda(double alpha) const {
        BracketField out = *this;
        out.lambda_ += alpha;
        return out;
    }

    // h(s=0, .) as a series: the leading coefficient v(theta).
    ThetaSeries leading() const {
        ThetaSeries v(K_);
        for (int k = -K_; k <= K_; ++k) v.at(k) = mode(k).values.front();
        return v;
    }

    // h(s=1, .) as a series: the boundary trace of psi^lambda h at psi = 1.
    ThetaSeries trace() const {
        ThetaSeries t(K_);
        for (int k = -K_; k <= K_; ++k) t.at(k) = mode(k).values.back();
        return t;
    }

    // Physical values of h on the tensor grid, row i = s_i, column j = theta_j.
    // `n_theta` >= 2K+1 gives padded evaluation for dealiased products.
    std::vector<std::vector<cplx>> h_physical(int n_theta = 0) const {
        const int m = n_theta > 0 ? n_theta : 2 * K_ + 1;
        std::vector<std::vector<cplx>> out(n_radial(), std::vector<cplx>(m));
        for (int i = 0; i < n_radial(); ++i)
            for (int j = 0; j < m; ++j) {
                const double theta = 2.0 * M_PI * j / m;
                cplx acc{};
                for (int k = -K_; k <= K_; ++k)
                    acc += mode(k).values[i] * std::polar(1.0, k * theta);
                out[i][j] = acc;
            }
        return out;
    }

    // Inverse of h_physical: re-expand rows of grid values in Fourier modes,
    // truncating to the cutoff K when the sampling is padded.
    static BracketField from_h_physical(double lambda, int K, const SGridPtr& grid,
                                        const std::vector<std::vector<cplx>>& values) {
        BracketField out(lambda, K, grid);
        const int m = static_cast<int>(values.front().size());
        for (int i = 0; i < grid->size(); ++i)
            for (int k = -K; k <= K; ++k) {
                cplx acc{};
                for (int j = 0; j < m; ++j)
                    acc += values[i][j] * std::polar(1.0, -k * (2.0 * M_PI * j / m));
                out.mode(k).values[i] = acc / static_cast<double>(m);
            }
        return out;
    }

    // Evaluate h at an arbitrary (s, theta).
    cplx h_at(double s, double theta) const {
        cplx acc{};
        for (int k = -K_; k <= K_; ++k)
            acc += mode(k)(s) * std::polar(1.0, k * theta);
        return acc;
    }

    // Full field value psi^lambda h at (s, theta).
    cplx value_at(double s, double theta) const {
        return std::pow(s, 2.0 * lambda_) * h_at(s, theta);
    }

    double max_abs_h() const {
        double m = 0.0;
        for (const auto& f : modes_) m = std::max(m, f.max_abs());
        return m;
    }

    // Enforce the real-field symmetry h_{-k} = conj(h_k) exactly.
    void hermitianize() {
        for (auto& v : mode(0).values) v = cplx(v.real(), 0.0);
        for (int k = 1; k <= K_; ++k)
            for (int i = 0; i < n_radial(); ++i) {
                const cplx avg = 0.5 * (mode(k).values[i] + std::conj(mode(-k).values[i]));
                mode(k).values[i] = avg;
                mode(-k).values[i] = std::conj(avg);
            }
    }

    bool is_real(double tol = 1e-10) const {
        for (int k = 0; k <= K_; ++k)
            for (int i = 0; i < n_radial(); ++i)
                if (std::abs(mode(k).values[i] - std::conj(mode(-k).values[i])) > tol)
                    return false;
        return true;
    }

    // Largest |h| over the physical tensor grid (by Parseval this bounds the
    // per-row magnitudes; used for residual sup norms).
    double sup_h_physical() const {
        double m = 0.0;
        for (const auto& row : h_physical())
            for (const auto& v : row) m = std::max(m, std::abs(v));
        return m;
    }

    BracketField& operator+=(const BracketField& o) {
        check_compatible(o);
        for (std::size_t i = 0; i < modes_.size(); ++i) modes_[i] += o.modes_[i];
        return *this;
    }
    BracketField& operator-=(const BracketField& o) {
        check_compatible(o);
        for (std::size_t i = 0; i < modes_.size(); ++i) modes_[i] -= o.modes_[i];
        return *this;
    }
    BracketField& operator*=(cplx c) {
        for (auto& f : modes_) f *= c;
        return *this;
    }
    friend BracketField operator+(BracketField a, const BracketField& b) { return a += b; }
    friend BracketField operator-(BracketField a, const BracketField& b) { return a -= b; }
    friend BracketField operator*(cplx c, BracketField a) { return a *= c; }

private:
    void check_compatible(const BracketField& o) const {
        if (o.K_ != K_ || o.grid_->size() != grid_->size())
            throw std::invalid_argument("BracketField: size mismatch");
        if (o.lambda_ != lambda_)
            throw std::invalid_argument("BracketField: cannot combine different leading orders");
    }

    double lambda_ = 0.0;
    int K_ = 0;
    SGridPtr grid_;
    std::vector<SGridFunction> modes_;
};

// Split F = v(theta) psi^lambda + w into the leading coefficient v = h(0,.)
// and the remainder w (same lambda, h with its s=0 value removed).
inline std::pair<ThetaSeries, BracketField> decompose_leading(const BracketField& F) {
    ThetaSeries v = F.leading();
    BracketField w = F;
    for (int k = -F.K(); k <= F.K(); ++k) {
        const cplx v0 = w.mode(k).values.front();
        for (auto& val : w.mode(k).values) val -= v0;
    }
    return {v, w};
}

// The solution triple (R, p, a): scale factor, stagnation point position and
// the flow-line family a = psi^(1/2) h with h(0,theta) = v(theta) > 0.
struct FlowLineFamily {
    double R = 1.0;
    double px = 0.0;
    double py = 0.0;
    BracketField a;

    static FlowLineFamily reference(int K, const SGridPtr& grid) {
        return {1.0, 0.0, 0.0, BracketField::reference(K, grid)};
    }
};

}  // namespace flowline
