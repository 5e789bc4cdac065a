// theta_series.hpp — complex Fourier series on the circle.
//
// ThetaSeries holds amplitudes c_k for k in {-K,...,K} and is the
// representation of every angular quantity in the library (boundary data,
// leading coefficients, traces).  Real-valued series keep the Hermitian
// symmetry c_{-k} = conj(c_k) exactly.
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include "flowline/errors.hpp"

namespace flowline {

using cplx = std::complex<double>;

inline std::vector<double> theta_nodes(int count) {
    std::vector<double> t(count);
    for (int j = 0; j < count; ++j) t[j] = 2.0 * M_PI * j / count;
    return t;
}

class ThetaSeries {
public:
    ThetaSeries() : K_(0), c_(1, cplx{}) {}
    explicit ThetaSeries(int K) : K_(K), c_(2 * K + 1, cplx{}) {
        if (K < 0) throw std::invalid_argument("ThetaSeries: K must be >= 0");
    }

    static ThetaSeries constant(int K, cplx value) {
        ThetaSeries s(K);
        s.at(0) = value;
        return s;
    }

    int K() const { return K_; }
    int mode_count() const { return 2 * K_ + 1; }

    cplx& at(int k) { return c_[static_cast<std::size_t>(k + K_)]; }
    const cplx& at(int k) const { return c_[static_cast<std::size_t>(k + K_)]; }
    cplx coeff_or_zero(int k) const { return std::abs(k) <= K_ ? at(k) : cplx{}; }

    const std::vector<cplx>& coeffs() const { return c_; }

    cplx eval(double theta) const {
        cplx acc{};
        for (int k = -K_; k <= K_; ++k)
            acc += at(k) * std::polar(1.0, k * theta);
        return acc;
    }

    // Values on the 2K+1 equispaced nodes (or any requested count).
    std::vector<cplx> sample(int count = 0) const {
        const int m = count > 0 ? count : mode_count();
        std::vector<cplx> out(m);
        for (int j = 0; j < m; ++j) out[j] = eval(2.0 * M_PI * j / m);
        return out;
    }

    // Copy into a different mode cutoff; modes beyond the target are dropped.
    ThetaSeries resized(int K_new) const {
        ThetaSeries out(K_new);
        const int kmax = std::min(K_, K_new);
        for (int k = -kmax; k <= kmax; ++k) out.at(k) = at(k);
        return out;
    }

    // Enforce c_{-k} = conj(c_k); used after transforms of real samples.
    void hermitianize() {
        at(0) = cplx(at(0).real(), 0.0);
        for (int k = 1; k <= K_; ++k) {
            const cplx avg = 0.5 * (at(k) + std::conj(at(-k)));
            at(k) = avg;
            at(-k) = std::conj(avg);
        }
    }

    bool is_real(double tol = 1e-12) const {
        for (int k = 0; k <= K_; ++k)
            if (std::abs(at(k) - std::conj(at(-k))) > tol) return false;
        return true;
    }

    double max_abs_coeff() const {
        double m = 0.0;
        for (const auto& v : c_) m = std::max(m, std::abs(v));
        return m;
    }

    double sup_norm(int oversample = 4) const {
        double m = 0.0;
        for (const auto& v : sample(oversample * mode_count())) m = std::max(m, std::abs(v));
        return m;
    }

    ThetaSeries& operator+=(const ThetaSeries& o) {
        check_same(o);
        for (std::size_t i = 0; i < c_.size(); ++i) c_[i] += o.c_[i];
        return *this;
    }
    ThetaSeries& operator-=(const ThetaSeries& o) {
        check_same(o);
        for (std::size_t i = 0; i < c_.size(); ++i) c_[i] -= o.c_[i];
        return *this;
    }
    ThetaSeries& operator*=(cplx s) {
        for (auto& v : c_) v *= s;
        return *this;
    }
    friend ThetaSeries operator+(ThetaSeries a, const ThetaSeries& b) { return a += b; }
    friend ThetaSeries operator-(ThetaSeries a, const ThetaSeries& b) { return a -= b; }
    friend ThetaSeries operator*(cplx s, ThetaSeries a) { return a *= s; }

private:
    void check_same(const ThetaSeries& o) const {
        if (o.K_ != K_) throw std::invalid_argument("ThetaSeries: mode cutoff mismatch");
    }

    int K_;
    std::vector<cplx> c_;
};

// Discrete Fourier transform of 2K+1 equispaced samples.  Direct O(K^2)
// summation; cutoffs in this library are small enough that FFTs buy nothing.
inline ThetaSeries theta_transform(const std::vector<cplx>& samples) {
    const int m = static_cast<int>(samples.size());
    if (m < 1 || m % 2 == 0)
        throw std::invalid_argument("theta_transform: sample count must be odd (2K+1)");
    const int K = (m - 1) / 2;
    ThetaSeries out(K);
    for (int k = -K; k <= K; ++k) {
        cplx acc{};
        for (int j = 0; j < m; ++j)
            acc += samples[j] * std::polar(1.0, -k * (2.0 * M_PI * j / m));
        out.at(k) = acc / static_cast<double>(m);
    }
    return out;
}

// Transform real samples and restore exact Hermitian symmetry.
inline ThetaSeries theta_transform_real(const std::vector<double>& samples) {
    std::vector<cplx> c(samples.begin(), samples.end());
    ThetaSeries out = theta_transform(c);
    out.hermitianize();
    return out;
}

// d^order/dtheta^order in coefficient space: c_k <- (ik)^order c_k.
inline ThetaSeries diff_theta(const ThetaSeries& f, int order) {
    if (order < 0) throw std::invalid_argument("diff_theta: order must be >= 0");
    ThetaSeries out = f;
    for (int k = -f.K(); k <= f.K(); ++k) {
        cplx factor = 1.0;
        for (int p = 0; p < order; ++p) factor *= cplx(0.0, k);
        out.at(k) = f.at(k) * factor;
    }
    return out;
}

}  // namespace flowline
