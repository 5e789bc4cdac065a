// sgrid.hpp — radial collocation grid in s = sqrt(psi).
//
// All psi-dependence in the library is represented through the variable
// s = psi^(1/2) on [0,1], where every field of interest is smooth.  The grid
// is Chebyshev–Gauss–Lobatto mapped to [0,1], ascending, with s = 0 and
// s = 1 present exactly.  The grid owns its differentiation matrices,
// Clenshaw–Curtis quadrature weights and barycentric weights; grids are
// immutable and shared by const pointer.
#pragma once

#include <cmath>
#include <complex>
#include <memory>
#include <stdexcept>
#include <vector>

namespace flowline {

using cplx = std::complex<double>;

class SGrid {
public:
    // Factory; grids are always handled through shared_ptr<const SGrid>.
    static std::shared_ptr<const SGrid> make(int n_nodes) {
        return std::shared_ptr<const SGrid>(new SGrid(n_nodes));
    }

    int size() const { return n_; }
    const std::vector<double>& nodes() const { return s_; }
    double node(int i) const { return s_[i]; }

    // First/second derivative in s, exact on polynomials of degree < N.
    const std::vector<double>& d1() const { return d1_; }
    const std::vector<double>& d2() const { return d2_; }

    // Clenshaw–Curtis weights for \int_0^1 f(s) ds on the nodes.
    const std::vector<double>& quad_weights() const { return w_; }

    // Barycentric weights for interpolation off the grid.
    const std::vector<double>& bary_weights() const { return bw_; }

    // Evaluate the interpolant of `values` at point x in [0,1].
    template <class T>
    T interpolate(const std::vector<T>& values, double x) const {
        // Exact hit on a node avoids the 0/0 in the barycentric formula.
        for (int i = 0; i < n_; ++i)
            if (x == s_[i]) return values[i];
        T num{};
        double den = 0.0;
        for (int i = 0; i < n_; ++i) {
            const double c = bw_[i] / (x - s_[i]);
            num += values[i] * c;
            den += c;
        }
        return num / den;
    }

    template <class T>
    std::vector<T> apply(const std::vector<double>& mat, const std::vector<T>& v) const {
        std::vector<T> out(n_, T{});
        for (int i = 0; i < n_; ++i) {
            T acc{};
            const double* row = mat.data() + static_cast<std::size_t>(i) * n_;
            for (int j = 0; j < n_; ++j) acc += row[j] * v[j];
            out[i] = acc;
        }
        return out;
    }

    // Spectral derivative of grid values.  The constant part is removed
    // first so constants are annihilated exactly, not just to the
    // re-association error of the negated-row-sum diagonal.
    template <class T>
    std::vector<T> derivative(const std::vector<T>& v, int order) const {
        std::vector<T> shifted(v);
        const T v0 = v[0];
        for (auto& x : shifted) x -= v0;
        return apply(order == 1 ? d1_ : d2_, shifted);
    }

private:
    explicit SGrid(int n_nodes) : n_(n_nodes) {
        if (n_ < 4) throw std::invalid_argument("SGrid: need at least 4 nodes");
        const int m = n_ - 1;
        s_.resize(n_);
        for (int j = 0; j < n_; ++j)
            s_[j] = 0.5 * (1.0 - std::cos(M_PI * j / m));
        s_[0] = 0.0;
        s_[m] = 1.0;

        // Barycentric weights of CGL nodes (affine maps leave them valid
        // up to a common factor).
        bw_.assign(n_, 0.0);
        for (int j = 0; j < n_; ++j) {
            double b = (j % 2 == 0) ? 1.0 : -1.0;
            if (j == 0 || j == m) b *= 0.5;
            bw_[j] = b;
        }

        // Differentiation matrix from the barycentric weights, with the
        // negated-row-sum diagonal for accuracy.
        d1_.assign(static_cast<std::size_t>(n_) * n_, 0.0);
        for (int i = 0; i < n_; ++i) {
            double diag = 0.0;
            for (int j = 0; j < n_; ++j) {
                if (i == j) continue;
                const double dij = (bw_[j] / bw_[i]) / (s_[i] - s_[j]);
                d1_[static_cast<std::size_t>(i) * n_ + j] = dij;
                diag -= dij;
            }
            d1_[static_cast<std::size_t>(i) * n_ + i] = diag;
        }
        d2_ = matmul(d1_, d1_);

        // Clenshaw–Curtis weights on [-1,1], scaled to [0,1].  Our node j
        // corresponds to the standard angle theta_j = pi j / m.
        w_.assign(n_, 0.0);
        for (int j = 0; j <= m; ++j) {
            const double theta = M_PI * j / m;
            double sum = 0.0;
            for (int k = 1; k <= m / 2; ++k) {
                const double bk = (2 * k == m) ? 1.0 : 2.0;
                sum += bk * std::cos(2.0 * k * theta) / (4.0 * k * k - 1.0);
            }
            double wj = (2.0 / m) * (1.0 - sum);
            if (j == 0 || j == m) wj *= 0.5;
            w_[j] = 0.5 * wj;  // scale from [-1,1] to [0,1]
        }
    }

    std::vector<double> matmul(const std::vector<double>& a, const std::vector<double>& b) const {
        std::vector<double> c(static_cast<std::size_t>(n_) * n_, 0.0);
        for (int i = 0; i < n_; ++i)
            for (int k = 0; k < n_; ++k) {
                const double aik = a[static_cast<std::size_t>(i) * n_ + k];
                if (aik == 0.0) continue;
                for (int j = 0; j < n_; ++j)
                    c[static_cast<std::size_t>(i) * n_ + j] += aik * b[static_cast<std::size_t>(k) * n_ + j];
            }
        return c;
    }

    int n_;
    std::vector<double> s_, d1_, d2_, w_, bw_;
};

using SGridPtr = std::shared_ptr<const SGrid>;

// Complex-valued function sampled on an SGrid.
struct SGridFunction {
    SGridPtr grid;
    std::vector<cplx> values;

    SGridFunction() = default;
    explicit SGridFunction(SGridPtr g) : grid(std::move(g)), values(grid->size(), cplx{}) {}
    SGridFunction(SGridPtr g, std::vector<cplx> v) : grid(std::move(g)), values(std::move(v)) {
        if (static_cast<int>(values.size()) != grid->size())
            throw std::invalid_argument("SGridFunction: length does not match grid");
    }

    // Sample a callable of s on the grid.
    template <class F>
    static SGridFunction sample(const SGridPtr& g, F&& f) {
        SGridFunction out(g);
        for (int i = 0; i < g->size(); ++i) out.values[i] = cplx(f(g->node(i)));
        return out;
    }

    int size() const { return grid->size(); }
    cplx operator()(double s) const { return grid->interpolate(values, s); }

    SGridFunction& operator+=(const SGridFunction& o) {
        for (std::size_t i = 0; i < values.size(); ++i) values[i] += o.values[i];
        return *this;
    }
    SGridFunction& operator-=(const SGridFunction& o) {
        for (std::size_t i = 0; i < values.size(); ++i) values[i] -= o.values[i];
        return *this;
    }
    SGridFunction& operator*=(cplx c) {
        for (auto& v : values) v *= c;
        return *this;
    }
    friend SGridFunction operator+(SGridFunction a, const SGridFunction& b) { return a += b; }
    friend SGridFunction operator-(SGridFunction a, const SGridFunction& b) { return a -= b; }
    friend SGridFunction operator*(cplx c, SGridFunction a) { return a *= c; }

    double max_abs() const {
        double m = 0.0;
        for (const auto& v : values) m = std::max(m, std::abs(v));
        return m;
    }
};

// Spectral derivative in s of order 1 or 2.
inline SGridFunction diff_s(const SGridFunction& f, int order) {
    if (order != 1 && order != 2)
        throw std::invalid_argument("diff_s: order must be 1 or 2");
    return SGridFunction(f.grid, f.grid->derivative(f.values, order));
}

// \int_0^1 f(s) ds by Clenshaw–Curtis on the grid nodes.
inline cplx integrate_s(const SGridFunction& f) {
    cplx acc{};
    const auto& w = f.grid->quad_weights();
    for (int i = 0; i < f.size(); ++i) acc += w[i] * f.values[i];
    return acc;
}

}  // namespace flowline
