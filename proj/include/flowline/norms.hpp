// norms.hpp — computable versions of the weighted function-space norms.
//
// kondratev_norm evaluates the K^m_gamma(Pi) norm of a bracket field by
// Clenshaw–Curtis quadrature in s = sqrt(psi).  The key identity making this
// exact is psi^(p-gamma) d_psi^p (psi^lambda h) = psi^(lambda-gamma) h_p with
// h_p produced by the first-order recursion
//     h_0 = h,   h_p = (lambda - p + 1) h_{p-1} + (s/2) d_s h_{p-1},
// so every integrand is a fixed power of s times a smooth factor and no
// singular division ever happens.
#pragma once

#include <cmath>
#include <limits>

#include "flowline/bracket_field.hpp"
#include "flowline/errors.hpp"

namespace flowline {

// Weighted norm of the X^m_sigma(T) scale: sum (1+k^2)^m e^{2 sigma |k|} |c_k|^2.
// m may be half-integer (the trace space X^{m-1/2} uses it that way).
inline double x_sigma_norm(const ThetaSeries& f, double sigma, double m) {
    if (sigma < 0.0) throw std::invalid_argument("x_sigma_norm: sigma must be >= 0");
    double acc = 0.0;
    for (int k = -f.K(); k <= f.K(); ++k) {
        const double a = std::abs(f.at(k));
        acc += std::pow(1.0 + double(k) * k, m) * std::exp(2.0 * sigma * std::abs(k)) * a * a;
    }
    return std::sqrt(acc);
}

namespace detail {

// Integrand cap controlling the divergence sentinel at the s = 0 node.
constexpr double kondratev_node_cap = 1e30;

}  // namespace detail

// K^m_gamma(Pi) norm of psi^lambda h, with optional exponential mode weight
// e^{2 sigma |k|} (sigma = 0 reproduces the plain Kondratev norm).  Returns
// +infinity when the weighted integrand diverges at the innermost node.
inline double kondratev_norm(const BracketField& w, double gamma, int m, double sigma = 0.0) {
    if (m < 0 || m > 4) throw std::invalid_argument("kondratev_norm: m out of supported range [0,4]");
    const auto& grid = *w.grid();
    const int n = grid.size();
    const auto& qw = grid.quad_weights();
    const double lead_exp = 4.0 * (w.lambda() - gamma) + 1.0;  // power of s in the s-integrand

    const double h_scale = std::max(w.max_abs_h(), 1e-300);

    double acc = 0.0;
    for (int k = -w.K(); k <= w.K(); ++k) {
        const double mode_weight = std::exp(2.0 * sigma * std::abs(k));
        // Radial derivative chain h_p for this mode.
        std::vector<cplx> hp = w.mode(k).values;
        for (int p = 0; p <= m; ++p) {
            if (p > 0) {
                // h_p = (lambda - p + 1) h_{p-1} + (s/2) d_s h_{p-1}
                std::vector<cplx> ds = grid.derivative(hp, 1);
                for (int i = 0; i < n; ++i)
                    hp[i] = (w.lambda() - (p - 1)) * hp[i] + 0.5 * grid.node(i) * ds[i];
            }
            // theta-derivative weight sum over q with p + q <= m:
            // Parseval gives the factor 2 pi k^{2q} per mode.
            double kq = 0.0, kpow = 1.0;
            for (int q = 0; q + p <= m; ++q) {
                kq += kpow;
                kpow *= double(k) * k;
            }
            // Quadrature of 2 s^lead_exp |h_p|^2 over [0,1].
            double integral = 0.0;
            for (int i = 0; i < n; ++i) {
                const double s = grid.node(i);
                const double a2 = std::norm(hp[i]);
                double val;
                if (i == 0) {
                    if (a2 <= 1e-26 * h_scale * h_scale) val = 0.0;
                    else if (lead_exp > 0.0) val = 0.0;
                    else if (lead_exp == 0.0) val = 2.0 * a2;
                    else val = std::numeric_limits<double>::infinity();
                } else {
                    val = 2.0 * std::pow(s, lead_exp) * a2;
                }
                if (!std::isfinite(val) || val > detail::kondratev_node_cap)
                    return std::numeric_limits<double>::infinity();
                integral += qw[i] * val;
            }
            acc += mode_weight * kq * 2.0 * M_PI * integral;
        }
    }
    return std::sqrt(acc);
}

// Analyticity-width estimate from Fourier decay.
struct WidthEstimate {
    double sigma_hat;  // least-squares decay slope of -log|c_k| vs |k|
    int k_lo, k_hi;    // fitted range
};

// Fits the decay slope over the upper half of the usable coefficient range,
// which keeps polynomial prefactors from biasing the estimate.  Throws
// undefined_width_error when the series shows no measurable decay.
inline WidthEstimate analyticity_width(const ThetaSeries& f, double floor = 1e-14) {
    std::vector<std::pair<int, double>> usable;  // (k, magnitude)
    for (int k = 1; k <= f.K(); ++k) {
        const double a = std::max(std::abs(f.at(k)), std::abs(f.at(-k)));
        if (a > floor) usable.emplace_back(k, a);
    }
    if (usable.size() < 8)
        throw undefined_width_error("analyticity_width: fewer than 8 coefficients above floor");

    const std::size_t lo = usable.size() / 2;
    const int k_lo = usable[lo].first;
    const int k_hi = usable.back().first;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double cnt = double(usable.size() - lo);
    for (std::size_t i = lo; i < usable.size(); ++i) {
        const double x = usable[i].first;
        const double y = -std::log(usable[i].second);
        sx += x; sy += y; sxx += x * x; sxy += x * y;
    }
    const double denom = cnt * sxx - sx * sx;
    if (denom <= 0.0)
        throw undefined_width_error("analyticity_width: degenerate fit range");
    const double slope = (cnt * sxy - sx * sy) / denom;
    if (!(slope > 0.0))
        throw undefined_width_error("analyticity_width: no asymptotic decay");
    return {slope, k_lo, k_hi};
}

// Norm of the J^{m,sigma}_{lambda,gamma} scale: leading term in X^m_sigma
// plus remainder in K^{m,sigma}_{lambda+gamma}.
inline double j_norm(const BracketField& field, double gamma, int m, double sigma) {
    auto [v, w] = decompose_leading(field);
    const double lead = x_sigma_norm(v, sigma, m);
    const double rem = kondratev_norm(w, field.lambda() + gamma, m, sigma);
    return std::sqrt(lead * lead + rem * rem);
}

}  // namespace flowline
