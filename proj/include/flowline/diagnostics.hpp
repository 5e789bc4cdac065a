// diagnostics.hpp — desk-scale numerical verification of the supporting
// inequalities and identities: the Hardy inequality, the cokernel
// orthogonality of the leading vorticity term, norm boundedness of the
// linear inverse, and strip-margin reporting for converged solutions.
//
// Every check is driven by a seeded RNG and reports a PropertyReport that is
// reproducible from (name, seed, samples).
#pragma once

#include <cmath>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "flowline/field_ops.hpp"
#include "flowline/linear_solver.hpp"
#include "flowline/norms.hpp"
#include "flowline/solver.hpp"

namespace flowline {

struct PropertyReport {
    std::string name;
    unsigned long long seed = 0;
    int samples = 0;
    double worst_ratio = 0.0;
    double bound = 0.0;
    bool pass = false;
    std::string details;

    std::string text_line() const {
        std::ostringstream os;
        os << (pass ? "PASS" : "FAIL") << " " << name << " seed=" << seed
           << " samples=" << samples << " worst_ratio=" << worst_ratio
           << " bound=" << bound;
        if (!details.empty()) os << " (" << details << ")";
        return os.str();
    }
};

namespace detail {

// Exact L^2[0,1] inner products of terms c * y^e * (log y)^l, l in {0,1,2}:
//   int y^e dy = 1/(e+1),  int y^e log y = -1/(e+1)^2,  int y^e log^2 y = 2/(e+1)^3.
struct PowerLogTerm {
    double coef, expo;
    int logpow;
};

inline double power_log_l2(const std::vector<PowerLogTerm>& terms) {
    double acc = 0.0;
    for (const auto& t1 : terms)
        for (const auto& t2 : terms) {
            const double e = t1.expo + t2.expo;
            const int l = t1.logpow + t2.logpow;
            double integral;
            if (l == 0) integral = 1.0 / (e + 1.0);
            else if (l == 1) integral = -1.0 / ((e + 1.0) * (e + 1.0));
            else integral = 2.0 / ((e + 1.0) * (e + 1.0) * (e + 1.0));
            acc += t1.coef * t2.coef * integral;
        }
    return acc;
}

}  // namespace detail

// Hardy weighted-average ratio ||T_alpha f|| / ||f|| for a polynomial
// f = sum c_j y^j, computed from closed-form integrals.  The branch follows
// the inequality: integral from 0 for alpha < 1/2, from y to 1 for alpha > 1/2.
inline double hardy_ratio(const std::vector<double>& poly_coeffs, double alpha) {
    if (alpha == 0.5) throw std::invalid_argument("hardy_ratio: alpha = 1/2 is the excluded critical case");
    std::vector<detail::PowerLogTerm> f, Tf;
    for (std::size_t j = 0; j < poly_coeffs.size(); ++j) {
        const double c = poly_coeffs[j];
        if (c == 0.0) continue;
        f.push_back({c, double(j), 0});
        const double denom = double(j) + 1.0 - alpha;
        if (alpha < 0.5) {
            // y^{alpha-1} int_0^y x^{j-alpha} dx = y^j / (j+1-alpha)
            Tf.push_back({c / denom, double(j), 0});
        } else if (std::abs(denom) < 1e-12) {
            // resonant power: y^{alpha-1} int_y^1 x^{-1} dx = -y^j log y
            Tf.push_back({-c, double(j), 1});
        } else {
            // y^{alpha-1} int_y^1 x^{j-alpha} dx = (y^{alpha-1} - y^j)/(j+1-alpha)
            Tf.push_back({c / denom, alpha - 1.0, 0});
            Tf.push_back({-c / denom, double(j), 0});
        }
    }
    const double nf = detail::power_log_l2(f);
    const double nT = detail::power_log_l2(Tf);
    return std::sqrt(nT / nf);
}

// Hardy inequality check: worst measured ratio over random smooth polynomials
// against the constant 1/|1/2 - alpha|.
inline PropertyReport check_hardy(double alpha, int trials, unsigned long long seed = 20240101,
                                  double slack = 0.05) {
    if (alpha == 0.5)
        throw std::invalid_argument("check_hardy: alpha = 1/2 excluded");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss;
    PropertyReport rep;
    rep.name = "hardy(alpha=" + std::to_string(alpha) + ")";
    rep.seed = seed;
    rep.samples = trials;
    rep.bound = 1.0 / std::abs(0.5 - alpha);
    for (int t = 0; t < trials; ++t) {
        std::vector<double> coeffs(11);
        for (std::size_t j = 0; j < coeffs.size(); ++j)
            coeffs[j] = gauss(rng) * std::exp(-0.5 * double(j));
        rep.worst_ratio = std::max(rep.worst_ratio, hardy_ratio(coeffs, alpha));
    }
    rep.pass = rep.worst_ratio <= rep.bound * (1.0 + slack);
    return rep;
}

// Closed-form leading vorticity Xi(psi^(1/2) xi) = 4/xi^2 + 6 (xi')^2/xi^4
// - 2 xi''/xi^3 evaluated on a fine grid; returns |oint . e^{+-2 i theta}|.
inline double cokernel_moment(const ThetaSeries& xi_series, int oversample = 8) {
    const int m = std::max(512, oversample * xi_series.mode_count()) | 1;
    std::vector<cplx> vals(m);
    const ThetaSeries d1 = diff_theta(xi_series, 1), d2 = diff_theta(xi_series, 2);
    for (int j = 0; j < m; ++j) {
        const double theta = 2.0 * M_PI * j / m;
        const cplx x = xi_series.eval(theta), xp = d1.eval(theta), xpp = d2.eval(theta);
        vals[j] = 4.0 / (x * x) + 6.0 * (xp * xp) / (x * x * x * x) - 2.0 * xpp / (x * x * x);
    }
    const ThetaSeries lead = theta_transform(vals).resized(4);
    return 2.0 * M_PI * std::max(std::abs(lead.at(2)), std::abs(lead.at(-2)));
}

inline PropertyReport check_cokernel(int trials, double amplitude = 0.1,
                                     unsigned long long seed = 20240102) {
    if (!(amplitude > 0.0 && amplitude < 0.5))
        throw std::invalid_argument("check_cokernel: amplitude must keep xi positive");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss;
    PropertyReport rep;
    rep.name = "cokernel";
    rep.seed = seed;
    rep.samples = trials;
    rep.bound = 1e-9;
    for (int t = 0; t < trials; ++t) {
        ThetaSeries xi_series(8);
        xi_series.at(0) = 1.0;
        for (int k = 1; k <= 6; ++k) {
            const cplx c(gauss(rng), gauss(rng));
            xi_series.at(k) = 0.5 * std::exp(-0.5 * k) * c;
            xi_series.at(-k) = std::conj(xi_series.at(k));
        }
        // rescale the perturbation to the requested sup amplitude
        ThetaSeries pert = xi_series;
        pert.at(0) = 0.0;
        const double sup = pert.sup_norm();
        if (sup > 0.0) {
            const double scale = amplitude / sup;
            for (int k = 1; k <= 6; ++k) {
                xi_series.at(k) *= scale;
                xi_series.at(-k) = std::conj(xi_series.at(k));
            }
        }
        rep.worst_ratio = std::max(rep.worst_ratio, cokernel_moment(xi_series));
    }
    rep.pass = rep.worst_ratio < rep.bound;
    return rep;
}

namespace detail {

inline ThetaSeries random_series(int K, std::mt19937_64& rng, bool zero_pm2) {
    std::normal_distribution<double> gauss;
    ThetaSeries g(K);
    for (int k = -K; k <= K; ++k)
        g.at(k) = std::exp(-0.5 * std::abs(k)) * cplx(gauss(rng), gauss(rng));
    if (zero_pm2 && K >= 2) {
        g.at(2) = 0.0;
        g.at(-2) = 0.0;
    }
    return g;
}

// Random remainder field (h vanishing at s = 0) with decaying mode amplitudes.
inline BracketField random_remainder(int K, const SGridPtr& grid, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss;
    BracketField w(0.5, K, grid);
    for (int k = -K; k <= K; ++k) {
        const double amp = std::exp(-0.5 * std::abs(k));
        // smooth radial profile: s * (low-degree polynomial in s)
        std::vector<double> c(6);
        for (auto& v : c) v = gauss(rng);
        for (int i = 0; i < grid->size(); ++i) {
            const double s = grid->node(i);
            double p = 0.0, sp = s;
            for (const auto& v : c) {
                p += v * sp;
                sp *= s;
            }
            w.mode(k).values[i] = amp * p * cplx(1.0, gauss(rng) * 0.1);
        }
    }
    return w;
}

}  // namespace detail

// Empirical isomorphism constant of the linear inverse plus the
// forward-backward round-trip and gamma-independence checks.
inline PropertyReport check_linear_isomorphism(int trials, const SolveConfig& cfg,
                                               unsigned long long seed = 20240103,
                                               double constant_cap = 100.0) {
    std::mt19937_64 rng(seed);
    PropertyReport rep;
    rep.name = "linear-isomorphism";
    rep.seed = seed;
    rep.samples = trials;
    rep.bound = constant_cap;
    const auto grid = SGrid::make(cfg.N);
    int roundtrip_failures = 0;
    double worst_roundtrip = 0.0;

    for (int t = 0; t < trials; ++t) {
        // data: random g, random leading xi (tilde), remainder in the range
        // of the forward operator so the inverse is exercised end to end
        ThetaSeries g = detail::random_series(cfg.K, rng, false);
        ThetaSeries xi_lead = detail::random_series(cfg.K, rng, true);
        BracketField w_seed = detail::random_remainder(cfg.K, grid, rng);
        BracketField f = apply_L(w_seed);
        for (int k = -cfg.K; k <= cfg.K; ++k) {
            // strip any leading part the forward operator produced, then add
            // the prescribed leading coefficient
            const cplx lead = f.mode(k).values.front();
            for (auto& v : f.mode(k).values) v -= lead;
            for (auto& v : f.mode(k).values) v += xi_lead.at(k);
        }

        const double data_norm = x_sigma_norm(g, cfg.sigma, cfg.m - 0.5) +
                                 j_norm(f, cfg.gamma, cfg.m - 2, cfg.sigma);
        if (data_norm == 0.0) continue;
        const cplx inv_scale = 1.0 / data_norm;
        LinearData data{inv_scale * f, inv_scale * g};

        const LinearSolution sol = solve_linear(data);
        const double sol_norm = std::abs(sol.R) + std::abs(sol.px) + std::abs(sol.py) +
                                j_norm(sol.u, cfg.gamma, cfg.m, cfg.sigma);
        rep.worst_ratio = std::max(rep.worst_ratio, sol_norm);

        // round trip: L u must reproduce the (projected) data
        const BracketField back = apply_L(sol.u);
        double diff = 0.0, scale = std::max(1.0, data.f.max_abs_h());
        for (int k = -cfg.K; k <= cfg.K; ++k)
            for (int i = 0; i < grid->size(); ++i) {
                cplx want = data.f.mode(k).values[i];
                if (std::abs(k) == 2) want -= data.f.mode(k).values.front();
                diff = std::max(diff, std::abs(back.mode(k).values[i] - want));
            }
        worst_roundtrip = std::max(worst_roundtrip, diff / scale);
        if (diff / scale > 1e-8) ++roundtrip_failures;
    }
    rep.pass = rep.worst_ratio < constant_cap && roundtrip_failures == 0;
    std::ostringstream det;
    det << "roundtrip_failures=" << roundtrip_failures << " worst_roundtrip=" << worst_roundtrip;
    rep.details = det.str();
    return rep;
}

// Strip-margin report for a converged solution: the excursion estimate
// sigma + sum_k |d_k| e^{sigma |k|} of the angle deviation phi - theta must
// stay below the declared boundary width tau.
inline PropertyReport strip_margin_report(const FlowLineFamily& sol, const BoundaryCurve& b,
                                          const SolveConfig& cfg) {
    PropertyReport rep;
    rep.name = "strip-margin";
    rep.seed = 0;
    rep.samples = 1;
    rep.bound = 1.0;
    const PhiAngle phi = phi_angle(sol.R, sol.px, sol.py, sol.a.trace());
    double excursion = cfg.sigma;
    for (int k = 1; k <= phi.deviation.K(); ++k)
        excursion += (std::abs(phi.deviation.at(k)) + std::abs(phi.deviation.at(-k))) *
                     std::exp(cfg.sigma * k);
    rep.worst_ratio = excursion / b.tau;
    rep.pass = excursion <= b.tau;

    std::ostringstream det;
    det << "excursion=" << excursion << " tau=" << b.tau;
    auto width_of = [](const ThetaSeries& s) -> double {
        try {
            return analyticity_width(s).sigma_hat;
        } catch (const undefined_width_error&) {
            return std::numeric_limits<double>::infinity();
        }
    };
    det << " width(phi-theta)=" << width_of(phi.deviation)
        << " width(trace)=" << width_of(sol.a.trace());
    rep.details = det.str();
    return rep;
}

}  // namespace flowline
