// solver.hpp — Newton solution of Xi(a) = F, B = 0.
//
// The default step is the implicit-function-theorem contraction: the frozen
// reference inverse (the explicit linear solve of linear_solver.hpp) applied
// to the current residual.  The residual is mapped into the linear solver's
// data convention by the two linearization factors at the reference,
//   d Xi[u] = -8 psi^{-1/2} L u      (interior scaled by -1/8 after the
//                                     psi^{1/2} shift),
//   d B[.]  =  2 (R-part + p-part + u(1,theta))   (boundary divided by 2),
// so the update is (R,p,a) <- (R,p,a) - damping * solve_linear(mapped data).
//
// jacobian_mode = finite_difference_full switches to a Gauss–Newton step on
// the discrete (R, p, h-grid) coordinates with a forward-difference Jacobian,
// for targets outside the contraction basin of the frozen map.
#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "flowline/field_ops.hpp"
#include "flowline/linear_solver.hpp"
#include "flowline/norms.hpp"

namespace flowline {

enum class JacobianMode { frozen_reference, finite_difference_full };

struct SolveConfig {
    // The residual-evaluation noise floor scales like eps * N^4 * |h - 1|,
    // about 1e-10 for O(0.05) deviations at N = 48; the default tolerance
    // sits above it.  Problems staying very close to the reference solve to
    // 1e-12 and callers may tighten accordingly.
    int K = 32;
    int N = 48;
    double gamma = 0.75;
    double sigma = 0.2;
    int m = 4;
    double tol_residual = 1e-9;
    int max_iter = 60;
    double damping = 1.0;
    int continuation_steps = 1;
    JacobianMode jacobian_mode = JacobianMode::frozen_reference;
    double bracket_tol = 1e-6;

    void validate() const {
        if (!(gamma > 0.5 && gamma < 1.0))
            throw validation_error("numerics.gamma", "require 1/2 < gamma < 1");
        if (m <= 3) throw validation_error("numerics.m", "require m > 3");
        if (K < 8) throw validation_error("numerics.K", "require K >= 8");
        if (N < 16) throw validation_error("numerics.N", "require N >= 16");
        if (!(sigma > 0.0)) throw validation_error("numerics.sigma", "require sigma > 0");
        if (!(damping > 0.0 && damping <= 1.0))
            throw validation_error("numerics.damping", "require damping in (0, 1]");
        if (continuation_steps < 1)
            throw validation_error("numerics.continuation_steps", "require at least 1 step");
        if (!(tol_residual > 0.0))
            throw validation_error("numerics.tol_residual", "require a positive tolerance");
        if (max_iter < 1) throw validation_error("numerics.max_iter", "require max_iter >= 1");
    }

    SGridPtr make_grid() const { return SGrid::make(N); }
};

enum class SolveStatus { converged, max_iterations, stalled, failed };

struct ContinuationRecord {
    double t = 0.0;
    int iterations = 0;
    double final_residual = 0.0;
    bool converged = false;
};

struct SolveReport {
    FlowLineFamily solution;
    SolveStatus status = SolveStatus::failed;
    int iterations = 0;
    // per accepted iterate: (interior sup, boundary sup, cokernel moment magnitude)
    std::vector<std::array<double, 3>> residual_history;
    double analyticity_width_of_trace = std::numeric_limits<double>::infinity();
    double j_distance = 0.0;   // J-norm of a - psi^(1/2)
    double r_distance = 0.0;   // |R - 1|
    double p_norm = 0.0;       // |p|
    std::string message;
    std::vector<ContinuationRecord> continuation;

    bool converged() const { return status == SolveStatus::converged; }
    double final_residual() const {
        if (residual_history.empty()) return std::numeric_limits<double>::quiet_NaN();
        const auto& h = residual_history.back();
        return std::max(h[0], h[1]);
    }
};

namespace detail {

struct ResidualNorms {
    double interior = 0.0, boundary = 0.0, cokernel = 0.0;
    double combined() const { return std::max(interior, boundary); }
};

inline ResidualNorms norms_of(const ResidualPair& r) {
    return {r.interior.sup_h_physical(), r.boundary.sup_norm(), r.cokernel_magnitude};
}

struct FamilyDelta {
    double R = 0.0, px = 0.0, py = 0.0;
    BracketField u;
};

inline FlowLineFamily stepped(const FlowLineFamily& fam, const FamilyDelta& d, double step) {
    FlowLineFamily out = fam;
    out.R -= step * d.R;
    out.px -= step * d.px;
    out.py -= step * d.py;
    out.a -= cplx(step) * d.u;
    out.a.hermitianize();
    return out;
}

inline void finalize_report(SolveReport& rep, const FlowLineFamily& fam,
                            const SolveConfig& cfg, int iterations) {
    rep.solution = fam;
    rep.iterations = iterations;
    try {
        rep.analyticity_width_of_trace = analyticity_width(fam.a.trace()).sigma_hat;
    } catch (const undefined_width_error&) {
        rep.analyticity_width_of_trace = std::numeric_limits<double>::infinity();
    }
    rep.r_distance = std::abs(fam.R - 1.0);
    rep.p_norm = std::hypot(fam.px, fam.py);
    BracketField diff = fam.a - BracketField::reference(cfg.K, fam.a.grid());
    rep.j_distance = j_norm(diff, cfg.gamma, cfg.m, cfg.sigma);
}

// Gauss–Newton step on the raw (R, p, h-grid) coordinates.  The residual
// vector stacks the projected interior values over the tensor grid and the
// boundary values over the theta nodes; both are real for real states.
class GaussNewtonStepper {
public:
    GaussNewtonStepper(const SGridFunction& F, const BoundaryCurve& b, const SolveConfig& cfg)
        : F_(F), b_(b), cfg_(cfg) {}

    FamilyDelta step(const FlowLineFamily& fam, const ResidualPair& res) const {
        const int N = fam.a.n_radial();
        const int M = 2 * fam.a.K() + 1;
        const int nx = 3 + N * M;
        const int nr = N * M + M;

        Eigen::VectorXd x = pack_state(fam);
        Eigen::VectorXd r0 = pack_residual(res);

        Eigen::MatrixXd J(nr, nx);
        for (int c = 0; c < nx; ++c) {
            const double eps = 1e-7 * std::max(1.0, std::abs(x(c)));
            Eigen::VectorXd xp = x;
            xp(c) += eps;
            const FlowLineFamily pert = unpack_state(xp, fam);
            const ResidualPair rp =
                residual(F_, b_, pert, XiOptions{cfg_.bracket_tol, 0}, cfg_.sigma);
            J.col(c) = (pack_residual(rp) - r0) / eps;
        }
        const Eigen::VectorXd d = Eigen::ColPivHouseholderQR<Eigen::MatrixXd>(J).solve(r0);

        const int K = fam.a.K();
        std::vector<std::vector<cplx>> dh(N, std::vector<cplx>(M));
        for (int i = 0; i < N; ++i)
            for (int j = 0; j < M; ++j) dh[i][j] = d(3 + i * M + j);
        return {d(0), d(1), d(2), BracketField::from_h_physical(0.5, K, fam.a.grid(), dh)};
    }

private:
    Eigen::VectorXd pack_state(const FlowLineFamily& fam) const {
        const int N = fam.a.n_radial();
        const int M = 2 * fam.a.K() + 1;
        Eigen::VectorXd x(3 + N * M);
        x(0) = fam.R;
        x(1) = fam.px;
        x(2) = fam.py;
        const auto h = fam.a.h_physical();
        for (int i = 0; i < N; ++i)
            for (int j = 0; j < M; ++j) x(3 + i * M + j) = h[i][j].real();
        return x;
    }

    FlowLineFamily unpack_state(const Eigen::VectorXd& x, const FlowLineFamily& like) const {
        const int N = like.a.n_radial();
        const int M = 2 * like.a.K() + 1;
        std::vector<std::vector<cplx>> h(N, std::vector<cplx>(M));
        for (int i = 0; i < N; ++i)
            for (int j = 0; j < M; ++j) h[i][j] = x(3 + i * M + j);
        FlowLineFamily fam;
        fam.R = x(0);
        fam.px = x(1);
        fam.py = x(2);
        fam.a = BracketField::from_h_physical(0.5, like.a.K(), like.a.grid(), h);
        return fam;
    }

    Eigen::VectorXd pack_residual(const ResidualPair& res) const {
        const int N = res.interior.n_radial();
        const int M = 2 * res.interior.K() + 1;
        Eigen::VectorXd r(N * M + M);
        const auto h = res.interior.h_physical();
        for (int i = 0; i < N; ++i)
            for (int j = 0; j < M; ++j) r(i * M + j) = h[i][j].real();
        const auto bv = res.boundary.sample();
        for (int j = 0; j < M; ++j) r(N * M + j) = bv[j].real();
        return r;
    }

    const SGridFunction& F_;
    const BoundaryCurve& b_;
    const SolveConfig& cfg_;
};

}  // namespace detail

inline SolveReport newton_solve(const SGridFunction& F, const BoundaryCurve& b,
                                const SolveConfig& cfg, const FlowLineFamily& init) {
    cfg.validate();
    b.validate(cfg.sigma);
    if (init.a.lambda() != 0.5)
        throw std::invalid_argument("newton_solve: initial family must carry leading order 1/2");
    if (init.a.n_radial() != cfg.N || init.a.K() != cfg.K)
        throw std::invalid_argument("newton_solve: initial family resolution differs from config");

    const XiOptions xopts{cfg.bracket_tol, 0};
    FlowLineFamily fam = init;
    std::optional<ReferenceLinearSolver> frozen;
    std::optional<detail::GaussNewtonStepper> gauss_newton;
    if (cfg.jacobian_mode == JacobianMode::frozen_reference)
        frozen.emplace(fam.a.grid(), cfg.K);
    else
        gauss_newton.emplace(F, b, cfg);

    SolveReport rep;
    ResidualPair res = residual(F, b, fam, xopts, cfg.sigma);
    detail::ResidualNorms norms = detail::norms_of(res);
    rep.residual_history.push_back({norms.interior, norms.boundary, norms.cokernel});

    int iter = 0;
    for (; iter < cfg.max_iter; ++iter) {
        if (norms.combined() < cfg.tol_residual) break;

        detail::FamilyDelta delta;
        if (frozen) {
            // stepped() subtracts the delta, so the mapped data carries the
            // interior scale -1/8 and the boundary scale +1/2.
            LinearData data{cplx(-0.125) * res.interior.shifted_lambda(0.5),
                            cplx(0.5) * res.boundary};
            LinearSolution lin = frozen->solve(data);
            delta = {lin.R.real(), lin.px.real(), lin.py.real(), lin.u};
        } else {
            delta = gauss_newton->step(fam, res);
        }

        bool accepted = false;
        double step = cfg.damping;
        for (int halving = 0; halving <= 5; ++halving) {
            const FlowLineFamily trial = detail::stepped(fam, delta, step);
            try {
                ResidualPair tres = residual(F, b, trial, xopts, cfg.sigma);
                detail::ResidualNorms tnorms = detail::norms_of(tres);
                if (tnorms.combined() < norms.combined()) {
                    fam = trial;
                    res = std::move(tres);
                    norms = tnorms;
                    rep.residual_history.push_back({norms.interior, norms.boundary, norms.cokernel});
                    accepted = true;
                    break;
                }
            } catch (const degeneracy_error&) {
                // trial left the admissible set: shorten the step
            } catch (const winding_error&) {
            }
            step *= 0.5;
        }
        if (!accepted) {
            rep.status = SolveStatus::stalled;
            rep.message = "no residual decrease after 5 step halvings";
            detail::finalize_report(rep, fam, cfg, iter + 1);
            return rep;
        }
    }

    rep.status = norms.combined() < cfg.tol_residual ? SolveStatus::converged
                                                     : SolveStatus::max_iterations;
    if (rep.status == SolveStatus::max_iterations)
        rep.message = "residual tolerance not reached within max_iter";
    detail::finalize_report(rep, fam, cfg, iter);
    return rep;
}

// Path-following toward (F, b) along the homotopy
// (F_t, b_t) = ((1-t) 4 + t F, (1-t) 1 + t b), warm-starting each stage.
inline SolveReport continuation_solve(const SGridFunction& F, const BoundaryCurve& b,
                                      const SolveConfig& cfg) {
    cfg.validate();
    const auto grid = F.grid;
    FlowLineFamily warm = FlowLineFamily::reference(cfg.K, grid);
    std::vector<ContinuationRecord> records;
    SolveReport rep;
    for (int i = 1; i <= cfg.continuation_steps; ++i) {
        const double t = double(i) / cfg.continuation_steps;
        SGridFunction Ft(grid);
        for (int q = 0; q < grid->size(); ++q)
            Ft.values[q] = (1.0 - t) * 4.0 + t * F.values[q];
        ThetaSeries bt = cplx(t) * b.b;
        bt.at(0) += (1.0 - t);
        rep = newton_solve(Ft, BoundaryCurve{bt, b.tau}, cfg, warm);
        records.push_back({t, rep.iterations, rep.final_residual(), rep.converged()});
        if (!rep.converged()) {
            rep.message = "continuation failed at t = " + std::to_string(t) +
                          (rep.message.empty() ? "" : "; " + rep.message);
            break;
        }
        warm = rep.solution;
    }
    rep.continuation = std::move(records);
    return rep;
}

// Exact-solution generator from the radial reduction
// Xi = -a_psipsi / a_psi^3 + 1/(a a_psi) for a = s h0(s).
struct ManufacturedRadial {
    SGridFunction F;
    double b_value = 1.0;
    BracketField a;
};

inline ManufacturedRadial manufactured_radial(const SGridFunction& h0, int K) {
    const auto& grid = h0.grid;
    const int n = grid->size();
    if (std::abs(h0.values.front() - cplx(1.0)) > 1e-12)
        throw std::invalid_argument("manufactured_radial: profile must satisfy h0(0) = 1");
    const auto h0s = grid->derivative(h0.values, 1);
    const auto h0ss = grid->derivative(h0.values, 2);
    SGridFunction F(grid);
    for (int i = 0; i < n; ++i) {
        const double s = grid->node(i);
        const cplx b1 = h0.values[i];
        const cplx b2 = 0.5 * (h0.values[i] + s * h0s[i]);
        const cplx b6 = 0.25 * (s * s * h0ss[i] + s * h0s[i] - h0.values[i]);
        if (b2.real() <= 0.0)
            throw std::invalid_argument("manufactured_radial: a = s h0 is not strictly increasing");
        F.values[i] = -b6 / (b2 * b2 * b2) + 1.0 / (b1 * b2);
    }
    ManufacturedRadial out{std::move(F), h0.values.back().real(),
                           BracketField::radial(0.5, K, h0)};
    return out;
}

// Scalar root-find on the boundary scale c so that the solve with c*b lands
// on the physical submanifold R = 1.
inline std::pair<double, SolveReport> compatibilize(const SGridFunction& F,
                                                    const BoundaryCurve& b,
                                                    const SolveConfig& cfg,
                                                    double r_tol = 1e-9) {
    constexpr double c_lo = 0.5, c_hi = 2.0;
    FlowLineFamily warm = FlowLineFamily::reference(cfg.K, F.grid);

    auto eval = [&](double c) -> std::pair<double, SolveReport> {
        SolveReport r = newton_solve(F, b.scaled(c), cfg, warm);
        if (r.converged()) warm = r.solution;
        return {r.solution.R - 1.0, std::move(r)};
    };

    double c0 = 1.0;
    auto [g0, rep0] = eval(c0);
    if (!rep0.converged())
        throw incompatibility_range_error("compatibilize: solve failed at c = 1");
    if (std::abs(g0) < r_tol) return {c0, std::move(rep0)};

    // Scale families have R proportional to c, so c/R is the natural first guess.
    double c1 = std::clamp(c0 / rep0.solution.R, c_lo, c_hi);
    if (c1 == c0) c1 = std::clamp(c0 * 0.9, c_lo, c_hi);

    double lo = std::numeric_limits<double>::quiet_NaN(), g_at_lo = 0.0;
    double hi = std::numeric_limits<double>::quiet_NaN(), g_at_hi = 0.0;
    auto track = [&](double c, double g) {
        if (g < 0.0 && (!(lo == lo) || c > lo)) { lo = c; g_at_lo = g; }
        if (g > 0.0 && (!(hi == hi) || c < hi)) { hi = c; g_at_hi = g; }
    };
    track(c0, g0);

    for (int it = 0; it < 40; ++it) {
        auto [g1, rep1] = eval(c1);
        if (!rep1.converged())
            throw incompatibility_range_error("compatibilize: inner solve failed at c = " +
                                              std::to_string(c1));
        if (std::abs(g1) < r_tol) return {c1, std::move(rep1)};
        track(c1, g1);

        double next;
        if (g1 != g0 && std::isfinite(g0))
            next = c1 - g1 * (c1 - c0) / (g1 - g0);
        else
            next = 0.5 * (c_lo + c_hi);
        if (lo == lo && hi == hi) {
            // keep secant iterates inside the bracket, else bisect
            const double blo = std::min(lo, hi), bhi = std::max(lo, hi);
            if (!(next > blo && next < bhi)) next = 0.5 * (blo + bhi);
            (void)g_at_lo;
            (void)g_at_hi;
        } else if (next < c_lo || next > c_hi) {
            // no bracket yet and the iterate escapes the admissible range
            const double endpoint = next < c_lo ? c_lo : c_hi;
            auto [ge, repe] = eval(endpoint);
            if (std::abs(ge) < r_tol) return {endpoint, std::move(repe)};
            track(endpoint, ge);
            if (!(lo == lo && hi == hi))
                throw incompatibility_range_error(
                    "compatibilize: R = 1 root not bracketed within c in [0.5, 2]");
            next = 0.5 * (std::min(lo, hi) + std::max(lo, hi));
        }
        c0 = c1;
        g0 = g1;
        c1 = next;
    }
    throw incompatibility_range_error("compatibilize: root iteration did not converge");
}

// Stream-function reconstruction: invert r = R a(psi, theta) about p.
struct StreamSample {
    double psi = 0.0;
    bool inside = false;
};

inline StreamSample stream_psi_at(const FlowLineFamily& sol, double x, double y) {
    const double dx = x - sol.px, dy = y - sol.py;
    const double r = std::hypot(dx, dy);
    if (r == 0.0) return {0.0, true};
    const double theta = std::atan2(dy, dx);

    // collapse the Fourier modes at this theta once, then the radial profile
    // is a single interpolation per bisection step
    const int n = sol.a.n_radial();
    std::vector<double> H(n);
    for (int i = 0; i < n; ++i) {
        cplx acc{};
        for (int k = -sol.a.K(); k <= sol.a.K(); ++k)
            acc += sol.a.mode(k).values[i] * std::polar(1.0, k * theta);
        H[i] = acc.real();
    }
    const auto& grid = *sol.a.grid();
    auto radius = [&](double s) { return sol.R * s * grid.interpolate(H, s); };

    const double r_boundary = radius(1.0);
    if (r > r_boundary * (1.0 + 1e-12)) return {0.0, false};

    double a_lo = 0.0, a_hi = 1.0;
    for (int it = 0; it < 64; ++it) {
        const double mid = 0.5 * (a_lo + a_hi);
        (radius(mid) < r ? a_lo : a_hi) = mid;
    }
    const double s = 0.5 * (a_lo + a_hi);
    return {s * s, true};
}

struct StreamGrid {
    int nx = 0, ny = 0;
    double x0 = 0, x1 = 0, y0 = 0, y1 = 0;
    std::vector<double> psi;        // row-major, y index outer
    std::vector<unsigned char> inside;
    int outside_count = 0;

    double x_at(int i) const { return nx > 1 ? x0 + (x1 - x0) * i / (nx - 1) : x0; }
    double y_at(int j) const { return ny > 1 ? y0 + (y1 - y0) * j / (ny - 1) : y0; }
};

inline StreamGrid reconstruct_stream(const FlowLineFamily& sol, int nx, int ny) {
    if (nx < 2 || ny < 2 || nx > 4096 || ny > 4096)
        throw validation_error("stream.resolution", "grid resolution must be in [2, 4096]");
    StreamGrid g;
    g.nx = nx;
    g.ny = ny;
    // bounding box of the mapped boundary curve
    g.x0 = g.y0 = std::numeric_limits<double>::max();
    g.x1 = g.y1 = std::numeric_limits<double>::lowest();
    for (int j = 0; j < 720; ++j) {
        const double theta = 2.0 * M_PI * j / 720;
        const double A = sol.R * sol.a.h_at(1.0, theta).real();
        const double x = sol.px + A * std::cos(theta);
        const double y = sol.py + A * std::sin(theta);
        g.x0 = std::min(g.x0, x); g.x1 = std::max(g.x1, x);
        g.y0 = std::min(g.y0, y); g.y1 = std::max(g.y1, y);
    }
    g.psi.resize(static_cast<std::size_t>(nx) * ny);
    g.inside.resize(g.psi.size());
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            const StreamSample s = stream_psi_at(sol, g.x_at(i), g.y_at(j));
            const std::size_t idx = static_cast<std::size_t>(j) * nx + i;
            g.psi[idx] = s.inside ? s.psi : -1.0;
            g.inside[idx] = s.inside ? 1 : 0;
            if (!s.inside) ++g.outside_count;
        }
    return g;
}

}  // namespace flowline
