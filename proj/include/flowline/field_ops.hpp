// field_ops.hpp — the nonlinear interior operator, velocity, ellipticity
// diagnostic and the nonlinear boundary operator, all in bracket form.
//
// Every psi-weighted derivative combination of a = psi^(1/2) h is expressed
// through the chain rule d_psi = (1/(2s)) d_s, which turns the six brackets
// into manifestly smooth expressions in (s, theta):
//   [psi^-1/2 a]        = h
//   [psi^ 1/2 a_psi]    = (h + s h_s)/2
//   [psi^-1/2 a_theta]  = h_theta
//   [psi^-1/2 a_thth]   = h_thth
//   [psi^ 1/2 a_psith]  = (h_theta + s h_s theta)/2
//   [psi^ 3/2 a_psipsi] = (s^2 h_ss + s h_s - h)/4
// The vorticity operator is then a rational function of the brackets with no
// singular prefactors, so it evaluates cleanly down to s = 0.
#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "flowline/bracket_field.hpp"
#include "flowline/errors.hpp"
#include "flowline/norms.hpp"

namespace flowline {

struct XiOptions {
    double bracket_tol = 1e-6;  // degeneracy threshold on |B1| and |B2|
    int n_theta = 0;            // 0: evaluate on the 2K+1 grid; >2K+1: padded
};

// Prescribed boundary curve rho = b(phi) with its declared analyticity width.
struct BoundaryCurve {
    ThetaSeries b;
    double tau = 0.5;

    static BoundaryCurve circle(int K, double radius, double tau = 0.5) {
        return {ThetaSeries::constant(K, radius), tau};
    }

    // Unit circle centred at (eps, 0): b(phi) = eps cos phi + sqrt(1 - eps^2 sin^2 phi).
    static BoundaryCurve translated_circle(int K, double eps, double tau = 0.5) {
        const int m = std::max(2 * K + 1, 512) | 1;
        std::vector<double> vals(m);
        for (int j = 0; j < m; ++j) {
            const double phi = 2.0 * M_PI * j / m;
            vals[j] = eps * std::cos(phi) + std::sqrt(1.0 - eps * eps * std::sin(phi) * std::sin(phi));
        }
        return {theta_transform_real(vals).resized(K), tau};
    }

    void validate(double sigma) const {
        if (!b.is_real(1e-10))
            throw validation_error("boundary", "curve must be real-valued");
        double bmin = std::numeric_limits<double>::max();
        for (const auto& v : b.sample(8 * b.mode_count()))
            bmin = std::min(bmin, v.real());
        if (bmin <= 0.0)
            throw validation_error("boundary", "min over phi of b(phi) must be positive");
        if (!(tau > sigma))
            throw validation_error("boundary.tau", "declared width tau must exceed sigma");
    }

    BoundaryCurve scaled(double c) const { return {cplx(c) * b, tau}; }
};

// Interior and boundary residual of the nonlinear problem, with the measured
// |k| = 2 leading moments (projected out of the stored interior).
struct ResidualPair {
    BracketField interior;       // Xi(a) - F, lambda = 0, leading |k|=2 modes removed
    ThetaSeries boundary;        // B(b, R, p, a)
    cplx moment_plus;            // \oint v(theta) e^{+2 i theta} dtheta
    cplx moment_minus;           // \oint v(theta) e^{-2 i theta} dtheta
    double cokernel_magnitude = 0.0;  // pre-projection magnitude, diagnostics
};

// The six square brackets of a = psi^(1/2) h as lambda = 0 fields,
// ordered B1..B6 as listed above.
inline std::array<BracketField, 6> brackets(const BracketField& a) {
    if (a.lambda() != 0.5)
        throw std::invalid_argument("brackets: field must have leading order 1/2");
    const int K = a.K();
    const auto& grid = a.grid();
    const int n = grid->size();

    std::array<BracketField, 6> B;
    for (auto& f : B) f = BracketField(0.0, K, grid);

    for (int k = -K; k <= K; ++k) {
        const auto& h = a.mode(k).values;
        const auto hs = grid->derivative(h, 1);
        const auto hss = grid->derivative(h, 2);
        const cplx ik(0.0, double(k));
        for (int i = 0; i < n; ++i) {
            const double s = grid->node(i);
            B[0].mode(k).values[i] = h[i];
            B[1].mode(k).values[i] = 0.5 * (h[i] + s * hs[i]);
            B[2].mode(k).values[i] = ik * h[i];
            B[3].mode(k).values[i] = -double(k) * k * h[i];
            B[4].mode(k).values[i] = 0.5 * ik * (h[i] + s * hs[i]);
            B[5].mode(k).values[i] = 0.25 * (s * s * hss[i] + s * hs[i] - h[i]);
        }
    }
    return B;
}

namespace detail {

inline void check_nondegenerate(const std::vector<std::vector<cplx>>& B1,
                                const std::vector<std::vector<cplx>>& B2,
                                double tol) {
    for (std::size_t i = 0; i < B1.size(); ++i)
        for (std::size_t j = 0; j < B1[i].size(); ++j)
            if (std::abs(B1[i][j]) < tol || std::abs(B2[i][j]) < tol)
                throw degeneracy_error("bracket magnitude below tolerance at a grid node; "
                                       "iterate left the admissible neighbourhood");
}

}  // namespace detail

// The vorticity operator Xi(a), evaluated pointwise in bracket form and
// re-expanded in Fourier modes.  Returns a lambda = 0 field.
inline BracketField xi(const BracketField& a, const XiOptions& opts = {}) {
    auto B = brackets(a);
    const int m = opts.n_theta > 2 * a.K() ? opts.n_theta : 2 * a.K() + 1;
    std::array<std::vector<std::vector<cplx>>, 6> P;
    for (int q = 0; q < 6; ++q) P[q] = B[q].h_physical(m);
    detail::check_nondegenerate(P[0], P[1], opts.bracket_tol);

    std::vector<std::vector<cplx>> out(P[0].size(), std::vector<cplx>(m));
    for (std::size_t i = 0; i < P[0].size(); ++i)
        for (int j = 0; j < m; ++j) {
            const cplx b1 = P[0][i][j], b2 = P[1][i][j], b3 = P[2][i][j];
            const cplx b4 = P[3][i][j], b5 = P[4][i][j], b6 = P[5][i][j];
            out[i][j] = -(1.0 / (b2 * b2 * b2)) * (1.0 + (b3 * b3) / (b1 * b1)) * b6
                        + 2.0 * (b3 * b5) / (b1 * b1 * b2 * b2)
                        - b4 / (b1 * b1 * b2)
                        + 1.0 / (b1 * b2);
        }
    return BracketField::from_h_physical(0.0, a.K(), a.grid(), out);
}

// Velocity components in the rotated polar frame: u_r = (a_theta/a)/a_psi and
// u_theta = 1/a_psi, both of leading order psi^(1/2).
inline std::pair<BracketField, BracketField> velocity(const BracketField& a,
                                                      const XiOptions& opts = {}) {
    auto B = brackets(a);
    auto P1 = B[0].h_physical(), P2 = B[1].h_physical(), P3 = B[2].h_physical();
    detail::check_nondegenerate(P1, P2, opts.bracket_tol);
    std::vector<std::vector<cplx>> hr(P1.size(), std::vector<cplx>(P1[0].size()));
    std::vector<std::vector<cplx>> ht = hr;
    for (std::size_t i = 0; i < P1.size(); ++i)
        for (std::size_t j = 0; j < P1[i].size(); ++j) {
            ht[i][j] = 1.0 / P2[i][j];
            hr[i][j] = P3[i][j] / (P1[i][j] * P2[i][j]);
        }
    return {BracketField::from_h_physical(0.5, a.K(), a.grid(), hr),
            BracketField::from_h_physical(0.5, a.K(), a.grid(), ht)};
}

// Ellipticity diagnostic AC - B^2 = 1/(a^2 a_psi^4) = psi / (B1^2 B2^4),
// stored as lambda = 1 with h = 1/(B1^2 B2^4).
inline BracketField ellipticity(const BracketField& a, const XiOptions& opts = {}) {
    auto B = brackets(a);
    auto P1 = B[0].h_physical(), P2 = B[1].h_physical();
    detail::check_nondegenerate(P1, P2, opts.bracket_tol);
    std::vector<std::vector<cplx>> h(P1.size(), std::vector<cplx>(P1[0].size()));
    for (std::size_t i = 0; i < P1.size(); ++i)
        for (std::size_t j = 0; j < P1[i].size(); ++j) {
            const cplx b1 = P1[i][j], b2 = P2[i][j];
            h[i][j] = 1.0 / (b1 * b1 * b2 * b2 * b2 * b2);
        }
    return BracketField::from_h_physical(1.0, a.K(), a.grid(), h);
}

// Continuous branch of the polar angle about the origin of the curve
// theta -> p + R * trace(theta) (cos theta, sin theta).  Stored as the
// periodic deviation phi(theta) - theta.
struct PhiAngle {
    ThetaSeries deviation;  // phi(theta) - theta
    double eval(double theta) const { return theta + deviation.eval(theta).real(); }
};

inline PhiAngle phi_angle(double R, double px, double py, const ThetaSeries& trace) {
    if (!trace.is_real(1e-9))
        throw std::invalid_argument("phi_angle: trace must be real-valued");
    const int m = trace.mode_count();
    std::vector<double> phi(m), dev(m);
    double prev = 0.0;
    for (int j = 0; j < m; ++j) {
        const double theta = 2.0 * M_PI * j / m;
        const double A = trace.eval(theta).real();
        const double X = px + R * A * std::cos(theta);
        const double Y = py + R * A * std::sin(theta);
        double ph = std::atan2(Y, X);  // anchors phi(0) in (-pi, pi]
        if (j > 0) {
            // unwrap: keep successive differences inside (-pi, pi)
            double d = ph - prev;
            d -= 2.0 * M_PI * std::round(d / (2.0 * M_PI));
            ph = prev + d;
        }
        phi[j] = ph;
        prev = ph;
        dev[j] = ph - theta;
    }
    // Winding check: continuing the unwrap from theta = 2 pi (1 - 1/m) back to
    // theta = 2 pi must advance phi by exactly one turn relative to phi(0).
    {
        double d = phi[0] - prev;
        d -= 2.0 * M_PI * std::round(d / (2.0 * M_PI));
        const double winding = (prev + d - phi[0]) / (2.0 * M_PI);
        if (std::abs(winding - 1.0) > 1e-8)
            throw winding_error("phi_angle: mapped boundary curve does not wind once about the origin");
    }
    return {theta_transform_real(dev)};
}

// Optional detail output of boundary_op.
struct BoundaryOpInfo {
    double gauge_mismatch = 0.0;   // |displayed form - (rho^2 - b(phi)^2)| sup
    ThetaSeries phi_deviation;     // phi(theta) - theta
    bool strip_warning = false;    // excursion estimate exceeded tau
    double excursion = 0.0;        // sigma + sum |d_k| e^{sigma |k|}
};

// The nonlinear boundary operator
//   B(theta) = -b(phi(theta))^2 + R^2 a(1,theta)^2
//              + 2 R a(1,theta) (px cos + py sin) + px^2 + py^2.
inline ThetaSeries boundary_op(const BoundaryCurve& bc, double R, double px, double py,
                               const BracketField& a, double sigma = 0.0,
                               BoundaryOpInfo* info = nullptr) {
    const ThetaSeries trace = a.trace();
    const PhiAngle phi = phi_angle(R, px, py, trace);
    const int m = trace.mode_count();
    std::vector<double> Bvals(m);
    double mismatch = 0.0;
    for (int j = 0; j < m; ++j) {
        const double theta = 2.0 * M_PI * j / m;
        const double A = trace.eval(theta).real();
        const double bphi = bc.b.eval(phi.eval(theta)).real();
        const double displayed = -bphi * bphi + R * R * A * A
                                 + 2.0 * R * A * (px * std::cos(theta) + py * std::sin(theta))
                                 + px * px + py * py;
        const double X = px + R * A * std::cos(theta);
        const double Y = py + R * A * std::sin(theta);
        const double gauge = (X * X + Y * Y) - bphi * bphi;
        mismatch = std::max(mismatch, std::abs(displayed - gauge));
        Bvals[j] = displayed;
    }
    if (info) {
        info->gauge_mismatch = mismatch;
        info->phi_deviation = phi.deviation;
        double exc = sigma;
        for (int k = 1; k <= phi.deviation.K(); ++k)
            exc += (std::abs(phi.deviation.at(k)) + std::abs(phi.deviation.at(-k)))
                   * std::exp(sigma * k);
        info->excursion = exc;
        info->strip_warning = exc > bc.tau;
    }
    return theta_transform_real(Bvals);
}

// Full nonlinear residual (Xi(a) - F, B) with the |k| = 2 leading moments of
// the interior measured, reported and projected out.
inline ResidualPair residual(const SGridFunction& F, const BoundaryCurve& bc,
                             const FlowLineFamily& sol, const XiOptions& opts = {},
                             double sigma = 0.0, BoundaryOpInfo* binfo = nullptr) {
    BracketField interior = xi(sol.a, opts);
    for (int i = 0; i < interior.n_radial(); ++i)
        interior.mode(0).values[i] -= F.values[i];  // constant continuation along theta

    ResidualPair out{std::move(interior), ThetaSeries(sol.a.K()), {}, {}, 0.0};
    if (out.interior.K() >= 2) {
        const cplx v_p2 = out.interior.mode(2).values.front();
        const cplx v_m2 = out.interior.mode(-2).values.front();
        // \oint v e^{+2 i theta} picks the k = -2 coefficient, and vice versa.
        out.moment_plus = 2.0 * M_PI * v_m2;
        out.moment_minus = 2.0 * M_PI * v_p2;
        out.cokernel_magnitude = std::max(std::abs(out.moment_plus), std::abs(out.moment_minus));
        for (auto& val : out.interior.mode(2).values) val -= v_p2;
        for (auto& val : out.interior.mode(-2).values) val -= v_m2;
    }
    out.boundary = boundary_op(bc, sol.R, sol.px, sol.py, sol.a, sigma, binfo);
    return out;
}

}  // namespace flowline
