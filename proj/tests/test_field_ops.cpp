#include <catch2/catch_amalgamated.hpp>
#include <random>

#include "flowline/field_ops.hpp"

using namespace flowline;

namespace {

// closed-form leading vorticity for a = psi^(1/2) xi(theta)
cplx xi_closed_form(const ThetaSeries& xs, double theta) {
    const cplx x = xs.eval(theta);
    const cplx xp = diff_theta(xs, 1).eval(theta);
    const cplx xpp = diff_theta(xs, 2).eval(theta);
    return 4.0 / (x * x) + 6.0 * (xp * xp) / (x * x * x * x) - 2.0 * xpp / (x * x * x);
}

BracketField angular_family(int K, const SGridPtr& grid, const ThetaSeries& xs) {
    BracketField a(0.5, K, grid);
    for (int k = -K; k <= K; ++k)
        for (int i = 0; i < grid->size(); ++i) a.mode(k).values[i] = xs.coeff_or_zero(k);
    return a;
}

}  // namespace

TEST_CASE("square brackets") {
    const int K = 8;
    auto grid = SGrid::make(32);
    SECTION("reference values") {
        auto B = brackets(BracketField::reference(K, grid));
        for (int i = 0; i < 32; ++i) {
            CHECK(std::abs(B[0].mode(0).values[i] - cplx(1.0)) < 1e-15);
            CHECK(std::abs(B[1].mode(0).values[i] - cplx(0.5)) < 1e-15);
            CHECK(std::abs(B[5].mode(0).values[i] - cplx(-0.25)) < 1e-15);
            CHECK(std::abs(B[2].mode(0).values[i]) < 1e-15);
            CHECK(std::abs(B[3].mode(0).values[i]) < 1e-15);
            CHECK(std::abs(B[4].mode(0).values[i]) < 1e-15);
        }
    }
    SECTION("angular perturbation") {
        const double eps = 0.05;
        ThetaSeries xs = ThetaSeries::constant(K, 1.0);
        xs.at(1) = 0.5 * eps;
        xs.at(-1) = 0.5 * eps;
        auto B = brackets(angular_family(K, grid, xs));
        for (int j = 0; j < 2 * K + 1; ++j) {
            const double theta = 2.0 * M_PI * j / (2 * K + 1);
            const cplx b1 = B[0].h_at(grid->node(5), theta);
            const cplx b2 = B[1].h_at(grid->node(5), theta);
            const cplx b3 = B[2].h_at(grid->node(5), theta);
            CHECK(std::abs(b1 - cplx(1.0 + eps * std::cos(theta))) < 1e-13);
            CHECK(std::abs(b2 - 0.5 * b1) < 1e-13);
            CHECK(std::abs(b3 - cplx(-eps * std::sin(theta))) < 1e-13);
        }
    }
    SECTION("radial cubic term") {
        BracketField a =
            BracketField::radial(0.5, K, SGridFunction::sample(grid, [](double s) { return s * s; }));
        auto B = brackets(a);
        for (int i = 0; i < 32; ++i) {
            const double s = grid->node(i);
            CHECK(std::abs(B[5].mode(0).values[i] - cplx(0.75 * s * s)) < 1e-11);
        }
    }
    SECTION("chain rule against finite differences in psi") {
        std::mt19937_64 rng(17);
        std::normal_distribution<double> gauss;
        BracketField a = BracketField::reference(K, grid);
        for (int k = -K; k <= K; ++k)
            for (int i = 0; i < 32; ++i)
                a.mode(k).values[i] += 0.03 * std::exp(-0.6 * std::abs(k)) *
                                       cplx(gauss(rng), 0.0) * (1.0 + 0.3 * grid->node(i));
        a.hermitianize();
        auto B = brackets(a);
        auto value = [&](double psi, double theta) {
            const double s = std::sqrt(psi);
            return (std::sqrt(psi) * a.h_at(s, theta)).real();
        };
        const double d = 1e-5, theta0 = 0.9;
        for (double psi : {0.2, 0.5, 0.8}) {
            const double a_psi = (value(psi + d, theta0) - value(psi - d, theta0)) / (2 * d);
            const double a_psipsi =
                (value(psi + d, theta0) - 2 * value(psi, theta0) + value(psi - d, theta0)) / (d * d);
            const double s = std::sqrt(psi);
            const double b2 = B[1].h_at(s, theta0).real();  // value of [psi^1/2 a_psi]
            const double b6 = B[5].h_at(s, theta0).real();  // value of [psi^3/2 a_psipsi]
            CHECK(std::abs(b2 - std::sqrt(psi) * a_psi) < 1e-6 * std::abs(b2));
            CHECK(std::abs(b6 - std::pow(psi, 1.5) * a_psipsi) < 1e-4 * std::max(1e-2, std::abs(b6)));
        }
    }
    SECTION("wrong leading order") {
        CHECK_THROWS_AS(brackets(BracketField(1.0, K, grid)), std::invalid_argument);
    }
}

TEST_CASE("vorticity operator") {
    const int K = 16;
    auto grid = SGrid::make(48);
    SECTION("reference flow has constant vorticity 4") {
        BracketField x = xi(BracketField::reference(K, grid));
        for (const auto& row : x.h_physical())
            for (const auto& v : row) CHECK(std::abs(v - cplx(4.0)) < 1e-13);
    }
    SECTION("scaled radius") {
        BracketField a = BracketField::reference(K, grid);
        a *= cplx(2.0);
        BracketField x = xi(a);
        for (const auto& row : x.h_physical())
            for (const auto& v : row) CHECK(std::abs(v - cplx(1.0)) < 1e-13);
    }
    SECTION("angular family matches the closed form at s = 0") {
        ThetaSeries xs = ThetaSeries::constant(K, 1.0);
        xs.at(3) = 0.005;
        xs.at(-3) = 0.005;
        BracketField x = xi(angular_family(K, grid, xs));
        const ThetaSeries lead = x.leading();
        for (int j = 0; j < 2 * K + 1; ++j) {
            const double theta = 2.0 * M_PI * j / (2 * K + 1);
            CHECK(std::abs(lead.eval(theta) - xi_closed_form(xs, theta)) < 1e-10);
        }
    }
    SECTION("degeneracy error") {
        BracketField a = BracketField::reference(K, grid);
        for (int i = 0; i < 48; ++i)
            a.mode(0).values[i] = 1.0 - grid->node(i);  // h hits zero at s = 1
        CHECK_THROWS_AS(xi(a), degeneracy_error);
    }
}

TEST_CASE("velocity field") {
    const int K = 8;
    auto grid = SGrid::make(32);
    SECTION("rigid rotation") {
        auto [ur, ut] = velocity(BracketField::reference(K, grid));
        CHECK(ur.max_abs_h() < 1e-14);
        REQUIRE(ut.lambda() == 0.5);
        for (int i = 0; i < 32; ++i)
            CHECK(std::abs(ut.mode(0).values[i] - cplx(2.0)) < 1e-13);
    }
    SECTION("radial families have no radial velocity") {
        BracketField a = BracketField::radial(
            0.5, K, SGridFunction::sample(grid, [](double s) { return 1.0 + 0.1 * s * s; }));
        auto [ur, ut] = velocity(a);
        CHECK(ur.max_abs_h() < 1e-13);
    }
    SECTION("component ratio identity") {
        const double eps = 0.08;
        ThetaSeries xs = ThetaSeries::constant(K, 1.0);
        xs.at(1) = 0.5 * eps;
        xs.at(-1) = 0.5 * eps;
        auto [ur, ut] = velocity(angular_family(K, grid, xs));
        for (int j = 0; j < 2 * K + 1; ++j) {
            const double theta = 2.0 * M_PI * j / (2 * K + 1);
            const cplx ratio = ur.h_at(0.5, theta) / ut.h_at(0.5, theta);
            const cplx want = -eps * std::sin(theta) / (1.0 + eps * std::cos(theta));
            CHECK(std::abs(ratio - want) < 1e-12);
        }
    }
}

TEST_CASE("ellipticity diagnostic") {
    const int K = 8;
    auto grid = SGrid::make(32);
    SECTION("reference: 16 psi") {
        BracketField e = ellipticity(BracketField::reference(K, grid));
        REQUIRE(e.lambda() == 1.0);
        for (int i = 0; i < 32; ++i)
            CHECK(std::abs(e.mode(0).values[i] - cplx(16.0)) < 1e-12);
        CHECK(std::abs(e.value_at(0.0, 0.3)) == 0.0);  // degenerates at the stagnation point
    }
    SECTION("scaled radius, by the closed form 1/(a^2 a_psi^4)") {
        BracketField a = BracketField::reference(K, grid);
        a *= cplx(2.0);
        BracketField e = ellipticity(a);
        // a = 2 psi^(1/2): a^2 a_psi^4 = 4 psi * psi^{-2} = 4/psi, so the value is psi/4
        for (int i = 0; i < 32; ++i)
            CHECK(std::abs(e.mode(0).values[i] - cplx(0.25)) < 1e-13);
    }
}

TEST_CASE("polar angle about the origin") {
    const int K = 16;
    SECTION("identity case") {
        PhiAngle phi = phi_angle(1.0, 0.0, 0.0, ThetaSeries::constant(K, 1.0));
        CHECK(phi.deviation.max_abs_coeff() < 1e-14);
        CHECK(phi.eval(1.1) == Catch::Approx(1.1).margin(1e-13));
    }
    SECTION("offset centre") {
        PhiAngle phi = phi_angle(1.0, 0.1, 0.0, ThetaSeries::constant(K, 1.0));
        CHECK(phi.eval(M_PI / 2) == Catch::Approx(std::atan2(1.0, 0.1)).margin(1e-12));
    }
    SECTION("scale invariance") {
        ThetaSeries trace = ThetaSeries::constant(K, 1.0);
        trace.at(2) = 0.02;
        trace.at(-2) = 0.02;
        PhiAngle a = phi_angle(1.0, 0.05, -0.02, trace);
        PhiAngle b = phi_angle(2.0, 0.10, -0.04, trace);   // exact scaling by 2
        PhiAngle c = phi_angle(1.7, 0.085, -0.034, trace);
        for (int k = -K; k <= K; ++k) {
            CHECK(std::abs(a.deviation.at(k) - b.deviation.at(k)) == 0.0);
            CHECK(std::abs(a.deviation.at(k) - c.deviation.at(k)) < 1e-14);
        }
    }
    SECTION("winding error when the curve misses the origin") {
        CHECK_THROWS_AS(phi_angle(1.0, 2.0, 0.0, ThetaSeries::constant(K, 1.0)), winding_error);
    }
}

TEST_CASE("boundary operator") {
    const int K = 16;
    auto grid = SGrid::make(32);
    SECTION("reference disk") {
        ThetaSeries B = boundary_op(BoundaryCurve::circle(K, 1.0), 1.0, 0.0, 0.0,
                                    BracketField::reference(K, grid));
        CHECK(B.max_abs_coeff() < 1e-14);
    }
    SECTION("scaled disk compatibility") {
        ThetaSeries B = boundary_op(BoundaryCurve::circle(K, 2.0), 2.0, 0.0, 0.0,
                                    BracketField::reference(K, grid));
        CHECK(B.max_abs_coeff() < 1e-13);
    }
    SECTION("translated circle is exact") {
        const double eps = 0.1;
        ThetaSeries B = boundary_op(BoundaryCurve::translated_circle(K, eps), 1.0, eps, 0.0,
                                    BracketField::reference(K, grid));
        CHECK(B.sup_norm() < 1e-12);
    }
    SECTION("two displayed forms agree") {
        std::mt19937_64 rng(23);
        std::normal_distribution<double> gauss;
        for (int trial = 0; trial < 100; ++trial) {
            BracketField a = BracketField::reference(K, grid);
            for (int k = 1; k <= 3; ++k) {
                const cplx c = 0.01 * std::exp(-0.5 * k) * cplx(gauss(rng), gauss(rng));
                for (int i = 0; i < 32; ++i) {
                    a.mode(k).values[i] += c;
                    a.mode(-k).values[i] += std::conj(c);
                }
            }
            const double R = 1.0 + 0.05 * gauss(rng);
            const double px = 0.03 * gauss(rng), py = 0.03 * gauss(rng);
            ThetaSeries b = ThetaSeries::constant(K, 1.0 + 0.02 * gauss(rng));
            BoundaryOpInfo info;
            boundary_op(BoundaryCurve{b, 0.5}, R, px, py, a, 0.2, &info);
            CHECK(info.gauge_mismatch < 1e-12);
        }
    }
    SECTION("strip warning") {
        // slowly decaying trace modes push the excursion estimate past tau
        BracketField a = BracketField::reference(K, grid);
        for (int k = 1; k <= K; ++k) {
            const double c = 0.002 * std::exp(-0.1 * k);
            for (int i = 0; i < 32; ++i) {
                a.mode(k).values[i] += c;
                a.mode(-k).values[i] += c;
            }
        }
        BoundaryOpInfo info;
        boundary_op(BoundaryCurve::circle(K, 1.0, 0.25), 1.0, 0.05, 0.0, a, 0.2, &info);
        CHECK(info.strip_warning);
        BoundaryOpInfo ref_info;
        boundary_op(BoundaryCurve::circle(K, 1.0, 0.25), 1.0, 0.0, 0.0,
                    BracketField::reference(K, grid), 0.2, &ref_info);
        CHECK_FALSE(ref_info.strip_warning);
    }
}

TEST_CASE("nonlinear residual") {
    const int K = 16;
    auto grid = SGrid::make(48);
    const SGridFunction F4 = SGridFunction::sample(grid, [](double) { return 4.0; });
    SECTION("reference is an exact zero") {
        ResidualPair r = residual(F4, BoundaryCurve::circle(K, 1.0),
                                  FlowLineFamily::reference(K, grid));
        CHECK(r.interior.sup_h_physical() < 1e-13);
        CHECK(r.boundary.max_abs_coeff() < 1e-14);
        CHECK(r.cokernel_magnitude < 1e-13);
    }
    SECTION("uniform radial dilation") {
        const double delta = 0.01;
        FlowLineFamily fam = FlowLineFamily::reference(K, grid);
        fam.a *= cplx(1.0 + delta);
        ResidualPair r = residual(F4, BoundaryCurve::circle(K, 1.0 + delta), fam);
        const double want = 4.0 / ((1.0 + delta) * (1.0 + delta)) - 4.0;
        for (int i = 0; i < 48; ++i)
            CHECK(std::abs(r.interior.mode(0).values[i] - cplx(want)) < 1e-12);
    }
    SECTION("leading moments vanish before projection") {
        std::mt19937_64 rng(31);
        std::normal_distribution<double> gauss;
        for (int trial = 0; trial < 5; ++trial) {
            ThetaSeries xs = ThetaSeries::constant(K, 1.0);
            for (int k = 1; k <= 5; ++k) {
                xs.at(k) = 0.02 * std::exp(-0.5 * k) * cplx(gauss(rng), gauss(rng));
                xs.at(-k) = std::conj(xs.at(k));
            }
            FlowLineFamily fam{1.0, 0.0, 0.0, angular_family(K, grid, xs)};
            ResidualPair r = residual(F4, BoundaryCurve::circle(K, 1.0), fam);
            CHECK(r.cokernel_magnitude < 1e-10);
            // stored interior leading term has the |k| = 2 modes removed
            CHECK(std::abs(r.interior.mode(2).values.front()) == 0.0);
            CHECK(std::abs(r.interior.mode(-2).values.front()) == 0.0);
        }
    }
}
