#include <catch2/catch_amalgamated.hpp>
#include <random>

#include "flowline/linear_solver.hpp"
#include "flowline/solver.hpp"
#include "flowline/norms.hpp"

using namespace flowline;

namespace {

BracketField random_remainder_field(int K, const SGridPtr& grid, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss;
    BracketField w(0.5, K, grid);
    for (int k = -K; k <= K; ++k) {
        std::vector<double> c(5);
        for (auto& v : c) v = gauss(rng);
        for (int i = 0; i < grid->size(); ++i) {
            const double s = grid->node(i);
            double p = 0.0, sp = s;
            for (const double v : c) {
                p += v * sp;
                sp *= s;
            }
            w.mode(k).values[i] = std::exp(-0.4 * std::abs(k)) * p * cplx(1.0, 0.2 * gauss(rng));
        }
    }
    return w;
}

}  // namespace

TEST_CASE("forward operator") {
    const int K = 32;
    auto grid = SGrid::make(48);
    SECTION("psi^(1/2) is a fixed point") {
        BracketField Lu = apply_L(BracketField::reference(K, grid));
        for (int i = 0; i < 48; ++i)
            CHECK(std::abs(Lu.mode(0).values[i] - cplx(1.0)) < 1e-13);
    }
    SECTION("L psi = (9/4) psi") {
        BracketField u = BracketField::radial(0.5, K,
                                              SGridFunction::sample(grid, [](double s) { return s; }));
        BracketField Lu = apply_L(u);
        for (int i = 0; i < 48; ++i)
            CHECK(std::abs(Lu.mode(0).values[i] - cplx(2.25 * grid->node(i))) < 1e-11);
    }
    SECTION("homogeneous modes annihilated up to the cutoff") {
        for (int k = 2; k <= K; ++k) {
            BracketField Lh = apply_L(homogeneous_mode(k, K, grid));
            CHECK(Lh.max_abs_h() < 1e-9);
            BracketField Lm = apply_L(homogeneous_mode(-k, K, grid));
            CHECK(Lm.max_abs_h() < 1e-9);
        }
    }
}

TEST_CASE("homogeneous solve matches the boundary data term by term") {
    const int K = 8;
    auto grid = SGrid::make(24);
    SECTION("constant data") {
        LinearSolution sol = solve_homogeneous(ThetaSeries::constant(K, 1.0), K, grid);
        CHECK(std::abs(sol.R - cplx(1.0)) < 1e-15);
        CHECK(std::abs(sol.px) < 1e-15);
        CHECK(std::abs(sol.py) < 1e-15);
        CHECK(sol.u.max_abs_h() < 1e-15);
    }
    SECTION("cos theta moves the stagnation point") {
        ThetaSeries g(K);
        g.at(1) = 0.5;
        g.at(-1) = 0.5;
        LinearSolution sol = solve_homogeneous(g, K, grid);
        CHECK(std::abs(sol.R) < 1e-15);
        CHECK(std::abs(sol.px - cplx(1.0)) < 1e-15);
        CHECK(std::abs(sol.py) < 1e-15);
        CHECK(sol.u.max_abs_h() < 1e-15);
    }
    SECTION("third mode excites psi e^{3 i theta}") {
        ThetaSeries g(K);
        g.at(3) = 1.0;
        LinearSolution sol = solve_homogeneous(g, K, grid);
        CHECK(std::abs(sol.R) < 1e-15);
        CHECK(std::abs(sol.px) < 1e-15);
        for (int i = 0; i < 24; ++i)
            CHECK(std::abs(sol.u.mode(3).values[i] - cplx(grid->node(i))) < 1e-14);
        CHECK(std::abs(sol.homog(3) - cplx(1.0)) < 1e-15);
    }
}

TEST_CASE("leading-term solve") {
    const int K = 8;
    SECTION("algebraic factors") {
        ThetaSeries xi0 = ThetaSeries::constant(K, 1.0);
        CHECK(std::abs(solve_leading(xi0).at(0) - cplx(1.0)) < 1e-15);
        ThetaSeries xi1(K);
        xi1.at(1) = 1.0;
        CHECK(std::abs(solve_leading(xi1).at(1) - cplx(4.0 / 3.0)) < 1e-15);
        ThetaSeries xi4(K);
        xi4.at(4) = 1.0;
        CHECK(std::abs(solve_leading(xi4).at(4) - cplx(-1.0 / 3.0)) < 1e-15);
    }
    SECTION("second-mode data violates the cokernel condition") {
        ThetaSeries bad(K);
        bad.at(2) = 1e-3;
        CHECK_THROWS_AS(solve_leading(bad), cokernel_violation_error);
    }
}

TEST_CASE("first-order factor inverses") {
    auto grid = SGrid::make(32);
    SECTION("plus branch closed forms") {
        SGridFunction psi2 = SGridFunction::sample(grid, [](double s) { return std::pow(s, 4); });
        SGridFunction out = apply_Lk_plus_inverse(psi2, 0);
        for (int i = 0; i < 32; ++i)
            CHECK(std::abs(out.values[i] - cplx(0.4 * std::pow(grid->node(i), 4))) < 1e-12);
        SGridFunction psi = SGridFunction::sample(grid, [](double s) { return s * s; });
        out = apply_Lk_plus_inverse(psi, 0);
        for (int i = 0; i < 32; ++i)
            CHECK(std::abs(out.values[i] - cplx(2.0 / 3.0 * grid->node(i) * grid->node(i))) < 1e-12);
        CHECK(apply_Lk_plus_inverse(SGridFunction(grid), 3).max_abs() == 0.0);
    }
    SECTION("minus branch closed forms") {
        SGridFunction psi2 = SGridFunction::sample(grid, [](double s) { return std::pow(s, 4); });
        SGridFunction out = apply_Lk_minus_inverse(psi2, 3);
        for (int i = 0; i < 32; ++i) {
            const double s = grid->node(i);
            CHECK(std::abs(out.values[i] - cplx(std::pow(s, 4) - s * s)) < 1e-12);
        }
        SGridFunction psi = SGridFunction::sample(grid, [](double s) { return s * s; });
        out = apply_Lk_minus_inverse(psi, 0);
        for (int i = 0; i < 32; ++i)
            CHECK(std::abs(out.values[i] - cplx(2.0 / 3.0 * grid->node(i) * grid->node(i))) < 1e-12);
    }
    SECTION("high-mode branch vanishes at psi = 1") {
        CHECK(apply_Lk_minus_inverse(SGridFunction(grid), 5).max_abs() == 0.0);
        SGridFunction eta = SGridFunction::sample(grid, [](double s) { return s * s * (1.0 + s); });
        SGridFunction out = apply_Lk_minus_inverse(eta, 5);
        CHECK(std::abs(out.values.back()) < 1e-13);
    }
}

TEST_CASE("remainder solve") {
    const int K = 16;
    auto grid = SGrid::make(48);
    SECTION("radial closed form") {
        BracketField eta = BracketField::radial(
            0.5, K, SGridFunction::sample(grid, [](double s) { return 2.25 * s; }));
        BracketField w = solve_remainder(eta);
        for (int i = 0; i < 48; ++i)
            CHECK(std::abs(w.mode(0).values[i] - cplx(grid->node(i))) < 1e-11);
    }
    SECTION("zero data") {
        CHECK(solve_remainder(BracketField(0.5, K, grid)).max_abs_h() == 0.0);
    }
    SECTION("round trip through the forward operator") {
        std::mt19937_64 rng(41);
        BracketField w_seed = random_remainder_field(K, grid, rng);
        BracketField eta = apply_L(w_seed);
        BracketField w = solve_remainder(eta);
        BracketField back = apply_L(w);
        const double scale = std::max(1.0, eta.max_abs_h());
        for (int k = -K; k <= K; ++k)
            for (int i = 0; i < 48; ++i)
                CHECK(std::abs(back.mode(k).values[i] - eta.mode(k).values[i]) < 1e-8 * scale);
        // traces vanish in the high modes
        const ThetaSeries tr = w.trace();
        for (int k = 3; k <= K; ++k) CHECK(std::abs(tr.at(k)) < 1e-12);
    }
}

TEST_CASE("full linear solve") {
    const int K = 16;
    auto grid = SGrid::make(48);
    SECTION("no interior data reduces to the homogeneous solve") {
        std::mt19937_64 rng(43);
        std::normal_distribution<double> gauss;
        ThetaSeries g(K);
        for (int k = -K; k <= K; ++k)
            g.at(k) = std::exp(-0.4 * std::abs(k)) * cplx(gauss(rng), gauss(rng));
        LinearData data{BracketField(0.5, K, grid), g};
        LinearSolution a = solve_linear(data);
        LinearSolution b = solve_homogeneous(g, K, grid);
        CHECK(std::abs(a.R - b.R) < 1e-15);
        CHECK(std::abs(a.px - b.px) < 1e-15);
        CHECK(std::abs(a.py - b.py) < 1e-15);
        for (int k = -K; k <= K; ++k)
            for (int i = 0; i < 48; ++i)
                CHECK(std::abs(a.u.mode(k).values[i] - b.u.mode(k).values[i]) < 1e-14);
    }
    SECTION("remainder data cancels against the boundary") {
        BracketField f = BracketField::radial(
            0.5, K, SGridFunction::sample(grid, [](double s) { return 2.25 * s; }));
        LinearSolution sol = solve_linear({f, ThetaSeries::constant(K, 1.0)});
        CHECK(std::abs(sol.R) < 1e-11);
        CHECK(std::abs(sol.px) < 1e-13);
        for (int i = 0; i < 48; ++i)
            CHECK(std::abs(sol.u.mode(0).values[i] - cplx(grid->node(i))) < 1e-11);
    }
    SECTION("pure leading data costs one unit of scale") {
        BracketField f = BracketField::reference(K, grid);  // f = psi^(1/2)
        LinearSolution sol = solve_linear({f, ThetaSeries(K)});
        CHECK(std::abs(sol.v.at(0) - cplx(1.0)) < 1e-14);
        CHECK(std::abs(sol.R - cplx(-1.0)) < 1e-13);
        CHECK(std::abs(sol.px) < 1e-14);
        for (int i = 0; i < 48; ++i)
            CHECK(std::abs(sol.u.mode(0).values[i] - cplx(1.0)) < 1e-13);
    }
    SECTION("boundary modes above the cutoff are dropped with a warning") {
        ThetaSeries g(K + 4);
        g.at(K + 2) = 1.0;
        LinearData data{BracketField(0.5, K, grid), g};
        LinearSolution sol = solve_linear(data);
        CHECK_FALSE(sol.warnings.empty());
    }

    SECTION("left inverse and boundary relation on random data") {
        std::mt19937_64 rng(47);
        std::normal_distribution<double> gauss;
        ReferenceLinearSolver ws(grid, K);
        for (int trial = 0; trial < 30; ++trial) {
            ThetaSeries g(K);
            for (int k = -K; k <= K; ++k)
                g.at(k) = std::exp(-0.4 * std::abs(k)) * cplx(gauss(rng), gauss(rng));
            ThetaSeries xi_lead(K);
            for (int k = -K; k <= K; ++k)
                xi_lead.at(k) = std::exp(-0.4 * std::abs(k)) * cplx(gauss(rng), gauss(rng));
            xi_lead.at(2) = 0.0;
            xi_lead.at(-2) = 0.0;
            BracketField f = apply_L(random_remainder_field(K, grid, rng));
            for (int k = -K; k <= K; ++k) {
                const cplx lead = f.mode(k).values.front();
                for (auto& v : f.mode(k).values) v += xi_lead.at(k) - lead;
            }
            LinearSolution sol = ws.solve({f, g});

            BracketField back = apply_L(sol.u);
            const double scale = std::max(1.0, f.max_abs_h());
            for (int k = -K; k <= K; ++k)
                for (int i = 0; i < 48; ++i) {
                    cplx want = f.mode(k).values[i];
                    if (std::abs(k) == 2) want -= f.mode(k).values.front();
                    CHECK(std::abs(back.mode(k).values[i] - want) < 1e-8 * scale);
                }

            const ThetaSeries tr = sol.u.trace();
            for (int k = -K; k <= K; ++k) {
                cplx lhs = tr.at(k);
                if (k == 0) lhs += sol.R;
                if (k == 1) lhs += 0.5 * (sol.px - cplx(0, 1) * sol.py);
                if (k == -1) lhs += 0.5 * (sol.px + cplx(0, 1) * sol.py);
                CHECK(std::abs(lhs - g.at(k)) < 1e-10);
            }
        }
    }

    SECTION("empirical stability constant") {
        std::mt19937_64 rng(53);
        std::normal_distribution<double> gauss;
        SolveConfig cfg;
        cfg.K = K;
        cfg.N = 48;
        double worst = 0.0;
        for (int trial = 0; trial < 100; ++trial) {
            ThetaSeries g(K);
            for (int k = -K; k <= K; ++k)
                g.at(k) = std::exp(-0.5 * std::abs(k)) * cplx(gauss(rng), gauss(rng));
            BracketField f = apply_L(random_remainder_field(K, grid, rng));
            for (int k = -K; k <= K; ++k) {
                const cplx lead = f.mode(k).values.front();
                for (auto& v : f.mode(k).values) v -= lead;
            }
            const double dn = x_sigma_norm(g, cfg.sigma, cfg.m - 0.5) +
                              j_norm(f, cfg.gamma, cfg.m - 2, cfg.sigma);
            if (dn == 0.0) continue;
            LinearSolution sol = solve_linear({(1.0 / dn) * f, (1.0 / dn) * g});
            const double sn = std::abs(sol.R) + std::abs(sol.px) + std::abs(sol.py) +
                              j_norm(sol.u, cfg.gamma, cfg.m, cfg.sigma);
            worst = std::max(worst, sn);
        }
        INFO("empirical isomorphism constant " << worst);
        CHECK(worst < 100.0);
        CHECK(worst > 0.0);
    }

    SECTION("weighted-average ratios respect the per-mode constants") {
        // ratio ||psi^{-1/2-gamma} w_k|| / ||psi^{-1/2-gamma} eta_k|| for each
        // branch, gamma = 3/4; quadrature slack 5 percent
        const double gamma = 0.75;
        std::mt19937_64 rng(59);
        std::normal_distribution<double> gauss;
        auto weighted_norm = [&](const SGridFunction& u) {
            // int_0^1 psi^{-1-2 gamma} |u|^2 dpsi in s, skipping the s = 0 node
            double acc = 0.0;
            const auto& qw = u.grid->quad_weights();
            for (int i = 1; i < u.size(); ++i) {
                const double s = u.grid->node(i);
                acc += qw[i] * 2.0 * std::pow(s, -1.0 - 4.0 * gamma) * std::norm(u.values[i]);
            }
            return std::sqrt(acc);
        };
        for (int trial = 0; trial < 20; ++trial) {
            std::vector<double> c(4);
            for (auto& v : c) v = gauss(rng);
            SGridFunction eta = SGridFunction::sample(grid, [&](double s) {
                return s * s * (c[0] + c[1] * s + c[2] * s * s + c[3] * s * s * s);
            });
            const double en = weighted_norm(eta);
            if (en < 1e-6) continue;
            for (int k : {0, 1, 2, 3, 5, 9, 16}) {
                const double rp = weighted_norm(apply_Lk_plus_inverse(eta, k)) / en;
                CHECK(rp <= (1.0 / (0.5 + gamma + 0.5 * k)) * 1.05);
                if (k < 3) {
                    const double rm = weighted_norm(apply_Lk_minus_inverse(eta, k)) / en;
                    CHECK(rm <= (1.0 / (0.5 + gamma - 0.5 * k)) * 1.05);
                } else {
                    const double rm = weighted_norm(apply_Lk_minus_inverse(eta, k)) / en;
                    CHECK(rm <= (1.0 / (-0.5 - gamma + 0.5 * k)) * 1.05);
                }
            }
        }
    }
}
