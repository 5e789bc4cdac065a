// cli_commands.hpp — the CLI subcommand implementations.
//
// Exit-code contract: 0 success, 1 input/validation error, 2 numerical
// non-convergence (a partial report is still written), so sweeps can triage.
#pragma once

#include <iostream>
#include <sstream>

#include "flowline/diagnostics.hpp"
#include "flowline/problem_io.hpp"

namespace flowline {

inline int cmd_solve(const std::string& problem_path, const std::string& out_path) {
    ProblemFile prob;
    try {
        prob = ProblemFile::load(problem_path);
    } catch (const validation_error& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 1;
    }
    try {
        const auto grid = prob.numerics.make_grid();
        const SGridFunction F = prob.vorticity.to_grid(grid);
        const BoundaryCurve b = prob.boundary(prob.numerics.K);
        const SolveReport rep = continuation_solve(F, b, prob.numerics);
        write_text_file(out_path, SolutionFile::from_report(prob, rep).to_json());
        if (!rep.converged()) {
            std::cerr << "non-convergence: " << rep.message << "\n";
            return 2;
        }
        return 0;
    } catch (const validation_error& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "solver failure: " << e.what() << "\n";
        return 2;
    }
}

inline int cmd_flowlines(const std::string& solution_path, const std::vector<double>& levels,
                         const std::string& out_csv) {
    SolutionFile sol;
    try {
        sol = SolutionFile::load(solution_path);
        for (const double lvl : levels)
            if (!(lvl > 0.0 && lvl <= 1.0))
                throw validation_error("levels", "flow-line levels must lie in (0, 1]");
    } catch (const validation_error& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 1;
    }
    const auto grid = SGrid::make(sol.N);
    const FlowLineFamily fam = sol.family(grid);
    std::ostringstream os;
    os << "level,theta,x,y\n";
    const int M = 2 * sol.K + 1;
    for (const double lvl : levels) {
        const double s = std::sqrt(lvl);
        for (int j = 0; j < M; ++j) {
            const double theta = 2.0 * M_PI * j / M;
            const double r = fam.R * s * fam.a.h_at(s, theta).real();
            os << fmt17(lvl) << ',' << fmt17(theta) << ',' << fmt17(fam.px + r * std::cos(theta))
               << ',' << fmt17(fam.py + r * std::sin(theta)) << "\n";
        }
    }
    try {
        write_text_file(out_csv, os.str());
    } catch (const validation_error& e) {
        std::cerr << "output error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

inline int cmd_stream(const std::string& solution_path, int nx, int ny,
                      const std::string& out_path, const std::string& format) {
    SolutionFile sol;
    StreamGrid g;
    try {
        sol = SolutionFile::load(solution_path);
        if (format != "json" && format != "csv")
            throw validation_error("format", "expected json or csv");
        const auto grid = SGrid::make(sol.N);
        g = reconstruct_stream(sol.family(grid), nx, ny);
    } catch (const validation_error& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 1;
    }
    std::ostringstream os;
    if (format == "csv") {
        os << "x,y,psi\n";
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i)
                os << fmt17(g.x_at(i)) << ',' << fmt17(g.y_at(j)) << ','
                   << fmt17(g.psi[static_cast<std::size_t>(j) * g.nx + i]) << "\n";
    } else {
        os << "{\n\"format_version\": 1,\n";
        os << "\"nx\": " << g.nx << ", \"ny\": " << g.ny << ",\n";
        os << "\"x_range\": [" << fmt17(g.x0) << ", " << fmt17(g.x1) << "],\n";
        os << "\"y_range\": [" << fmt17(g.y0) << ", " << fmt17(g.y1) << "],\n";
        os << "\"outside_sentinel\": -1,\n";
        os << "\"outside_count\": " << g.outside_count << ",\n";
        os << "\"psi\": [";
        for (int j = 0; j < g.ny; ++j) {
            os << (j ? ",\n  " : "\n  ") << "[";
            for (int i = 0; i < g.nx; ++i)
                os << (i ? ", " : "") << fmt17(g.psi[static_cast<std::size_t>(j) * g.nx + i]);
            os << "]";
        }
        os << "\n]\n}\n";
    }
    try {
        write_text_file(out_path, os.str());
    } catch (const validation_error& e) {
        std::cerr << "output error: " << e.what() << "\n";
        return 1;
    }
    std::cout << "outside points: " << g.outside_count << "\n";
    return 0;
}

inline std::vector<PropertyReport> run_verify_suite(const std::string& suite,
                                                    unsigned long long seed) {
    std::vector<PropertyReport> reports;
    const bool all = suite == "all";
    bool known = all;
    if (all || suite == "hardy") {
        known = true;
        for (const double alpha : {-1.0, -0.5, 0.0, 0.25, 0.75, 1.0})
            reports.push_back(check_hardy(alpha, 100, seed));
    }
    if (all || suite == "cokernel") {
        known = true;
        reports.push_back(check_cokernel(100, 0.1, seed));
    }
    if (all || suite == "linear") {
        known = true;
        SolveConfig cfg;
        cfg.K = 16;
        cfg.N = 48;
        reports.push_back(check_linear_isomorphism(50, cfg, seed));
    }
    if (!known) throw validation_error("suite", "unknown suite name " + suite);
    return reports;
}

inline int cmd_verify(const std::string& suite, unsigned long long seed) {
    std::vector<PropertyReport> reports;
    try {
        reports = run_verify_suite(suite, seed);
    } catch (const validation_error& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 1;
    }
    bool all_pass = true;
    std::ostringstream os;
    os << "[\n";
    for (std::size_t i = 0; i < reports.size(); ++i) {
        const auto& r = reports[i];
        std::cerr << r.text_line() << "\n";
        os << (i ? ",\n" : "") << "{\"name\": \"" << r.name << "\", \"seed\": " << r.seed
           << ", \"samples\": " << r.samples << ", \"worst_ratio\": " << fmt17(r.worst_ratio)
           << ", \"bound\": " << fmt17(r.bound) << ", \"pass\": " << (r.pass ? "true" : "false")
           << "}";
        all_pass = all_pass && r.pass;
    }
    os << "\n]\n";
    std::cout << os.str();
    return all_pass ? 0 : 1;
}

inline int cmd_sweep(const std::string& problem_path, const std::vector<double>& scales,
                     const std::string& out_dir) {
    ProblemFile prob;
    try {
        prob = ProblemFile::load(problem_path);
        if (scales.empty()) throw validation_error("scales", "need at least one boundary scale");
    } catch (const validation_error& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 1;
    }
    const auto grid = prob.numerics.make_grid();
    const SGridFunction F = prob.vorticity.to_grid(grid);
    bool all_ok = true;
    std::ostringstream os;
    os << "[\n";
    for (std::size_t i = 0; i < scales.size(); ++i) {
        const double c = scales[i];
        ProblemFile scaled = prob;
        for (auto& v : scaled.fourier_cos) v *= c;
        for (auto& v : scaled.fourier_sin) v *= c;
        int code;
        double R = 0.0, pn = 0.0;
        try {
            const SolveReport rep =
                continuation_solve(F, prob.boundary(prob.numerics.K).scaled(c), prob.numerics);
            R = rep.solution.R;
            pn = rep.p_norm;
            const std::string out = out_dir + "/solution_scale_" + std::to_string(i) + ".json";
            write_text_file(out, SolutionFile::from_report(scaled, rep).to_json());
            code = rep.converged() ? 0 : 2;
        } catch (const validation_error& e) {
            std::cerr << "sweep input error at scale " << c << ": " << e.what() << "\n";
            code = 1;
        } catch (const std::exception& e) {
            std::cerr << "sweep solve failure at scale " << c << ": " << e.what() << "\n";
            code = 2;
        }
        all_ok = all_ok && code == 0;
        os << (i ? ",\n" : "") << "{\"scale\": " << fmt17(c) << ", \"exit\": " << code
           << ", \"R\": " << fmt17(R) << ", \"p_norm\": " << fmt17(pn) << "}";
    }
    os << "\n]\n";
    std::cout << os.str();
    return all_ok ? 0 : 2;
}

}  // namespace flowline
