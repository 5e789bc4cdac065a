// flowline_cli.cpp — command-line front end.
//
// Subcommands: solve, flowlines, stream, verify, sweep.  See README.md for
// the file formats and the exit-code contract (0 ok, 1 input error,
// 2 non-convergence).

#include <CLI11.hpp>

#include "flowline/cli_commands.hpp"

int main(int argc, char** argv) {
    CLI::App app{"stationary ideal-fluid flows with an elliptic stagnation point"};
    app.require_subcommand(1);

    std::string problem_path, solution_path, out_path = "solution.json", format = "json";
    std::string suite = "all";
    std::vector<double> levels, scales;
    int nx = 64, ny = 64;
    unsigned long long seed = 20240601;

    auto* solve = app.add_subcommand("solve", "solve a problem file and write a solution file");
    solve->add_option("--problem", problem_path, "problem JSON path")->required();
    solve->add_option("--out", out_path, "output solution path");

    auto* flow = app.add_subcommand("flowlines", "emit flow-line curves r = R a(psi, theta)");
    flow->add_option("--solution", solution_path, "solution JSON path")->required();
    flow->add_option("--levels", levels, "psi levels in (0, 1]")->required()->delimiter(',');
    flow->add_option("--out", out_path, "output CSV path");

    auto* stream = app.add_subcommand("stream", "reconstruct psi(x, y) on a Cartesian grid");
    stream->add_option("--solution", solution_path, "solution JSON path")->required();
    stream->add_option("--nx", nx, "grid resolution in x");
    stream->add_option("--ny", ny, "grid resolution in y");
    stream->add_option("--format", format, "json or csv")
        ->check(CLI::IsMember({"json", "csv"}));
    stream->add_option("--out", out_path, "output path");

    auto* verify = app.add_subcommand("verify", "run a property-check suite");
    verify->add_option("--suite", suite, "hardy | cokernel | linear | all");
    verify->add_option("--seed", seed, "master RNG seed");

    auto* sweep = app.add_subcommand("sweep", "solve over a list of boundary scales");
    sweep->add_option("--problem", problem_path, "problem JSON path")->required();
    sweep->add_option("--scales", scales, "boundary scale factors")->required()->delimiter(',');
    sweep->add_option("--out", out_path, "output directory");

    CLI11_PARSE(app, argc, argv);

    if (solve->parsed()) return flowline::cmd_solve(problem_path, out_path);
    if (flow->parsed()) return flowline::cmd_flowlines(solution_path, levels, out_path);
    if (stream->parsed()) return flowline::cmd_stream(solution_path, nx, ny, out_path, format);
    if (verify->parsed()) return flowline::cmd_verify(suite, seed);
    if (sweep->parsed()) return flowline::cmd_sweep(problem_path, scales, out_path);
    return 1;
}
