// problem_io.hpp — problem and solution file formats.
//
// A ProblemFile is a single self-describing JSON document: vorticity spec,
// boundary Fourier coefficients (real cos/sin form), numerics block and the
// requested outputs.  Unknown keys are rejected with their location.
//
// SolutionFiles round-trip bit-exactly: all floating point numbers are
// written with 17 significant digits, key order is fixed, newline is LF.
#pragma once

#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "flowline/solver.hpp"

namespace flowline {

inline std::string fmt17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

namespace detail {

using nlohmann::json;

inline void check_keys(const json& obj, const std::string& path,
                       std::initializer_list<const char*> allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool ok = false;
        for (const char* a : allowed)
            if (it.key() == a) { ok = true; break; }
        if (!ok) throw validation_error(path + "." + it.key(), "unknown key");
    }
}

inline double need_number(const json& obj, const std::string& path, const char* key) {
    if (!obj.contains(key)) throw validation_error(path + "." + key, "missing required field");
    if (!obj[key].is_number()) throw validation_error(path + "." + key, "expected a number");
    return obj[key].get<double>();
}

inline double number_or(const json& obj, const std::string& path, const char* key, double dflt) {
    if (!obj.contains(key)) return dflt;
    if (!obj[key].is_number()) throw validation_error(path + "." + key, "expected a number");
    return obj[key].get<double>();
}

inline std::vector<double> need_number_array(const json& obj, const std::string& path,
                                             const char* key) {
    if (!obj.contains(key)) throw validation_error(path + "." + key, "missing required field");
    if (!obj[key].is_array()) throw validation_error(path + "." + key, "expected an array");
    std::vector<double> out;
    for (const auto& v : obj[key]) {
        if (!v.is_number()) throw validation_error(path + "." + key, "expected numeric entries");
        out.push_back(v.get<double>());
    }
    return out;
}

}  // namespace detail

struct VorticitySpec {
    enum class Type { constant, radial_samples, polynomial };
    Type type = Type::constant;
    double value = 4.0;
    std::vector<double> s_values, F_values;   // radial-samples
    std::vector<double> coefficients;         // polynomial in psi

    SGridFunction to_grid(const SGridPtr& grid) const {
        SGridFunction F(grid);
        switch (type) {
            case Type::constant:
                for (auto& v : F.values) v = value;
                break;
            case Type::polynomial:
                for (int i = 0; i < grid->size(); ++i) {
                    const double psi = grid->node(i) * grid->node(i);
                    double acc = 0.0, p = 1.0;
                    for (const double c : coefficients) {
                        acc += c * p;
                        p *= psi;
                    }
                    F.values[i] = acc;
                }
                break;
            case Type::radial_samples: {
                // barycentric Lagrange interpolation on the provided nodes
                const std::size_t n = s_values.size();
                std::vector<double> w(n, 1.0);
                for (std::size_t i = 0; i < n; ++i)
                    for (std::size_t j = 0; j < n; ++j)
                        if (i != j) w[i] /= (s_values[i] - s_values[j]);
                for (int q = 0; q < grid->size(); ++q) {
                    const double x = grid->node(q);
                    double num = 0.0, den = 0.0;
                    bool hit = false;
                    for (std::size_t i = 0; i < n && !hit; ++i)
                        if (x == s_values[i]) {
                            F.values[q] = F_values[i];
                            hit = true;
                        }
                    if (hit) continue;
                    for (std::size_t i = 0; i < n; ++i) {
                        const double c = w[i] / (x - s_values[i]);
                        num += c * F_values[i];
                        den += c;
                    }
                    F.values[q] = num / den;
                }
                break;
            }
        }
        return F;
    }
};

struct ProblemFile {
    int format_version = 1;
    VorticitySpec vorticity;
    std::vector<double> fourier_cos{1.0};  // cos coefficients, n = 0,1,...
    std::vector<double> fourier_sin{};     // sin coefficients, n = 1,2,...
    double tau = 0.5;
    SolveConfig numerics;
    std::vector<std::string> outputs;

    BoundaryCurve boundary(int K) const {
        ThetaSeries b(K);
        if (!fourier_cos.empty()) b.at(0) = fourier_cos[0];
        for (std::size_t n = 1; n < fourier_cos.size(); ++n) {
            if (static_cast<int>(n) > K) break;
            b.at(int(n)) += 0.5 * fourier_cos[n];
            b.at(-int(n)) += 0.5 * fourier_cos[n];
        }
        for (std::size_t n = 1; n <= fourier_sin.size(); ++n) {
            if (static_cast<int>(n) > K) break;
            b.at(int(n)) += cplx(0.0, -0.5) * fourier_sin[n - 1];
            b.at(-int(n)) += cplx(0.0, 0.5) * fourier_sin[n - 1];
        }
        return {b, tau};
    }

    static ProblemFile parse(const std::string& text) {
        detail::json doc;
        try {
            doc = detail::json::parse(text);
        } catch (const std::exception& e) {
            throw validation_error("problem", std::string("JSON parse failure: ") + e.what());
        }
        if (!doc.is_object()) throw validation_error("problem", "top level must be an object");
        detail::check_keys(doc, "problem",
                           {"format_version", "vorticity", "boundary", "numerics", "outputs"});

        ProblemFile p;
        if (doc.contains("format_version")) {
            if (!doc["format_version"].is_number_integer() || doc["format_version"].get<int>() != 1)
                throw validation_error("problem.format_version", "unsupported format version");
        }

        if (!doc.contains("vorticity"))
            throw validation_error("problem.vorticity", "missing required field");
        const auto& vj = doc["vorticity"];
        if (!vj.is_object()) throw validation_error("problem.vorticity", "expected an object");
        if (!vj.contains("type") || !vj["type"].is_string())
            throw validation_error("problem.vorticity.type", "missing or non-string type");
        const std::string vt = vj["type"].get<std::string>();
        if (vt == "constant") {
            detail::check_keys(vj, "problem.vorticity", {"type", "value"});
            p.vorticity.type = VorticitySpec::Type::constant;
            p.vorticity.value = detail::need_number(vj, "problem.vorticity", "value");
        } else if (vt == "radial-samples") {
            detail::check_keys(vj, "problem.vorticity", {"type", "s_values", "F_values"});
            p.vorticity.type = VorticitySpec::Type::radial_samples;
            p.vorticity.s_values = detail::need_number_array(vj, "problem.vorticity", "s_values");
            p.vorticity.F_values = detail::need_number_array(vj, "problem.vorticity", "F_values");
            if (p.vorticity.s_values.size() != p.vorticity.F_values.size() ||
                p.vorticity.s_values.size() < 2)
                throw validation_error("problem.vorticity.s_values",
                                       "need matching arrays with at least two samples");
            for (std::size_t i = 0; i < p.vorticity.s_values.size(); ++i) {
                const double s = p.vorticity.s_values[i];
                if (s < 0.0 || s > 1.0)
                    throw validation_error("problem.vorticity.s_values", "samples must lie in [0,1]");
                if (i > 0 && s <= p.vorticity.s_values[i - 1])
                    throw validation_error("problem.vorticity.s_values",
                                           "samples must be strictly increasing");
            }
        } else if (vt == "polynomial") {
            detail::check_keys(vj, "problem.vorticity", {"type", "coefficients"});
            p.vorticity.type = VorticitySpec::Type::polynomial;
            p.vorticity.coefficients =
                detail::need_number_array(vj, "problem.vorticity", "coefficients");
            if (p.vorticity.coefficients.empty())
                throw validation_error("problem.vorticity.coefficients", "need at least one coefficient");
        } else {
            throw validation_error("problem.vorticity.type",
                                   "expected constant | radial-samples | polynomial");
        }

        if (!doc.contains("boundary"))
            throw validation_error("problem.boundary", "missing required field");
        const auto& bj = doc["boundary"];
        if (!bj.is_object()) throw validation_error("problem.boundary", "expected an object");
        detail::check_keys(bj, "problem.boundary", {"fourier_cos", "fourier_sin", "tau"});
        p.fourier_cos = detail::need_number_array(bj, "problem.boundary", "fourier_cos");
        if (bj.contains("fourier_sin"))
            p.fourier_sin = detail::need_number_array(bj, "problem.boundary", "fourier_sin");
        p.tau = detail::number_or(bj, "problem.boundary", "tau", 0.5);

        if (doc.contains("numerics")) {
            const auto& nj = doc["numerics"];
            if (!nj.is_object()) throw validation_error("problem.numerics", "expected an object");
            detail::check_keys(nj, "problem.numerics",
                               {"K", "N", "gamma", "sigma", "m", "tol_residual", "max_iter",
                                "damping", "continuation_steps", "jacobian_mode", "bracket_tol"});
            auto& c = p.numerics;
            c.K = static_cast<int>(detail::number_or(nj, "problem.numerics", "K", c.K));
            c.N = static_cast<int>(detail::number_or(nj, "problem.numerics", "N", c.N));
            c.gamma = detail::number_or(nj, "problem.numerics", "gamma", c.gamma);
            c.sigma = detail::number_or(nj, "problem.numerics", "sigma", c.sigma);
            c.m = static_cast<int>(detail::number_or(nj, "problem.numerics", "m", c.m));
            c.tol_residual = detail::number_or(nj, "problem.numerics", "tol_residual", c.tol_residual);
            c.max_iter = static_cast<int>(detail::number_or(nj, "problem.numerics", "max_iter", c.max_iter));
            c.damping = detail::number_or(nj, "problem.numerics", "damping", c.damping);
            c.continuation_steps = static_cast<int>(
                detail::number_or(nj, "problem.numerics", "continuation_steps", c.continuation_steps));
            c.bracket_tol = detail::number_or(nj, "problem.numerics", "bracket_tol", c.bracket_tol);
            if (nj.contains("jacobian_mode")) {
                if (!nj["jacobian_mode"].is_string())
                    throw validation_error("problem.numerics.jacobian_mode", "expected a string");
                const std::string jm = nj["jacobian_mode"].get<std::string>();
                if (jm == "frozen-reference")
                    c.jacobian_mode = JacobianMode::frozen_reference;
                else if (jm == "finite-difference-full")
                    c.jacobian_mode = JacobianMode::finite_difference_full;
                else
                    throw validation_error("problem.numerics.jacobian_mode",
                                           "expected frozen-reference | finite-difference-full");
            }
        }

        if (doc.contains("outputs")) {
            if (!doc["outputs"].is_array())
                throw validation_error("problem.outputs", "expected an array of strings");
            for (const auto& o : doc["outputs"]) {
                if (!o.is_string())
                    throw validation_error("problem.outputs", "expected an array of strings");
                p.outputs.push_back(o.get<std::string>());
            }
        }

        p.numerics.validate();
        p.boundary(p.numerics.K).validate(p.numerics.sigma);
        return p;
    }

    static ProblemFile load(const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw validation_error("problem", "cannot open file " + path);
        std::ostringstream ss;
        ss << in.rdbuf();
        return parse(ss.str());
    }

    std::string to_json() const {
        std::ostringstream os;
        os << "{\n  \"format_version\": 1,\n  \"vorticity\": ";
        switch (vorticity.type) {
            case VorticitySpec::Type::constant:
                os << "{\"type\": \"constant\", \"value\": " << fmt17(vorticity.value) << "}";
                break;
            case VorticitySpec::Type::polynomial: {
                os << "{\"type\": \"polynomial\", \"coefficients\": [";
                for (std::size_t i = 0; i < vorticity.coefficients.size(); ++i)
                    os << (i ? ", " : "") << fmt17(vorticity.coefficients[i]);
                os << "]}";
                break;
            }
            case VorticitySpec::Type::radial_samples: {
                os << "{\"type\": \"radial-samples\", \"s_values\": [";
                for (std::size_t i = 0; i < vorticity.s_values.size(); ++i)
                    os << (i ? ", " : "") << fmt17(vorticity.s_values[i]);
                os << "], \"F_values\": [";
                for (std::size_t i = 0; i < vorticity.F_values.size(); ++i)
                    os << (i ? ", " : "") << fmt17(vorticity.F_values[i]);
                os << "]}";
                break;
            }
        }
        os << ",\n  \"boundary\": {\"fourier_cos\": [";
        for (std::size_t i = 0; i < fourier_cos.size(); ++i)
            os << (i ? ", " : "") << fmt17(fourier_cos[i]);
        os << "], \"fourier_sin\": [";
        for (std::size_t i = 0; i < fourier_sin.size(); ++i)
            os << (i ? ", " : "") << fmt17(fourier_sin[i]);
        os << "], \"tau\": " << fmt17(tau) << "},\n";
        os << "  \"numerics\": {\"K\": " << numerics.K << ", \"N\": " << numerics.N
           << ", \"gamma\": " << fmt17(numerics.gamma) << ", \"sigma\": " << fmt17(numerics.sigma)
           << ", \"m\": " << numerics.m << ", \"tol_residual\": " << fmt17(numerics.tol_residual)
           << ", \"max_iter\": " << numerics.max_iter << ", \"damping\": " << fmt17(numerics.damping)
           << ", \"continuation_steps\": " << numerics.continuation_steps
           << ", \"jacobian_mode\": \""
           << (numerics.jacobian_mode == JacobianMode::frozen_reference ? "frozen-reference"
                                                                        : "finite-difference-full")
           << "\", \"bracket_tol\": " << fmt17(numerics.bracket_tol) << "},\n";
        os << "  \"outputs\": [";
        for (std::size_t i = 0; i < outputs.size(); ++i)
            os << (i ? ", " : "") << '"' << outputs[i] << '"';
        os << "]\n}\n";
        return os.str();
    }
};

struct SolutionFile {
    int format_version = 1;
    ProblemFile problem;
    bool converged = false;
    int iterations = 0;
    double R = 1.0, px = 0.0, py = 0.0;
    int K = 0, N = 0;
    std::vector<cplx> v_coeffs;                  // leading v_k, k = -K..K
    std::vector<std::vector<double>> w_values;   // remainder h on the (s,theta) grid
    std::vector<double> s_nodes;
    double residual_interior = 0.0, residual_boundary = 0.0, cokernel_magnitude = 0.0;
    double analyticity_width = std::numeric_limits<double>::infinity();

    static SolutionFile from_report(const ProblemFile& prob, const SolveReport& rep) {
        SolutionFile s;
        s.problem = prob;
        s.converged = rep.converged();
        s.iterations = rep.iterations;
        s.R = rep.solution.R;
        s.px = rep.solution.px;
        s.py = rep.solution.py;
        s.K = rep.solution.a.K();
        s.N = rep.solution.a.n_radial();
        s.s_nodes = rep.solution.a.grid()->nodes();
        const ThetaSeries v = rep.solution.a.leading();
        s.v_coeffs.assign(v.coeffs().begin(), v.coeffs().end());
        const int M = 2 * s.K + 1;
        const auto h = rep.solution.a.h_physical();
        s.w_values.assign(s.N, std::vector<double>(M, 0.0));
        for (int i = 0; i < s.N; ++i)
            for (int j = 0; j < M; ++j)
                s.w_values[i][j] = h[i][j].real() - v.eval(2.0 * M_PI * j / M).real();
        s.analyticity_width = rep.analyticity_width_of_trace;
        // the stored norms describe the stored state: evaluate them on the
        // reconstructed family, so a reload reproduces them bit-for-bit
        try {
            const auto grid = rep.solution.a.grid();
            const FlowLineFamily fam = s.family(grid);
            const SGridFunction F = prob.vorticity.to_grid(grid);
            const BoundaryCurve b = prob.boundary(s.K);
            const ResidualPair res = residual(F, b, fam, XiOptions{prob.numerics.bracket_tol, 0},
                                              prob.numerics.sigma);
            s.residual_interior = res.interior.sup_h_physical();
            s.residual_boundary = res.boundary.sup_norm();
            s.cokernel_magnitude = res.cokernel_magnitude;
        } catch (const std::exception&) {
            // non-admissible partial states keep the solver-reported norms
            if (!rep.residual_history.empty()) {
                s.residual_interior = rep.residual_history.back()[0];
                s.residual_boundary = rep.residual_history.back()[1];
                s.cokernel_magnitude = rep.residual_history.back()[2];
            }
        }
        return s;
    }

    FlowLineFamily family(const SGridPtr& grid) const {
        ThetaSeries v(K);
        for (int k = -K; k <= K; ++k) v.at(k) = v_coeffs[static_cast<std::size_t>(k + K)];
        const int M = 2 * K + 1;
        std::vector<std::vector<cplx>> h(N, std::vector<cplx>(M));
        for (int i = 0; i < N; ++i)
            for (int j = 0; j < M; ++j)
                h[i][j] = v.eval(2.0 * M_PI * j / M).real() + w_values[i][j];
        FlowLineFamily fam;
        fam.R = R;
        fam.px = px;
        fam.py = py;
        fam.a = BracketField::from_h_physical(0.5, K, grid, h);
        fam.a.hermitianize();
        return fam;
    }

    std::string to_json() const {
        std::ostringstream os;
        os << "{\n\"format_version\": 1,\n";
        os << "\"converged\": " << (converged ? "true" : "false") << ",\n";
        os << "\"iterations\": " << iterations << ",\n";
        os << "\"R\": " << fmt17(R) << ",\n";
        os << "\"p\": [" << fmt17(px) << ", " << fmt17(py) << "],\n";
        os << "\"K\": " << K << ",\n\"N\": " << N << ",\n";
        os << "\"s_nodes\": [";
        for (std::size_t i = 0; i < s_nodes.size(); ++i) os << (i ? ", " : "") << fmt17(s_nodes[i]);
        os << "],\n\"v_coeffs\": [";
        for (std::size_t i = 0; i < v_coeffs.size(); ++i)
            os << (i ? ", " : "") << "[" << fmt17(v_coeffs[i].real()) << ", "
               << fmt17(v_coeffs[i].imag()) << "]";
        os << "],\n\"w_values\": [";
        for (std::size_t i = 0; i < w_values.size(); ++i) {
            os << (i ? ",\n  " : "\n  ") << "[";
            for (std::size_t j = 0; j < w_values[i].size(); ++j)
                os << (j ? ", " : "") << fmt17(w_values[i][j]);
            os << "]";
        }
        os << "\n],\n";
        os << "\"residual_norms\": {\"interior\": " << fmt17(residual_interior)
           << ", \"boundary\": " << fmt17(residual_boundary)
           << ", \"cokernel\": " << fmt17(cokernel_magnitude) << "},\n";
        os << "\"analyticity_width\": ";
        if (std::isfinite(analyticity_width)) os << fmt17(analyticity_width);
        else os << "null";
        os << ",\n\"problem\": " << problem.to_json() << "}\n";
        return os.str();
    }

    static SolutionFile parse(const std::string& text) {
        detail::json doc;
        try {
            doc = detail::json::parse(text);
        } catch (const std::exception& e) {
            throw validation_error("solution", std::string("JSON parse failure: ") + e.what());
        }
        detail::check_keys(doc, "solution",
                           {"format_version", "converged", "iterations", "R", "p", "K", "N",
                            "s_nodes", "v_coeffs", "w_values", "residual_norms",
                            "analyticity_width", "problem"});
        SolutionFile s;
        if (doc["format_version"].get<int>() != 1)
            throw validation_error("solution.format_version", "unsupported format version");
        s.converged = doc["converged"].get<bool>();
        s.iterations = doc["iterations"].get<int>();
        s.R = doc["R"].get<double>();
        s.px = doc["p"][0].get<double>();
        s.py = doc["p"][1].get<double>();
        s.K = doc["K"].get<int>();
        s.N = doc["N"].get<int>();
        for (const auto& v : doc["s_nodes"]) s.s_nodes.push_back(v.get<double>());
        for (const auto& v : doc["v_coeffs"])
            s.v_coeffs.emplace_back(v[0].get<double>(), v[1].get<double>());
        for (const auto& row : doc["w_values"]) {
            s.w_values.emplace_back();
            for (const auto& v : row) s.w_values.back().push_back(v.get<double>());
        }
        s.residual_interior = doc["residual_norms"]["interior"].get<double>();
        s.residual_boundary = doc["residual_norms"]["boundary"].get<double>();
        s.cokernel_magnitude = doc["residual_norms"]["cokernel"].get<double>();
        if (doc["analyticity_width"].is_null())
            s.analyticity_width = std::numeric_limits<double>::infinity();
        else
            s.analyticity_width = doc["analyticity_width"].get<double>();
        s.problem = ProblemFile::parse(doc["problem"].dump());
        if (static_cast<int>(s.v_coeffs.size()) != 2 * s.K + 1 ||
            static_cast<int>(s.w_values.size()) != s.N)
            throw validation_error("solution", "inconsistent array sizes");
        return s;
    }

    static SolutionFile load(const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw validation_error("solution", "cannot open file " + path);
        std::ostringstream ss;
        ss << in.rdbuf();
        return parse(ss.str());
    }
};

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw validation_error("output", "cannot open file " + path + " for writing");
    out << content;
}

}  // namespace flowline
