#pragma once

// Command-line front end. `run` is the whole program; tools/repnum.cpp only
// forwards main's arguments.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "repnum/assembly.hpp"
#include "repnum/benchmarks.hpp"
#include "repnum/config.hpp"
#include "repnum/errors.hpp"
#include "repnum/spectral.hpp"

namespace repnum::cli {

enum class Command { Compute, Sweep, Scan, Eigenfunction, DumpMatrices };

struct RunRequest {
    Command command = Command::Compute;
    std::string builtin;
    std::string config;
    std::vector<int> N{40};
    NodeFamily family = NodeFamily::ZerosPlusLeftEndpoint;
    Ordering ordering = Ordering::BMinv;
    EigenMethod method = EigenMethod::Auto;
    std::string output;
    bool timing = false;
    std::optional<double> k, theta, nu, gamma, a_dagger;
    int pieces = 1;
    std::string splitting = "r0";
    std::string window;  ///< "lo:hi" in N values, inclusive
    int ref_N = 0;
    std::string nu_grid = "0:0.1:1";
    std::string theta_grid = "0:0.1:1";
    int points = 201;
    bool help = false;
};

[[nodiscard]] inline int exit_code(ErrorCode code) {
    switch (code) {
        case ErrorCode::SingularMatrix:
        case ErrorCode::NumericalFailure:
        case ErrorCode::NonConvergence: return 3;
        case ErrorCode::Io: return 4;
        default: return 2;
    }
}

inline void print_error(std::ostream& err, std::string_view code, std::string_view module,
                        std::string_view message) {
    std::string m;
    for (char c : message) {
        if (c == '"' || c == '\\') m += '\\';
        m += c == '\n' ? ' ' : c;
    }
    err << "ERROR code=" << code << " module=" << module << " message=\"" << m << "\"\n";
}

/// "start:step:stop" (inclusive), "a,b,c" or a single integer.
[[nodiscard]] inline std::vector<int> parse_N_list(const std::string& text) {
    auto fail = [&] {
        throw Error(ErrorCode::Usage, "cli", "invalid N list '" + text + "'");
    };
    auto to_int = [&](const std::string& s) {
        std::size_t used = 0;
        int v = 0;
        try {
            v = std::stoi(s, &used);
        } catch (const std::exception&) {
            fail();
        }
        if (used != s.size()) fail();
        return v;
    };
    std::vector<int> out;
    if (text.find(':') != std::string::npos) {
        std::vector<std::string> parts;
        std::stringstream ss(text);
        for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
        if (parts.size() != 3) fail();
        const int a = to_int(parts[0]), step = to_int(parts[1]), b = to_int(parts[2]);
        if (step <= 0 || b < a) fail();
        for (int n = a; n <= b; n += step) out.push_back(n);
    } else {
        std::stringstream ss(text);
        for (std::string p; std::getline(ss, p, ',');) out.push_back(to_int(p));
    }
    if (out.empty()) fail();
    for (int n : out) {
        if (n < 1) throw Error(ErrorCode::Usage, "cli", "N must be at least 1");
    }
    return out;
}

/// "start:step:stop" over reals, inclusive up to rounding, or "a,b,c".
[[nodiscard]] inline std::vector<double> parse_grid(const std::string& text) {
    auto fail = [&] {
        throw Error(ErrorCode::Usage, "cli", "invalid grid '" + text + "'");
    };
    auto to_double = [&](const std::string& s) {
        std::size_t used = 0;
        double v = 0;
        try {
            v = std::stod(s, &used);
        } catch (const std::exception&) {
            fail();
        }
        if (used != s.size()) fail();
        return v;
    };
    std::vector<double> out;
    if (text.find(':') != std::string::npos) {
        std::vector<std::string> parts;
        std::stringstream ss(text);
        for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
        if (parts.size() != 3) fail();
        const double a = to_double(parts[0]), step = to_double(parts[1]), b = to_double(parts[2]);
        if (!(step > 0.0) || b < a) fail();
        const auto count = static_cast<int>(std::floor((b - a) / step + 1e-9)) + 1;
        for (int i = 0; i < count; ++i) out.push_back(a + i * step);
    } else {
        std::stringstream ss(text);
        for (std::string p; std::getline(ss, p, ',');) out.push_back(to_double(p));
    }
    if (out.empty()) fail();
    return out;
}

struct ResolvedModel {
    CoefficientSet coeffs;
    std::optional<double> exact;  ///< known reproduction number
};

[[nodiscard]] inline ResolvedModel resolve_model(const RunRequest& r) {
    ResolvedModel m;
    if (!r.config.empty()) {
        const auto cfg = load_config(r.config);
        m.coeffs = cfg.coefficients();
        m.coeffs.breakpoints = refine_breakpoints(m.coeffs.breakpoints, m.coeffs.a_dagger, r.pieces);
        return m;
    }
    const std::string& b = r.builtin;
    if (b == "example1-analytic" || b == "example1-w3" || b == "example1-cinf") {
        const QChoice q = b == "example1-analytic" ? QChoice::Analytic
                          : b == "example1-w3"     ? QChoice::W3
                                                   : QChoice::CInfinity;
        m.coeffs = example1(q, r.a_dagger.value_or(1.0), r.gamma.value_or(1.0), r.pieces);
        m.exact = 1.0;
    } else if (b == "example2") {
        m.coeffs = example2(r.k.value_or(2.0), r.theta.value_or(0.25), r.a_dagger.value_or(14.0));
        m.coeffs.breakpoints = refine_breakpoints(m.coeffs.breakpoints, m.coeffs.a_dagger, r.pieces);
        m.exact = 1.0;
    } else if (b == "hbv") {
        HBVSplitting s = HBVSplitting::R0;
        if (r.splitting == "th") {
            s = HBVSplitting::Horizontal;
        } else if (r.splitting == "tv") {
            s = HBVSplitting::Vertical;
        } else if (r.splitting != "r0") {
            throw Error(ErrorCode::Usage, "cli", "unknown splitting '" + r.splitting + "'");
        }
        m.coeffs = hbv_model(r.nu.value_or(0.1), r.theta.value_or(0.59), s);
        m.coeffs.breakpoints = refine_breakpoints(m.coeffs.breakpoints, m.coeffs.a_dagger, r.pieces);
    } else {
        throw Error(ErrorCode::Usage, "cli", "unknown builtin model '" + b + "'");
    }
    return m;
}

namespace detail {

inline std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

class Output {
public:
    Output(const std::string& path, std::ostream& fallback) : path_(path), out_(&fallback) {
        if (!path.empty()) {
            file_.open(path);
            if (!file_) throw Error(ErrorCode::Io, "cli", "cannot write " + path);
            out_ = &file_;
        }
    }
    std::ostream& stream() { return *out_; }
    void close() {
        if (file_.is_open()) {
            file_.close();
            if (!file_) throw Error(ErrorCode::Io, "cli", "write failed for " + path_);
        }
    }

private:
    std::string path_;
    std::ofstream file_;
    std::ostream* out_;
};

inline SpectralOptions spectral_options(const RunRequest& r) {
    SpectralOptions o;
    o.ordering = r.ordering;
    o.method = r.method;
    return o;
}

inline int cmd_compute(const RunRequest& r, std::ostream& out) {
    const auto model = resolve_model(r);
    const auto ops = assemble_on_breakpoints(model.coeffs, r.family, r.N.front());
    const auto res = spectral_radius(ops, spectral_options(r));
    out << "R_N = " << fmt17(res.R) << '\n';
    out << "eigenvalue = " << fmt17(res.eigenvalue.real()) << (res.eigenvalue.imag() < 0 ? " - " : " + ")
        << fmt17(std::abs(res.eigenvalue.imag())) << "i\n";
    out << "residual = " << fmt17(res.residual) << '\n';
    out << "rcond_M = " << fmt17(res.rcond_M) << '\n';
    out << "method = " << to_string(res.method_used) << '\n';
    if (model.exact) out << "abs_err = " << fmt17(std::abs(res.R - *model.exact)) << '\n';
    return 0;
}

inline int cmd_sweep(const RunRequest& r, std::ostream& out, std::ostream& err) {
    const auto model = resolve_model(r);
    SweepOptions so;
    so.family = r.family;
    so.error_ordering = r.ordering;
    so.reference_N = r.ref_N;
    if (r.ref_N <= 0) so.exact = model.exact;
    if (!r.window.empty()) {
        const auto colon = r.window.find(':');
        if (colon == std::string::npos) throw Error(ErrorCode::Usage, "cli", "window must be lo:hi");
        int lo = 0, hi = 0;
        try {
            lo = std::stoi(r.window.substr(0, colon));
            hi = std::stoi(r.window.substr(colon + 1));
        } catch (const std::exception&) {
            throw Error(ErrorCode::Usage, "cli", "window must be lo:hi");
        }
        so.window_begin = static_cast<int>(r.N.size());
        so.window_end = 0;
        for (std::size_t i = 0; i < r.N.size(); ++i) {
            if (r.N[i] >= lo && r.N[i] <= hi) {
                so.window_begin = std::min(so.window_begin, static_cast<int>(i));
                so.window_end = static_cast<int>(i) + 1;
            }
        }
    }
    const auto rep = convergence_sweep(model.coeffs, r.N, so);
    Output o(r.output, out);
    write_report_csv(o.stream(), rep, r.timing);
    o.close();
    write_report_summary(r.output.empty() ? err : out, rep);
    for (const auto& row : rep.rows) {
        if (!row.error.empty()) return 3;
    }
    return 0;
}

inline int cmd_scan(const RunRequest& r, std::ostream& out) {
    if (r.builtin != "hbv") throw Error(ErrorCode::Usage, "cli", "scan needs --builtin hbv");
    const auto nu = parse_grid(r.nu_grid), theta = parse_grid(r.theta_grid);
    const auto grid = parameter_scan_R0(nu, theta, r.N.front(), r.family);
    Output o(r.output, out);
    o.stream() << "nu,theta,R0\n";
    for (std::size_t i = 0; i < nu.size(); ++i) {
        for (std::size_t j = 0; j < theta.size(); ++j) {
            o.stream() << fmt17(nu[i]) << ',' << fmt17(theta[j]) << ','
                       << fmt17(grid(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))) << '\n';
        }
    }
    o.close();
    return 0;
}

inline int cmd_eigenfunction(const RunRequest& r, std::ostream& out) {
    const auto model = resolve_model(r);
    const auto ops = assemble_on_breakpoints(model.coeffs, r.family, r.N.front());
    const auto res = spectral_radius(ops, spectral_options(r));
    Output o(r.output, out);
    Eigenfunction(ops, res).write_csv(o.stream(), r.points);
    o.close();
    return 0;
}

inline int cmd_dump(const RunRequest& r, std::ostream& out) {
    if (r.output.empty()) throw Error(ErrorCode::Usage, "cli", "dump-matrices needs --output PREFIX");
    const auto model = resolve_model(r);
    const auto ops = assemble_on_breakpoints(model.coeffs, r.family, r.N.front());
    write_matrix_csv(r.output + "_B.csv", ops.B);
    write_matrix_csv(r.output + "_M.csv", ops.M);
    out << "wrote " << r.output << "_B.csv and " << r.output << "_M.csv (" << ops.B.rows() << "x"
        << ops.B.cols() << ")\n";
    return 0;
}

}  // namespace detail

/// Parses argv into a request. Usage problems raise Error(Usage); --help
/// leaves the text in `help` and nothing else is guaranteed.
[[nodiscard]] inline RunRequest parse_args(int argc, const char* const* argv, std::string* help = nullptr) {
    CLI::App app{"Reproduction numbers of linear age-structured models by pseudospectral collocation",
                 "repnum"};
    app.require_subcommand(1);
    RunRequest r;
    std::string N_text = "40", family = "zeros", ordering = "bm-inv", method = "auto";

    auto add_common = [&](CLI::App* sub, bool n_list) {
        auto* src = sub->add_option_group("source", "model source");
        src->add_option("--builtin", r.builtin, "example1-analytic|example1-w3|example1-cinf|example2|hbv");
        src->add_option("--config", r.config, "YAML model file");
        src->require_option(1);
        sub->add_option("--N", N_text,
                        n_list ? "N per sub-interval: n, a,b,c or start:step:stop" : "N per sub-interval")
            ->capture_default_str();
        sub->add_option("--family", family, "zeros|extrema")
            ->check(CLI::IsMember({"zeros", "extrema"}))
            ->capture_default_str();
        sub->add_option("--ordering", ordering, "bm-inv|minv-b")
            ->check(CLI::IsMember({"bm-inv", "minv-b"}))
            ->capture_default_str();
        sub->add_option("--method", method, "auto|dense|power")
            ->check(CLI::IsMember({"auto", "dense", "power"}))
            ->capture_default_str();
        sub->add_option("--k", r.k, "example2 shape");
        sub->add_option("--theta", r.theta, "example2 scale / hbv birth fraction");
        sub->add_option("--nu", r.nu, "hbv vaccination rate");
        sub->add_option("--gamma", r.gamma, "example1 removal rate");
        sub->add_option("--a-dagger", r.a_dagger, "maximum age");
        sub->add_option("--pieces", r.pieces, "split [0, a_dagger] further into equal pieces")
            ->check(CLI::PositiveNumber);
        sub->add_option("--splitting", r.splitting, "hbv: r0|th|tv")->check(CLI::IsMember({"r0", "th", "tv"}));
        sub->add_option("--output", r.output, "output file (prefix for dump-matrices)");
    };

    auto* compute = app.add_subcommand("compute", "print R_N for one N");
    add_common(compute, false);
    auto* sweep = app.add_subcommand("sweep", "convergence table over a list of N");
    add_common(sweep, true);
    sweep->add_flag("--timing", r.timing, "include runtimes (output is then not reproducible)");
    sweep->add_option("--window", r.window, "fit window lo:hi in N");
    sweep->add_option("--ref-N", r.ref_N, "reference from this N instead of the exact value");
    auto* scan = app.add_subcommand("scan", "R0 of the hbv model over a nu x theta grid");
    add_common(scan, false);
    scan->add_option("--nu-grid", r.nu_grid, "start:step:stop or list")->capture_default_str();
    scan->add_option("--theta-grid", r.theta_grid, "start:step:stop or list")->capture_default_str();
    auto* eig = app.add_subcommand("eigenfunction", "export the dominant eigenfunction as CSV");
    add_common(eig, false);
    eig->add_option("--points", r.points, "uniform grid size")->capture_default_str();
    auto* dump = app.add_subcommand("dump-matrices", "write B and M as CSV");
    add_common(dump, false);

    if (help) *help = app.help();
    if (argc <= 1) throw Error(ErrorCode::Usage, "cli", "no command given");
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        if (help) *help = app.help();
        r.help = true;
        return r;
    } catch (const CLI::ParseError& e) {
        throw Error(ErrorCode::Usage, "cli", e.what());
    }

    r.N = parse_N_list(N_text);
    r.family = family == "extrema" ? NodeFamily::Extrema : NodeFamily::ZerosPlusLeftEndpoint;
    r.ordering = ordering == "minv-b" ? Ordering::MinvB : Ordering::BMinv;
    r.method = method == "dense" ? EigenMethod::Dense : method == "power" ? EigenMethod::Power : EigenMethod::Auto;
    r.command = *compute ? Command::Compute
                : *sweep ? Command::Sweep
                : *scan  ? Command::Scan
                : *eig   ? Command::Eigenfunction
                         : Command::DumpMatrices;
    return r;
}

[[nodiscard]] inline int execute(const RunRequest& r, std::ostream& out, std::ostream& err = std::cerr) {
    switch (r.command) {
        case Command::Compute: return detail::cmd_compute(r, out);
        case Command::Sweep: return detail::cmd_sweep(r, out, err);
        case Command::Scan: return detail::cmd_scan(r, out);
        case Command::Eigenfunction: return detail::cmd_eigenfunction(r, out);
        case Command::DumpMatrices: return detail::cmd_dump(r, out);
    }
    return 2;
}

/// Whole program: exit 0 on success, 2 usage/config, 3 numerical, 4 I/O.
[[nodiscard]] inline int run(int argc, const char* const* argv, std::ostream& out = std::cout,
                             std::ostream& err = std::cerr) {
    std::string help;
    try {
        const RunRequest r = parse_args(argc, argv, &help);
        if (r.help) {
            out << help;
            return 0;
        }
        return execute(r, out, err);
    } catch (const Error& e) {
        if (argc <= 1) {
            err << help;
        } else {
            print_error(err, to_string(e.code()), e.module(), e.what());
        }
        return exit_code(e.code());
    } catch (const std::exception& e) {
        print_error(err, "INTERNAL", "cli", e.what());
        return 3;
    }
}

}  // namespace repnum::cli
