#pragma once

// Built-in test models with known reproduction numbers, convergence sweeps
// and order fitting.

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <Eigen/Dense>

#include "repnum/assembly.hpp"
#include "repnum/errors.hpp"
#include "repnum/expression.hpp"
#include "repnum/model.hpp"
#include "repnum/spectral.hpp"

namespace repnum {

namespace detail {

// Bisection driver around the fixed 61-point Kronrod rule. A segment is
// accepted when its estimate meets the tolerance or sits at the roundoff
// floor; Boost's own driver keeps refining below that floor.
template <class F>
double kronrod_segment(F& f, double lo, double hi, double tol, double abs_tol, int depth) {
    double l1 = 0.0;
    const double v = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, lo, hi, 0, 0.0,
                                                                                   nullptr, &l1);
    const double err = std::abs(v - boost::math::quadrature::gauss<double, 30>::integrate(f, lo, hi));
    const double floor = 64.0 * std::numeric_limits<double>::epsilon() * l1;
    if (err <= std::max({tol * l1, floor, abs_tol})) return v;
    if (depth == 0 || !std::isfinite(v)) {
        throw Error(ErrorCode::NumericalFailure, "benchmarks",
                    "adaptive quadrature did not reach the requested tolerance");
    }
    const double mid = 0.5 * (lo + hi);
    return kronrod_segment(f, lo, mid, tol, abs_tol, depth - 1) +
           kronrod_segment(f, mid, hi, tol, abs_tol, depth - 1);
}

}  // namespace detail

/// Adaptive Gauss-Kronrod on [lo, hi], optionally split at interior points.
template <class F>
[[nodiscard]] double integrate_adaptive(F&& f, double lo, double hi, double tol = 1e-13,
                                        const std::vector<double>& splits = {}) {
    std::vector<double> pts{lo};
    for (double s : splits) {
        if (s > lo && s < hi) pts.push_back(s);
    }
    pts.push_back(hi);
    std::sort(pts.begin(), pts.end());
    // Segments far below the overall magnitude only need absolute accuracy.
    double scale = 0.0;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        double l1 = 0.0;
        if (pts[i + 1] > pts[i]) {
            (void)boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, pts[i], pts[i + 1], 0,
                                                                                0.0, nullptr, &l1);
        }
        scale += l1;
    }
    const double abs_tol = 1e-3 * tol * scale;
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        if (pts[i + 1] > pts[i]) total += detail::kronrod_segment(f, pts[i], pts[i + 1], tol, abs_tol, 30);
    }
    return total;
}

// ---------------------------------------------------------------- example 1

enum class QChoice { Analytic, W3, CInfinity };

struct Example1Config {
    Expression q;
    double a_dagger = 1.0;
    double gamma = 1.0;
    double c = 0.0;
    std::vector<double> q_breaks;  ///< points where q is not smooth
};

[[nodiscard]] inline std::string q_expression(QChoice choice, double a_dagger = 1.0) {
    switch (choice) {
        case QChoice::Analytic: return "exp(-2*a)";
        case QChoice::W3: return "(0.5-a)^2*abs(0.5-a)";
        default: {
            char buf[96];
            std::snprintf(buf, sizeof buf, "exp(-(a-0.5)^(-2))*(a-0.5)^(-2)*chi(0.5, %.17g)", a_dagger);
            return buf;
        }
    }
}

/// c = int_0^a+ (a+ - a) int_0^a exp(-gamma (a - alpha)) q(alpha) dalpha da.
[[nodiscard]] inline double example1_normalization(const Expression& q, double a_dagger,
                                                   double gamma,
                                                   const std::vector<double>& q_breaks = {}) {
    auto qf = [&](double x) { return q(x, 0.0, a_dagger); };
    // Beyond 50/gamma the exponential is below e^-50 relative.
    const double layer = 50.0 / gamma;
    auto inner = [&](double a) {
        if (a <= 0.0) return 0.0;
        std::vector<double> splits = q_breaks;
        if (a - layer > 0.0) splits.push_back(a - layer);
        return integrate_adaptive([&](double al) { return std::exp(-gamma * (a - al)) * qf(al); },
                                  0.0, a, 1e-13, splits);
    };
    std::vector<double> outer_splits = q_breaks;
    // Near 0 the inner integral changes on the scale 1/gamma.
    if (layer < a_dagger) outer_splits.push_back(layer);
    return integrate_adaptive([&](double a) { return (a_dagger - a) * inner(a); }, 0.0, a_dagger,
                              1e-13, outer_splits);
}

[[nodiscard]] inline Example1Config example1_config(const Expression& q, double a_dagger,
                                                    double gamma, std::vector<double> q_breaks = {}) {
    if (!(a_dagger > 0.0) || !(gamma > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "benchmarks", "a_dagger and gamma must be positive");
    }
    Example1Config cfg{q, a_dagger, gamma, 0.0, std::move(q_breaks)};
    cfg.c = example1_normalization(cfg.q, a_dagger, gamma, cfg.q_breaks);
    if (!(cfg.c > 0.0)) throw Error(ErrorCode::InvalidArgument, "benchmarks", "normalization c must be positive");
    return cfg;
}

[[nodiscard]] inline Example1Config example1_config(QChoice choice, double a_dagger = 1.0,
                                                    double gamma = 1.0) {
    std::vector<double> breaks;
    if (choice != QChoice::Analytic) breaks.push_back(0.5);
    return example1_config(parse_coefficient(q_expression(choice, a_dagger)), a_dagger, gamma, breaks);
}

/// beta(a, alpha) = q(a)(a+ - alpha)/c, delta = -gamma, b = 0; R = 1.
[[nodiscard]] inline ModelCoefficients example1_model(const Example1Config& cfg) {
    ModelCoefficients m;
    m.dim = 1;
    m.a_dagger = cfg.a_dagger;
    m.breakpoints = default_breakpoints(cfg.a_dagger);
    m.beta = scalar_kernel([q = cfg.q, ad = cfg.a_dagger, c = cfg.c](double a, double alpha) {
        return q(a, 0.0, ad) * (ad - alpha) / c;
    });
    m.delta = constant_function(Eigen::MatrixXd::Constant(1, 1, -cfg.gamma));
    return m;
}

[[nodiscard]] inline CoefficientSet example1(const Example1Config& cfg, int pieces = 1) {
    auto m = example1_model(cfg);
    m.breakpoints = refine_breakpoints(m.breakpoints, m.a_dagger, pieces);
    return split(m, SplittingSpec::r0());
}

[[nodiscard]] inline CoefficientSet example1(QChoice choice, double a_dagger = 1.0,
                                             double gamma = 1.0, int pieces = 1) {
    return example1(example1_config(choice, a_dagger, gamma), pieces);
}

/// Exact eigenfunction psi(a) = int_0^a q.
[[nodiscard]] inline double example1_psi(const Example1Config& cfg, double a) {
    if (a <= 0.0) return 0.0;
    return integrate_adaptive([&](double x) { return cfg.q(x, 0.0, cfg.a_dagger); }, 0.0, a, 1e-13,
                              cfg.q_breaks);
}

// ---------------------------------------------------------------- example 2

// b(a) exp(-a/theta) is the Gamma(k, theta) density truncated to [0, a+],
// so b grows like a^(k-1).
struct Example2Config {
    double k = 2.0;
    double theta = 0.25;
    double a_dagger = 14.0;
    double c = 0.0;  ///< 1 / int_0^a+ a^(k-1) exp(-a/theta) da
};

[[nodiscard]] inline Example2Config example2_config(double k, double theta, double a_dagger = 14.0) {
    // k < 1 would make b unbounded at a = 0.
    if (!(k >= 1.0) || !(theta > 0.0) || !(a_dagger > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "benchmarks",
                    "need k >= 1 and positive theta, a_dagger");
    }
    Example2Config cfg{k, theta, a_dagger, 0.0};
    const double mass = integrate_adaptive(
        [&](double a) { return std::pow(a, k - 1.0) * std::exp(-a / theta); }, 0.0, a_dagger, 1e-14,
        {std::min(a_dagger, 40.0 * theta)});
    cfg.c = 1.0 / mass;
    return cfg;
}

/// b+ = c a^(k-1), delta = -1/theta, beta = 0; R = 1.
[[nodiscard]] inline CoefficientSet example2(const Example2Config& cfg) {
    ModelCoefficients m;
    m.dim = 1;
    m.a_dagger = cfg.a_dagger;
    m.breakpoints = default_breakpoints(cfg.a_dagger);
    m.b = scalar_function([c = cfg.c, p = cfg.k - 1.0](double a) { return c * std::pow(a, p); });
    m.delta = constant_function(Eigen::MatrixXd::Constant(1, 1, -1.0 / cfg.theta));
    return split(m, SplittingSpec::r0());
}

[[nodiscard]] inline CoefficientSet example2(double k, double theta = 0.25, double a_dagger = 14.0) {
    return example2(example2_config(k, theta, a_dagger));
}

// ---------------------------------------------------------------- HBV

struct HBVConfig {
    double a_dagger = 75.0;
    double epsilon = 0.16;
    double sigma = 6.0;
    double gamma1 = 4.0;
    double gamma2 = 0.025;
    double omega = 0.1;
    double q1 = 0.711;
    double q2 = 0.109;
    double nu = 0.1;
    double theta = 0.59;
    std::array<double, 8> class_bounds{0, 3, 6, 10, 15, 30, 50, 75};
    std::array<double, 7> k{1.070, 0.607, 0.338, 0.149, 0.027, 0.068, 0.041};
    std::array<double, 7> lambda{0.112, 0.079, 0.049, 0.024, 0.006, 0.013, 0.008};
    double fertility = 0.018;
    double fertility_from = 18.0;

    [[nodiscard]] int age_class(double a) const {
        int i = 0;
        while (i < 6 && a >= class_bounds[static_cast<std::size_t>(i + 1)]) ++i;
        return i;
    }
    /// WAIFW kernel, symmetric with k_ij = k_i for i >= j.
    [[nodiscard]] double waifw(double a, double alpha) const {
        return k[static_cast<std::size_t>(std::max(age_class(a), age_class(alpha)))];
    }
    /// Susceptible fraction at the disease-free state (constant vaccination rate).
    [[nodiscard]] double s_star(double a) const {
        const double r = omega + nu;
        if (r == 0.0) return theta;
        return theta * std::exp(-r * a) + omega / r * (1.0 - std::exp(-r * a));
    }
    [[nodiscard]] double p(double a) const { return 0.176501 * std::exp(-0.787711 * a) + 0.02116; }
    [[nodiscard]] double f(double a) const {
        return a >= fertility_from && a <= a_dagger ? fertility : 0.0;
    }
    [[nodiscard]] std::vector<double> breakpoints() const {
        std::vector<double> bp(class_bounds.begin(), class_bounds.end());
        bp.push_back(fertility_from);
        std::sort(bp.begin(), bp.end());
        bp.erase(std::unique(bp.begin(), bp.end()), bp.end());
        return bp;
    }
};

/// Force of infection fitted to serological data; the k_i above come from its class means.
[[nodiscard]] inline double hbv_force_of_infection(double a) {
    const double x = std::min(a, 47.5);
    return 0.13074116 - 1.362531e-2 * x + 4.6463e-4 * x * x - 4.89e-6 * x * x * x;
}

enum class HBVSplitting { R0, Horizontal, Vertical };

[[nodiscard]] inline SplittingSpec hbv_splitting(HBVSplitting s) {
    switch (s) {
        case HBVSplitting::Horizontal: return SplittingSpec::type_reproduction(KernelKind::Beta);
        case HBVSplitting::Vertical: return SplittingSpec::type_reproduction(KernelKind::B);
        default: return SplittingSpec::r0();
    }
}

[[nodiscard]] inline ModelCoefficients hbv_model_coefficients(const HBVConfig& cfg) {
    if (!(cfg.nu >= 0.0 && cfg.nu <= 1.0) || !(cfg.theta >= 0.0 && cfg.theta <= 1.0)) {
        throw Error(ErrorCode::OutOfRange, "benchmarks", "nu and theta must lie in [0, 1]");
    }
    ModelCoefficients m;
    m.dim = 3;
    m.a_dagger = cfg.a_dagger;
    m.breakpoints = cfg.breakpoints();
    m.beta = [cfg](double a, double alpha) {
        Eigen::MatrixXd v = Eigen::MatrixXd::Zero(3, 3);
        const double s = cfg.s_star(a) * cfg.waifw(a, alpha);
        v(0, 1) = s;
        v(0, 2) = cfg.epsilon * s;
        return v;
    };
    m.b = [cfg](double a) {
        Eigen::MatrixXd v = Eigen::MatrixXd::Zero(3, 3);
        const double s = cfg.theta * cfg.f(a);
        v(0, 1) = s * cfg.q1;
        v(0, 2) = s * cfg.q2;
        return v;
    };
    m.delta = [cfg](double a) {
        Eigen::MatrixXd v = Eigen::MatrixXd::Zero(3, 3);
        v(0, 0) = -cfg.sigma;
        v(1, 0) = cfg.sigma;
        v(1, 1) = -cfg.gamma1;
        v(2, 1) = cfg.p(a) * cfg.gamma1;
        v(2, 2) = -cfg.gamma2;
        return v;
    };
    return m;
}

[[nodiscard]] inline CoefficientSet hbv_model(double nu, double theta,
                                              HBVSplitting splitting = HBVSplitting::R0) {
    HBVConfig cfg;
    cfg.nu = nu;
    cfg.theta = theta;
    return split(hbv_model_coefficients(cfg), hbv_splitting(splitting));
}

// ---------------------------------------------------------------- execution

[[nodiscard]] inline unsigned worker_count(std::size_t jobs) {
    unsigned n = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("REPNUM_THREADS")) {
        const int cap = std::atoi(env);
        if (cap >= 1) n = std::min(n, static_cast<unsigned>(cap));
    }
    return static_cast<unsigned>(std::min<std::size_t>(n, std::max<std::size_t>(jobs, 1)));
}

/// Runs fn(i) for i in [0, count); each index is visited once. Callers write
/// results by index, so output order does not depend on scheduling.
template <class Fn>
void parallel_for(std::size_t count, Fn&& fn) {
    const unsigned workers = worker_count(count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

// ---------------------------------------------------------------- convergence

struct SweepOptions {
    NodeFamily family = NodeFamily::ZerosPlusLeftEndpoint;
    Ordering error_ordering = Ordering::BMinv;  ///< ordering used for abs_err and the fit
    std::optional<double> exact;                ///< reference value if known
    int reference_N = 0;                        ///< otherwise computed at this N (0: 2 * max N)
    int window_begin = -1;                      ///< fit window, indices into N list; -1: last half
    int window_end = -1;
};

struct ConvergenceRow {
    int N = 0;
    double R_BMinv = std::numeric_limits<double>::quiet_NaN();
    double R_MinvB = std::numeric_limits<double>::quiet_NaN();
    double abs_err = std::numeric_limits<double>::quiet_NaN();
    double cond_M = std::numeric_limits<double>::quiet_NaN();
    double runtime_ms = 0.0;
    std::string error;  ///< empty on success
};

struct OrderFit {
    double order = std::numeric_limits<double>::quiet_NaN();
    double residual = std::numeric_limits<double>::quiet_NaN();  ///< rms of log-residuals
    int points = 0;
};

struct ConvergenceReport {
    std::vector<ConvergenceRow> rows;
    double reference = 0.0;
    std::string reference_source;  ///< "exact" or "N=<n>"
    OrderFit fit;
};

/// Least-squares slope of log(err) against log(N); zero or missing errors are skipped.
[[nodiscard]] inline OrderFit fit_order(const std::vector<int>& N, const std::vector<double>& err) {
    std::vector<double> x, y;
    for (std::size_t i = 0; i < N.size() && i < err.size(); ++i) {
        if (err[i] > 0.0 && std::isfinite(err[i])) {
            x.push_back(std::log(static_cast<double>(N[i])));
            y.push_back(std::log(err[i]));
        }
    }
    OrderFit fit;
    fit.points = static_cast<int>(x.size());
    if (x.size() < 2) return fit;
    const double n = static_cast<double>(x.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) mx += x[i] / n, my += y[i] / n;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx == 0.0) return fit;
    const double slope = sxy / sxx;
    double ss = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - (my + slope * (x[i] - mx));
        ss += r * r;
    }
    fit.order = -slope;
    fit.residual = std::sqrt(ss / n);
    return fit;
}

/// R_N for one N; meshes follow the coefficient breakpoints.
[[nodiscard]] inline SpectralResult compute_R(const CoefficientSet& coeffs, int N, NodeFamily family,
                                              Ordering ordering = Ordering::BMinv) {
    const auto ops = assemble_on_breakpoints(coeffs, family, N);
    SpectralOptions opt;
    opt.ordering = ordering;
    return spectral_radius(ops, opt);
}

[[nodiscard]] inline ConvergenceReport convergence_sweep(const CoefficientSet& coeffs,
                                                         const std::vector<int>& N_list,
                                                         const SweepOptions& opt = {}) {
    if (N_list.empty()) throw Error(ErrorCode::InvalidArgument, "benchmarks", "empty N list");
    ConvergenceReport rep;
    rep.rows.resize(N_list.size());
    parallel_for(N_list.size(), [&](std::size_t i) {
        auto& row = rep.rows[i];
        row.N = N_list[i];
        const auto t0 = std::chrono::steady_clock::now();
        try {
            const auto ops = assemble_on_breakpoints(coeffs, opt.family, row.N);
            SpectralOptions so;
            so.ordering = Ordering::BMinv;
            const auto a = spectral_radius(ops, so);
            so.ordering = Ordering::MinvB;
            const auto b = spectral_radius(ops, so);
            row.R_BMinv = a.R;
            row.R_MinvB = b.R;
            row.cond_M = 1.0 / a.rcond_M;
        } catch (const Error& e) {
            row.error = std::string(to_string(e.code())) + ": " + e.what();
        }
        row.runtime_ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    });

    if (opt.exact) {
        rep.reference = *opt.exact;
        rep.reference_source = "exact";
    } else {
        const int ref_N = opt.reference_N > 0
                              ? opt.reference_N
                              : 2 * *std::max_element(N_list.begin(), N_list.end());
        rep.reference = compute_R(coeffs, ref_N, opt.family, opt.error_ordering).R;
        rep.reference_source = "N=" + std::to_string(ref_N);
    }
    std::vector<double> err;
    for (auto& row : rep.rows) {
        const double r = opt.error_ordering == Ordering::BMinv ? row.R_BMinv : row.R_MinvB;
        row.abs_err = std::abs(r - rep.reference);
        err.push_back(row.abs_err);
    }
    const int n = static_cast<int>(N_list.size());
    const int lo = opt.window_begin >= 0 ? opt.window_begin : n / 2;
    const int hi = opt.window_end >= 0 ? std::min(opt.window_end, n) : n;
    if (lo >= hi) throw Error(ErrorCode::InvalidArgument, "benchmarks", "empty fit window");
    rep.fit = fit_order(std::vector<int>(N_list.begin() + lo, N_list.begin() + hi),
                        std::vector<double>(err.begin() + lo, err.begin() + hi));
    return rep;
}

/// CSV with one row per N. Runtime is left empty unless requested, which
/// keeps repeated runs byte-identical.
inline void write_report_csv(std::ostream& out, const ConvergenceReport& rep, bool with_timing = false) {
    out << "N,R_N_BMinv,R_N_MinvB,abs_err,fitted_order,cond_M,runtime_ms\n";
    char buf[64];
    auto num = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    for (const auto& r : rep.rows) {
        out << r.N << ',' << num(r.R_BMinv) << ',' << num(r.R_MinvB) << ',' << num(r.abs_err) << ','
            << num(rep.fit.order) << ',' << num(r.cond_M) << ',';
        if (with_timing) {
            std::snprintf(buf, sizeof buf, "%.3f", r.runtime_ms);
            out << buf;
        }
        out << '\n';
    }
}

inline void write_report_summary(std::ostream& out, const ConvergenceReport& rep) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "reference = %.17g (%s)\n", rep.reference, rep.reference_source.c_str());
    out << buf;
    std::snprintf(buf, sizeof buf, "fitted order = %.6g (fit residual %.3g, %d points)\n", rep.fit.order,
                  rep.fit.residual, rep.fit.points);
    out << buf;
    for (const auto& r : rep.rows) {
        if (!r.error.empty()) out << "N=" << r.N << " failed: " << r.error << '\n';
    }
}

// ---------------------------------------------------------------- operator error

/// Error of the discrete next-generation operator on the exact eigenfunction of
/// Example 1: with Psi = psi at the interior nodes and h the degree N-1
/// interpolant of H_N Psi, returns |psi(0) - h(0)| + max |psi' - h'| over a
/// uniform grid.
[[nodiscard]] inline double example1_operator_error(const Example1Config& cfg, int N,
                                                    NodeFamily family = NodeFamily::ZerosPlusLeftEndpoint,
                                                    int probes = 10000) {
    const auto coeffs = example1(cfg);
    const auto ops = assemble(coeffs, build_mesh(family, N, {0.0, cfg.a_dagger}));
    const auto& mesh = ops.meshes.front();
    Eigen::VectorXd psi(N);
    for (int i = 0; i < N; ++i) psi(i) = example1_psi(cfg, mesh.nodes[static_cast<std::size_t>(i + 1)]);
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(ops.M);
    const Eigen::VectorXd h = ops.B * lu.solve(psi);
    const auto interp = mesh.interior_interpolant();
    const std::vector<double> hv(h.data(), h.data() + h.size());
    const auto dh = interp.derivative_values(std::span<const double>(hv));
    const BarycentricInterpolant dinterp(interp.nodes(), interp.weights(), interp.interval());
    double worst = 0.0;
    for (int k = 0; k < probes; ++k) {
        const double a = k + 1 == probes ? cfg.a_dagger : cfg.a_dagger * k / (probes - 1);
        const double exact_slope = cfg.q(a, 0.0, cfg.a_dagger);
        worst = std::max(worst, std::abs(exact_slope - dinterp.evaluate(std::span<const double>(dh), a)));
    }
    return std::abs(interp.evaluate(std::span<const double>(hv), 0.0)) + worst;
}

// ---------------------------------------------------------------- parameter scan

/// R0 of the HBV model over a nu x theta grid; rows follow nu. Failed cells are NaN.
[[nodiscard]] inline Eigen::MatrixXd parameter_scan_R0(const std::vector<double>& nu_grid,
                                                       const std::vector<double>& theta_grid, int N,
                                                       NodeFamily family = NodeFamily::ZerosPlusLeftEndpoint) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(nu_grid.size()),
                        static_cast<Eigen::Index>(theta_grid.size()));
    const std::size_t cells = nu_grid.size() * theta_grid.size();
    parallel_for(cells, [&](std::size_t idx) {
        const std::size_t i = idx / theta_grid.size(), j = idx % theta_grid.size();
        double v = std::numeric_limits<double>::quiet_NaN();
        try {
            v = compute_R(hbv_model(nu_grid[i], theta_grid[j]), N, family).R;
        } catch (const Error&) {
        }
        out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
    });
    return out;
}

}  // namespace repnum
