#pragma once

// Coefficients of the linear age-structured model
//
//   x_t + x_a = int beta(a, alpha) x(alpha) dalpha + delta(a) x(a),
//   x(t, 0)   = int b(a) x(a) da,
//
// together with the birth/transition splitting beta = beta+ + beta-,
// b = b+ + b-. Coefficients are callables of continuous age; an empty
// callable stands for the identically-zero coefficient.

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "repnum/errors.hpp"

namespace repnum {

using AgeFunction = std::function<Eigen::MatrixXd(double)>;
using KernelFunction = std::function<Eigen::MatrixXd(double, double)>;

/// Unsplit model: total inflow kernels plus the within-class rates.
struct ModelCoefficients {
    int dim = 1;
    double a_dagger = 1.0;
    KernelFunction beta;
    AgeFunction b;
    AgeFunction delta;
    std::vector<double> breakpoints;
};

struct CoefficientSet {
    int dim = 1;
    double a_dagger = 1.0;
    KernelFunction beta_plus;
    KernelFunction beta_minus;
    AgeFunction b_plus;
    AgeFunction b_minus;
    AgeFunction delta;
    /// Sorted, starting at 0 and ending at a_dagger.
    std::vector<double> breakpoints;
};

enum class KernelKind { Beta, B };

struct EntryRef {
    KernelKind kernel = KernelKind::Beta;
    int row = 0;
    int col = 0;
    friend bool operator==(const EntryRef&, const EntryRef&) = default;
};

[[nodiscard]] inline std::string to_string(const EntryRef& e) {
    return std::string(e.kernel == KernelKind::Beta ? "beta" : "b") + "[" +
           std::to_string(e.row) + "][" + std::to_string(e.col) + "]";
}

struct SplittingSpec {
    enum class Name { R0, TypeReproduction, Custom };

    Name name = Name::R0;
    /// TypeReproduction: the kernel assigned to birth; the other one is
    /// transition.
    KernelKind birth_kernel = KernelKind::Beta;
    /// Custom: explicit entry lists.
    std::vector<EntryRef> birth;
    std::vector<EntryRef> transition;

    static SplittingSpec r0() { return {}; }
    static SplittingSpec type_reproduction(KernelKind birth_kernel) {
        SplittingSpec s;
        s.name = Name::TypeReproduction;
        s.birth_kernel = birth_kernel;
        return s;
    }
    static SplittingSpec custom(std::vector<EntryRef> birth, std::vector<EntryRef> transition) {
        SplittingSpec s;
        s.name = Name::Custom;
        s.birth = std::move(birth);
        s.transition = std::move(transition);
        return s;
    }
};

/// Uniform probe grid on [0, a_dagger] used by validation and splitting.
[[nodiscard]] inline std::vector<double> probe_grid(double a_dagger, int n = 50) {
    std::vector<double> g(n);
    for (int i = 0; i < n; ++i) g[i] = a_dagger * i / (n - 1);
    return g;
}

[[nodiscard]] inline std::vector<double> default_breakpoints(double a_dagger) {
    return {0.0, a_dagger};
}

/// Union of the given breakpoints with a uniform partition into `pieces`.
[[nodiscard]] inline std::vector<double> refine_breakpoints(std::vector<double> breakpoints,
                                                            double a_dagger, int pieces) {
    for (int i = 1; i < pieces; ++i) breakpoints.push_back(a_dagger * i / pieces);
    std::sort(breakpoints.begin(), breakpoints.end());
    const double tol = 1e-12 * a_dagger;
    breakpoints.erase(std::unique(breakpoints.begin(), breakpoints.end(),
                                  [tol](double x, double y) { return std::abs(x - y) <= tol; }),
                      breakpoints.end());
    return breakpoints;
}

namespace detail {

inline KernelFunction mask_kernel(const KernelFunction& k, const Eigen::MatrixXd& mask) {
    if (!k || mask.isZero()) return {};
    if ((mask.array() == 1.0).all()) return k;
    return [k, mask](double a, double alpha) -> Eigen::MatrixXd {
        return k(a, alpha).cwiseProduct(mask);
    };
}

inline AgeFunction mask_function(const AgeFunction& f, const Eigen::MatrixXd& mask) {
    if (!f || mask.isZero()) return {};
    if ((mask.array() == 1.0).all()) return f;
    return [f, mask](double a) -> Eigen::MatrixXd { return f(a).cwiseProduct(mask); };
}

/// True when entry (r, c) of the kernel is nonzero somewhere on the probe grid.
inline bool entry_active(const ModelCoefficients& m, const EntryRef& e) {
    const auto grid = probe_grid(m.a_dagger);
    if (e.kernel == KernelKind::Beta) {
        if (!m.beta) return false;
        for (double a : grid) {
            for (double alpha : grid) {
                if (m.beta(a, alpha)(e.row, e.col) != 0.0) return true;
            }
        }
        return false;
    }
    if (!m.b) return false;
    for (double a : grid) {
        if (m.b(a)(e.row, e.col) != 0.0) return true;
    }
    return false;
}

}  // namespace detail

/// Distribute the total inflow kernels into birth (plus) and transition
/// (minus) slots.
[[nodiscard]] inline CoefficientSet split(const ModelCoefficients& model, const SplittingSpec& spec) {
    const int d = model.dim;
    Eigen::MatrixXd beta_plus = Eigen::MatrixXd::Zero(d, d);
    Eigen::MatrixXd b_plus = Eigen::MatrixXd::Zero(d, d);
    Eigen::MatrixXd beta_minus = Eigen::MatrixXd::Zero(d, d);
    Eigen::MatrixXd b_minus = Eigen::MatrixXd::Zero(d, d);
    const Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(d, d);

    switch (spec.name) {
        case SplittingSpec::Name::R0:
            beta_plus = ones;
            b_plus = ones;
            break;
        case SplittingSpec::Name::TypeReproduction:
            if (spec.birth_kernel == KernelKind::Beta) {
                beta_plus = ones;
                b_minus = ones;
            } else {
                beta_minus = ones;
                b_plus = ones;
            }
            break;
        case SplittingSpec::Name::Custom: {
            auto place = [&](const EntryRef& e, bool birth) {
                if (e.row < 0 || e.row >= d || e.col < 0 || e.col >= d) {
                    throw Error(ErrorCode::InvalidSplitting, "model",
                                "entry " + to_string(e) + " outside a " + std::to_string(d) +
                                    "x" + std::to_string(d) + " model");
                }
                Eigen::MatrixXd& plus = e.kernel == KernelKind::Beta ? beta_plus : b_plus;
                Eigen::MatrixXd& minus = e.kernel == KernelKind::Beta ? beta_minus : b_minus;
                if (plus(e.row, e.col) != 0.0 || minus(e.row, e.col) != 0.0) {
                    throw Error(ErrorCode::InvalidSplitting, "model",
                                "entry " + to_string(e) + " assigned more than once");
                }
                (birth ? plus : minus)(e.row, e.col) = 1.0;
            };
            for (const auto& e : spec.birth) place(e, true);
            for (const auto& e : spec.transition) place(e, false);
            for (int r = 0; r < d; ++r) {
                for (int c = 0; c < d; ++c) {
                    for (KernelKind k : {KernelKind::Beta, KernelKind::B}) {
                        const EntryRef e{k, r, c};
                        const bool assigned = k == KernelKind::Beta
                                                  ? beta_plus(r, c) + beta_minus(r, c) != 0.0
                                                  : b_plus(r, c) + b_minus(r, c) != 0.0;
                        if (!assigned && detail::entry_active(model, e)) {
                            throw Error(ErrorCode::InvalidSplitting, "model",
                                        "nonzero entry " + to_string(e) +
                                            " is neither birth nor transition");
                        }
                    }
                }
            }
            break;
        }
    }

    CoefficientSet out;
    out.dim = d;
    out.a_dagger = model.a_dagger;
    out.beta_plus = detail::mask_kernel(model.beta, beta_plus);
    out.beta_minus = detail::mask_kernel(model.beta, beta_minus);
    out.b_plus = detail::mask_function(model.b, b_plus);
    out.b_minus = detail::mask_function(model.b, b_minus);
    out.delta = model.delta;
    out.breakpoints =
        model.breakpoints.empty() ? default_breakpoints(model.a_dagger) : model.breakpoints;
    return out;
}

struct Diagnostic {
    std::string coefficient;  ///< e.g. "beta_plus", "delta", "breakpoints"
    int row = 0;
    int col = 0;
    double a = 0.0;
    double alpha = 0.0;
    double value = 0.0;  ///< worst offending value
    std::string message;
};

/// Sign checks on a 50-point (kernels: 50 x 50) probe grid: birth and
/// transition kernels nonnegative, delta essentially nonnegative with a
/// non-positive diagonal. One diagnostic per offending matrix entry.
[[nodiscard]] inline std::vector<Diagnostic> validate(const CoefficientSet& c) {
    std::vector<Diagnostic> out;
    const int d = c.dim;
    if (d < 1 || !(c.a_dagger > 0.0) || !std::isfinite(c.a_dagger)) {
        out.push_back({"model", 0, 0, 0, 0, c.a_dagger, "dimension and maximum age must be positive"});
        return out;
    }
    const auto& bp = c.breakpoints;
    bool bp_ok = bp.size() >= 2 && bp.front() == 0.0 && bp.back() == c.a_dagger;
    for (std::size_t i = 1; bp_ok && i < bp.size(); ++i) bp_ok = bp[i] > bp[i - 1];
    if (!bp_ok) {
        out.push_back({"breakpoints", 0, 0, 0, 0, 0,
                       "breakpoints must increase strictly from 0 to a_dagger"});
    }

    const auto grid = probe_grid(c.a_dagger);
    // Each entry tracks the worst violation seen; sign = +1 demands >= 0,
    // sign = -1 demands <= 0.
    auto scan = [&](const std::string& name, auto&& sample, bool kernel, auto&& required_sign) {
        std::vector<std::optional<Diagnostic>> worst(static_cast<std::size_t>(d * d));
        auto visit = [&](const Eigen::MatrixXd& m, double a, double alpha) {
            if (m.rows() != d || m.cols() != d) {
                throw Error(ErrorCode::DimensionMismatch, "model",
                            name + " returned a " + std::to_string(m.rows()) + "x" +
                                std::to_string(m.cols()) + " matrix, expected " +
                                std::to_string(d) + "x" + std::to_string(d));
            }
            for (int r = 0; r < d; ++r) {
                for (int col = 0; col < d; ++col) {
                    const double v = m(r, col);
                    const double s = required_sign(r, col);
                    const bool bad = !std::isfinite(v) || (s > 0 && v < 0.0) || (s < 0 && v > 0.0);
                    if (!bad) continue;
                    auto& w = worst[static_cast<std::size_t>(r * d + col)];
                    if (!w || !std::isfinite(v) || std::abs(v) > std::abs(w->value)) {
                        w = Diagnostic{name, r, col, a, alpha, v, ""};
                    }
                }
            }
        };
        if (kernel) {
            for (double a : grid) {
                for (double alpha : grid) visit(sample(a, alpha), a, alpha);
            }
        } else {
            for (double a : grid) visit(sample(a, 0.0), a, 0.0);
        }
        for (auto& w : worst) {
            if (!w) continue;
            const bool diag = w->row == w->col;
            w->message = name + (diag ? " diagonal" : " off-diagonal") + " entry (" +
                         std::to_string(w->row) + "," + std::to_string(w->col) + ") = " +
                         std::to_string(w->value) + " at a = " + std::to_string(w->a) +
                         (kernel ? ", alpha = " + std::to_string(w->alpha) : std::string());
            out.push_back(std::move(*w));
        }
    };

    auto nonnegative = [](int, int) { return 1.0; };
    if (c.beta_plus) scan("beta_plus", c.beta_plus, true, nonnegative);
    if (c.beta_minus) scan("beta_minus", c.beta_minus, true, nonnegative);
    if (c.b_plus) scan("b_plus", [&](double a, double) { return c.b_plus(a); }, false, nonnegative);
    if (c.b_minus) scan("b_minus", [&](double a, double) { return c.b_minus(a); }, false, nonnegative);
    if (c.delta) {
        scan("delta", [&](double a, double) { return c.delta(a); }, false,
             [](int r, int col) { return r == col ? -1.0 : 1.0; });
    }
    return out;
}

/// Constant d x d coefficient.
[[nodiscard]] inline AgeFunction constant_function(Eigen::MatrixXd value) {
    return [value = std::move(value)](double) { return value; };
}

[[nodiscard]] inline AgeFunction scalar_function(std::function<double(double)> f) {
    return [f = std::move(f)](double a) {
        Eigen::MatrixXd m(1, 1);
        m(0, 0) = f(a);
        return m;
    };
}

[[nodiscard]] inline KernelFunction scalar_kernel(std::function<double(double, double)> f) {
    return [f = std::move(f)](double a, double alpha) {
        Eigen::MatrixXd m(1, 1);
        m(0, 0) = f(a, alpha);
        return m;
    };
}

}  // namespace repnum
