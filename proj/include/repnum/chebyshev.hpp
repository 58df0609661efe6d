#pragma once

// Chebyshev collocation toolkit: node families, barycentric interpolation,
// differentiation on the extended mesh, Fejer-1 / Clenshaw-Curtis rules and
// the partial-integral weights obtained by inverting the differentiation
// matrix.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "repnum/errors.hpp"

namespace repnum {

enum class NodeFamily {
    ZerosPlusLeftEndpoint,  ///< a_0 = left endpoint, a_1..a_N Chebyshev zeros
    Extrema,                ///< a_0..a_N Chebyshev extrema, both endpoints
};

[[nodiscard]] inline std::string to_string(NodeFamily family) {
    return family == NodeFamily::Extrema ? "extrema" : "zeros";
}

struct Interval {
    double left = 0.0;
    double right = 1.0;

    [[nodiscard]] double length() const noexcept { return right - left; }
    [[nodiscard]] bool contains(double x, double slack = 1e-12) const noexcept {
        const double tol = slack * std::max(1.0, std::abs(length()));
        return x >= left - tol && x <= right + tol;
    }
    friend bool operator==(const Interval&, const Interval&) = default;
};

namespace detail {

inline void require_valid(int n, Interval interval, const char* module) {
    if (n < 1) {
        throw Error(ErrorCode::InvalidArgument, module,
                    "number of nodes must be positive, got " + std::to_string(n));
    }
    if (!(interval.left < interval.right) || !std::isfinite(interval.left) ||
        !std::isfinite(interval.right)) {
        throw Error(ErrorCode::InvalidArgument, module,
                    "degenerate interval [" + std::to_string(interval.left) + ", " +
                        std::to_string(interval.right) + "]");
    }
}

/// Ascending Chebyshev zeros on [-1, 1]; the sine form is exactly symmetric.
inline std::vector<double> reference_zeros(int n) {
    std::vector<double> x(n);
    for (int k = 1; k <= n; ++k) {
        x[k - 1] = std::sin(std::numbers::pi * (2.0 * k - 1.0 - n) / (2.0 * n));
    }
    return x;
}

/// Ascending Chebyshev extrema on [-1, 1], endpoints exact.
inline std::vector<double> reference_extrema(int n) {
    std::vector<double> x(n + 1);
    for (int k = 0; k <= n; ++k) {
        x[k] = std::sin(std::numbers::pi * (2.0 * k - n) / (2.0 * n));
    }
    x.front() = -1.0;
    x.back() = 1.0;
    return x;
}

inline double map_to(Interval interval, double xi) {
    return interval.left + 0.5 * (xi + 1.0) * interval.length();
}

/// Barycentric weights 1 / prod_{k != j}(x_j - x_k), evaluated on the
/// reference variable to stay away from overflow and normalized to max 1.
inline std::vector<double> barycentric_weights(std::span<const double> nodes,
                                               Interval interval) {
    const std::size_t n = nodes.size();
    std::vector<double> xi(n);
    for (std::size_t j = 0; j < n; ++j) {
        xi[j] = 2.0 * (nodes[j] - interval.left) / interval.length() - 1.0;
    }
    std::vector<double> w(n, 1.0);
    for (std::size_t j = 0; j < n; ++j) {
        double p = 1.0;
        for (std::size_t k = 0; k < n; ++k) {
            if (k != j) p *= xi[j] - xi[k];
        }
        w[j] = 1.0 / p;
    }
    double wmax = 0.0;
    for (double v : w) wmax = std::max(wmax, std::abs(v));
    for (double& v : w) v /= wmax;
    return w;
}

}  // namespace detail

/// Lagrange interpolant through a fixed node set, evaluated with the second
/// (true) barycentric formula.
class BarycentricInterpolant {
public:
    BarycentricInterpolant() = default;

    BarycentricInterpolant(std::vector<double> nodes, Interval interval)
        : nodes_(std::move(nodes)),
          weights_(detail::barycentric_weights(nodes_, interval)),
          interval_(interval) {}

    BarycentricInterpolant(std::vector<double> nodes, std::vector<double> weights,
                           Interval interval)
        : nodes_(std::move(nodes)), weights_(std::move(weights)), interval_(interval) {}

    [[nodiscard]] const std::vector<double>& nodes() const noexcept { return nodes_; }
    [[nodiscard]] const std::vector<double>& weights() const noexcept { return weights_; }
    [[nodiscard]] Interval interval() const noexcept { return interval_; }
    [[nodiscard]] std::size_t size() const noexcept { return nodes_.size(); }

    /// Values of every Lagrange basis polynomial at x (cardinal at nodes).
    [[nodiscard]] std::vector<double> basis_at(double x) const {
        std::vector<double> ell(nodes_.size(), 0.0);
        for (std::size_t j = 0; j < nodes_.size(); ++j) {
            if (x == nodes_[j]) {
                ell[j] = 1.0;
                return ell;
            }
        }
        double denom = 0.0;
        for (std::size_t j = 0; j < nodes_.size(); ++j) {
            ell[j] = weights_[j] / (x - nodes_[j]);
            denom += ell[j];
        }
        for (double& v : ell) v /= denom;
        return ell;
    }

    template <class T>
    [[nodiscard]] T evaluate(std::span<const T> values, double x) const {
        check(values.size(), x);
        T numer{};
        double denom = 0.0;
        for (std::size_t j = 0; j < nodes_.size(); ++j) {
            if (x == nodes_[j]) return values[j];
            const double t = weights_[j] / (x - nodes_[j]);
            numer += t * values[j];
            denom += t;
        }
        return numer / denom;
    }

    /// Full differentiation matrix on this node set: entry (i, j) = l_j'(x_i).
    [[nodiscard]] Eigen::MatrixXd differentiation_matrix() const {
        const auto n = static_cast<Eigen::Index>(nodes_.size());
        Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
        for (Eigen::Index i = 0; i < n; ++i) {
            double diag = 0.0;
            for (Eigen::Index j = 0; j < n; ++j) {
                if (i == j) continue;
                d(i, j) = (weights_[j] / weights_[i]) / (nodes_[i] - nodes_[j]);
                diag -= d(i, j);
            }
            d(i, i) = diag;
        }
        return d;
    }

    /// Node samples of the derivative of the interpolant (exact: the
    /// derivative has lower degree, so it is its own interpolant).
    template <class T>
    [[nodiscard]] std::vector<T> derivative_values(std::span<const T> values) const {
        check(values.size(), interval_.left);
        const Eigen::MatrixXd d = differentiation_matrix();
        std::vector<T> out(nodes_.size(), T{});
        for (std::size_t i = 0; i < nodes_.size(); ++i) {
            T acc{};
            for (std::size_t j = 0; j < nodes_.size(); ++j) {
                acc += d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) *
                       values[j];
            }
            out[i] = acc;
        }
        return out;
    }

    template <class T>
    [[nodiscard]] T derivative(std::span<const T> values, double x) const {
        const std::vector<T> dv = derivative_values(values);
        return evaluate(std::span<const T>(dv), x);
    }

private:
    void check(std::size_t n_values, double x) const {
        if (n_values != nodes_.size()) {
            throw Error(ErrorCode::DimensionMismatch, "chebyshev",
                        "expected " + std::to_string(nodes_.size()) + " values, got " +
                            std::to_string(n_values));
        }
        if (!interval_.contains(x)) {
            throw Error(ErrorCode::OutOfRange, "chebyshev",
                        "evaluation point " + std::to_string(x) + " outside [" +
                            std::to_string(interval_.left) + ", " +
                            std::to_string(interval_.right) + "]");
        }
    }

    std::vector<double> nodes_;
    std::vector<double> weights_;
    Interval interval_;
};

/// Extended collocation mesh a_0 = left endpoint < a_1 < ... < a_N.
struct CollocationMesh {
    NodeFamily family = NodeFamily::ZerosPlusLeftEndpoint;
    Interval interval;
    int n_interior = 0;
    std::vector<double> nodes;                ///< N + 1 values, ascending
    std::vector<double> barycentric_weights;  ///< aligned with nodes

    [[nodiscard]] BarycentricInterpolant interpolant() const {
        return {nodes, barycentric_weights, interval};
    }

    /// Interpolant through a_1..a_N only (degree N - 1).
    [[nodiscard]] BarycentricInterpolant interior_interpolant() const {
        return {std::vector<double>(nodes.begin() + 1, nodes.end()), interval};
    }

    [[nodiscard]] std::span<const double> interior_nodes() const {
        return std::span<const double>(nodes).subspan(1);
    }
};

[[nodiscard]] inline CollocationMesh build_mesh(NodeFamily family, int n,
                                                Interval interval) {
    detail::require_valid(n, interval, "chebyshev");
    CollocationMesh mesh;
    mesh.family = family;
    mesh.interval = interval;
    mesh.n_interior = n;
    mesh.nodes.reserve(n + 1);
    if (family == NodeFamily::ZerosPlusLeftEndpoint) {
        mesh.nodes.push_back(interval.left);
        for (double xi : detail::reference_zeros(n)) {
            mesh.nodes.push_back(detail::map_to(interval, xi));
        }
    } else {
        for (double xi : detail::reference_extrema(n)) {
            mesh.nodes.push_back(detail::map_to(interval, xi));
        }
        mesh.nodes.front() = interval.left;
        mesh.nodes.back() = interval.right;
    }
    mesh.barycentric_weights = detail::barycentric_weights(mesh.nodes, interval);
    return mesh;
}

struct DifferentiationMatrix {
    /// N x N block: entry (i, j) = l_{0,j}'(a_i), i, j = 1..N.
    Eigen::MatrixXd entries;
    /// (N+1) x (N+1) matrix on the extended mesh, row/column 0 included.
    Eigen::MatrixXd full;
    CollocationMesh mesh;
};

[[nodiscard]] inline DifferentiationMatrix differentiation_matrix(const CollocationMesh& mesh) {
    if (mesh.n_interior < 1 ||
        mesh.nodes.size() != static_cast<std::size_t>(mesh.n_interior) + 1) {
        throw Error(ErrorCode::InvalidArgument, "chebyshev", "invalid collocation mesh");
    }
    DifferentiationMatrix d;
    d.full = mesh.interpolant().differentiation_matrix();
    const Eigen::Index n = mesh.n_interior;
    d.entries = d.full.bottomRightCorner(n, n);
    d.mesh = mesh;
    return d;
}

enum class QuadratureKind { Fejer1, ClenshawCurtis };

struct QuadratureRule {
    QuadratureKind kind = QuadratureKind::Fejer1;
    std::vector<double> nodes;
    std::vector<double> weights;
    Interval interval;

    template <class F>
    [[nodiscard]] double integrate(F&& f) const {
        double s = 0.0;
        for (std::size_t k = 0; k < nodes.size(); ++k) s += weights[k] * f(nodes[k]);
        return s;
    }
};

/// Fejer's first rule on the N Chebyshev zeros (exact to degree N - 1).
[[nodiscard]] inline QuadratureRule fejer1_rule(int n, Interval interval) {
    detail::require_valid(n, interval, "chebyshev");
    QuadratureRule rule;
    rule.kind = QuadratureKind::Fejer1;
    rule.interval = interval;
    const double half = 0.5 * interval.length();
    const auto xi = detail::reference_zeros(n);
    for (int k = 1; k <= n; ++k) {
        // Ascending node k corresponds to theta = (2(N-k)+1) pi / (2N).
        const double theta = std::numbers::pi * (2.0 * (n - k) + 1.0) / (2.0 * n);
        double s = 0.0;
        for (int j = 1; j <= n / 2; ++j) {
            s += std::cos(2.0 * j * theta) / (4.0 * j * j - 1.0);
        }
        rule.nodes.push_back(detail::map_to(interval, xi[k - 1]));
        rule.weights.push_back(half * (2.0 / n) * (1.0 - 2.0 * s));
    }
    return rule;
}

/// Clenshaw-Curtis rule on the N + 1 Chebyshev extrema (exact to degree N).
[[nodiscard]] inline QuadratureRule clenshaw_curtis_rule(int n, Interval interval) {
    detail::require_valid(n, interval, "chebyshev");
    QuadratureRule rule;
    rule.kind = QuadratureKind::ClenshawCurtis;
    rule.interval = interval;
    const double half = 0.5 * interval.length();
    std::vector<double> w(n + 1, 0.0);
    const bool even = n % 2 == 0;
    const double end = even ? 1.0 / (static_cast<double>(n) * n - 1.0)
                            : 1.0 / (static_cast<double>(n) * n);
    w[0] = w[n] = end;
    for (int i = 1; i < n; ++i) {
        const double theta = std::numbers::pi * i / n;
        double v = 1.0;
        const int kmax = even ? n / 2 - 1 : (n - 1) / 2;
        for (int k = 1; k <= kmax; ++k) {
            v -= 2.0 * std::cos(2.0 * k * theta) / (4.0 * k * k - 1.0);
        }
        if (even) v -= std::cos(n * theta) / (static_cast<double>(n) * n - 1.0);
        w[i] = 2.0 * v / n;
    }
    // The weights are symmetric, so the ascending reorder leaves them in place.
    const auto xi = detail::reference_extrema(n);
    for (int k = 0; k <= n; ++k) {
        rule.nodes.push_back(detail::map_to(interval, xi[k]));
        rule.weights.push_back(half * w[k]);
    }
    rule.nodes.front() = interval.left;
    rule.nodes.back() = interval.right;
    return rule;
}

/// The global quadrature that pairs with a mesh family: Fejer-1 on the
/// interior zeros, Clenshaw-Curtis on all extrema.
[[nodiscard]] inline QuadratureRule quadrature_for(const CollocationMesh& mesh) {
    return mesh.family == NodeFamily::Extrema
               ? clenshaw_curtis_rule(mesh.n_interior, mesh.interval)
               : fejer1_rule(mesh.n_interior, mesh.interval);
}

struct PartialIntegralWeights {
    /// Row i integrates interior samples of q over [a_0, a_i].
    Eigen::MatrixXd entries;
    double rcond = 0.0;  ///< reciprocal condition estimate of D
    CollocationMesh mesh;
};

[[nodiscard]] inline PartialIntegralWeights partial_integral_weights(
    const DifferentiationMatrix& d) {
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(d.entries);
    const double rcond = lu.rcond();
    if (!(rcond > 1e-14)) {
        throw Error(ErrorCode::SingularMatrix, "chebyshev",
                    "differentiation matrix numerically singular for N = " +
                        std::to_string(d.mesh.n_interior) +
                        " (rcond = " + std::to_string(rcond) + ")");
    }
    PartialIntegralWeights p;
    p.entries = lu.inverse();
    p.rcond = rcond;
    p.mesh = d.mesh;
    return p;
}

template <class T>
[[nodiscard]] T interpolate(const CollocationMesh& mesh, std::span<const T> values, double x) {
    return mesh.interpolant().evaluate(values, x);
}

template <class T>
[[nodiscard]] T interpolant_derivative(const CollocationMesh& mesh,
                                       std::span<const T> values, double x) {
    return mesh.interpolant().derivative(values, x);
}

}  // namespace repnum
