#pragma once

// Collocation matrices of the birth and transition operators acting on the
// integrated state psi (psi(0) = 0). Unknowns are the values of psi at the
// interior nodes of every sub-interval, node-major with the d components of
// one node contiguous.
//
// On one interval, with D the differentiation matrix, P = D^{-1} the
// partial-integral weights and w the global quadrature,
//
//   B_ij = sum_m P_im sum_k w_k beta+(a_m, a_k) D_kj + sum_k w_k b+(a_k) D_kj
//   M_ij = D_ij - sum_m P_im delta(a_m) D_mj
//               - sum_m P_im sum_k w_k beta-(a_m, a_k) D_kj
//               - sum_k w_k b-(a_k) D_kj
//
// Piecewise meshes keep psi continuous by accumulation: the value at the left
// end of each sub-interval is the interpolant of the previous one evaluated
// at the shared breakpoint, and integrals from 0 add full quadratures of the
// preceding sub-intervals to the local partial integral.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "repnum/chebyshev.hpp"
#include "repnum/errors.hpp"
#include "repnum/model.hpp"

namespace repnum {

struct DiscreteOperators {
    Eigen::MatrixXd B;
    Eigen::MatrixXd M;
    std::vector<CollocationMesh> meshes;  ///< one per sub-interval, left to right
    int dim = 1;

    [[nodiscard]] Eigen::Index size() const noexcept { return B.rows(); }
    [[nodiscard]] int interior_nodes() const noexcept {
        int n = 0;
        for (const auto& m : meshes) n += m.n_interior;
        return n;
    }
    [[nodiscard]] NodeFamily family() const { return meshes.front().family; }
};

/// One mesh per breakpoint interval, all with the same family and size.
[[nodiscard]] inline std::vector<CollocationMesh> build_meshes(NodeFamily family, int n,
                                                               const std::vector<double>& breakpoints) {
    if (breakpoints.size() < 2) {
        throw Error(ErrorCode::BreakpointMismatch, "assembly", "need at least two breakpoints");
    }
    std::vector<CollocationMesh> meshes;
    for (std::size_t s = 0; s + 1 < breakpoints.size(); ++s) {
        meshes.push_back(build_mesh(family, n, {breakpoints[s], breakpoints[s + 1]}));
    }
    return meshes;
}

namespace detail {

struct SubIntervalData {
    DifferentiationMatrix diff;
    PartialIntegralWeights partial;
    QuadratureRule quad;
    int interior_offset = 0;
    int quad_offset = 0;
    int quad_count = 0;
    int first_quad_mesh_index = 1;  ///< mesh index of the first quadrature node
};

inline void check_shape(const Eigen::MatrixXd& m, int d, const char* name) {
    if (m.rows() != d || m.cols() != d) {
        throw Error(ErrorCode::DimensionMismatch, "assembly",
                    std::string(name) + " returned a " + std::to_string(m.rows()) + "x" +
                        std::to_string(m.cols()) + " matrix, expected " + std::to_string(d) +
                        "x" + std::to_string(d));
    }
}

inline DiscreteOperators assemble_meshes(const CoefficientSet& c,
                                         const std::vector<CollocationMesh>& meshes) {
    using Eigen::Index;
    using Eigen::MatrixXd;
    using Eigen::VectorXd;

    if (meshes.empty()) {
        throw Error(ErrorCode::InvalidArgument, "assembly", "no meshes given");
    }
    if (c.dim < 1) throw Error(ErrorCode::DimensionMismatch, "assembly", "dimension must be positive");
    const NodeFamily family = meshes.front().family;
    for (const auto& m : meshes) {
        if (m.family != family) {
            throw Error(ErrorCode::FamilyMismatch, "assembly",
                        "sub-interval meshes mix node families; the quadrature rule follows the family");
        }
    }
    const bool extrema = family == NodeFamily::Extrema;
    const int d = c.dim;

    std::vector<SubIntervalData> sub;
    int n = 0, nq = 0;
    for (const auto& mesh : meshes) {
        SubIntervalData s;
        s.diff = differentiation_matrix(mesh);
        s.partial = partial_integral_weights(s.diff);
        s.quad = quadrature_for(mesh);
        s.interior_offset = n;
        s.quad_offset = nq;
        s.quad_count = static_cast<int>(s.quad.nodes.size());
        s.first_quad_mesh_index = extrema ? 0 : 1;
        n += mesh.n_interior;
        nq += s.quad_count;
        sub.push_back(std::move(s));
    }

    // G maps interior values of psi to psi' at the quadrature nodes, Q maps
    // samples at the quadrature nodes to integrals from 0 to each interior
    // node.
    MatrixXd G = MatrixXd::Zero(nq, n);
    MatrixXd Q = MatrixXd::Zero(n, nq);
    // sample_at differs from qnodes only at sub-interval endpoints, which are
    // pulled one ulp inside so that coefficients jumping at a breakpoint are
    // read from the correct side.
    VectorXd weights(nq), qnodes(nq), sample_at(nq);
    std::vector<Index> interior_rows;  // rows of G at interior nodes
    VectorXd left_value = VectorXd::Zero(n);  // psi at the current left endpoint
    bool first = true;
    for (std::size_t s = 0; s < sub.size(); ++s) {
        const auto& sd = sub[s];
        const auto& mesh = meshes[s];
        const Index ns = mesh.n_interior;
        const Index off = sd.interior_offset;
        for (int k = 0; k < sd.quad_count; ++k) {
            const Index q = sd.quad_offset + k;
            const Index m = sd.first_quad_mesh_index + k;
            G.row(q).segment(off, ns) = sd.diff.full.row(m).segment(1, ns);
            if (!first) G.row(q) += sd.diff.full(m, 0) * left_value.transpose();
            weights(q) = sd.quad.weights[static_cast<std::size_t>(k)];
            qnodes(q) = sd.quad.nodes[static_cast<std::size_t>(k)];
            sample_at(q) = qnodes(q);
            if (qnodes(q) <= mesh.interval.left) sample_at(q) = std::nextafter(mesh.interval.left, mesh.interval.right);
            if (qnodes(q) >= mesh.interval.right) sample_at(q) = std::nextafter(mesh.interval.right, mesh.interval.left);
            if (m >= 1) interior_rows.push_back(q);
        }
        for (Index i = 0; i < ns; ++i) {
            for (std::size_t r = 0; r < s; ++r) {
                Q.row(off + i).segment(sub[r].quad_offset, sub[r].quad_count) =
                    Eigen::Map<const VectorXd>(sub[r].quad.weights.data(), sub[r].quad_count).transpose();
            }
            Q.row(off + i).segment(sd.quad_offset + (extrema ? 1 : 0), ns) = sd.partial.entries.row(i);
        }
        // Carry psi to the right end of this sub-interval.
        const auto ell = mesh.interpolant().basis_at(mesh.interval.right);
        VectorXd next = ell[0] * left_value;
        for (Index j = 0; j < ns; ++j) next(off + j) += ell[static_cast<std::size_t>(j + 1)];
        left_value = std::move(next);
        first = false;
    }
    MatrixXd G_interior(n, n);
    for (Index i = 0; i < n; ++i) G_interior.row(i) = G.row(interior_rows[static_cast<std::size_t>(i)]);

    // Sample coefficients at the quadrature nodes, one scalar array per entry.
    auto sample_function = [&](const AgeFunction& f, const char* name) {
        std::vector<VectorXd> out;
        if (!f) return out;
        out.assign(static_cast<std::size_t>(d * d), VectorXd::Zero(nq));
        for (Index q = 0; q < nq; ++q) {
            const MatrixXd v = f(sample_at(q));
            check_shape(v, d, name);
            for (int r = 0; r < d; ++r) {
                for (int col = 0; col < d; ++col) out[static_cast<std::size_t>(r * d + col)](q) = v(r, col);
            }
        }
        return out;
    };
    auto sample_kernel = [&](const KernelFunction& f, const char* name) {
        std::vector<MatrixXd> out;
        if (!f) return out;
        out.assign(static_cast<std::size_t>(d * d), MatrixXd::Zero(nq, nq));
        for (Index q = 0; q < nq; ++q) {
            for (Index p = 0; p < nq; ++p) {
                const MatrixXd v = f(sample_at(q), sample_at(p));
                check_shape(v, d, name);
                for (int r = 0; r < d; ++r) {
                    for (int col = 0; col < d; ++col) {
                        out[static_cast<std::size_t>(r * d + col)](q, p) = v(r, col) * weights(p);
                    }
                }
            }
        }
        return out;
    };
    const auto beta_plus = sample_kernel(c.beta_plus, "beta_plus");
    const auto beta_minus = sample_kernel(c.beta_minus, "beta_minus");
    const auto b_plus = sample_function(c.b_plus, "b_plus");
    const auto b_minus = sample_function(c.b_minus, "b_minus");
    const auto delta = sample_function(c.delta, "delta");

    DiscreteOperators ops;
    ops.dim = d;
    ops.meshes = meshes;
    ops.B = MatrixXd::Zero(static_cast<Index>(d) * n, static_cast<Index>(d) * n);
    ops.M = MatrixXd::Zero(static_cast<Index>(d) * n, static_cast<Index>(d) * n);

    auto scatter = [&](MatrixXd& target, const MatrixXd& block, int r, int col) {
        for (Index i = 0; i < n; ++i) {
            for (Index j = 0; j < n; ++j) target(i * d + r, j * d + col) += block(i, j);
        }
    };
    for (int r = 0; r < d; ++r) {
        for (int col = 0; col < d; ++col) {
            const auto e = static_cast<std::size_t>(r * d + col);
            if (!beta_plus.empty() && !beta_plus[e].isZero(0.0)) {
                scatter(ops.B, Q * (beta_plus[e] * G), r, col);
            }
            if (!b_plus.empty() && !b_plus[e].isZero(0.0)) {
                const Eigen::RowVectorXd row = b_plus[e].cwiseProduct(weights).transpose() * G;
                scatter(ops.B, row.replicate(n, 1), r, col);
            }
            MatrixXd m = r == col ? G_interior : MatrixXd::Zero(n, n);
            if (!delta.empty() && !delta[e].isZero(0.0)) {
                m.noalias() -= Q * (delta[e].asDiagonal() * G);
            }
            if (!beta_minus.empty() && !beta_minus[e].isZero(0.0)) {
                m.noalias() -= Q * (beta_minus[e] * G);
            }
            if (!b_minus.empty() && !b_minus[e].isZero(0.0)) {
                const Eigen::RowVectorXd row = b_minus[e].cwiseProduct(weights).transpose() * G;
                m.rowwise() -= row;
            }
            if (r == col || !m.isZero(0.0)) scatter(ops.M, m, r, col);
        }
    }
    return ops;
}

}  // namespace detail

/// Single global mesh on [0, a_dagger].
[[nodiscard]] inline DiscreteOperators assemble(const CoefficientSet& coeffs,
                                                const CollocationMesh& mesh) {
    const double tol = 1e-12 * coeffs.a_dagger;
    if (std::abs(mesh.interval.left) > tol || std::abs(mesh.interval.right - coeffs.a_dagger) > tol) {
        throw Error(ErrorCode::BreakpointMismatch, "assembly",
                    "mesh interval must be [0, a_dagger]");
    }
    return detail::assemble_meshes(coeffs, {mesh});
}

/// One mesh per sub-interval; the sub-intervals must be exactly the
/// coefficient breakpoints.
[[nodiscard]] inline DiscreteOperators assemble_piecewise(const CoefficientSet& coeffs,
                                                          const std::vector<CollocationMesh>& meshes) {
    const auto& bp = coeffs.breakpoints;
    const double tol = 1e-12 * coeffs.a_dagger;
    bool ok = bp.size() == meshes.size() + 1;
    for (std::size_t s = 0; ok && s < meshes.size(); ++s) {
        ok = std::abs(meshes[s].interval.left - bp[s]) <= tol &&
             std::abs(meshes[s].interval.right - bp[s + 1]) <= tol;
    }
    if (!ok) {
        throw Error(ErrorCode::BreakpointMismatch, "assembly",
                    "sub-interval meshes do not match the coefficient breakpoints");
    }
    return detail::assemble_meshes(coeffs, meshes);
}

/// Convenience: `n` nodes per breakpoint interval.
[[nodiscard]] inline DiscreteOperators assemble_on_breakpoints(const CoefficientSet& coeffs,
                                                               NodeFamily family, int n) {
    return assemble_piecewise(coeffs, build_meshes(family, n, coeffs.breakpoints));
}

/// Row-major CSV, 17 significant digits.
inline void write_matrix_csv(std::ostream& out, const Eigen::MatrixXd& m) {
    char buf[40];
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            std::snprintf(buf, sizeof buf, "%.17g", m(i, j));
            if (j) out << ',';
            out << buf;
        }
        out << '\n';
    }
}

inline void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& m) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::Io, "assembly", "cannot write " + path);
    write_matrix_csv(out, m);
    if (!out) throw Error(ErrorCode::Io, "assembly", "write failed for " + path);
}

[[nodiscard]] inline Eigen::MatrixXd read_matrix_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "assembly", "cannot read " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
        if (!rows.empty() && row.size() != rows.front().size()) {
            throw Error(ErrorCode::Io, "assembly", "ragged matrix in " + path);
        }
        rows.push_back(std::move(row));
    }
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                      rows.empty() ? 0 : static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < rows[i].size(); ++j) {
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
        }
    }
    return m;
}

}  // namespace repnum
