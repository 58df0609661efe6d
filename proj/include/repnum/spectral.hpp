#pragma once

// Dominant eigenvalue of B M^{-1} (or M^{-1} B) and the associated
// eigenfunction. M^{-1} is never formed; everything goes through one LU
// factorization of M.

#include <algorithm>
#include <cmath>
#include <complex>
#include <concepts>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "repnum/assembly.hpp"
#include "repnum/chebyshev.hpp"
#include "repnum/errors.hpp"

namespace repnum {

enum class Ordering { BMinv, MinvB };
enum class EigenMethod { Auto, Dense, Power };

[[nodiscard]] inline std::string to_string(Ordering o) {
    return o == Ordering::BMinv ? "bm-inv" : "minv-b";
}
[[nodiscard]] inline std::string to_string(EigenMethod m) {
    switch (m) {
        case EigenMethod::Dense: return "dense";
        case EigenMethod::Power: return "power";
        default: return "auto";
    }
}

struct SpectralOptions {
    Ordering ordering = Ordering::BMinv;
    EigenMethod method = EigenMethod::Auto;
    Eigen::Index dense_limit = 600;  ///< Auto uses the dense solver up to this reduced size
    double power_tol = 1e-14;
    int power_max_iter = 20000;
    double residual_limit = 1e-8;
    bool refine = true;                  ///< extended-precision polish of the dominant pair
    Eigen::Index refine_limit = 1200;    ///< skipped above this matrix size
};

struct SpectralResult {
    double R = 0.0;
    std::complex<double> eigenvalue;
    Eigen::VectorXcd eigenvector;  ///< length d*n, max-norm 1
    double residual = 0.0;         ///< ||H v - lambda v||_inf / ||v||_inf
    Ordering ordering = Ordering::BMinv;
    double rcond_M = 0.0;
    EigenMethod method_used = EigenMethod::Dense;
    int power_iterations = 0;
};

struct PowerResult {
    double value = 0.0;
    Eigen::VectorXd vector;
    int iterations = 0;
    bool converged = false;
};

/// Power iteration with Rayleigh-quotient estimate; `apply(x)` returns H x.
template <class Apply>
    requires std::invocable<Apply&, const Eigen::VectorXd&>
[[nodiscard]] PowerResult power_iteration_op(Apply&& apply, Eigen::Index n, double tol = 1e-14,
                                          int max_iter = 20000) {
    PowerResult r;
    Eigen::VectorXd x = Eigen::VectorXd::Ones(n) / std::sqrt(static_cast<double>(n));
    double prev = 0.0;
    // Badly scaled matrices leave the Rayleigh quotient jittering above tol;
    // a run of small changes is accepted as a round-off plateau.
    constexpr int kPlateau = 8;
    int flat = 0;
    for (int it = 1; it <= max_iter; ++it) {
        Eigen::VectorXd y = apply(x);
        const double lambda = x.dot(y);
        const double norm = y.norm();
        r.iterations = it;
        if (!(norm > 0.0) || !std::isfinite(norm)) {
            r.value = 0.0;
            r.vector = x;
            return r;
        }
        x = y / norm;
        r.value = lambda;
        const double change = std::abs(lambda - prev) / std::max(std::abs(lambda), 1e-300);
        flat = it > 1 && change <= 1e-11 ? flat + 1 : 0;
        if (it > 1 && (change <= tol || flat >= kPlateau)) {
            r.converged = true;
            r.value = x.dot(apply(x));
            break;
        }
        prev = lambda;
    }
    r.vector = x;
    return r;
}

[[nodiscard]] inline PowerResult power_iteration(const Eigen::MatrixXd& H, double tol = 1e-14,
                                                 int max_iter = 20000) {
    if (H.rows() != H.cols()) {
        throw Error(ErrorCode::DimensionMismatch, "spectral", "power iteration needs a square matrix");
    }
    return power_iteration_op([&](const Eigen::VectorXd& x) -> Eigen::VectorXd { return H * x; },
                              H.rows(), tol, max_iter);
}

namespace detail {

inline Eigen::PartialPivLU<Eigen::MatrixXd> factor_M(const DiscreteOperators& ops, double& rcond) {
    if (ops.M.rows() != ops.M.cols() || ops.B.rows() != ops.M.rows() || ops.B.cols() != ops.M.cols()) {
        throw Error(ErrorCode::DimensionMismatch, "spectral", "B and M must be square and of equal size");
    }
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(ops.M);
    rcond = lu.rcond();
    if (!(rcond > 1e-14) || !std::isfinite(rcond)) {
        char buf[160];
        std::snprintf(buf, sizeof buf,
                      "transition matrix M is numerically singular (rcond = %.3g); try a larger N",
                      rcond);
        throw Error(ErrorCode::SingularMatrix, "spectral", buf);
    }
    return lu;
}

// Max modulus, ties toward the larger real part.
inline Eigen::Index dominant_index(const Eigen::VectorXcd& ev) {
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < ev.size(); ++i) {
        const double a = std::abs(ev(i)), b = std::abs(ev(best));
        if (a > b * (1 + 1e-13) || (a >= b * (1 - 1e-13) && ev(i).real() > ev(best).real())) best = i;
    }
    return best;
}

inline void normalize(Eigen::VectorXcd& v) {
    const double m = v.cwiseAbs().maxCoeff();
    if (!(m > 0.0)) return;
    v /= m;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (std::abs(v(i)) > 1e-8) {
            v *= std::conj(v(i)) / std::abs(v(i));
            break;
        }
    }
}

// Diagonal similarity D^{-1} K D with power-of-two scalings that equalize
// row and column norms (the scaling step of LAPACK's gebal). Next-generation
// matrices of rank-one birth terms are badly scaled and lose digits in QR
// without it. Returns the diagonal of D.
inline Eigen::VectorXd balance(Eigen::MatrixXd& K) {
    const Eigen::Index n = K.rows();
    Eigen::VectorXd d = Eigen::VectorXd::Ones(n);
    bool changed = true;
    for (int sweep = 0; changed && sweep < 100; ++sweep) {
        changed = false;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double c = K.col(i).cwiseAbs().sum() - std::abs(K(i, i));
            const double r = K.row(i).cwiseAbs().sum() - std::abs(K(i, i));
            if (c == 0.0 || r == 0.0) continue;
            double f = 1.0, cc = c;
            while (cc < r / 2.0) cc *= 2.0, f *= 2.0;
            while (cc >= r * 2.0) cc /= 2.0, f /= 2.0;
            if ((cc + r / f) < 0.95 * (c + r)) {
                K.col(i) *= f;
                K.row(i) /= f;
                d(i) *= f;
                changed = true;
            }
        }
    }
    return d;
}

// Newton refinement of a real eigenpair of the pencil B x = lambda M x, with
// the residual accumulated in long double. Both orderings share this pencil,
// and for M^{-1} B the eigenvalue can be badly conditioned in plain double
// (oscillating rows of B against a smooth eigenvector).
inline void refine_pencil(const Eigen::MatrixXd& B, const Eigen::MatrixXd& M, double& lambda,
                          Eigen::VectorXd& x, int iterations = 4) {
    const Eigen::Index n = B.rows();
    Eigen::Index k = 0;
    x.cwiseAbs().maxCoeff(&k);
    if (x(k) == 0.0) return;
    x /= x(k);
    Eigen::MatrixXd A = B - lambda * M;
    A.col(k) = -(M * x);
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
    if (!(lu.rcond() > 1e-300)) return;
    Eigen::VectorXd rho(n);
    for (int it = 0; it < iterations; ++it) {
        for (Eigen::Index i = 0; i < n; ++i) {
            long double acc = 0.0L;
            for (Eigen::Index j = 0; j < n; ++j) {
                acc += static_cast<long double>(B(i, j)) * x(j) -
                       static_cast<long double>(lambda) * M(i, j) * x(j);
            }
            rho(i) = static_cast<double>(acc);
        }
        Eigen::VectorXd z = lu.solve(-rho);
        const double dl = z(k);
        z(k) = 0.0;
        if (!z.allFinite() || !std::isfinite(dl)) return;
        x += z;
        lambda += dl;
        if (std::abs(dl) <= 1e-17 * std::abs(lambda)) break;
    }
}

}  // namespace detail

/// H = B M^{-1} or M^{-1} B, built from solves.
[[nodiscard]] inline Eigen::MatrixXd next_generation_matrix(const DiscreteOperators& ops,
                                                            Ordering ordering) {
    double rcond = 0.0;
    const auto lu = detail::factor_M(ops, rcond);
    if (ordering == Ordering::MinvB) return lu.solve(ops.B);
    // B M^{-1} = (M^{-T} B^T)^T
    const Eigen::MatrixXd BT = ops.B.transpose();
    const Eigen::MatrixXd HT = lu.transpose().solve(BT);
    return HT.transpose();
}

[[nodiscard]] inline SpectralResult spectral_radius(const DiscreteOperators& ops,
                                                    const SpectralOptions& opt = {}) {
    using Eigen::Index;
    using Eigen::MatrixXd;
    SpectralResult res;
    res.ordering = opt.ordering;
    const auto lu = detail::factor_M(ops, res.rcond_M);
    const Index n = ops.B.rows();

    // Rows (BMinv) or columns (MinvB) of B that vanish give zero rows or
    // columns of H; the spectrum lives on the rest.
    std::vector<Index> S, Z;
    for (Index i = 0; i < n; ++i) {
        const bool zero = opt.ordering == Ordering::BMinv ? ops.B.row(i).isZero(0.0)
                                                           : ops.B.col(i).isZero(0.0);
        (zero ? Z : S).push_back(i);
    }
    res.eigenvector = Eigen::VectorXcd::Zero(n);
    if (S.empty()) {
        res.method_used = EigenMethod::Dense;
        return res;
    }
    const Index s = static_cast<Index>(S.size());

    // Hs holds the non-trivial strip: rows S of B M^{-1}, or columns S of M^{-1} B.
    MatrixXd Hs;
    if (opt.ordering == Ordering::BMinv) {
        MatrixXd BsT(n, s);
        for (Index k = 0; k < s; ++k) BsT.col(k) = ops.B.row(S[static_cast<std::size_t>(k)]).transpose();
        const MatrixXd HsT = lu.transpose().solve(BsT);
        Hs = HsT.transpose();  // s x n
    } else {
        MatrixXd Bs(n, s);
        for (Index k = 0; k < s; ++k) Bs.col(k) = ops.B.col(S[static_cast<std::size_t>(k)]);
        Hs = lu.solve(Bs);  // n x s
    }
    MatrixXd K(s, s);
    for (Index i = 0; i < s; ++i) {
        for (Index j = 0; j < s; ++j) {
            K(i, j) = opt.ordering == Ordering::BMinv ? Hs(i, S[static_cast<std::size_t>(j)])
                                                      : Hs(S[static_cast<std::size_t>(i)], j);
        }
    }

    auto lift = [&](const Eigen::VectorXcd& vs, std::complex<double> lambda) {
        Eigen::VectorXcd v = Eigen::VectorXcd::Zero(n);
        for (Index k = 0; k < s; ++k) v(S[static_cast<std::size_t>(k)]) = vs(k);
        if (opt.ordering == Ordering::MinvB && std::abs(lambda) > 0.0) {
            const Eigen::VectorXcd full = Hs.cast<std::complex<double>>() * vs;
            for (Index z : Z) v(z) = full(z) / lambda;
        }
        return v;
    };
    auto residual_of = [&](const Eigen::VectorXcd& v, std::complex<double> lambda) {
        Eigen::VectorXcd hv;
        if (opt.ordering == Ordering::BMinv) {
            // H v = B M^{-1} v
            const Eigen::VectorXcd y = lu.solve(v.real()).cast<std::complex<double>>() +
                                       std::complex<double>(0, 1) * lu.solve(v.imag()).cast<std::complex<double>>();
            hv = ops.B.cast<std::complex<double>>() * y;
        } else {
            const Eigen::VectorXcd y = ops.B.cast<std::complex<double>>() * v;
            hv = lu.solve(y.real()).cast<std::complex<double>>() +
                 std::complex<double>(0, 1) * lu.solve(y.imag()).cast<std::complex<double>>();
        }
        const double vn = v.cwiseAbs().maxCoeff();
        return vn > 0.0 ? (hv - lambda * v).cwiseAbs().maxCoeff() / vn : 0.0;
    };

    auto dense = [&]() {
        MatrixXd Kb = K;
        const Eigen::VectorXd scale = detail::balance(Kb);
        Eigen::EigenSolver<MatrixXd> es(Kb, true);
        if (es.info() != Eigen::Success) {
            throw Error(ErrorCode::NumericalFailure, "spectral", "dense eigensolver did not converge");
        }
        const Index k = detail::dominant_index(es.eigenvalues());
        res.eigenvalue = es.eigenvalues()(k);
        const Eigen::VectorXcd vs = scale.cast<std::complex<double>>().cwiseProduct(es.eigenvectors().col(k));
        res.eigenvector = lift(vs, res.eigenvalue);
        res.method_used = EigenMethod::Dense;
    };

    bool done = false;
    const bool try_power = opt.method == EigenMethod::Power ||
                           (opt.method == EigenMethod::Auto && s > opt.dense_limit);
    if (try_power) {
        const auto pr = power_iteration(K, opt.power_tol, opt.power_max_iter);
        res.power_iterations = pr.iterations;
        if (pr.converged) {
            res.eigenvalue = pr.value;
            res.eigenvector = lift(pr.vector.cast<std::complex<double>>(), res.eigenvalue);
            res.method_used = EigenMethod::Power;
            done = residual_of(res.eigenvector, res.eigenvalue) <= opt.residual_limit;
        }
    }
    if (!done) dense();

    detail::normalize(res.eigenvector);
    if (opt.refine && n <= opt.refine_limit &&
        std::abs(res.eigenvalue.imag()) <= 1e-10 * std::abs(res.eigenvalue)) {
        double lambda = res.eigenvalue.real();
        Eigen::VectorXd x = res.eigenvector.real();
        if (opt.ordering == Ordering::BMinv) x = lu.solve(x);
        detail::refine_pencil(ops.B, ops.M, lambda, x);
        Eigen::VectorXcd v = (opt.ordering == Ordering::BMinv ? Eigen::VectorXd(ops.M * x) : x)
                                 .cast<std::complex<double>>();
        detail::normalize(v);
        // Keep the refined pair only if it is at least as good.
        if (residual_of(v, lambda) <= std::max(residual_of(res.eigenvector, res.eigenvalue), 1e-14)) {
            res.eigenvalue = lambda;
            res.eigenvector = v;
        }
    }
    res.R = std::abs(res.eigenvalue);
    res.residual = residual_of(res.eigenvector, res.eigenvalue);
    return res;
}

/// Approximate eigenfunction of the continuous next-generation operator.
/// Values at the interior nodes of each sub-interval are interpolated by the
/// degree N-1 polynomial through those nodes; x = y' is the density.
class Eigenfunction {
public:
    // y is the eigenfunction of H = B M^{-1}, which lives in Y and need not
    // vanish at a = 0; it is interpolated through the interior nodes only.
    Eigenfunction(const DiscreteOperators& ops, const SpectralResult& res) : dim_(ops.dim) {
        Eigen::VectorXcd psi = res.eigenvector;
        if (res.ordering == Ordering::MinvB) {
            // Eigenvectors of M^{-1}B map to those of B M^{-1} through M.
            psi = ops.M.cast<std::complex<double>>() * psi;
            detail::normalize(psi);
        }
        Eigen::Index off = 0;
        for (const auto& mesh : ops.meshes) {
            Piece p{mesh.interior_interpolant(), {}};
            p.values.assign(static_cast<std::size_t>(dim_), {});
            for (int i = 0; i < mesh.n_interior; ++i) {
                for (int c = 0; c < dim_; ++c) {
                    p.values[static_cast<std::size_t>(c)].push_back(psi((off + i) * dim_ + c));
                }
            }
            off += mesh.n_interior;
            pieces_.push_back(std::move(p));
        }
    }

    [[nodiscard]] int dim() const noexcept { return dim_; }
    [[nodiscard]] Interval domain() const {
        return {pieces_.front().interp.interval().left, pieces_.back().interp.interval().right};
    }

    /// Integrated eigenfunction y(a).
    [[nodiscard]] Eigen::VectorXcd y(double a) const {
        const auto& p = piece(a);
        Eigen::VectorXcd out(dim_);
        for (int c = 0; c < dim_; ++c) {
            out(c) = p.interp.evaluate(std::span<const std::complex<double>>(p.values[static_cast<std::size_t>(c)]), a);
        }
        return out;
    }

    /// Density x(a) = y'(a).
    [[nodiscard]] Eigen::VectorXcd x(double a) const {
        const auto& p = piece(a);
        Eigen::VectorXcd out(dim_);
        for (int c = 0; c < dim_; ++c) {
            out(c) = p.interp.derivative(std::span<const std::complex<double>>(p.values[static_cast<std::size_t>(c)]), a);
        }
        return out;
    }

    /// Columns a, y_1..y_d, x_1..x_d (real parts) on a uniform grid.
    void write_csv(std::ostream& out, int points = 201) const {
        if (points < 2) throw Error(ErrorCode::InvalidArgument, "spectral", "need at least two grid points");
        out << "a";
        for (int c = 0; c < dim_; ++c) out << ",y" << c + 1;
        for (int c = 0; c < dim_; ++c) out << ",x" << c + 1;
        out << '\n';
        const auto dom = domain();
        char buf[40];
        for (int k = 0; k < points; ++k) {
            const double a = k + 1 == points ? dom.right
                                             : dom.left + dom.length() * k / (points - 1);
            const auto yv = y(a), xv = x(a);
            std::snprintf(buf, sizeof buf, "%.17g", a);
            out << buf;
            for (int c = 0; c < dim_; ++c) {
                std::snprintf(buf, sizeof buf, ",%.17g", yv(c).real());
                out << buf;
            }
            for (int c = 0; c < dim_; ++c) {
                std::snprintf(buf, sizeof buf, ",%.17g", xv(c).real());
                out << buf;
            }
            out << '\n';
        }
    }

private:
    struct Piece {
        BarycentricInterpolant interp;
        std::vector<std::vector<std::complex<double>>> values;
    };

    const Piece& piece(double a) const {
        const auto dom = domain();
        if (!dom.contains(a)) {
            throw Error(ErrorCode::OutOfRange, "spectral", "age " + std::to_string(a) + " outside the domain");
        }
        for (const auto& p : pieces_) {
            if (a <= p.interp.interval().right) return p;
        }
        return pieces_.back();
    }

    int dim_;
    std::vector<Piece> pieces_;
};

}  // namespace repnum
