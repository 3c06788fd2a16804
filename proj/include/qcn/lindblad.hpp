// Copyright 2026 The QCN Authors
// SPDX-License-Identifier: Apache-2.0

//
// Open-system transport on the vacuum-augmented single-excitation
// basis (dimension D = N+1, index 0 = vacuum, site s at index s+1).
//
// The master equation is
//   rho' = -i[H, rho] + sum_k ( V_k rho V_k^+ - 1/2 {V_k^+ V_k, rho} )
// with jump operators
//   source     V_in    = sqrt(gamma_in) sum_i psi(i) |site i><vac|
//   drain r    V_out,r = sqrt(gamma) |vac><site r|      (one per class)
//   dephasing  V_s     = sqrt(Gamma_dep) |site s><site s|
//
// Superoperators act on column-major vectorized density matrices,
// vec(rho)[j*D + i] = rho(i, j), so vec(A X B) = kron(B^T, A) vec(X).
//

#pragma once

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>

#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "qcn/errors.hpp"
#include "qcn/network.hpp"

namespace qcn {

using Complex = std::complex<double>;
using MatrixC = Eigen::MatrixXcd;
using VectorC = Eigen::VectorXcd;

struct Rates {
    double gamma_in = 1.0;         // injection rate
    double gamma = 1.0;            // extraction rate per drain
    double gamma_dephasing = 0.0;  // local dephasing rate, 0 = coherent
};

struct LindbladOp {
    MatrixC matrix;     // D x D, includes sqrt(rate)
    double rate = 0.0;  // gamma_in, gamma or Gamma_dep
};

struct Liouvillian {
    MatrixC superop;  // D^2 x D^2
    int dim = 0;      // D
};

struct DensityMatrix {
    MatrixC rho;  // D x D, Hermitian, trace 1, PSD
    int dim() const { return static_cast<int>(rho.rows()); }
};

namespace tol {
inline constexpr double hermiticity = 1e-12;
inline constexpr double trace = 1e-12;
inline constexpr double eigenvalue_floor = -1e-10;
inline constexpr double residual = 1e-10;   // relative to ||superop||_F
inline constexpr double null_space = 1e-8;  // uniqueness, relative to sigma_max
}  // namespace tol

inline void require_valid_density(const MatrixC& rho) {
    if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() > tol::hermiticity)
        throw SolverError("density matrix is not Hermitian at tolerance");
    if (std::abs(rho.trace() - Complex(1.0)) > tol::trace)
        throw SolverError("density matrix trace differs from 1");
    Eigen::SelfAdjointEigenSolver<MatrixC> es(rho, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < tol::eigenvalue_floor)
        throw SolverError("density matrix has a negative eigenvalue: " +
                          std::to_string(es.eigenvalues().minCoeff()));
}

// ---------------------------------------------------------------------------
// Jump operators
// ---------------------------------------------------------------------------

/// Encodes the input state as injection from the vacuum:
/// V = sqrt(gamma_in) sum_i psi(i) |site i><vac|.
inline LindbladOp source_operator(const NetworkSpec& spec,
                                  const Eigen::VectorXd& psi, double gamma_in) {
    if (psi.size() != spec.n_in)
        throw InvalidArgument("source_operator: psi length " +
                              std::to_string(psi.size()) + ", expected " +
                              std::to_string(spec.n_in));
    if (std::abs(psi.norm() - 1.0) > 1e-10)
        throw InvalidArgument("source_operator: psi is not normalized");
    if (!(gamma_in > 0.0))
        throw InvalidArgument("source_operator: gamma_in must be > 0");
    const int D = spec.dim();
    LindbladOp op{MatrixC::Zero(D, D), gamma_in};
    const double s = std::sqrt(gamma_in);
    for (int i = 0; i < spec.n_in; ++i) op.matrix(1 + i, 0) = s * psi[i];
    return op;
}

/// One extraction operator per exit site: V_r = sqrt(gamma) |vac><site r|.
inline std::vector<LindbladOp> drain_operators(const NetworkSpec& spec,
                                               double gamma) {
    if (!(gamma > 0.0))
        throw InvalidArgument("drain_operators: gamma must be > 0");
    const int D = spec.dim();
    std::vector<LindbladOp> ops;
    ops.reserve(spec.n_out);
    for (int c = 0; c < spec.n_out; ++c) {
        LindbladOp op{MatrixC::Zero(D, D), gamma};
        op.matrix(0, 1 + spec.exit_site(c)) = std::sqrt(gamma);
        ops.push_back(std::move(op));
    }
    return ops;
}

/// Zeno-type local dephasing, one projector per network site:
/// V_s = sqrt(Gamma_dep) |site s><site s|.
inline std::vector<LindbladOp> dephasing_operators(const NetworkSpec& spec,
                                                   double Gamma_dep) {
    if (Gamma_dep < 0.0)
        throw InvalidArgument("dephasing_operators: rate must be >= 0");
    const int D = spec.dim();
    std::vector<LindbladOp> ops;
    ops.reserve(spec.sites());
    for (int s = 0; s < spec.sites(); ++s) {
        LindbladOp op{MatrixC::Zero(D, D), Gamma_dep};
        op.matrix(1 + s, 1 + s) = std::sqrt(Gamma_dep);
        ops.push_back(std::move(op));
    }
    return ops;
}

// ---------------------------------------------------------------------------
// Superoperator
// ---------------------------------------------------------------------------

/// vec(A X B) = kron(B^T, A) vec(X) building blocks for one dissipator:
/// kron(conj(V), V) - 1/2 kron(I, V^+V) - 1/2 kron((V^+V)^T, I).
inline MatrixC dissipator_superop(const MatrixC& V) {
    const int D = static_cast<int>(V.rows());
    const MatrixC id = MatrixC::Identity(D, D);
    const MatrixC VdV = V.adjoint() * V;
    MatrixC S = Eigen::kroneckerProduct(V.conjugate(), V);
    S -= 0.5 * Eigen::kroneckerProduct(id, VdV);
    S -= 0.5 * Eigen::kroneckerProduct(VdV.transpose(), id);
    return S;
}

/// Assembles the full D^2 x D^2 generator from the embedded Hamiltonian
/// (vacuum row/column zero) and a set of jump operators.
template <typename Derived>
Liouvillian build_liouvillian(const Eigen::MatrixBase<Derived>& H_embedded,
                              const std::vector<LindbladOp>& ops) {
    const MatrixC H = H_embedded.template cast<Complex>();
    const int D = static_cast<int>(H.rows());
    if (H.cols() != D)
        throw InvalidArgument("build_liouvillian: Hamiltonian must be square");
    const MatrixC id = MatrixC::Identity(D, D);
    const Complex i_unit(0.0, 1.0);
    MatrixC S = -i_unit * (Eigen::kroneckerProduct(id, H) -
                           Eigen::kroneckerProduct(H.transpose(), id));
    for (const auto& op : ops) {
        if (op.matrix.rows() != D || op.matrix.cols() != D)
            throw InvalidArgument(
                "build_liouvillian: operator dimension mismatch");
        S += dissipator_superop(op.matrix);
    }
    return Liouvillian{std::move(S), D};
}

/// || vec(I)^H superop || / ||superop||_F; zero for any trace-preserving
/// generator.
inline double relative_trace_violation(const Liouvillian& Lv) {
    const int D = Lv.dim;
    const double snorm = Lv.superop.norm();
    if (snorm == 0.0) return 0.0;
    Eigen::RowVectorXcd trace_row = Eigen::RowVectorXcd::Zero(D * D);
    for (int j = 0; j < D; ++j) trace_row(j * D + j) = 1.0;
    return (trace_row * Lv.superop).norm() / snorm;
}

// ---------------------------------------------------------------------------
// Steady state
// ---------------------------------------------------------------------------

namespace detail {

/// min/max magnitude ratio of the U diagonal of an LU factorization.
/// A structurally singular system shows an exact (or near-exact) zero
/// pivot; Eigen's rcond() estimate does not reliably flag that case.
inline double lu_pivot_ratio(const Eigen::PartialPivLU<MatrixC>& lu) {
    const auto diag = lu.matrixLU().diagonal();
    double lo = std::abs(diag(0)), hi = lo;
    for (Eigen::Index k = 1; k < diag.size(); ++k) {
        const double v = std::abs(diag(k));
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    return hi == 0.0 ? 0.0 : lo / hi;
}

/// Hermitize, renormalize and validate a raw steady-state vector.
inline DensityMatrix finalize_steady_state(const Liouvillian& Lv, VectorC x) {
    const int D = Lv.dim;
    MatrixC rho = Eigen::Map<const MatrixC>(x.data(), D, D);
    rho = 0.5 * (rho + rho.adjoint()).eval();
    const double tr = rho.trace().real();
    if (std::abs(tr) < 1e-12)
        throw SolverError("steady_state: null vector has vanishing trace");
    rho /= tr;
    const double snorm = Lv.superop.norm();
    const VectorC res =
        Lv.superop * Eigen::Map<const VectorC>(rho.data(), D * D);
    if (res.norm() > tol::residual * snorm)
        throw SolverError("steady_state: residual " +
                          std::to_string(res.norm() / snorm) +
                          " above tolerance");
    require_valid_density(rho);
    return DensityMatrix{std::move(rho)};
}

/// Null-space route: smallest singular vector, with an explicit
/// uniqueness check on the second-smallest singular value.
inline DensityMatrix steady_state_svd(const Liouvillian& Lv) {
    const int n = Lv.dim * Lv.dim;
    Eigen::BDCSVD<MatrixC> svd(Lv.superop, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    const double smax = sv(0);
    if (smax == 0.0)
        throw NonUniqueSteadyStateError(
            "steady_state: zero generator, every state is stationary");
    if (sv(n - 1) > tol::null_space * smax)
        throw SolverError(
            "steady_state: no null vector at tolerance (smallest relative "
            "singular value " +
            std::to_string(sv(n - 1) / smax) + ")");
    if (sv(n - 2) <= tol::null_space * smax)
        throw NonUniqueSteadyStateError(
            "steady_state: null space dimension > 1, steady state is not "
            "unique");
    return finalize_steady_state(Lv, svd.matrixV().col(n - 1));
}

}  // namespace detail

/// Solves superop . vec(rho) = 0 with tr(rho) = 1. The generator's rows
/// are linearly dependent through trace preservation, so the vacuum
/// population row is replaced by the trace constraint and the square
/// system solved by LU; ill-conditioned systems fall back to an SVD
/// null-space solve that also detects non-uniqueness.
inline DensityMatrix steady_state(const Liouvillian& Lv) {
    const int D = Lv.dim;
    const int n = D * D;
    if (Lv.superop.rows() != n || Lv.superop.cols() != n)
        throw InvalidArgument("steady_state: malformed Liouvillian");
    if (Lv.superop.norm() == 0.0)
        throw NonUniqueSteadyStateError(
            "steady_state: zero generator, every state is stationary");

    MatrixC A = Lv.superop;
    A.row(0).setZero();
    for (int j = 0; j < D; ++j) A(0, j * D + j) = 1.0;
    VectorC b = VectorC::Zero(n);
    b(0) = 1.0;

    Eigen::PartialPivLU<MatrixC> lu(A);
    // a (near-)zero pivot means the trace-constrained system is singular,
    // i.e. the steady state is non-unique; the SVD route decides
    if (detail::lu_pivot_ratio(lu) > 1e-12) {
        VectorC x = lu.solve(b);
        if (x.allFinite()) {
            try {
                return detail::finalize_steady_state(Lv, std::move(x));
            } catch (const SolverError&) {
                // fall through to the SVD route
            }
        }
    }
    return detail::steady_state_svd(Lv);
}

// ---------------------------------------------------------------------------
// Time propagation (independent oracle for steady_state)
// ---------------------------------------------------------------------------

/// Classical RK4 integration of rho' = superop . vec(rho). The exact
/// flow conserves the trace, so a drift above 1e-6 flags instability.
inline DensityMatrix propagate(const DensityMatrix& rho0, const Liouvillian& Lv,
                               double t_final, double dt) {
    if (!(dt > 0.0)) throw InvalidArgument("propagate: dt must be > 0");
    if (!(t_final >= dt))
        throw InvalidArgument("propagate: t_final must be >= dt");
    const int D = Lv.dim;
    if (rho0.dim() != D)
        throw InvalidArgument("propagate: dimension mismatch");
    const int n = D * D;
    const MatrixC& S = Lv.superop;
    VectorC x = Eigen::Map<const VectorC>(rho0.rho.data(), n);

    auto trace_of = [D](const VectorC& v) {
        Complex t = 0.0;
        for (int j = 0; j < D; ++j) t += v(j * D + j);
        return t;
    };
    const double trace0 = trace_of(x).real();

    double t = 0.0;
    VectorC k1(n), k2(n), k3(n), k4(n);
    while (t < t_final - 1e-12 * t_final) {
        const double h = std::min(dt, t_final - t);
        k1.noalias() = S * x;
        k2.noalias() = S * (x + (0.5 * h) * k1);
        k3.noalias() = S * (x + (0.5 * h) * k2);
        k4.noalias() = S * (x + h * k3);
        x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        t += h;
        if (!x.allFinite() || std::abs(trace_of(x).real() - trace0) > 1e-6)
            throw SolverError(
                "propagate: trace drift exceeds 1e-6, reduce dt");
    }
    MatrixC rho = Eigen::Map<const MatrixC>(x.data(), D, D);
    return DensityMatrix{std::move(rho)};
}

// ---------------------------------------------------------------------------
// Currents
// ---------------------------------------------------------------------------

/// Steady-state exit currents, reported as positive outflow. For
/// V_r = sqrt(gamma)|vac><site r| this is tr(V rho V^+) = gamma rho_rr.
inline Eigen::VectorXd exit_currents(const DensityMatrix& rho_s,
                                     const std::vector<LindbladOp>& drains) {
    Eigen::VectorXd J(static_cast<Eigen::Index>(drains.size()));
    for (std::size_t k = 0; k < drains.size(); ++k) {
        const MatrixC& V = drains[k].matrix;
        if (V.rows() != rho_s.dim())
            throw InvalidArgument("exit_currents: dimension mismatch");
        J(static_cast<Eigen::Index>(k)) =
            (V * rho_s.rho * V.adjoint()).trace().real();
    }
    return J;
}

// ---------------------------------------------------------------------------
// Per-input steady-state engine
// ---------------------------------------------------------------------------

/// Solver for a fixed network (Hamiltonian, drains, dephasing) queried
/// with many input states. The input-independent part of the generator
/// is factorized once; each input only changes the injection term,
/// which is a rank-one update confined to the vacuum column, so one
/// back-substitution plus a Sherman-Morrison correction solves each
/// input. Instances are immutable after construction and safe to share
/// across threads.
class SteadyStateEngine {
public:
    SteadyStateEngine(const NetworkSpec& spec, const Eigen::MatrixXd& H_sites,
                      const Rates& rates)
        : spec_(spec),
          rates_(rates),
          D_(spec.dim()),
          n_(D_ * D_),
          H_embedded_(embed_hamiltonian(spec, H_sites).cast<Complex>()),
          drains_(drain_operators(spec, rates.gamma)) {
        if (!(rates.gamma_in > 0.0))
            throw InvalidArgument("SteadyStateEngine: gamma_in must be > 0");
        if (rates.gamma_dephasing > 0.0)
            dephasing_ = dephasing_operators(spec, rates.gamma_dephasing);

        std::vector<LindbladOp> fixed_ops = drains_;
        fixed_ops.insert(fixed_ops.end(), dephasing_.begin(),
                         dephasing_.end());
        MatrixC A = build_liouvillian(H_embedded_, fixed_ops).superop;
        // source anticommutator -1/2 {V^+V, rho} with V^+V = gamma_in |0><0|;
        // independent of the (normalized) input state
        for (int j = 0; j < D_; ++j) A(j * D_, j * D_) -= 0.5 * rates.gamma_in;
        for (int i = 0; i < D_; ++i) A(i, i) -= 0.5 * rates.gamma_in;
        base_norm_ = A.norm();
        // trace constraint replaces the (redundant) vacuum-population row
        A.row(0).setZero();
        for (int j = 0; j < D_; ++j) A(0, j * D_ + j) = 1.0;
        base_ = std::move(A);
        lu_.compute(base_);
        // A singular generator means the steady state is not unique. This
        // is structural when L > M: entry vectors orthogonal to every
        // hidden coupling are exactly dark and never drain.
        if (!(detail::lu_pivot_ratio(lu_) > 1e-12))
            throw DegenerateNetworkError(
                "steady state is not unique or is severely ill-conditioned "
                "(networks with more entry than hidden sites have dark entry "
                "states)");
        VectorC b = VectorC::Zero(n_);
        b(0) = 1.0;
        xb_ = lu_.solve(b);
        if (!xb_.allFinite())
            throw DegenerateNetworkError(
                "steady-state base solve produced non-finite values");
    }

    const NetworkSpec& spec() const { return spec_; }
    const Rates& rates() const { return rates_; }
    const std::vector<LindbladOp>& drains() const { return drains_; }

    /// Validated steady-state density matrix for one input.
    DensityMatrix solve(const Eigen::VectorXd& psi) const {
        VectorC x = steady_vec(psi);
        const int D = D_;
        MatrixC rho = Eigen::Map<const MatrixC>(x.data(), D, D);
        rho = 0.5 * (rho + rho.adjoint()).eval();
        rho /= rho.trace().real();
        require_valid_density(rho);
        return DensityMatrix{std::move(rho)};
    }

    /// Exit currents J_r = gamma rho_rr for one input. Skips the
    /// eigenvalue validation of solve(); intended for training loops.
    Eigen::VectorXd currents(const Eigen::VectorXd& psi) const {
        const VectorC x = steady_vec(psi);
        Eigen::VectorXd J(spec_.n_out);
        for (int c = 0; c < spec_.n_out; ++c) {
            const int r = 1 + spec_.exit_site(c);
            J(c) = rates_.gamma * x(r * D_ + r).real();
        }
        return J;
    }

    /// Full-generator solve through the generic path; used as fallback
    /// and as an independent check of the fast route.
    DensityMatrix solve_generic(const Eigen::VectorXd& psi) const {
        std::vector<LindbladOp> ops;
        ops.push_back(source_operator(spec_, psi, rates_.gamma_in));
        ops.insert(ops.end(), drains_.begin(), drains_.end());
        ops.insert(ops.end(), dephasing_.begin(), dephasing_.end());
        return steady_state(build_liouvillian(H_embedded_, ops));
    }

private:
    VectorC steady_vec(const Eigen::VectorXd& psi) const {
        if (psi.size() != spec_.n_in)
            throw InvalidArgument("SteadyStateEngine: psi length mismatch");
        if (std::abs(psi.norm() - 1.0) > 1e-10)
            throw InvalidArgument("SteadyStateEngine: psi is not normalized");

        // injection jump term: gamma_in vec(u u^T) e_0^T, u = embedded psi
        VectorC w = VectorC::Zero(n_);
        for (int i = 0; i < spec_.n_in; ++i)
            for (int j = 0; j < spec_.n_in; ++j)
                w((1 + j) * D_ + (1 + i)) =
                    rates_.gamma_in * psi[i] * psi[j];

        const VectorC z = lu_.solve(w);
        const Complex denom = 1.0 + z(0);
        if (std::abs(denom) < 1e-12) return generic_vec(psi);
        VectorC x = xb_ - z * (xb_(0) / denom);

        // verify against the unfactorized system
        VectorC res = base_ * x + w * x(0);
        res(0) -= 1.0;
        if (!(res.norm() <= 1e-9 * base_norm_ * std::max(1.0, x.norm())))
            return generic_vec(psi);
        return x;
    }

    VectorC generic_vec(const Eigen::VectorXd& psi) const {
        const DensityMatrix rho = solve_generic(psi);
        return Eigen::Map<const VectorC>(rho.rho.data(), n_);
    }

    NetworkSpec spec_;
    Rates rates_;
    int D_, n_;
    MatrixC H_embedded_;
    std::vector<LindbladOp> drains_;
    std::vector<LindbladOp> dephasing_;
    MatrixC base_;
    Eigen::PartialPivLU<MatrixC> lu_;
    VectorC xb_;
    double base_norm_ = 0.0;
};

}  // namespace qcn
