// Copyright 2026 The QCN Authors
// SPDX-License-Identifier: Apache-2.0

//
// Layered transport network: L entry sites, M hidden sites, N_c exit
// sites. Entry sites couple to every hidden site; hidden sites couple
// to each other and to every exit site. There are no entry-entry,
// entry-exit or exit-exit couplings. Site 0 of the D = N+1 dimensional
// Hilbert space is the vacuum; sites 1..N carry one excitation.
//

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <string>

#include "qcn/errors.hpp"

namespace qcn {

using Params = Eigen::VectorXd;

struct NetworkSpec {
    int n_in = 0;      // L, entry sites
    int n_hidden = 0;  // M
    int n_out = 0;     // N_c, exit sites (= classes)
    bool train_onsite = false;
    double param_bound = 1.0;  // symmetric box bound on each amplitude

    int sites() const { return n_in + n_hidden + n_out; }
    int dim() const { return sites() + 1; }  // vacuum-augmented

    // 0-based site indices into the N-dimensional site space
    int entry_site(int i) const { return i; }
    int hidden_site(int j) const { return n_in + j; }
    int exit_site(int c) const { return n_in + n_hidden + c; }

    int hopping_count() const {
        return n_in * n_hidden + n_hidden * (n_hidden - 1) / 2 +
               n_hidden * n_out;
    }
    int param_count() const {
        return hopping_count() + (train_onsite ? sites() : 0);
    }

    /// True when sites a, b (0-based, a != b) may carry a hopping term.
    bool mask_allows(int a, int b) const {
        if (a == b) return false;
        if (a > b) std::swap(a, b);
        const int h0 = n_in, x0 = n_in + n_hidden;
        const bool a_entry = a < h0;
        const bool b_hidden = b >= h0 && b < x0;
        if (a_entry) return b_hidden;           // entry-hidden only
        if (a < x0) return true;                // hidden-hidden / hidden-exit
        return false;                           // exit-exit forbidden
    }
};

inline NetworkSpec build_topology(int L, int M, int N_c, bool train_onsite,
                                  double t_max) {
    if (L < 1) throw InvalidArgument("build_topology: n_in must be >= 1");
    if (M < 1) throw InvalidArgument("build_topology: n_hidden must be >= 1");
    if (N_c < 2) throw InvalidArgument("build_topology: n_out must be >= 2");
    if (!(t_max > 0.0))
        throw InvalidArgument("build_topology: t_max must be > 0");
    return NetworkSpec{L, M, N_c, train_onsite, t_max};
}

/// Expands the flat parameter vector into the N x N real symmetric
/// single-particle Hamiltonian. Layout: entry-hidden block, then the
/// hidden-hidden upper triangle, then hidden-exit block, then (when
/// train_onsite) the N on-site energies.
inline Eigen::MatrixXd assemble_hamiltonian(const NetworkSpec& spec,
                                            const Params& params) {
    if (params.size() != spec.param_count())
        throw InvalidArgument(
            "assemble_hamiltonian: expected " +
            std::to_string(spec.param_count()) + " parameters, got " +
            std::to_string(params.size()));
    const double bound = spec.param_bound * (1.0 + 1e-12);
    for (Eigen::Index k = 0; k < params.size(); ++k)
        if (!(std::abs(params[k]) <= bound))
            throw InvalidArgument("assemble_hamiltonian: parameter " +
                                  std::to_string(k) + " outside [-t_max, t_max]");

    const int N = spec.sites();
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(N, N);
    int k = 0;
    auto place = [&](int a, int b) {
        H(a, b) = params[k];
        H(b, a) = params[k];
        ++k;
    };
    for (int i = 0; i < spec.n_in; ++i)
        for (int j = 0; j < spec.n_hidden; ++j)
            place(spec.entry_site(i), spec.hidden_site(j));
    for (int a = 0; a < spec.n_hidden; ++a)
        for (int b = a + 1; b < spec.n_hidden; ++b)
            place(spec.hidden_site(a), spec.hidden_site(b));
    for (int a = 0; a < spec.n_hidden; ++a)
        for (int c = 0; c < spec.n_out; ++c)
            place(spec.hidden_site(a), spec.exit_site(c));
    if (spec.train_onsite)
        for (int s = 0; s < N; ++s) H(s, s) = params[k++];
    return H;
}

/// Inverse of assemble_hamiltonian on its image. Rejects matrices with
/// couplings outside the topology mask.
inline Params extract_params(const NetworkSpec& spec,
                             const Eigen::MatrixXd& H) {
    const int N = spec.sites();
    if (H.rows() != N || H.cols() != N)
        throw InvalidArgument("extract_params: Hamiltonian size mismatch");
    for (int a = 0; a < N; ++a)
        for (int b = 0; b < N; ++b) {
            if (a == b) {
                if (!spec.train_onsite && H(a, a) != 0.0)
                    throw InvalidArgument(
                        "extract_params: nonzero on-site energy at site " +
                        std::to_string(a) + " with train_onsite=false");
            } else if (!spec.mask_allows(a, b) && H(a, b) != 0.0) {
                throw InvalidArgument("extract_params: nonzero masked entry (" +
                                      std::to_string(a) + ", " +
                                      std::to_string(b) + ")");
            }
        }

    Params params(spec.param_count());
    int k = 0;
    for (int i = 0; i < spec.n_in; ++i)
        for (int j = 0; j < spec.n_hidden; ++j)
            params[k++] = H(spec.entry_site(i), spec.hidden_site(j));
    for (int a = 0; a < spec.n_hidden; ++a)
        for (int b = a + 1; b < spec.n_hidden; ++b)
            params[k++] = H(spec.hidden_site(a), spec.hidden_site(b));
    for (int a = 0; a < spec.n_hidden; ++a)
        for (int c = 0; c < spec.n_out; ++c)
            params[k++] = H(spec.hidden_site(a), spec.exit_site(c));
    if (spec.train_onsite)
        for (int s = 0; s < N; ++s) params[k++] = H(s, s);
    return params;
}

/// Embeds the N x N site Hamiltonian into the D = N+1 dimensional
/// vacuum-augmented basis (vacuum row/column zero).
inline Eigen::MatrixXd embed_hamiltonian(const NetworkSpec& spec,
                                         const Eigen::MatrixXd& H) {
    const int N = spec.sites();
    if (H.rows() != N || H.cols() != N)
        throw InvalidArgument("embed_hamiltonian: Hamiltonian size mismatch");
    Eigen::MatrixXd HD = Eigen::MatrixXd::Zero(N + 1, N + 1);
    HD.block(1, 1, N, N) = H;
    return HD;
}

/// Mean magnitude of the hopping amplitudes; the natural energy unit
/// of a trained network (dephasing rates are quoted against it).
inline double mean_hopping(const NetworkSpec& spec, const Params& params) {
    const int n = spec.hopping_count();
    if (n == 0) return 0.0;
    return params.head(n).cwiseAbs().mean();
}

}  // namespace qcn
