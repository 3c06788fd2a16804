// Copyright 2026 The QCN Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <complex>
#include <vector>

#include "qcn/io.hpp"
#include "qcn/lindblad.hpp"
#include "qcn/network.hpp"
#include "qcn/rng.hpp"
#include "testutil.hpp"

using namespace qcn;

namespace {

// 1-site + vacuum model (D = 2): injection into the site, extraction
// from the same site. Closed-form steady state from the rate balance
// gamma_in rho00 = gamma rho11.
Liouvillian one_site_model(double gamma_in, double gamma) {
    MatrixC v_in = MatrixC::Zero(2, 2);
    v_in(1, 0) = std::sqrt(gamma_in);
    MatrixC v_out = MatrixC::Zero(2, 2);
    v_out(0, 1) = std::sqrt(gamma);
    return build_liouvillian(Eigen::MatrixXd::Zero(2, 2),
                             {{v_in, gamma_in}, {v_out, gamma}});
}

struct RandomCase {
    NetworkSpec spec;
    Eigen::MatrixXd H;
    Rates rates;
    Eigen::VectorXd psi;
};

RandomCase random_case(Prng& rng, bool with_dephasing = false) {
    const int L = 1 + static_cast<int>(rng.below(2));
    const int M = L + static_cast<int>(rng.below(3));
    const int Nc = 2 + static_cast<int>(rng.below(2));
    RandomCase c{build_topology(L, M, Nc, false, 1.0), {}, {}, {}};
    c.H = assemble_hamiltonian(c.spec, testutil::random_params(c.spec, rng));
    c.rates.gamma_in = rng.uniform(0.5, 2.0);
    c.rates.gamma = rng.uniform(0.5, 2.0);
    c.rates.gamma_dephasing = with_dephasing ? rng.uniform(0.1, 1.0) : 0.0;
    c.psi = random_real_state(L, rng);
    return c;
}

std::vector<LindbladOp> all_ops(const RandomCase& c) {
    std::vector<LindbladOp> ops;
    ops.push_back(source_operator(c.spec, c.psi, c.rates.gamma_in));
    for (auto& op : drain_operators(c.spec, c.rates.gamma))
        ops.push_back(op);
    if (c.rates.gamma_dephasing > 0.0)
        for (auto& op : dephasing_operators(c.spec, c.rates.gamma_dephasing))
            ops.push_back(op);
    return ops;
}

}  // namespace

TEST_CASE("source operator encodes psi in the vacuum column") {
    const NetworkSpec spec = build_topology(2, 4, 2, false, 1.0);
    Eigen::Vector2d basis(1.0, 0.0);
    const LindbladOp op = source_operator(spec, basis, 1.0);
    REQUIRE(op.matrix.rows() == 9);
    CHECK(op.matrix(1, 0) == Complex(1.0));
    CHECK(op.matrix.cwiseAbs().sum() == doctest::Approx(1.0).epsilon(1e-15));

    Eigen::Vector2d rotated(std::cos(0.3), std::sin(0.3));
    const LindbladOp op2 = source_operator(spec, rotated, 1.0);
    CHECK(op2.matrix(1, 0).real() == doctest::Approx(0.9553).epsilon(1e-4));
    CHECK(op2.matrix(2, 0).real() == doctest::Approx(0.2955).epsilon(1e-4));
    CHECK(op2.matrix(1, 0).real() == doctest::Approx(std::cos(0.3)).epsilon(1e-14));

    // V^H V = gamma_in |vac><vac| for normalized psi
    const LindbladOp op3 = source_operator(spec, rotated, 2.5);
    MatrixC vdv = op3.matrix.adjoint() * op3.matrix;
    CHECK(std::abs(vdv(0, 0) - Complex(2.5)) < 1e-14);
    vdv(0, 0) = 0.0;
    CHECK(vdv.cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("source operator rejects bad inputs") {
    const NetworkSpec spec = build_topology(2, 4, 2, false, 1.0);
    Eigen::Vector2d unnormalized(1.0, 1.0);
    CHECK_THROWS_AS(source_operator(spec, unnormalized, 1.0), InvalidArgument);
    Eigen::Vector2d ok(1.0, 0.0);
    CHECK_THROWS_AS(source_operator(spec, ok, 0.0), InvalidArgument);
    CHECK_THROWS_AS(source_operator(spec, ok, -1.0), InvalidArgument);
    Eigen::Vector3d wrong_len(1.0, 0.0, 0.0);
    CHECK_THROWS_AS(source_operator(spec, wrong_len, 1.0), InvalidArgument);
}

TEST_CASE("drain operators extract from the exit sites") {
    const NetworkSpec spec = build_topology(2, 4, 2, false, 1.0);
    const auto ops = drain_operators(spec, 1.0);
    REQUIRE(ops.size() == 2);
    // exit sites are 7 and 8 (1-based after 2 entry + 4 hidden), with
    // the vacuum at index 0 of the D = 9 basis
    CHECK(ops[0].matrix(0, 7) == Complex(1.0));
    CHECK(ops[1].matrix(0, 8) == Complex(1.0));
    CHECK(ops[0].matrix.cwiseAbs().sum() == doctest::Approx(1.0));
    const auto half = drain_operators(spec, 0.5);
    CHECK(half[0].matrix(0, 7).real() ==
          doctest::Approx(std::sqrt(0.5)).epsilon(1e-15));
    CHECK(drain_operators(build_topology(2, 4, 3, false, 1.0), 1.0).size() == 3);
    CHECK_THROWS_AS(drain_operators(spec, 0.0), InvalidArgument);
}

TEST_CASE("dephasing operators are scaled site projectors") {
    const NetworkSpec spec = build_topology(2, 4, 2, false, 1.0);
    const auto zero = dephasing_operators(spec, 0.0);
    REQUIRE(zero.size() == 8);
    for (const auto& op : zero) CHECK(op.matrix.cwiseAbs().maxCoeff() == 0.0);
    const auto ops = dephasing_operators(spec, 4.0);
    for (int s = 0; s < 8; ++s) {
        CHECK(ops[s].matrix(1 + s, 1 + s) == Complex(2.0));
        CHECK(ops[s].matrix.cwiseAbs().sum() == doctest::Approx(2.0));
    }
    CHECK_THROWS_AS(dephasing_operators(spec, -0.1), InvalidArgument);
}

TEST_CASE("dephasing damps coherences and leaves populations alone") {
    // two sites + vacuum, assembled by hand
    const double G = 0.8;
    std::vector<LindbladOp> ops;
    for (int s = 1; s <= 2; ++s) {
        MatrixC v = MatrixC::Zero(3, 3);
        v(s, s) = std::sqrt(G);
        ops.push_back(LindbladOp{v, G});
    }
    const Liouvillian Lv = build_liouvillian(Eigen::MatrixXd::Zero(3, 3), ops);
    auto idx = [](int i, int j) { return j * 3 + i; };
    MatrixC expected = MatrixC::Zero(9, 9);
    expected(idx(1, 2), idx(1, 2)) = -G;  // site-site coherence
    expected(idx(2, 1), idx(2, 1)) = -G;
    for (int s = 1; s <= 2; ++s) {        // vacuum-site coherences
        expected(idx(0, s), idx(0, s)) = -G / 2;
        expected(idx(s, 0), idx(s, 0)) = -G / 2;
    }
    CHECK(testutil::max_abs_diff(Lv.superop, expected) < 1e-14);
}

TEST_CASE("build_liouvillian basics") {
    const Liouvillian empty =
        build_liouvillian(Eigen::MatrixXd::Zero(3, 3), {});
    CHECK(empty.superop.cwiseAbs().maxCoeff() == 0.0);

    MatrixC wrong = MatrixC::Zero(2, 2);
    CHECK_THROWS_AS(
        build_liouvillian(Eigen::MatrixXd::Zero(3, 3), {{wrong, 1.0}}),
        InvalidArgument);
}

TEST_CASE("1-site population dynamics match the rate equation") {
    // rho11' = gamma_in rho00 - gamma rho11
    const double gin = 1.0, g = 3.0;
    const Liouvillian Lv = one_site_model(gin, g);
    auto idx = [](int i, int j) { return j * 2 + i; };
    CHECK(Lv.superop(idx(1, 1), idx(0, 0)).real() == doctest::Approx(gin));
    CHECK(Lv.superop(idx(1, 1), idx(1, 1)).real() == doctest::Approx(-g));
    CHECK(std::abs(Lv.superop(idx(1, 1), idx(0, 1))) < 1e-15);
    CHECK(std::abs(Lv.superop(idx(1, 1), idx(1, 0))) < 1e-15);
}

TEST_CASE("liouvillians preserve the trace") {
    Prng rng(17);
    for (int trial = 0; trial < 10; ++trial) {
        const RandomCase c = random_case(rng, trial % 2 == 1);
        const Liouvillian Lv =
            build_liouvillian(embed_hamiltonian(c.spec, c.H), all_ops(c));
        CHECK(relative_trace_violation(Lv) < 1e-12);
    }
}

TEST_CASE("steady state of the 1-site model follows the rate balance") {
    const DensityMatrix even = steady_state(one_site_model(1.0, 1.0));
    CHECK(even.rho(1, 1).real() == doctest::Approx(0.5).epsilon(1e-12));
    const DensityMatrix uneven = steady_state(one_site_model(1.0, 3.0));
    CHECK(uneven.rho(1, 1).real() == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(uneven.rho(0, 0).real() == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(std::abs(uneven.rho(0, 1)) < 1e-12);
}

TEST_CASE("steady state satisfies the density-matrix contract") {
    Prng rng(23);
    for (int trial = 0; trial < 6; ++trial) {
        const RandomCase c = random_case(rng);
        const Liouvillian Lv =
            build_liouvillian(embed_hamiltonian(c.spec, c.H), all_ops(c));
        const DensityMatrix rho = steady_state(Lv);
        CHECK((rho.rho - rho.rho.adjoint()).cwiseAbs().maxCoeff() < 1e-12);
        CHECK(std::abs(rho.rho.trace() - Complex(1.0)) < 1e-12);
        Eigen::SelfAdjointEigenSolver<MatrixC> es(rho.rho,
                                                  Eigen::EigenvaluesOnly);
        CHECK(es.eigenvalues().minCoeff() > -1e-10);
        const int n = Lv.dim * Lv.dim;
        const Eigen::Map<const VectorC> vec(rho.rho.data(), n);
        CHECK((Lv.superop * vec).norm() <= 1e-10 * Lv.superop.norm());
    }
}

TEST_CASE("degenerate null spaces are reported, not silently resolved") {
    // zero generator: everything is stationary
    Liouvillian zero{MatrixC::Zero(4, 4), 2};
    CHECK_THROWS_AS(steady_state(zero), NonUniqueSteadyStateError);
    // invertible generator: no steady state at all
    Liouvillian no_null{MatrixC::Identity(4, 4), 2};
    CHECK_THROWS_AS(steady_state(no_null), SolverError);
    // drains without a source: vacuum and dark entry coherences remain
    const NetworkSpec spec = build_topology(2, 2, 2, false, 1.0);
    const Liouvillian drains_only = build_liouvillian(
        Eigen::MatrixXd::Zero(7, 7), drain_operators(spec, 1.0));
    CHECK_THROWS_AS(steady_state(drains_only), NonUniqueSteadyStateError);
}

TEST_CASE("propagate integrates the 1-site relaxation exactly") {
    const Liouvillian Lv = one_site_model(1.0, 1.0);
    MatrixC vac = MatrixC::Zero(2, 2);
    vac(0, 0) = 1.0;
    for (const double t : {0.5, 1.0, 2.5}) {
        const DensityMatrix rho = propagate(DensityMatrix{vac}, Lv, t, 1e-3);
        const double expected = 0.5 * (1.0 - std::exp(-2.0 * t));
        CHECK(rho.rho(1, 1).real() == doctest::Approx(expected).epsilon(1e-9));
        CHECK(std::abs(rho.rho.trace() - Complex(1.0)) < 1e-8);
    }
}

TEST_CASE("propagate leaves states alone under a zero generator") {
    Liouvillian zero{MatrixC::Zero(9, 9), 3};
    MatrixC r = MatrixC::Zero(3, 3);
    r(0, 0) = 0.25;
    r(1, 1) = 0.75;
    r(0, 1) = r(1, 0) = 0.1;
    const DensityMatrix out = propagate(DensityMatrix{r}, zero, 5.0, 0.1);
    CHECK(testutil::max_abs_diff(out.rho, r) < 1e-14);
}

TEST_CASE("propagate validates steps and flags instability") {
    const Liouvillian Lv = one_site_model(1.0, 1.0);
    MatrixC vac = MatrixC::Zero(2, 2);
    vac(0, 0) = 1.0;
    CHECK_THROWS_AS(propagate(DensityMatrix{vac}, Lv, 1.0, 0.0),
                    InvalidArgument);
    CHECK_THROWS_AS(propagate(DensityMatrix{vac}, Lv, 0.5, 1.0),
                    InvalidArgument);
    // a huge step makes RK4 diverge on a stiff network
    const NetworkSpec spec = build_topology(2, 4, 2, false, 1.0);
    Prng rng(5);
    const RandomCase c{spec,
                       assemble_hamiltonian(spec, testutil::random_params(spec, rng)),
                       Rates{},
                       random_real_state(2, rng)};
    const Liouvillian stiff =
        build_liouvillian(embed_hamiltonian(c.spec, c.H), all_ops(c));
    MatrixC vac9 = MatrixC::Zero(9, 9);
    vac9(0, 0) = 1.0;
    CHECK_THROWS_AS(propagate(DensityMatrix{vac9}, stiff, 400.0, 4.0),
                    SolverError);
}

TEST_CASE("long-time propagation agrees with the steady-state solve") {
    // the horizon must outlast the transport gap, not just 1/gamma
    const NetworkSpec spec = build_topology(2, 3, 2, false, 1.0);
    Prng rng(47);
    RandomCase c{spec, assemble_hamiltonian(spec, testutil::random_params(spec, rng)),
                 Rates{1.0, 1.0, 0.0}, random_real_state(2, rng)};
    const Liouvillian Lv =
        build_liouvillian(embed_hamiltonian(c.spec, c.H), all_ops(c));
    const DensityMatrix direct = steady_state(Lv);
    MatrixC vac = MatrixC::Zero(Lv.dim, Lv.dim);
    vac(0, 0) = 1.0;
    const DensityMatrix evolved =
        propagate(DensityMatrix{vac}, Lv, 250.0, 0.02);
    CHECK(testutil::max_abs_diff(direct.rho, evolved.rho) < 1e-6);
}

TEST_CASE("exit currents read gamma rho_rr") {
    const NetworkSpec spec = build_topology(1, 1, 2, false, 1.0);
    const auto drains = drain_operators(spec, 1.0);
    MatrixC r = MatrixC::Zero(5, 5);
    r(0, 0) = 0.7;
    r(3, 3) = 0.1;  // exit site 1
    r(4, 4) = 0.2;  // exit site 2
    const Eigen::VectorXd J = exit_currents(DensityMatrix{r}, drains);
    CHECK(J(0) == doctest::Approx(0.1).epsilon(1e-14));
    CHECK(J(1) == doctest::Approx(0.2).epsilon(1e-14));
    MatrixC empty_exits = MatrixC::Zero(5, 5);
    empty_exits(0, 0) = 1.0;
    const Eigen::VectorXd J0 =
        exit_currents(DensityMatrix{empty_exits}, drains);
    CHECK(J0.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("steady-state current balances the injection") {
    // 1-site: J = gamma gamma_in / (gamma_in + gamma)
    const DensityMatrix rho = steady_state(one_site_model(1.0, 1.0));
    MatrixC v_out = MatrixC::Zero(2, 2);
    v_out(0, 1) = 1.0;
    const Eigen::VectorXd J =
        exit_currents(rho, {{LindbladOp{v_out, 1.0}}});
    CHECK(J(0) == doctest::Approx(0.5).epsilon(1e-12));

    Prng rng(53);
    for (int trial = 0; trial < 8; ++trial) {
        const RandomCase c = random_case(rng, trial % 2 == 1);
        const SteadyStateEngine engine(c.spec, c.H, c.rates);
        const DensityMatrix rho_s = engine.solve(c.psi);
        const Eigen::VectorXd currents = engine.currents(c.psi);
        CHECK(std::abs(currents.sum() -
                       c.rates.gamma_in * rho_s.rho(0, 0).real()) < 1e-8);
        CHECK(currents.minCoeff() > -1e-12);
    }
}

TEST_CASE("the per-input engine reproduces the generic solve") {
    Prng rng(67);
    for (int trial = 0; trial < 8; ++trial) {
        const RandomCase c = random_case(rng, trial % 2 == 1);
        const SteadyStateEngine engine(c.spec, c.H, c.rates);
        const DensityMatrix fast = engine.solve(c.psi);
        const DensityMatrix generic = engine.solve_generic(c.psi);
        CHECK(testutil::max_abs_diff(fast.rho, generic.rho) < 1e-10);
        const Eigen::VectorXd J1 = engine.currents(c.psi);
        const Eigen::VectorXd J2 =
            exit_currents(generic, drain_operators(c.spec, c.rates.gamma));
        CHECK((J1 - J2).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("networks with more entries than hidden sites are degenerate") {
    // entry vectors orthogonal to every hidden coupling are dark
    const NetworkSpec spec = build_topology(10, 7, 3, false, 1.0);
    Prng rng(3);
    const Eigen::MatrixXd H =
        assemble_hamiltonian(spec, testutil::random_params(spec, rng));
    CHECK_THROWS_AS(SteadyStateEngine(spec, H, Rates{}),
                    DegenerateNetworkError);
}

TEST_CASE("strong dephasing kills steady-state site coherences") {
    const NetworkSpec spec = build_topology(2, 4, 2, false, 1.0);
    Prng rng(71);
    const Params p = testutil::random_params(spec, rng);
    const Eigen::MatrixXd H = assemble_hamiltonian(spec, p);
    const Eigen::VectorXd psi = random_real_state(2, rng);
    const double t_bar = mean_hopping(spec, p);

    auto site_offdiag_norm = [&](double Gamma) {
        Rates rates{1.0, 1.0, Gamma};
        const SteadyStateEngine engine(spec, H, rates);
        const MatrixC& rho = engine.solve(psi).rho;
        double acc = 0.0;
        for (int i = 1; i < spec.dim(); ++i)
            for (int j = 1; j < spec.dim(); ++j)
                if (i != j) acc += std::norm(rho(i, j));
        return std::sqrt(acc);
    };
    const double coherent = site_offdiag_norm(0.0);
    const double dephased = site_offdiag_norm(1e4 * t_bar);
    CHECK(dephased < 1e-3 * coherent);
}

TEST_CASE("density matrices export as re/im arrays") {
    const DensityMatrix rho = steady_state(one_site_model(1.0, 1.0));
    const json j = density_to_json(rho);
    CHECK(j.at("re").size() == 2);
    CHECK(j.at("im").size() == 2);
    CHECK(j.at("re")[1][1].get<double>() == doctest::Approx(0.5));
    CHECK(j.at("im")[0][0].get<double>() == 0.0);
}
