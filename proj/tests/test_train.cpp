// Copyright 2026 The QCN Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <limits>

#include "qcn/tasks.hpp"
#include "qcn/train.hpp"
#include "testutil.hpp"

using namespace qcn;

TEST_CASE("current_target_cost measures one-hot routing") {
    Eigen::Vector2d even(0.5, 0.5);
    CHECK(current_target_cost(even, 1) == doctest::Approx(0.5).epsilon(1e-14));
    Eigen::Vector2d perfect(0.37, 0.0);
    CHECK(current_target_cost(perfect, 1) == doctest::Approx(0.0));
    // invariant under uniform current rescaling
    Eigen::Vector3d J(0.2, 0.5, 0.1);
    CHECK(current_target_cost(J, 2) ==
          doctest::Approx(current_target_cost(Eigen::Vector3d(7.3 * J), 2))
              .epsilon(1e-14));
    Eigen::Vector2d dead(1e-16, 2e-16);
    CHECK_THROWS_AS(current_target_cost(dead, 1), DegenerateNetworkError);
}

TEST_CASE("smooth_cost is bounded and flags dead networks") {
    const NetworkSpec spec = build_topology(1, 1, 2, false, 1.0);
    const CostContext ctx{spec, Rates{}};
    TrainingSet ts;
    ts.items.push_back({Eigen::VectorXd::Ones(1), 1});

    Prng rng(5);
    for (int trial = 0; trial < 5; ++trial) {
        const double c = smooth_cost(testutil::random_params(spec, rng), ts, ctx);
        CHECK(c >= 0.0);
        CHECK(c <= 2.0 * ts.size());
    }
    // couplings of 1e-8 leave exit currents far below the threshold
    Params eps = Params::Constant(3, 1e-8);
    CHECK_THROWS_AS(smooth_cost(eps, ts, ctx), DegenerateNetworkError);
}

TEST_CASE("class_cost is the squared label distance of the argmax rule") {
    // hidden-exit couplings [b, c] with b >> c route everything to exit 1
    const NetworkSpec spec = build_topology(1, 1, 2, false, 1.0);
    const CostContext ctx{spec, Rates{}};
    Params p(3);
    p << 0.8, 0.9, 0.05;
    TrainingSet correct;
    correct.items.push_back({Eigen::VectorXd::Ones(1), 1});
    CHECK(class_cost(p, correct, ctx) == 0.0);
    TrainingSet wrong;
    wrong.items.push_back({Eigen::VectorXd::Ones(1), 2});
    CHECK(class_cost(p, wrong, ctx) == 1.0);

    const NetworkSpec spec3 = build_topology(1, 1, 3, false, 1.0);
    Params p3(4);
    p3 << 0.8, 0.9, 0.05, 0.02;
    TrainingSet wrong3;
    wrong3.items.push_back({Eigen::VectorXd::Ones(1), 3});
    CHECK(class_cost(p3, wrong3, CostContext{spec3, Rates{}}) == 4.0);
}

TEST_CASE("pso finds the sphere minimum deterministically") {
    auto sphere = [](const Params& x) { return x.squaredNorm(); };
    PsoConfig cfg;
    cfg.swarm_size = 30;
    cfg.iterations = 200;
    cfg.seed = 42;
    const Box box = symmetric_box(5, 1.0);
    const OptimResult a = pso_minimize(sphere, box, cfg);
    CHECK(a.value <= 1e-4);
    CHECK(a.best.cwiseAbs().maxCoeff() <= 1.0);
    REQUIRE(a.trace.size() == 200);
    for (std::size_t i = 1; i < a.trace.size(); ++i)
        CHECK(a.trace[i] <= a.trace[i - 1]);

    const OptimResult b = pso_minimize(sphere, box, cfg);
    CHECK(a.value == b.value);
    CHECK((a.best - b.best).cwiseAbs().maxCoeff() == 0.0);
    CHECK(a.trace == b.trace);
}

TEST_CASE("pso handles constant and partially degenerate costs") {
    PsoConfig cfg;
    cfg.swarm_size = 10;
    cfg.iterations = 20;
    cfg.seed = 7;
    const Box box = symmetric_box(3, 2.0);
    const OptimResult flat =
        pso_minimize([](const Params&) { return 4.25; }, box, cfg);
    CHECK(flat.value == 4.25);

    // half the box raises the degenerate-network error; PSO continues
    auto partial = [](const Params& x) -> double {
        if (x(0) < 0.0)
            throw DegenerateNetworkError("no current");
        return (x - Params::Constant(3, 0.5)).squaredNorm();
    };
    const OptimResult r = pso_minimize(partial, box, cfg);
    CHECK(std::isfinite(r.value));
    CHECK(r.value < 0.5);
}

TEST_CASE("pso validates its configuration") {
    auto sphere = [](const Params& x) { return x.squaredNorm(); };
    const Box box = symmetric_box(2, 1.0);
    PsoConfig bad_swarm;
    bad_swarm.swarm_size = 1;
    CHECK_THROWS_AS(pso_minimize(sphere, box, bad_swarm), InvalidArgument);
    PsoConfig bad_inertia;
    bad_inertia.inertia = 1.5;
    CHECK_THROWS_AS(pso_minimize(sphere, box, bad_inertia), InvalidArgument);
    Box empty;
    CHECK_THROWS_AS(pso_minimize(sphere, empty, PsoConfig{}), InvalidArgument);
    Box inf_box = symmetric_box(2, 1.0);
    inf_box.upper(0) = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(pso_minimize(sphere, inf_box, PsoConfig{}), InvalidArgument);
}

TEST_CASE("fd_gradient matches analytic gradients") {
    auto sphere = [](const Params& x) { return x.squaredNorm(); };
    Params x(3);
    x << 0.3, -0.7, 0.2;
    const Eigen::VectorXd g = fd_gradient(sphere, x, 1e-5);
    CHECK((g - 2.0 * x).cwiseAbs().maxCoeff() < 1e-9);
    const Eigen::VectorXd zero =
        fd_gradient([](const Params&) { return 1.0; }, x, 1e-5);
    CHECK(zero.cwiseAbs().maxCoeff() == 0.0);
    CHECK_THROWS_AS(fd_gradient(sphere, x, 0.0), InvalidArgument);
}

TEST_CASE("fd_gradient of smooth_cost is Richardson-consistent") {
    const NetworkSpec spec = build_topology(2, 2, 2, false, 1.0);
    const CostContext ctx{spec, Rates{}};
    Prng rng(19);
    TrainingSet ts;
    ts.items.push_back({random_real_state(2, rng), 1});
    ts.items.push_back({random_real_state(2, rng), 2});
    auto cost = [&](const Params& p) { return smooth_cost(p, ts, ctx); };
    for (int trial = 0; trial < 3; ++trial) {
        const Params p = testutil::random_params(spec, rng, 0.9);
        const double h = 1e-3;
        const Eigen::VectorXd gh = fd_gradient(cost, p, h);
        const Eigen::VectorXd gh2 = fd_gradient(cost, p, h / 2);
        const Eigen::VectorXd richardson = (4.0 * gh2 - gh) / 3.0;
        CHECK((gh2 - richardson).norm() <= 1e-4 * richardson.norm() + 1e-12);
    }
}

TEST_CASE("gradient descent always returns the best visited point") {
    auto sphere = [](const Params& x) { return x.squaredNorm(); };
    GdConfig cfg;
    cfg.learning_rate = 0.2;
    cfg.iterations = 100;
    cfg.fd_step = 1e-6;
    Params start(2);
    start << 1.0, 1.0;
    const OptimResult r = gradient_descent(sphere, start, cfg);
    CHECK(r.value <= 1e-6);

    Params at_min = Params::Zero(2);
    const OptimResult stay = gradient_descent(sphere, at_min, cfg);
    CHECK(stay.value == 0.0);
    CHECK((stay.best - at_min).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("gradient descent never increases smooth_cost") {
    const NetworkSpec spec = build_topology(1, 1, 2, false, 1.0);
    const CostContext ctx{spec, Rates{}};
    TrainingSet ts;
    Eigen::VectorXd one = Eigen::VectorXd::Ones(1);
    ts.items.push_back({one, 1});
    auto cost = [&](const Params& p) { return smooth_cost(p, ts, ctx); };
    GdConfig cfg;
    cfg.iterations = 10;
    Prng rng(29);
    for (int trial = 0; trial < 20; ++trial) {
        const Params start = testutil::random_params(spec, rng, 0.9);
        double f0;
        try {
            f0 = cost(start);
        } catch (const DegenerateNetworkError&) {
            continue;
        }
        const OptimResult r = gradient_descent(cost, start, cfg);
        CHECK(r.value <= f0);
    }
}

TEST_CASE("train_network solves the fixed two-state task") {
    const NetworkSpec spec = build_topology(2, 4, 2, false, 1.0);
    const OverlapTask task = two_state_task(0.3);
    const TrainingSet ts = to_training_set(task);
    PsoConfig pso;
    pso.swarm_size = 30;
    pso.iterations = 80;
    pso.seed = 11;
    GdConfig gd;
    gd.iterations = 40;
    const TrainedModel model = train_network(spec, ts, pso, gd, Rates{});
    CHECK(model.train_class_cost == 0.0);
    CHECK(model.train_accuracy == 1.0);
    CHECK(class_cost(model.params, ts, CostContext{spec, model.rates}) == 0.0);
    REQUIRE(!model.train_cost_trace.empty());
    for (std::size_t i = 1; i < model.train_cost_trace.size(); ++i)
        CHECK(model.train_cost_trace[i] <= model.train_cost_trace[i - 1]);
    CHECK(model.final_cost == model.train_cost_trace.back());
}

TEST_CASE("a single training vector is trivially classified") {
    const NetworkSpec spec = build_topology(1, 1, 2, false, 1.0);
    TrainingSet ts;
    ts.items.push_back({Eigen::VectorXd::Ones(1), 2});
    PsoConfig pso;
    pso.swarm_size = 16;
    pso.iterations = 40;
    pso.seed = 3;
    GdConfig gd;
    gd.iterations = 10;
    const TrainedModel model = train_network(spec, ts, pso, gd, Rates{});
    CHECK(model.train_class_cost == 0.0);
}

TEST_CASE("training is a pure function of its seed") {
    const NetworkSpec spec = build_topology(2, 2, 2, false, 1.0);
    const TrainingSet ts = to_training_set(two_state_task(0.3));
    PsoConfig pso;
    pso.swarm_size = 12;
    pso.iterations = 25;
    pso.seed = 99;
    GdConfig gd;
    gd.iterations = 5;
    const TrainedModel a = train_network(spec, ts, pso, gd, Rates{});
    const TrainedModel b = train_network(spec, ts, pso, gd, Rates{});
    CHECK((a.params - b.params).cwiseAbs().maxCoeff() == 0.0);
    CHECK(a.train_cost_trace == b.train_cost_trace);
    CHECK(a.final_cost == b.final_cost);
}

TEST_CASE("validation costs are traced per epoch when requested") {
    const NetworkSpec spec = build_topology(2, 2, 2, false, 1.0);
    const TrainingSet ts = to_training_set(two_state_task(0.3));
    TrainingSet val = to_training_set(two_state_task(0.4));
    PsoConfig pso;
    pso.swarm_size = 8;
    pso.iterations = 10;
    pso.seed = 5;
    GdConfig gd;
    gd.iterations = 3;
    const TrainedModel model = train_network(spec, ts, pso, gd, Rates{}, &val);
    CHECK(model.val_cost_trace.size() == model.train_cost_trace.size());
}

TEST_CASE("training aborts cleanly when every network is degenerate") {
    // more entries than hidden sites: dark states for every parameter
    const NetworkSpec spec = build_topology(4, 2, 2, false, 1.0);
    TrainingSet ts;
    Prng rng(1);
    ts.items.push_back({random_real_state(4, rng), 1});
    PsoConfig pso;
    pso.swarm_size = 4;
    pso.iterations = 1;
    pso.seed = 1;
    GdConfig gd;
    gd.iterations = 1;
    CHECK_THROWS_AS(train_network(spec, ts, pso, gd, Rates{}), TrainingError);
}

TEST_CASE("training-set validation catches bad labels and norms") {
    TrainingSet ts;
    ts.items.push_back({Eigen::VectorXd::Ones(1), 3});
    CHECK_THROWS_AS(validate_training_set(ts, 2), InvalidArgument);
    TrainingSet empty;
    CHECK_THROWS_AS(validate_training_set(empty, 2), InvalidArgument);
    TrainingSet unnorm;
    unnorm.items.push_back({Eigen::VectorXd::Constant(2, 1.0), 1});
    CHECK_THROWS_AS(validate_training_set(unnorm, 2), InvalidArgument);
}
