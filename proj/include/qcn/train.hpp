// Copyright 2026 The QCN Authors
// SPDX-License-Identifier: Apache-2.0

//
// Network training: cost functions over hopping parameters, bounded
// particle-swarm search, finite-difference gradient refinement, and
// the end-to-end train_network() loop.
//

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "qcn/dataset.hpp"
#include "qcn/errors.hpp"
#include "qcn/lindblad.hpp"
#include "qcn/network.hpp"
#include "qcn/parallel.hpp"
#include "qcn/rng.hpp"

namespace qcn {

struct CostContext {
    NetworkSpec spec;
    Rates rates;
};

/// Residual of the normalized exit currents against the one-hot target
/// of `label`: sum_i (J_i / sum_j J_j - delta_{i,label})^2.
inline double current_target_cost(const Eigen::VectorXd& J, int label) {
    const double total = J.sum();
    if (!(total > 1e-14))
        throw DegenerateNetworkError(
            "total exit current below 1e-14; network routes no current");
    double cost = 0.0;
    for (int i = 0; i < J.size(); ++i) {
        const double target = (i + 1 == label) ? 1.0 : 0.0;
        const double d = J(i) / total - target;
        cost += d * d;
    }
    return cost;
}

/// Smooth training objective: normalized currents against one-hot
/// targets, summed over the training set. Zero iff every item routes
/// all current to its labeled exit node.
inline double smooth_cost(const Params& params, const TrainingSet& ts,
                          const CostContext& ctx) {
    validate_training_set(ts, ctx.spec.n_out);
    const SteadyStateEngine engine(
        ctx.spec, assemble_hamiltonian(ctx.spec, params), ctx.rates);
    double cost = 0.0;
    for (const auto& item : ts.items)
        cost += current_target_cost(engine.currents(item.psi), item.label);
    return cost;
}

/// Discrete objective: sum of squared label differences under the
/// max-current class rule. Zero iff every item is classified correctly.
inline double class_cost(const Params& params, const TrainingSet& ts,
                         const CostContext& ctx) {
    validate_training_set(ts, ctx.spec.n_out);
    const SteadyStateEngine engine(
        ctx.spec, assemble_hamiltonian(ctx.spec, params), ctx.rates);
    double cost = 0.0;
    for (const auto& item : ts.items) {
        const Eigen::VectorXd J = engine.currents(item.psi);
        if (!(J.sum() > 1e-14))
            throw DegenerateNetworkError(
                "total exit current below 1e-14; network routes no current");
        const int predicted = argmax_lowest(J) + 1;
        const double d = predicted - item.label;
        cost += d * d;
    }
    return cost;
}

// ---------------------------------------------------------------------------
// Particle-swarm optimization
// ---------------------------------------------------------------------------

struct PsoConfig {
    int swarm_size = 50;
    int iterations = 300;
    double inertia = 0.729;      // constriction-style defaults
    double cognitive = 1.49445;  // c1
    double social = 1.49445;     // c2
    std::uint64_t seed = 0;
};

struct Box {
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;
};

inline Box symmetric_box(int dim, double bound) {
    return Box{Eigen::VectorXd::Constant(dim, -bound),
               Eigen::VectorXd::Constant(dim, bound)};
}

struct OptimResult {
    Params best;
    double value = std::numeric_limits<double>::infinity();
    std::vector<double> trace;  // best-so-far per iteration
};

using CostFunction = std::function<double(const Params&)>;
using IterationObserver =
    std::function<void(int iteration, const Params& best, double value)>;

/// Global-best PSO over a finite box. Positions are clamped to the
/// box, velocities capped at half the box width. Each particle owns an
/// RNG stream derived from the seed, so runs are reproducible and
/// independent of how cost evaluations are scheduled. A particle whose
/// evaluation raises DegenerateNetworkError gets +inf fitness and the
/// search continues.
inline OptimResult pso_minimize(const CostFunction& cost, const Box& bounds,
                                const PsoConfig& cfg,
                                const IterationObserver& on_iteration = {}) {
    const int dim = static_cast<int>(bounds.lower.size());
    if (dim == 0 || bounds.upper.size() != dim)
        throw InvalidArgument("pso_minimize: malformed bounds");
    for (int d = 0; d < dim; ++d) {
        if (!std::isfinite(bounds.lower(d)) || !std::isfinite(bounds.upper(d)))
            throw InvalidArgument("pso_minimize: bounds must be finite");
        if (!(bounds.lower(d) < bounds.upper(d)))
            throw InvalidArgument("pso_minimize: lower >= upper");
    }
    if (cfg.swarm_size < 2)
        throw InvalidArgument("pso_minimize: swarm_size must be >= 2");
    if (!(cfg.inertia > 0.0 && cfg.inertia < 1.0))
        throw InvalidArgument("pso_minimize: inertia must be in (0, 1)");
    if (cfg.iterations < 0)
        throw InvalidArgument("pso_minimize: iterations must be >= 0");

    const Eigen::VectorXd vmax = 0.5 * (bounds.upper - bounds.lower);
    const int S = cfg.swarm_size;

    std::vector<Prng> rng;
    rng.reserve(S);
    for (int p = 0; p < S; ++p) rng.emplace_back(derive_seed(cfg.seed, p));

    std::vector<Eigen::VectorXd> x(S), v(S), pbest(S);
    std::vector<double> fx(S), pbest_val(S);
    for (int p = 0; p < S; ++p) {
        x[p].resize(dim);
        v[p].resize(dim);
        for (int d = 0; d < dim; ++d) {
            x[p](d) = rng[p].uniform(bounds.lower(d), bounds.upper(d));
            v[p](d) = rng[p].uniform(-vmax(d), vmax(d));
        }
    }

    auto evaluate = [&](const Eigen::VectorXd& pos) {
        try {
            return cost(pos);
        } catch (const DegenerateNetworkError&) {
            return std::numeric_limits<double>::infinity();
        }
    };
    auto evaluate_all = [&] {
        parallel_for(S, [&](int p) { fx[p] = evaluate(x[p]); });
    };

    evaluate_all();
    for (int p = 0; p < S; ++p) {
        pbest[p] = x[p];
        pbest_val[p] = fx[p];
    }
    OptimResult result;
    result.best = x[0];
    for (int p = 0; p < S; ++p)
        if (fx[p] < result.value) {
            result.value = fx[p];
            result.best = x[p];
        }

    for (int it = 1; it <= cfg.iterations; ++it) {
        for (int p = 0; p < S; ++p) {
            for (int d = 0; d < dim; ++d) {
                const double r1 = rng[p].uniform();
                const double r2 = rng[p].uniform();
                v[p](d) = cfg.inertia * v[p](d) +
                          cfg.cognitive * r1 * (pbest[p](d) - x[p](d)) +
                          cfg.social * r2 * (result.best(d) - x[p](d));
                if (v[p](d) > vmax(d)) v[p](d) = vmax(d);
                if (v[p](d) < -vmax(d)) v[p](d) = -vmax(d);
                x[p](d) += v[p](d);
                if (x[p](d) < bounds.lower(d)) x[p](d) = bounds.lower(d);
                if (x[p](d) > bounds.upper(d)) x[p](d) = bounds.upper(d);
            }
        }
        evaluate_all();
        for (int p = 0; p < S; ++p) {
            if (fx[p] < pbest_val[p]) {
                pbest_val[p] = fx[p];
                pbest[p] = x[p];
            }
            if (fx[p] < result.value) {
                result.value = fx[p];
                result.best = x[p];
            }
        }
        result.trace.push_back(result.value);
        if (on_iteration) on_iteration(it, result.best, result.value);
    }
    return result;
}

// ---------------------------------------------------------------------------
// Finite-difference gradient descent
// ---------------------------------------------------------------------------

/// Central differences (cost(p + h e_k) - cost(p - h e_k)) / 2h.
inline Eigen::VectorXd fd_gradient(const CostFunction& cost, const Params& p,
                                   double h) {
    if (!(h > 0.0)) throw InvalidArgument("fd_gradient: h must be > 0");
    const int dim = static_cast<int>(p.size());
    Eigen::VectorXd grad(dim);
    parallel_for(dim, [&](int k) {
        Params plus = p, minus = p;
        plus(k) += h;
        minus(k) -= h;
        grad(k) = (cost(plus) - cost(minus)) / (2.0 * h);
    });
    return grad;
}

struct GdConfig {
    double learning_rate = 0.05;
    int iterations = 200;
    double fd_step = 1e-4;
};

/// Steepest descent with backtracking: the step is halved until the
/// cost decreases, and the best visited point is returned, so the
/// final value never exceeds the starting value.
inline OptimResult gradient_descent(const CostFunction& cost,
                                    const Params& start, const GdConfig& cfg,
                                    const IterationObserver& on_iteration = {}) {
    if (!(cfg.learning_rate > 0.0))
        throw InvalidArgument("gradient_descent: learning rate must be > 0");
    auto safe_cost = [&](const Params& p) {
        try {
            return cost(p);
        } catch (const DegenerateNetworkError&) {
            return std::numeric_limits<double>::infinity();
        }
    };

    OptimResult result;
    result.best = start;
    result.value = safe_cost(start);

    Params p = start;
    double fp = result.value;
    for (int it = 1; it <= cfg.iterations; ++it) {
        if (!std::isfinite(fp)) break;
        const Eigen::VectorXd g = fd_gradient(safe_cost, p, cfg.fd_step);
        if (!g.allFinite() || g.norm() == 0.0) break;
        double step = cfg.learning_rate;
        bool improved = false;
        for (int halvings = 0; halvings < 40; ++halvings) {
            const Params candidate = p - step * g;
            const double fc = safe_cost(candidate);
            if (fc < fp) {
                p = candidate;
                fp = fc;
                improved = true;
                break;
            }
            step *= 0.5;
        }
        if (!improved) break;
        if (fp < result.value) {
            result.value = fp;
            result.best = p;
        }
        result.trace.push_back(result.value);
        if (on_iteration) on_iteration(it, result.best, result.value);
    }
    return result;
}

// ---------------------------------------------------------------------------
// End-to-end training
// ---------------------------------------------------------------------------

struct TrainedModel {
    NetworkSpec spec;
    Params params;
    Rates rates;
    std::vector<double> train_cost_trace;  // best-so-far smooth cost per epoch
    std::vector<double> val_cost_trace;    // empty when no validation set
    double final_cost = 0.0;
    double train_class_cost = 0.0;
    double train_accuracy = 0.0;
};

inline SteadyStateEngine make_engine(const TrainedModel& model) {
    return SteadyStateEngine(
        model.spec, assemble_hamiltonian(model.spec, model.params),
        model.rates);
}

namespace detail {
inline std::string params_json_string(const Params& p) {
    std::ostringstream os;
    os.precision(17);
    os << "[";
    for (int i = 0; i < p.size(); ++i) os << (i ? "," : "") << p(i);
    os << "]";
    return os.str();
}
}  // namespace detail

/// Global PSO search on the smooth cost followed by gradient-descent
/// refinement. One PSO iteration is one epoch; gradient-descent
/// iterations are appended to the trace. When a validation set is
/// supplied its cost is recorded at every epoch alongside the
/// training cost.
inline TrainedModel train_network(const NetworkSpec& spec,
                                  const TrainingSet& ts,
                                  const PsoConfig& pso_cfg,
                                  const GdConfig& gd_cfg, const Rates& rates,
                                  const TrainingSet* validation = nullptr) {
    validate_training_set(ts, spec.n_out);
    if (validation) validate_training_set(*validation, spec.n_out);
    const CostContext ctx{spec, rates};

    auto cost = [&ctx, &ts](const Params& p) {
        try {
            return smooth_cost(p, ts, ctx);
        } catch (const DegenerateNetworkError&) {
            throw;
        } catch (const SolverError& e) {
            throw TrainingError(
                std::string("steady-state solve failed during training: ") +
                    e.what(),
                detail::params_json_string(p));
        }
    };
    const Box bounds = symmetric_box(spec.param_count(), spec.param_bound);
    auto val_cost = [&](const Params& p) {
        // gradient-descent iterates may sit outside the box; evaluate
        // their clamped image, which is what the model would use
        const Params q = p.cwiseMax(bounds.lower).cwiseMin(bounds.upper);
        try {
            return smooth_cost(q, *validation, ctx);
        } catch (const DegenerateNetworkError&) {
            return std::numeric_limits<double>::infinity();
        }
    };

    TrainedModel model;
    model.spec = spec;
    model.rates = rates;

    auto observer = [&](int, const Params& best, double value) {
        model.train_cost_trace.push_back(value);
        if (validation) model.val_cost_trace.push_back(val_cost(best));
    };

    const OptimResult swarm = pso_minimize(cost, bounds, pso_cfg, observer);
    if (!std::isfinite(swarm.value))
        throw TrainingError(
            "training failed: every parameter vector evaluated was degenerate",
            detail::params_json_string(swarm.best));

    auto clamped_cost = [&](const Params& p) {
        Params q = p.cwiseMax(bounds.lower).cwiseMin(bounds.upper);
        return cost(q);
    };
    const OptimResult refined =
        gradient_descent(clamped_cost, swarm.best, gd_cfg, observer);

    model.params =
        refined.best.cwiseMax(bounds.lower).cwiseMin(bounds.upper);
    model.final_cost = refined.value;

    const SteadyStateEngine engine(
        spec, assemble_hamiltonian(spec, model.params), rates);
    int correct = 0;
    double ccost = 0.0;
    for (const auto& item : ts.items) {
        const Eigen::VectorXd J = engine.currents(item.psi);
        const int predicted = argmax_lowest(J) + 1;
        if (predicted == item.label) ++correct;
        ccost += static_cast<double>((predicted - item.label) *
                                     (predicted - item.label));
    }
    model.train_class_cost = ccost;
    model.train_accuracy = static_cast<double>(correct) / ts.size();
    return model;
}

}  // namespace qcn
