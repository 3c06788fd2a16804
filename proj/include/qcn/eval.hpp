// Copyright 2026 The QCN Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <optional>
#include <vector>

#include "qcn/dataset.hpp"
#include "qcn/errors.hpp"
#include "qcn/lindblad.hpp"
#include "qcn/parallel.hpp"
#include "qcn/tasks.hpp"
#include "qcn/train.hpp"

namespace qcn {

/// Class of an input: the exit node carrying maximal steady-state
/// current. Exact ties resolve to the lowest class index. 1-based.
inline int classify(const SteadyStateEngine& engine,
                    const Eigen::VectorXd& psi) {
    return argmax_lowest(engine.currents(psi)) + 1;
}

inline int classify(const TrainedModel& model, const Eigen::VectorXd& psi) {
    return classify(make_engine(model), psi);
}

// ---------------------------------------------------------------------------
// Confusion matrix and derived metrics
// ---------------------------------------------------------------------------

/// counts(t, p): items of true class t+1 predicted as class p+1.
struct ConfusionMatrix {
    Eigen::MatrixXi counts;

    int classes() const { return static_cast<int>(counts.rows()); }
    int total() const { return counts.sum(); }
};

inline ConfusionMatrix confusion(const SteadyStateEngine& engine,
                                 const std::vector<LabeledState>& validation) {
    const int n_c = engine.spec().n_out;
    ConfusionMatrix cm{Eigen::MatrixXi::Zero(n_c, n_c)};
    const int n = static_cast<int>(validation.size());
    std::vector<int> predicted(n);
    parallel_for(n, [&](int i) {
        if (validation[i].label < 1 || validation[i].label > n_c)
            throw InvalidArgument("confusion: label outside 1..N_c");
        predicted[i] = classify(engine, validation[i].psi);
    });
    for (int i = 0; i < n; ++i)
        cm.counts(validation[i].label - 1, predicted[i] - 1) += 1;
    return cm;
}

inline ConfusionMatrix confusion(const TrainedModel& model,
                                 const std::vector<LabeledState>& validation) {
    return confusion(make_engine(model), validation);
}

struct ClassMetrics {
    std::optional<double> precision;  // empty when no item was predicted c
    std::optional<double> recall;     // empty when no item has true class c
};

struct PrecisionRecall {
    std::vector<ClassMetrics> per_class;
    std::optional<double> macro_precision;  // mean over defined classes
    std::optional<double> macro_recall;
};

inline PrecisionRecall precision_recall(const ConfusionMatrix& cm) {
    const int n_c = cm.classes();
    PrecisionRecall pr;
    pr.per_class.resize(n_c);
    double p_sum = 0.0, r_sum = 0.0;
    int p_defined = 0, r_defined = 0;
    for (int c = 0; c < n_c; ++c) {
        const int col = cm.counts.col(c).sum();
        const int row = cm.counts.row(c).sum();
        if (col > 0) {
            pr.per_class[c].precision = static_cast<double>(cm.counts(c, c)) / col;
            p_sum += *pr.per_class[c].precision;
            ++p_defined;
        }
        if (row > 0) {
            pr.per_class[c].recall = static_cast<double>(cm.counts(c, c)) / row;
            r_sum += *pr.per_class[c].recall;
            ++r_defined;
        }
    }
    if (p_defined > 0) pr.macro_precision = p_sum / p_defined;
    if (r_defined > 0) pr.macro_recall = r_sum / r_defined;
    return pr;
}

inline double accuracy(const ConfusionMatrix& cm) {
    const int total = cm.total();
    if (total == 0) throw InvalidArgument("accuracy: empty confusion matrix");
    return static_cast<double>(cm.counts.trace()) / total;
}

// ---------------------------------------------------------------------------
// Two-class balance diagnostics
// ---------------------------------------------------------------------------

/// Normalized two-class contrasts: eta~ = (eta_1 - eta_2)/(eta_1 + eta_2)
/// from the group overlaps and J~ = (J_1 - J_2)/(J_1 + J_2) from the
/// steady-state exit currents. Perfect classification puts every input
/// in the quadrants where both share a sign.
struct BalancePoint {
    double eta_tilde = 0.0;
    double j_tilde = 0.0;
};

inline BalancePoint balances(const SteadyStateEngine& engine,
                             const OverlapTask& task,
                             const Eigen::VectorXd& psi) {
    if (task.group_count() != 2)
        throw InvalidArgument("balances: defined for G = 2 tasks only");
    const double eta1 = group_overlap(task, 0, psi);
    const double eta2 = group_overlap(task, 1, psi);
    if (!(eta1 + eta2 > 0.0))
        throw InvalidArgument(
            "balances: psi has zero overlap with both groups");
    const Eigen::VectorXd J = engine.currents(psi);
    const double jsum = J(0) + J(1);
    if (!(std::abs(jsum) > 0.0))
        throw DegenerateNetworkError("balances: zero total exit current");
    return BalancePoint{(eta1 - eta2) / (eta1 + eta2), (J(0) - J(1)) / jsum};
}

inline BalancePoint balances(const TrainedModel& model, const OverlapTask& task,
                             const Eigen::VectorXd& psi) {
    return balances(make_engine(model), task, psi);
}

}  // namespace qcn
