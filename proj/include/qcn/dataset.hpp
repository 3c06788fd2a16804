// Copyright 2026 The QCN Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <string>
#include <vector>

#include "qcn/errors.hpp"

namespace qcn {

/// A normalized input vector with its 1-based class label.
struct LabeledState {
    Eigen::VectorXd psi;
    int label = 0;
};

struct TrainingSet {
    std::vector<LabeledState> items;

    bool empty() const { return items.empty(); }
    int size() const { return static_cast<int>(items.size()); }
};

inline void validate_training_set(const TrainingSet& ts, int n_classes) {
    if (ts.empty()) throw InvalidArgument("training set is empty");
    for (std::size_t n = 0; n < ts.items.size(); ++n) {
        const auto& item = ts.items[n];
        if (item.label < 1 || item.label > n_classes)
            throw InvalidArgument("training item " + std::to_string(n) +
                                  ": label " + std::to_string(item.label) +
                                  " outside 1.." + std::to_string(n_classes));
        if (std::abs(item.psi.norm() - 1.0) > 1e-10)
            throw InvalidArgument("training item " + std::to_string(n) +
                                  ": state is not normalized");
    }
}

/// Index of the maximal entry; exact ties resolve to the lowest index.
inline int argmax_lowest(const Eigen::VectorXd& v) {
    if (v.size() == 0) throw InvalidArgument("argmax_lowest: empty vector");
    int best = 0;
    for (int i = 1; i < v.size(); ++i)
        if (v(i) > v(best)) best = i;
    return best;
}

}  // namespace qcn
