// Copyright 2026 The QCN Authors
// SPDX-License-Identifier: Apache-2.0

//
// Labeled-data generators for the three classification tasks: group
// overlap, localization (inverse participation ratio), and chemical
// substrate descriptors ingested from CSV.
//

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "qcn/dataset.hpp"
#include "qcn/errors.hpp"
#include "qcn/rng.hpp"

namespace qcn {

/// Uniform draw from the real unit sphere S^{L-1}.
inline Eigen::VectorXd random_real_state(int L, Prng& rng) {
    if (L < 1) throw InvalidArgument("random_real_state: L must be >= 1");
    Eigen::VectorXd psi(L);
    double norm = 0.0;
    do {
        for (int i = 0; i < L; ++i) psi(i) = rng.normal();
        norm = psi.norm();
    } while (norm < 1e-12);
    return psi / norm;
}

// ---------------------------------------------------------------------------
// Group-overlap task
// ---------------------------------------------------------------------------

struct OverlapTask {
    int L = 0;
    std::vector<std::vector<Eigen::VectorXd>> groups;  // label = index + 1

    int group_count() const { return static_cast<int>(groups.size()); }
};

/// Two single-vector groups, phi_1 = (cos x, sin x) and the swapped
/// phi_2 = (sin x, cos x).
inline OverlapTask two_state_task(double x) {
    OverlapTask task;
    task.L = 2;
    task.groups = {{Eigen::Vector2d(std::cos(x), std::sin(x))},
                   {Eigen::Vector2d(std::sin(x), std::cos(x))}};
    return task;
}

/// G groups of N_G random unit vectors. For L = 2 the vectors are
/// (cos x, sin x) with x uniform over the group's arc of [0, pi/2]
/// (group g covers [(g-1), g) * pi/2G), so group labels agree with the
/// overlap rule; groups drawn from one shared distribution would carry
/// ~50% label noise and admit no accurate classifier. For L > 2 the
/// groups are uniform sphere draws.
inline OverlapTask random_overlap_task(int L, int G, int N_G,
                                       std::uint64_t seed) {
    if (L < 1 || G < 2 || N_G < 1)
        throw InvalidArgument("random_overlap_task: need L >= 1, G >= 2, "
                              "N_G >= 1");
    Prng rng(seed);
    OverlapTask task;
    task.L = L;
    task.groups.resize(G);
    const double arc = 1.57079632679489662 / G;
    for (int g = 0; g < G; ++g) {
        task.groups[g].reserve(N_G);
        for (int n = 0; n < N_G; ++n) {
            if (L == 2) {
                const double x = rng.uniform(g * arc, (g + 1) * arc);
                task.groups[g].emplace_back(
                    Eigen::Vector2d(std::cos(x), std::sin(x)));
            } else {
                task.groups[g].push_back(random_real_state(L, rng));
            }
        }
    }
    return task;
}

/// Mean squared overlap of psi with group g (0-based).
inline double group_overlap(const OverlapTask& task, int g,
                            const Eigen::VectorXd& psi) {
    const auto& group = task.groups.at(g);
    double eta = 0.0;
    for (const auto& phi : group) {
        const double ov = phi.dot(psi);
        eta += ov * ov;
    }
    return eta / static_cast<double>(group.size());
}

/// Ground-truth class: the group of maximal mean squared overlap,
/// ties broken to the lowest index. Returns a 1-based label.
inline int overlap_label(const Eigen::VectorXd& psi, const OverlapTask& task) {
    if (psi.size() != task.L)
        throw InvalidArgument("overlap_label: psi length mismatch");
    if (std::abs(psi.norm() - 1.0) > 1e-10)
        throw InvalidArgument("overlap_label: psi is not normalized");
    int best = 0;
    double best_eta = group_overlap(task, 0, psi);
    for (int g = 1; g < task.group_count(); ++g) {
        const double eta = group_overlap(task, g, psi);
        if (eta > best_eta) {
            best_eta = eta;
            best = g;
        }
    }
    return best + 1;
}

inline TrainingSet to_training_set(const OverlapTask& task) {
    TrainingSet ts;
    for (int g = 0; g < task.group_count(); ++g)
        for (const auto& phi : task.groups[g])
            ts.items.push_back(LabeledState{phi, g + 1});
    return ts;
}

// ---------------------------------------------------------------------------
// Localization task
// ---------------------------------------------------------------------------

/// Inverse participation ratio (sum_i |psi_i|^4)^{-1}; 1 for a basis
/// vector, L for the uniform state.
inline double ipr(const Eigen::VectorXd& psi) {
    if (std::abs(psi.norm() - 1.0) > 1e-10)
        throw InvalidArgument("ipr: psi is not normalized");
    double p4 = 0.0;
    for (int i = 0; i < psi.size(); ++i) p4 += psi(i) * psi(i) * psi(i) * psi(i);
    return 1.0 / p4;
}

struct IprTask {
    double lo = 2.0;  // class 1: ipr < lo (localized)
    double hi = 3.0;  // class 2: ipr > hi (extended)
    TrainingSet items;
};

/// Balanced localized/extended training set with the band [lo, hi]
/// excluded. Uniform sphere draws are tried first; if localized states
/// are too rare, proposals of a basis vector plus small Gaussian noise
/// fill the remainder. With nonnegative = true the states are folded
/// into the positive orthant (|psi_i|), which leaves the IPR unchanged.
inline IprTask gen_ipr_task(int L, int n_items, double lo, double hi,
                            std::uint64_t seed, bool nonnegative = false) {
    if (L < 2) throw InvalidArgument("gen_ipr_task: L must be >= 2");
    if (n_items < 2 || n_items % 2 != 0)
        throw InvalidArgument("gen_ipr_task: n_items must be even and >= 2");
    if (!(lo < hi)) throw InvalidArgument("gen_ipr_task: need lo < hi");

    Prng rng(seed);
    IprTask task{lo, hi, {}};
    int need_localized = n_items / 2;
    int need_extended = n_items / 2;

    const int uniform_budget = 2000 * n_items;
    for (int attempt = 0;
         attempt < uniform_budget && (need_localized > 0 || need_extended > 0);
         ++attempt) {
        Eigen::VectorXd psi = random_real_state(L, rng);
        if (nonnegative) psi = psi.cwiseAbs();
        const double I = ipr(psi);
        if (I < lo && need_localized > 0) {
            task.items.items.push_back(LabeledState{std::move(psi), 1});
            --need_localized;
        } else if (I > hi && need_extended > 0) {
            task.items.items.push_back(LabeledState{std::move(psi), 2});
            --need_extended;
        }
    }
    // localized proposals: concentrated on a random basis direction
    const int proposal_budget = 20000;
    for (int attempt = 0; attempt < proposal_budget && need_localized > 0;
         ++attempt) {
        const int k = static_cast<int>(rng.below(static_cast<std::uint64_t>(L)));
        const double sigma = rng.uniform(0.02, 0.4);
        Eigen::VectorXd psi(L);
        for (int i = 0; i < L; ++i) psi(i) = sigma * rng.normal();
        psi(k) += 1.0;
        psi.normalize();
        if (nonnegative) psi = psi.cwiseAbs();
        const double I = ipr(psi);
        if (I < lo) {
            task.items.items.push_back(LabeledState{std::move(psi), 1});
            --need_localized;
        }
    }
    if (need_localized > 0 || need_extended > 0)
        throw DataError(
            "gen_ipr_task: sampling budget exhausted before the task was "
            "balanced; widen the thresholds or reduce n_items");
    return task;
}

// ---------------------------------------------------------------------------
// Chemical substrate data
// ---------------------------------------------------------------------------

struct SubstrateRow {
    std::string id;
    Eigen::VectorXd descriptors;
    int label = 0;  // 1 = SIPr+BA, 2 = SIPr, 3 = TAC
};

struct SubstrateTable {
    std::vector<SubstrateRow> rows;

    int descriptor_count() const {
        return rows.empty() ? 0 : static_cast<int>(rows[0].descriptors.size());
    }
};

namespace detail {
inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) {
        const auto first = field.find_first_not_of(" \t\r");
        const auto last = field.find_last_not_of(" \t\r");
        fields.push_back(first == std::string::npos
                             ? std::string()
                             : field.substr(first, last - first + 1));
    }
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}
}  // namespace detail

/// Reads the substrate CSV (header: id, d1..dK, label; labels 1..3).
/// Lines starting with '#' are metadata comments. Malformed rows are
/// reported with their line numbers.
inline SubstrateTable load_substrates(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("load_substrates: cannot open " + path.string());
    std::string line;
    int line_no = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r" || line[0] == '#') continue;
        have_header = true;
        break;
    }
    if (!have_header)
        throw DataError("load_substrates: " + path.string() + " is empty");
    const auto header = detail::split_csv_line(line);
    if (header.size() < 3 || header.front() != "id" || header.back() != "label")
        throw DataError(
            "load_substrates: header must be 'id,d1,...,dK,label', got '" +
            line + "'");
    const int K = static_cast<int>(header.size()) - 2;

    SubstrateTable table;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r" || line[0] == '#') continue;
        const auto fields = detail::split_csv_line(line);
        if (static_cast<int>(fields.size()) != K + 2)
            throw DataError("load_substrates: row " + std::to_string(line_no) +
                            " has " + std::to_string(fields.size()) +
                            " fields, expected " + std::to_string(K + 2));
        SubstrateRow row;
        row.id = fields[0];
        row.descriptors.resize(K);
        for (int d = 0; d < K; ++d) {
            try {
                std::size_t consumed = 0;
                row.descriptors(d) = std::stod(fields[1 + d], &consumed);
                if (consumed != fields[1 + d].size()) throw std::invalid_argument("");
            } catch (const std::exception&) {
                throw DataError("load_substrates: row " +
                                std::to_string(line_no) +
                                ": descriptor d" + std::to_string(d + 1) +
                                " is not a number: '" + fields[1 + d] + "'");
            }
        }
        try {
            std::size_t consumed = 0;
            row.label = std::stoi(fields.back(), &consumed);
            if (consumed != fields.back().size()) throw std::invalid_argument("");
        } catch (const std::exception&) {
            throw DataError("load_substrates: row " + std::to_string(line_no) +
                            ": label is not an integer: '" + fields.back() +
                            "'");
        }
        if (row.label < 1 || row.label > 3)
            throw DataError("load_substrates: row " + std::to_string(line_no) +
                            ": label " + std::to_string(row.label) +
                            " outside {1, 2, 3}");
        table.rows.push_back(std::move(row));
    }
    if (table.rows.empty())
        throw DataError("load_substrates: " + path.string() +
                        " contains no data rows");
    return table;
}

/// Per-column min-max map onto [-1, 1]; endpoints are hit exactly.
/// Rows of the result correspond to table rows.
inline Eigen::MatrixXd minmax_scale(const SubstrateTable& table) {
    if (table.rows.empty()) throw InvalidArgument("minmax_scale: empty table");
    const int K = table.descriptor_count();
    const int R = static_cast<int>(table.rows.size());
    Eigen::VectorXd lo = table.rows[0].descriptors;
    Eigen::VectorXd hi = table.rows[0].descriptors;
    for (const auto& row : table.rows) {
        lo = lo.cwiseMin(row.descriptors);
        hi = hi.cwiseMax(row.descriptors);
    }
    for (int d = 0; d < K; ++d)
        if (!(hi(d) > lo(d)))
            throw DataError("minmax_scale: descriptor column d" +
                            std::to_string(d + 1) +
                            " is constant; scaling to [-1, 1] is undefined");
    Eigen::MatrixXd scaled(R, K);
    for (int r = 0; r < R; ++r)
        for (int d = 0; d < K; ++d)
            scaled(r, d) = -1.0 + 2.0 * (table.rows[r].descriptors(d) - lo(d)) /
                                      (hi(d) - lo(d));
    return scaled;
}

/// Min-max scales each descriptor column to [-1, 1], then normalizes
/// each row to a unit state vector.
inline std::vector<LabeledState> normalize_features(
    const SubstrateTable& table) {
    const Eigen::MatrixXd scaled = minmax_scale(table);
    std::vector<LabeledState> out;
    out.reserve(table.rows.size());
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const Eigen::VectorXd v = scaled.row(static_cast<int>(r));
        const double norm = v.norm();
        if (norm < 1e-12)
            throw DataError("normalize_features: row " + std::to_string(r) +
                            " maps to the zero vector");
        out.push_back(LabeledState{v / norm, table.rows[r].label});
    }
    return out;
}

/// Disjoint uniformly random train/validation subsets.
inline std::pair<TrainingSet, TrainingSet> split_train_validate(
    const std::vector<LabeledState>& items, int n_train, int n_val,
    std::uint64_t seed) {
    const int n = static_cast<int>(items.size());
    if (n_train < 1 || n_val < 0 || n_train + n_val > n)
        throw InvalidArgument(
            "split_train_validate: need 1 <= n_train and n_train + n_val <= " +
            std::to_string(n));
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    Prng rng(seed);
    for (int i = n - 1; i > 0; --i) {
        const int j = static_cast<int>(rng.below(static_cast<std::uint64_t>(i + 1)));
        std::swap(order[i], order[j]);
    }
    TrainingSet train, val;
    for (int i = 0; i < n_train; ++i) train.items.push_back(items[order[i]]);
    for (int i = 0; i < n_val; ++i)
        val.items.push_back(items[order[n_train + i]]);
    return {std::move(train), std::move(val)};
}

}  // namespace qcn
