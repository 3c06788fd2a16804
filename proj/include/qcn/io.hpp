// Copyright 2026 The QCN Authors
// SPDX-License-Identifier: Apache-2.0

//
// Serialization: model/task/metrics JSON, CSV emission, atomic file
// writes, and the config hash stamped into every artifact.
//

#pragma once

#include <json.hpp>

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "qcn/dataset.hpp"
#include "qcn/errors.hpp"
#include "qcn/eval.hpp"
#include "qcn/lindblad.hpp"
#include "qcn/network.hpp"
#include "qcn/tasks.hpp"
#include "qcn/train.hpp"

namespace qcn {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Hashing and file plumbing
// ---------------------------------------------------------------------------

/// FNV-1a 64-bit, rendered as 16 hex digits. Stable across platforms.
inline std::string fnv1a_hex(const std::string& data) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (const unsigned char c : data) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(h));
    return std::string(buf);
}

/// Writes via a temp file in the same directory plus rename, so
/// readers never observe a partial file.
inline void atomic_write_file(const std::filesystem::path& path,
                              const std::string& content) {
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError("cannot open " + tmp.string() + " for writing");
        out << content;
        if (!out) throw DataError("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
}

// ---------------------------------------------------------------------------
// Network / model JSON
// ---------------------------------------------------------------------------

inline json spec_to_json(const NetworkSpec& spec) {
    return json{{"L", spec.n_in},
                {"M", spec.n_hidden},
                {"Nc", spec.n_out},
                {"train_onsite", spec.train_onsite},
                {"t_max", spec.param_bound}};
}

inline NetworkSpec spec_from_json(const json& j) {
    return build_topology(j.at("L").get<int>(), j.at("M").get<int>(),
                          j.at("Nc").get<int>(),
                          j.value("train_onsite", false),
                          j.value("t_max", 1.0));
}

inline json params_to_json(const Params& p) {
    json arr = json::array();
    for (Eigen::Index i = 0; i < p.size(); ++i) arr.push_back(p(i));
    return arr;
}

inline Params params_from_json(const json& arr) {
    Params p(arr.size());
    for (std::size_t i = 0; i < arr.size(); ++i)
        p(static_cast<Eigen::Index>(i)) = arr[i].get<double>();
    return p;
}

inline json rates_to_json(const Rates& r) {
    return json{{"gamma_in", r.gamma_in},
                {"gamma", r.gamma},
                {"gamma_dephasing", r.gamma_dephasing}};
}

inline Rates rates_from_json(const json& j) {
    Rates r;
    r.gamma_in = j.value("gamma_in", 1.0);
    r.gamma = j.value("gamma", 1.0);
    r.gamma_dephasing = j.value("gamma_dephasing", 0.0);
    return r;
}

inline json model_to_json(const TrainedModel& model) {
    json j{{"spec", spec_to_json(model.spec)},
           {"params", params_to_json(model.params)},
           {"rates", rates_to_json(model.rates)}};
    j["diagnostics"] = {{"final_cost", model.final_cost},
                        {"train_class_cost", model.train_class_cost},
                        {"train_accuracy", model.train_accuracy}};
    return j;
}

inline TrainedModel model_from_json(const json& j) {
    TrainedModel model;
    model.spec = spec_from_json(j.at("spec"));
    model.params = params_from_json(j.at("params"));
    if (model.params.size() != model.spec.param_count())
        throw DataError("model JSON: parameter count mismatch");
    if (j.contains("rates")) model.rates = rates_from_json(j.at("rates"));
    if (j.contains("diagnostics")) {
        const auto& d = j.at("diagnostics");
        model.final_cost = d.value("final_cost", 0.0);
        model.train_class_cost = d.value("train_class_cost", 0.0);
        model.train_accuracy = d.value("train_accuracy", 0.0);
    }
    return model;
}

// ---------------------------------------------------------------------------
// Density matrix JSON (debugging)
// ---------------------------------------------------------------------------

inline json density_to_json(const DensityMatrix& rho) {
    const int D = rho.dim();
    json re = json::array(), im = json::array();
    for (int i = 0; i < D; ++i) {
        json re_row = json::array(), im_row = json::array();
        for (int j = 0; j < D; ++j) {
            re_row.push_back(rho.rho(i, j).real());
            im_row.push_back(rho.rho(i, j).imag());
        }
        re.push_back(std::move(re_row));
        im.push_back(std::move(im_row));
    }
    return json{{"re", std::move(re)}, {"im", std::move(im)}};
}

// ---------------------------------------------------------------------------
// Task JSON
// ---------------------------------------------------------------------------

inline json state_to_json(const Eigen::VectorXd& v) {
    json arr = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
    return arr;
}

inline Eigen::VectorXd state_from_json(const json& arr) {
    Eigen::VectorXd v(arr.size());
    for (std::size_t i = 0; i < arr.size(); ++i)
        v(static_cast<Eigen::Index>(i)) = arr[i].get<double>();
    return v;
}

inline json overlap_task_to_json(const OverlapTask& task) {
    json groups = json::array();
    for (const auto& group : task.groups) {
        json g = json::array();
        for (const auto& phi : group) g.push_back(state_to_json(phi));
        groups.push_back(std::move(g));
    }
    return json{{"kind", "overlap"}, {"L", task.L}, {"groups", std::move(groups)}};
}

inline OverlapTask overlap_task_from_json(const json& j) {
    if (j.value("kind", "") != "overlap")
        throw DataError("overlap task JSON: kind mismatch");
    OverlapTask task;
    task.L = j.at("L").get<int>();
    for (const auto& g : j.at("groups")) {
        std::vector<Eigen::VectorXd> group;
        for (const auto& phi : g) group.push_back(state_from_json(phi));
        task.groups.push_back(std::move(group));
    }
    return task;
}

inline json ipr_task_to_json(const IprTask& task) {
    json items = json::array();
    for (const auto& item : task.items.items)
        items.push_back(
            json{{"psi", state_to_json(item.psi)}, {"label", item.label}});
    return json{{"kind", "ipr"},
                {"lo", task.lo},
                {"hi", task.hi},
                {"items", std::move(items)}};
}

inline IprTask ipr_task_from_json(const json& j) {
    if (j.value("kind", "") != "ipr")
        throw DataError("ipr task JSON: kind mismatch");
    IprTask task;
    task.lo = j.at("lo").get<double>();
    task.hi = j.at("hi").get<double>();
    for (const auto& it : j.at("items"))
        task.items.items.push_back(LabeledState{
            state_from_json(it.at("psi")), it.at("label").get<int>()});
    return task;
}

// ---------------------------------------------------------------------------
// Metrics JSON
// ---------------------------------------------------------------------------

struct MetricsReport {
    ConfusionMatrix cm;
    PrecisionRecall pr;
    double accuracy_value = 0.0;
    int excluded_count = 0;
};

inline MetricsReport make_metrics_report(const ConfusionMatrix& cm,
                                         int excluded) {
    return MetricsReport{cm, precision_recall(cm), accuracy(cm), excluded};
}

inline json metrics_to_json(const MetricsReport& report) {
    const int n_c = report.cm.classes();
    json confusion_rows = json::array();
    for (int t = 0; t < n_c; ++t) {
        json row = json::array();
        for (int p = 0; p < n_c; ++p) row.push_back(report.cm.counts(t, p));
        confusion_rows.push_back(std::move(row));
    }
    json per_class = json::array();
    for (const auto& m : report.pr.per_class) {
        json entry;
        entry["P"] = m.precision ? json(*m.precision) : json(nullptr);
        entry["R"] = m.recall ? json(*m.recall) : json(nullptr);
        per_class.push_back(std::move(entry));
    }
    return json{{"confusion", std::move(confusion_rows)},
                {"per_class", std::move(per_class)},
                {"macro_P", report.pr.macro_precision
                                ? json(*report.pr.macro_precision)
                                : json(nullptr)},
                {"macro_R", report.pr.macro_recall
                                ? json(*report.pr.macro_recall)
                                : json(nullptr)},
                {"accuracy", report.accuracy_value},
                {"excluded_count", report.excluded_count}};
}

}  // namespace qcn
