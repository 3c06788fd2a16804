// Copyright 2026 The QCN Authors
// SPDX-License-Identifier: Apache-2.0

//
// Experiment orchestration: JSON config parsing, seeded end-to-end
// runs (generate/split data, train, validate, emit artifacts), and
// parameter sweeps. Every run is a pure function of (config, seed):
// rerunning a config byte-identically reproduces its metrics.
//

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "qcn/dataset.hpp"
#include "qcn/errors.hpp"
#include "qcn/eval.hpp"
#include "qcn/io.hpp"
#include "qcn/lindblad.hpp"
#include "qcn/network.hpp"
#include "qcn/parallel.hpp"
#include "qcn/rng.hpp"
#include "qcn/tasks.hpp"
#include "qcn/train.hpp"

namespace qcn {

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

enum class TaskKind { Overlap, Ipr, Chemical };

struct TaskConfig {
    TaskKind kind = TaskKind::Overlap;
    // overlap
    int L = 2;
    int groups = 2;                // G
    int group_size = 1;            // N_G, vectors per group
    std::optional<double> x;       // fixed two-state pair when present
    // ipr
    double lo = 2.0;
    double hi = 3.0;
    int n_train = 10;              // ipr and chemical training-set size
    bool nonnegative_amplitudes = false;  // draw |psi| instead of psi
    // chemical
    std::string csv_path;
    int n_val = 10;                // chemical validation split size
};

struct ExperimentConfig {
    TaskConfig task;
    int hidden = 4;  // M
    bool train_onsite = false;
    double t_max = 1.0;
    Rates rates;
    PsoConfig pso;
    GdConfig gd;
    int validation_count = 1000;
    bool track_validation_cost = false;
    int repetitions = 1;
    std::uint64_t seed = 1;
    std::string output_dir = "qcn_out";

    int class_count() const {
        switch (task.kind) {
            case TaskKind::Overlap: return task.groups;
            case TaskKind::Ipr: return 2;
            case TaskKind::Chemical: return 3;
        }
        return 2;
    }

    /// Input size; for the chemical task the descriptor count of the
    /// loaded table wins and task.L is only a cross-check.
    int input_size() const { return task.L; }

    NetworkSpec network_spec(int L) const {
        return build_topology(L, hidden, class_count(), train_onsite, t_max);
    }
};

namespace cfgdetail {

inline const json& require_field(const json& j, const char* key,
                                 const std::string& path) {
    if (!j.contains(key))
        throw ConfigError(path + key + ": required field is missing");
    return j.at(key);
}

template <typename T>
T get_field(const json& j, const char* key, const std::string& path) {
    try {
        return require_field(j, key, path).get<T>();
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception&) {
        throw ConfigError(path + key + ": wrong type");
    }
}

template <typename T>
T get_field_or(const json& j, const char* key, const std::string& path,
               T fallback) {
    if (!j.contains(key)) return fallback;
    return get_field<T>(j, key, path);
}

}  // namespace cfgdetail

inline ExperimentConfig parse_experiment_config(const json& j) {
    using namespace cfgdetail;
    ExperimentConfig cfg;

    const json& task = require_field(j, "task", "");
    const std::string kind = get_field<std::string>(task, "kind", "task.");
    if (kind == "overlap") {
        cfg.task.kind = TaskKind::Overlap;
        cfg.task.L = get_field_or<int>(task, "L", "task.", 2);
        cfg.task.groups = get_field_or<int>(task, "G", "task.", 2);
        cfg.task.group_size = get_field_or<int>(task, "N_G", "task.", 1);
        if (task.contains("x")) {
            cfg.task.x = get_field<double>(task, "x", "task.");
            if (cfg.task.L != 2 || cfg.task.groups != 2 ||
                cfg.task.group_size != 1)
                throw ConfigError(
                    "task.x: the fixed two-state task requires L=2, G=2, "
                    "N_G=1");
        }
        if (cfg.task.L < 1) throw ConfigError("task.L: must be >= 1");
        if (cfg.task.groups < 2) throw ConfigError("task.G: must be >= 2");
        if (cfg.task.group_size < 1) throw ConfigError("task.N_G: must be >= 1");
    } else if (kind == "ipr") {
        cfg.task.kind = TaskKind::Ipr;
        cfg.task.L = get_field_or<int>(task, "L", "task.", 5);
        cfg.task.lo = get_field_or<double>(task, "lo", "task.", 2.0);
        cfg.task.hi = get_field_or<double>(task, "hi", "task.", 3.0);
        cfg.task.n_train = get_field_or<int>(task, "n_train", "task.", 10);
        cfg.task.nonnegative_amplitudes =
            get_field_or<bool>(task, "nonnegative_amplitudes", "task.", false);
        if (cfg.task.L < 2) throw ConfigError("task.L: must be >= 2");
        if (!(cfg.task.lo < cfg.task.hi))
            throw ConfigError("task.lo: must be < task.hi");
        if (cfg.task.n_train < 2 || cfg.task.n_train % 2 != 0)
            throw ConfigError("task.n_train: must be even and >= 2");
    } else if (kind == "chemical") {
        cfg.task.kind = TaskKind::Chemical;
        cfg.task.csv_path = get_field<std::string>(task, "csv_path", "task.");
        cfg.task.n_train = get_field_or<int>(task, "n_train", "task.", 10);
        cfg.task.n_val = get_field_or<int>(task, "n_val", "task.", 10);
        cfg.task.L = get_field_or<int>(task, "L", "task.", 10);
        if (cfg.task.n_train < 1) throw ConfigError("task.n_train: must be >= 1");
        if (cfg.task.n_val < 1) throw ConfigError("task.n_val: must be >= 1");
    } else {
        throw ConfigError(
            "task.kind: must be one of 'overlap', 'ipr', 'chemical'");
    }

    if (j.contains("network")) {
        const json& net = j.at("network");
        cfg.hidden = get_field_or<int>(net, "M", "network.", 4);
        cfg.train_onsite =
            get_field_or<bool>(net, "train_onsite", "network.", false);
        cfg.t_max = get_field_or<double>(net, "t_max", "network.", 1.0);
        if (cfg.hidden < 1) throw ConfigError("network.M: must be >= 1");
        if (!(cfg.t_max > 0.0)) throw ConfigError("network.t_max: must be > 0");
        if (net.contains("L") &&
            get_field<int>(net, "L", "network.") != cfg.task.L)
            throw ConfigError(
                "network.L: does not match the task input size");
        if (net.contains("N_c") &&
            get_field<int>(net, "N_c", "network.") != cfg.class_count())
            throw ConfigError(
                "network.N_c: does not match the task class count");
    }

    if (j.contains("rates")) {
        const json& r = j.at("rates");
        cfg.rates.gamma_in =
            get_field_or<double>(r, "gamma_in", "rates.", 1.0);
        cfg.rates.gamma = get_field_or<double>(r, "gamma", "rates.", 1.0);
        cfg.rates.gamma_dephasing =
            get_field_or<double>(r, "gamma_dephasing", "rates.", 0.0);
        if (!(cfg.rates.gamma_in > 0.0))
            throw ConfigError("rates.gamma_in: must be > 0");
        if (!(cfg.rates.gamma > 0.0))
            throw ConfigError("rates.gamma: must be > 0");
        if (cfg.rates.gamma_dephasing < 0.0)
            throw ConfigError("rates.gamma_dephasing: must be >= 0");
    }

    if (j.contains("pso")) {
        const json& p = j.at("pso");
        cfg.pso.swarm_size = get_field_or<int>(p, "swarm_size", "pso.", 50);
        cfg.pso.iterations = get_field_or<int>(p, "iterations", "pso.", 300);
        cfg.pso.inertia = get_field_or<double>(p, "inertia", "pso.", 0.729);
        cfg.pso.cognitive =
            get_field_or<double>(p, "cognitive", "pso.", 1.49445);
        cfg.pso.social = get_field_or<double>(p, "social", "pso.", 1.49445);
        if (cfg.pso.swarm_size < 2)
            throw ConfigError("pso.swarm_size: must be >= 2");
        if (cfg.pso.iterations < 0)
            throw ConfigError("pso.iterations: must be >= 0");
        if (!(cfg.pso.inertia > 0.0 && cfg.pso.inertia < 1.0))
            throw ConfigError("pso.inertia: must be in (0, 1)");
    }

    if (j.contains("gd")) {
        const json& g = j.at("gd");
        cfg.gd.learning_rate =
            get_field_or<double>(g, "learning_rate", "gd.", 0.05);
        cfg.gd.iterations = get_field_or<int>(g, "iterations", "gd.", 200);
        cfg.gd.fd_step = get_field_or<double>(g, "fd_step", "gd.", 1e-4);
        if (!(cfg.gd.learning_rate > 0.0))
            throw ConfigError("gd.learning_rate: must be > 0");
        if (cfg.gd.iterations < 0)
            throw ConfigError("gd.iterations: must be >= 0");
        if (!(cfg.gd.fd_step > 0.0)) throw ConfigError("gd.fd_step: must be > 0");
    }

    cfg.validation_count =
        cfgdetail::get_field_or<int>(j, "validation_count", "", 1000);
    if (cfg.validation_count < 1)
        throw ConfigError("validation_count: must be >= 1");
    cfg.track_validation_cost =
        cfgdetail::get_field_or<bool>(j, "track_validation_cost", "", false);
    cfg.repetitions = cfgdetail::get_field_or<int>(j, "repetitions", "", 1);
    if (cfg.repetitions < 1) throw ConfigError("repetitions: must be >= 1");
    cfg.seed = cfgdetail::get_field_or<std::uint64_t>(j, "seed", "", 1);
    cfg.output_dir =
        cfgdetail::get_field_or<std::string>(j, "output_dir", "", "qcn_out");
    return cfg;
}

/// Fully materialized config (defaults included); its dump is hashed
/// into every artifact.
inline json canonical_config_json(const ExperimentConfig& cfg) {
    json task;
    switch (cfg.task.kind) {
        case TaskKind::Overlap:
            task = {{"kind", "overlap"},
                    {"L", cfg.task.L},
                    {"G", cfg.task.groups},
                    {"N_G", cfg.task.group_size}};
            if (cfg.task.x) task["x"] = *cfg.task.x;
            break;
        case TaskKind::Ipr:
            task = {{"kind", "ipr"},
                    {"L", cfg.task.L},
                    {"lo", cfg.task.lo},
                    {"hi", cfg.task.hi},
                    {"n_train", cfg.task.n_train},
                    {"nonnegative_amplitudes",
                     cfg.task.nonnegative_amplitudes}};
            break;
        case TaskKind::Chemical:
            task = {{"kind", "chemical"},
                    {"csv_path", cfg.task.csv_path},
                    {"L", cfg.task.L},
                    {"n_train", cfg.task.n_train},
                    {"n_val", cfg.task.n_val}};
            break;
    }
    return json{
        {"task", std::move(task)},
        {"network",
         {{"M", cfg.hidden},
          {"train_onsite", cfg.train_onsite},
          {"t_max", cfg.t_max}}},
        {"rates", rates_to_json(cfg.rates)},
        {"pso",
         {{"swarm_size", cfg.pso.swarm_size},
          {"iterations", cfg.pso.iterations},
          {"inertia", cfg.pso.inertia},
          {"cognitive", cfg.pso.cognitive},
          {"social", cfg.pso.social}}},
        {"gd",
         {{"learning_rate", cfg.gd.learning_rate},
          {"iterations", cfg.gd.iterations},
          {"fd_step", cfg.gd.fd_step}}},
        {"validation_count", cfg.validation_count},
        {"track_validation_cost", cfg.track_validation_cost},
        {"repetitions", cfg.repetitions},
        {"seed", cfg.seed},
        {"output_dir", cfg.output_dir}};
}

inline std::string config_hash(const ExperimentConfig& cfg) {
    return fnv1a_hex(canonical_config_json(cfg).dump());
}

// ---------------------------------------------------------------------------
// Run
// ---------------------------------------------------------------------------

struct ValidationData {
    std::vector<LabeledState> items;
    int excluded = 0;
    std::vector<double> ipr_values;  // parallel to items (ipr task only)
};

struct RepetitionOutcome {
    std::uint64_t rep_seed = 0;
    bool failed = false;
    std::string error;
    TrainedModel model;
    MetricsReport metrics;
    std::vector<BalancePoint> balance_points;        // overlap with G = 2
    std::vector<Eigen::VectorXd> validation_currents;  // ipr task
    ValidationData validation;
};

struct SummaryStat {
    double mean = 0.0;
    double stddev = 0.0;  // sample (n-1) standard deviation; 0 when n < 2
    int n = 0;
};

inline SummaryStat summarize(const std::vector<double>& values) {
    SummaryStat s;
    s.n = static_cast<int>(values.size());
    if (s.n == 0) return s;
    double sum = 0.0;
    for (const double v : values) sum += v;
    s.mean = sum / s.n;
    if (s.n >= 2) {
        double ss = 0.0;
        for (const double v : values) ss += (v - s.mean) * (v - s.mean);
        s.stddev = std::sqrt(ss / (s.n - 1));
    }
    return s;
}

struct RunSummary {
    SummaryStat macro_precision;
    SummaryStat macro_recall;
    SummaryStat accuracy;
    int failed = 0;
};

struct RunResult {
    std::vector<RepetitionOutcome> reps;
    RunSummary summary;
};

namespace rundetail {

inline Eigen::VectorXd draw_state(int L, Prng& rng, bool nonnegative) {
    Eigen::VectorXd psi = random_real_state(L, rng);
    if (nonnegative) psi = psi.cwiseAbs();
    return psi;
}

/// Overlap-task ground truth with exact ties excluded.
inline ValidationData overlap_validation(const OverlapTask& task, int count,
                                         std::uint64_t seed) {
    ValidationData val;
    Prng rng(seed);
    for (int i = 0; i < count; ++i) {
        Eigen::VectorXd psi = random_real_state(task.L, rng);
        double best = group_overlap(task, 0, psi);
        int best_g = 0, tied = 1;
        for (int g = 1; g < task.group_count(); ++g) {
            const double eta = group_overlap(task, g, psi);
            if (eta > best) {
                best = eta;
                best_g = g;
                tied = 1;
            } else if (eta == best) {
                ++tied;
            }
        }
        if (tied > 1) {
            ++val.excluded;
            continue;
        }
        val.items.push_back(LabeledState{std::move(psi), best_g + 1});
    }
    return val;
}

/// Draws until `count` states outside the [lo, hi] band are collected;
/// in-band draws are counted as excluded.
inline ValidationData ipr_validation(int L, double lo, double hi, int count,
                                     bool nonnegative, std::uint64_t seed) {
    ValidationData val;
    Prng rng(seed);
    const long budget = 200L * count + 100000L;
    long attempts = 0;
    while (static_cast<int>(val.items.size()) < count) {
        if (++attempts > budget)
            throw DataError(
                "ipr validation: sampling budget exhausted; the thresholds "
                "leave too little probability outside the band");
        Eigen::VectorXd psi = draw_state(L, rng, nonnegative);
        const double I = ipr(psi);
        if (I >= lo && I <= hi) {
            ++val.excluded;
            continue;
        }
        val.ipr_values.push_back(I);
        val.items.push_back(LabeledState{std::move(psi), I < lo ? 1 : 2});
    }
    return val;
}

struct Scored {
    ConfusionMatrix cm;
    std::vector<Eigen::VectorXd> currents;
};

inline Scored score(const SteadyStateEngine& engine,
                    const std::vector<LabeledState>& items) {
    const int n = static_cast<int>(items.size());
    const int n_c = engine.spec().n_out;
    Scored out{ConfusionMatrix{Eigen::MatrixXi::Zero(n_c, n_c)}, {}};
    out.currents.resize(n);
    parallel_for(n, [&](int i) {
        out.currents[i] = engine.currents(items[i].psi);
    });
    for (int i = 0; i < n; ++i) {
        const int predicted = argmax_lowest(out.currents[i]) + 1;
        out.cm.counts(items[i].label - 1, predicted - 1) += 1;
    }
    return out;
}

}  // namespace rundetail

/// One repetition: generate/split data, train, score the validation
/// set. Everything derives from rep_seed.
inline RepetitionOutcome run_repetition(
    const ExperimentConfig& cfg, int rep_index,
    const OverlapTask* shared_overlap_task,
    const std::vector<LabeledState>* chemical_items) {
    RepetitionOutcome out;
    out.rep_seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(rep_index));

    TrainingSet train_set;
    int L = cfg.task.L;
    switch (cfg.task.kind) {
        case TaskKind::Overlap:
            train_set = to_training_set(*shared_overlap_task);
            out.validation = rundetail::overlap_validation(
                *shared_overlap_task, cfg.validation_count,
                derive_seed(out.rep_seed, 2));
            break;
        case TaskKind::Ipr: {
            IprTask task =
                gen_ipr_task(cfg.task.L, cfg.task.n_train, cfg.task.lo,
                             cfg.task.hi, derive_seed(out.rep_seed, 0),
                             cfg.task.nonnegative_amplitudes);
            train_set = std::move(task.items);
            out.validation = rundetail::ipr_validation(
                cfg.task.L, cfg.task.lo, cfg.task.hi, cfg.validation_count,
                cfg.task.nonnegative_amplitudes, derive_seed(out.rep_seed, 2));
            break;
        }
        case TaskKind::Chemical: {
            L = chemical_items->empty()
                    ? cfg.task.L
                    : static_cast<int>((*chemical_items)[0].psi.size());
            auto split =
                split_train_validate(*chemical_items, cfg.task.n_train,
                                     cfg.task.n_val,
                                     derive_seed(out.rep_seed, 3));
            train_set = std::move(split.first);
            out.validation.items = std::move(split.second.items);
            break;
        }
    }

    const NetworkSpec spec = cfg.network_spec(L);
    PsoConfig pso = cfg.pso;
    pso.seed = derive_seed(out.rep_seed, 1);

    const TrainingSet* val_for_trace = nullptr;
    TrainingSet val_ts;
    if (cfg.track_validation_cost && !out.validation.items.empty()) {
        val_ts.items = out.validation.items;
        val_for_trace = &val_ts;
    }
    out.model = train_network(spec, train_set, pso, cfg.gd, cfg.rates,
                              val_for_trace);

    const SteadyStateEngine engine = make_engine(out.model);
    const auto scored = rundetail::score(engine, out.validation.items);
    out.metrics = make_metrics_report(scored.cm, out.validation.excluded);

    if (cfg.task.kind == TaskKind::Overlap &&
        shared_overlap_task->group_count() == 2) {
        out.balance_points.reserve(out.validation.items.size());
        for (std::size_t i = 0; i < out.validation.items.size(); ++i)
            out.balance_points.push_back(balances(
                engine, *shared_overlap_task, out.validation.items[i].psi));
    }
    if (cfg.task.kind == TaskKind::Ipr)
        out.validation_currents = scored.currents;
    return out;
}

/// All repetitions plus the mean/std summary. Training failures are
/// recorded per repetition without aborting the run.
inline RunResult run_experiment(const ExperimentConfig& cfg) {
    OverlapTask overlap_task;
    std::vector<LabeledState> chemical_items;
    if (cfg.task.kind == TaskKind::Overlap) {
        overlap_task = cfg.task.x
                           ? two_state_task(*cfg.task.x)
                           : random_overlap_task(cfg.task.L, cfg.task.groups,
                                                 cfg.task.group_size,
                                                 derive_seed(cfg.seed, 1000));
    } else if (cfg.task.kind == TaskKind::Chemical) {
        const SubstrateTable table = load_substrates(cfg.task.csv_path);
        if (table.descriptor_count() != cfg.task.L)
            throw ConfigError("task.L: config says " +
                              std::to_string(cfg.task.L) + " descriptors, CSV has " +
                              std::to_string(table.descriptor_count()));
        chemical_items = normalize_features(table);
        const int needed = cfg.task.n_train + cfg.task.n_val;
        if (needed > static_cast<int>(chemical_items.size()))
            throw ConfigError(
                "task.n_train + task.n_val exceeds the table size " +
                std::to_string(chemical_items.size()));
    }

    RunResult result;
    result.reps.resize(cfg.repetitions);
    parallel_for(cfg.repetitions, [&](int r) {
        try {
            result.reps[r] =
                run_repetition(cfg, r, &overlap_task, &chemical_items);
        } catch (const Error& e) {
            result.reps[r].rep_seed =
                derive_seed(cfg.seed, static_cast<std::uint64_t>(r));
            result.reps[r].failed = true;
            result.reps[r].error = e.what();
        }
    });

    std::vector<double> ps, rs, accs;
    for (const auto& rep : result.reps) {
        if (rep.failed) {
            ++result.summary.failed;
            continue;
        }
        if (rep.metrics.pr.macro_precision)
            ps.push_back(*rep.metrics.pr.macro_precision);
        if (rep.metrics.pr.macro_recall)
            rs.push_back(*rep.metrics.pr.macro_recall);
        accs.push_back(rep.metrics.accuracy_value);
    }
    result.summary.macro_precision = summarize(ps);
    result.summary.macro_recall = summarize(rs);
    result.summary.accuracy = summarize(accs);
    return result;
}

// ---------------------------------------------------------------------------
// Artifact emission
// ---------------------------------------------------------------------------

inline json summary_stat_to_json(const SummaryStat& s) {
    return json{{"mean", s.mean}, {"std", s.stddev}, {"n", s.n}};
}

inline json run_result_to_json(const ExperimentConfig& cfg,
                               const RunResult& result) {
    const std::string hash = config_hash(cfg);
    json reps = json::array();
    for (const auto& rep : result.reps) {
        json r{{"seed", rep.rep_seed}, {"failed", rep.failed}};
        if (rep.failed) {
            r["error"] = rep.error;
        } else {
            r["metrics"] = metrics_to_json(rep.metrics);
            r["train"] = {{"final_cost", rep.model.final_cost},
                          {"train_class_cost", rep.model.train_class_cost},
                          {"train_accuracy", rep.model.train_accuracy},
                          {"epochs",
                           rep.model.train_cost_trace.size()}};
        }
        reps.push_back(std::move(r));
    }
    return json{{"meta",
                 {{"config_hash", hash},
                  {"seed", cfg.seed},
                  {"config", canonical_config_json(cfg)}}},
                {"repetitions", std::move(reps)},
                {"summary",
                 {{"macro_P", summary_stat_to_json(result.summary.macro_precision)},
                  {"macro_R", summary_stat_to_json(result.summary.macro_recall)},
                  {"accuracy", summary_stat_to_json(result.summary.accuracy)},
                  {"failed_repetitions", result.summary.failed}}}};
}

namespace rundetail {

inline std::string csv_meta_line(const std::string& hash, std::uint64_t seed) {
    return "# config_hash=" + hash + " seed=" + std::to_string(seed) + "\n";
}

}  // namespace rundetail

/// Writes metrics.json plus, per repetition, the cost-trace CSV, the
/// model JSON, and task-specific diagnostics (balance scatter for
/// two-group overlap, current-vs-IPR for localization).
inline void write_run_artifacts(const ExperimentConfig& cfg,
                                const RunResult& result,
                                const std::filesystem::path& outdir) {
    const std::string hash = config_hash(cfg);
    atomic_write_file(outdir / "metrics.json",
                      run_result_to_json(cfg, result).dump(2) + "\n");

    for (std::size_t r = 0; r < result.reps.size(); ++r) {
        const auto& rep = result.reps[r];
        if (rep.failed) continue;
        const std::string suffix = "_rep" + std::to_string(r);

        std::ostringstream trace;
        trace << rundetail::csv_meta_line(hash, rep.rep_seed);
        trace << "epoch,train_cost,val_cost\n";
        for (std::size_t e = 0; e < rep.model.train_cost_trace.size(); ++e) {
            trace << (e + 1) << ","
                  << format_double(rep.model.train_cost_trace[e]) << ",";
            if (e < rep.model.val_cost_trace.size())
                trace << format_double(rep.model.val_cost_trace[e]);
            trace << "\n";
        }
        atomic_write_file(outdir / ("cost_trace" + suffix + ".csv"),
                          trace.str());

        json model_json = model_to_json(rep.model);
        model_json["meta"] = {{"config_hash", hash}, {"seed", rep.rep_seed}};
        atomic_write_file(outdir / ("model" + suffix + ".json"),
                          model_json.dump(2) + "\n");

        if (!rep.balance_points.empty()) {
            std::ostringstream bal;
            bal << rundetail::csv_meta_line(hash, rep.rep_seed);
            bal << "eta_tilde,j_tilde\n";
            for (const auto& bp : rep.balance_points)
                bal << format_double(bp.eta_tilde) << ","
                    << format_double(bp.j_tilde) << "\n";
            atomic_write_file(outdir / ("balance" + suffix + ".csv"),
                              bal.str());
        }
        if (!rep.validation_currents.empty()) {
            std::ostringstream cur;
            cur << rundetail::csv_meta_line(hash, rep.rep_seed);
            cur << "ipr";
            const int n_c = cfg.class_count();
            for (int c = 1; c <= n_c; ++c) cur << ",J" << c;
            cur << "\n";
            for (std::size_t i = 0; i < rep.validation_currents.size(); ++i) {
                cur << format_double(rep.validation.ipr_values[i]);
                for (int c = 0; c < n_c; ++c)
                    cur << "," << format_double(rep.validation_currents[i](c));
                cur << "\n";
            }
            atomic_write_file(outdir / ("ipr_currents" + suffix + ".csv"),
                              cur.str());
        }
    }
}

/// run(config): compute and emit everything under outdir.
inline RunResult run(const ExperimentConfig& cfg,
                     const std::filesystem::path& outdir) {
    RunResult result = run_experiment(cfg);
    write_run_artifacts(cfg, result, outdir);
    return result;
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

enum class SweepAxis { DephasingRate, HiddenSize, TsSize };

inline SweepAxis parse_sweep_axis(const std::string& name) {
    if (name == "dephasing_rate") return SweepAxis::DephasingRate;
    if (name == "hidden_size") return SweepAxis::HiddenSize;
    if (name == "ts_size") return SweepAxis::TsSize;
    throw ConfigError(
        "axis: must be one of 'dephasing_rate', 'hidden_size', 'ts_size'");
}

struct SweepRow {
    double value = 0.0;
    RunSummary summary;
};

struct SweepResult {
    std::vector<SweepRow> rows;
};

/// Dephasing sweep: each repetition trains once at the configured
/// rates, then the trained network is re-scored with the dephasing
/// rate set to value * t_bar, where t_bar is the trained network's
/// mean hopping magnitude. The same validation items are reused across
/// values, so rows differ only through the dephasing.
inline SweepResult sweep_dephasing(const ExperimentConfig& cfg,
                                   const std::vector<double>& values) {
    RunResult base = run_experiment(cfg);
    SweepResult sweep;
    sweep.rows.resize(values.size());
    for (std::size_t vi = 0; vi < values.size(); ++vi) {
        sweep.rows[vi].value = values[vi];
        std::vector<double> ps, rs, accs;
        int failed = 0;
        for (const auto& rep : base.reps) {
            if (rep.failed) {
                ++failed;
                continue;
            }
            const double t_bar =
                mean_hopping(rep.model.spec, rep.model.params);
            Rates rates = rep.model.rates;
            rates.gamma_dephasing = values[vi] * t_bar;
            const SteadyStateEngine engine(
                rep.model.spec,
                assemble_hamiltonian(rep.model.spec, rep.model.params), rates);
            const auto scored =
                rundetail::score(engine, rep.validation.items);
            const MetricsReport metrics =
                make_metrics_report(scored.cm, rep.validation.excluded);
            if (metrics.pr.macro_precision)
                ps.push_back(*metrics.pr.macro_precision);
            if (metrics.pr.macro_recall)
                rs.push_back(*metrics.pr.macro_recall);
            accs.push_back(metrics.accuracy_value);
        }
        sweep.rows[vi].summary.macro_precision = summarize(ps);
        sweep.rows[vi].summary.macro_recall = summarize(rs);
        sweep.rows[vi].summary.accuracy = summarize(accs);
        sweep.rows[vi].summary.failed = failed;
    }
    return sweep;
}

/// One full run per value with a seed derived from (master seed, point
/// index). For hidden_size the value is M; for ts_size it is the
/// training-set size (vectors per group for overlap tasks).
inline SweepResult sweep_runs(const ExperimentConfig& cfg, SweepAxis axis,
                              const std::vector<double>& values,
                              const std::filesystem::path& outdir,
                              bool write_points) {
    SweepResult sweep;
    sweep.rows.resize(values.size());
    for (std::size_t vi = 0; vi < values.size(); ++vi) {
        ExperimentConfig point = cfg;
        point.seed = derive_seed(cfg.seed, vi);
        const int iv = static_cast<int>(values[vi]);
        if (axis == SweepAxis::HiddenSize) {
            if (iv < 1) throw ConfigError("hidden_size sweep: values must be >= 1");
            point.hidden = iv;
        } else {
            switch (cfg.task.kind) {
                case TaskKind::Overlap: point.task.group_size = iv; break;
                case TaskKind::Ipr: point.task.n_train = iv; break;
                case TaskKind::Chemical: point.task.n_train = iv; break;
            }
        }
        RunResult res = run_experiment(point);
        if (write_points)
            write_run_artifacts(point, res,
                                outdir / ("point_" + std::to_string(vi)));
        sweep.rows[vi].value = values[vi];
        sweep.rows[vi].summary = res.summary;
    }
    return sweep;
}

inline std::string sweep_to_csv(const ExperimentConfig& cfg, SweepAxis axis,
                                const SweepResult& sweep) {
    const char* axis_name = axis == SweepAxis::DephasingRate ? "dephasing_rate"
                            : axis == SweepAxis::HiddenSize  ? "hidden_size"
                                                             : "ts_size";
    std::ostringstream csv;
    csv << rundetail::csv_meta_line(config_hash(cfg), cfg.seed);
    csv << axis_name
        << ",macro_P_mean,macro_P_std,macro_R_mean,macro_R_std,"
           "accuracy_mean,accuracy_std\n";
    for (const auto& row : sweep.rows) {
        csv << format_double(row.value) << ","
            << format_double(row.summary.macro_precision.mean) << ","
            << format_double(row.summary.macro_precision.stddev) << ","
            << format_double(row.summary.macro_recall.mean) << ","
            << format_double(row.summary.macro_recall.stddev) << ","
            << format_double(row.summary.accuracy.mean) << ","
            << format_double(row.summary.accuracy.stddev) << "\n";
    }
    return csv.str();
}

/// sweep(config, axis, values): one row per value, written to
/// outdir/sweep.csv.
inline SweepResult sweep(const ExperimentConfig& cfg, SweepAxis axis,
                         const std::vector<double>& values,
                         const std::filesystem::path& outdir) {
    if (values.empty()) throw ConfigError("sweep: values must be nonempty");
    SweepResult result =
        axis == SweepAxis::DephasingRate
            ? sweep_dephasing(cfg, values)
            : sweep_runs(cfg, axis, values, outdir, /*write_points=*/true);
    atomic_write_file(outdir / "sweep.csv", sweep_to_csv(cfg, axis, result));
    return result;
}

// ---------------------------------------------------------------------------
// Data generation
// ---------------------------------------------------------------------------

/// Synthetic substrate table: three Gaussian descriptor clusters,
/// rows_per_class each, written in the CSV schema of load_substrates.
inline std::string synthetic_substrates_csv(int rows_per_class,
                                            int descriptors,
                                            std::uint64_t seed) {
    if (rows_per_class < 1 || descriptors < 1)
        throw InvalidArgument("synthetic_substrates_csv: bad shape");
    Prng rng(seed);
    std::vector<Eigen::VectorXd> means;
    for (int g = 0; g < 3; ++g) {
        Eigen::VectorXd mu(descriptors);
        for (int attempt = 0; attempt < 1000; ++attempt) {
            for (int d = 0; d < descriptors; ++d)
                mu(d) = rng.uniform(-1.5, 1.5);
            bool separated = true;
            for (const auto& other : means)
                if ((mu - other).norm() < 2.2) separated = false;
            if (separated) break;
        }
        means.push_back(mu);
    }
    std::ostringstream csv;
    csv << "id";
    for (int d = 1; d <= descriptors; ++d) csv << ",d" << d;
    csv << ",label\n";
    int id = 0;
    char buf[32];
    for (int g = 0; g < 3; ++g)
        for (int k = 0; k < rows_per_class; ++k) {
            ++id;
            std::snprintf(buf, sizeof(buf), "S%03d", id);
            csv << buf;
            for (int d = 0; d < descriptors; ++d) {
                std::snprintf(buf, sizeof(buf), "%.9g",
                              means[g](d) + 0.3 * rng.normal());
                csv << "," << buf;
            }
            csv << "," << (g + 1) << "\n";
        }
    return csv.str();
}

/// gen_data(kind, params, seed, path): reproducible task files.
inline void gen_data(const std::string& kind, const json& params,
                     std::uint64_t seed, const std::filesystem::path& path) {
    if (kind == "chemical") {
        const int rows = params.value("rows_per_class", 20);
        const int descriptors = params.value("descriptors", 10);
        atomic_write_file(
            path, "# config_hash=" + fnv1a_hex(params.dump()) +
                      " seed=" + std::to_string(seed) + "\n" +
                      synthetic_substrates_csv(rows, descriptors, seed));
    } else if (kind == "overlap") {
        const int L = params.value("L", 2);
        const int G = params.value("G", 2);
        const int N_G = params.value("N_G", 20);
        json j = params.contains("x")
                     ? overlap_task_to_json(
                           two_state_task(params.at("x").get<double>()))
                     : overlap_task_to_json(
                           random_overlap_task(L, G, N_G, seed));
        j["meta"] = {{"seed", seed},
                     {"config_hash", fnv1a_hex(params.dump())}};
        atomic_write_file(path, j.dump(2) + "\n");
    } else if (kind == "ipr") {
        const int L = params.value("L", 5);
        const int n = params.value("n_train", 10);
        const double lo = params.value("lo", 2.0);
        const double hi = params.value("hi", 3.0);
        json j = ipr_task_to_json(gen_ipr_task(L, n, lo, hi, seed));
        j["meta"] = {{"seed", seed},
                     {"config_hash", fnv1a_hex(params.dump())}};
        atomic_write_file(path, j.dump(2) + "\n");
    } else {
        throw ConfigError(
            "kind: must be one of 'overlap', 'ipr', 'chemical'");
    }
}

}  // namespace qcn
