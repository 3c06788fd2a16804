// Copyright 2026 The QCN Authors
// SPDX-License-Identifier: Apache-2.0

//
// qcn: train and evaluate quantum transport classification networks.
//
// Verbs:
//   run              one experiment config, artifacts to the output dir
//   sweep            repeat a config along one axis, emit sweep.csv
//   gen-data         reproducible task files (overlap/ipr JSON, chemical CSV)
//   validate-config  parse + validate a config, print its hash
//
// Exit codes: 0 success, 1 configuration/data error, 2 runtime failure.
// Errors go to stderr as one JSON object.
//

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "qcn/experiment.hpp"
#include "qcn/io.hpp"

namespace {

qcn::json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw qcn::DataError("cannot open " + path);
    try {
        return qcn::json::parse(in);
    } catch (const qcn::json::parse_error& e) {
        throw qcn::DataError("invalid JSON in " + path + ": " + e.what());
    }
}

std::filesystem::path resolve_output_dir(const qcn::ExperimentConfig& cfg,
                                         const std::string& flag_value) {
    if (!flag_value.empty()) return flag_value;
    if (const char* env = std::getenv("QCN_OUTPUT_DIR")) {
        if (env[0] != '\0') return env;
    }
    return cfg.output_dir;
}

void print_error(const std::string& type, const std::string& message) {
    std::cerr << qcn::json{{"error", {{"type", type}, {"message", message}}}}
                     .dump()
              << std::endl;
}

qcn::json summary_json(const qcn::RunSummary& s) {
    return qcn::json{
        {"macro_P", qcn::summary_stat_to_json(s.macro_precision)},
        {"macro_R", qcn::summary_stat_to_json(s.macro_recall)},
        {"accuracy", qcn::summary_stat_to_json(s.accuracy)},
        {"failed_repetitions", s.failed}};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"quantum transport classification networks"};
    app.require_subcommand(1);

    std::string config_path, output_dir;
    auto* run_cmd = app.add_subcommand("run", "run one experiment config");
    run_cmd->add_option("-c,--config", config_path, "config JSON file")
        ->required();
    run_cmd->add_option("-o,--output-dir", output_dir,
                        "override the output directory");

    std::string axis;
    std::vector<double> values;
    auto* sweep_cmd =
        app.add_subcommand("sweep", "run a config along one axis");
    sweep_cmd->add_option("-c,--config", config_path, "config JSON file")
        ->required();
    sweep_cmd
        ->add_option("-a,--axis", axis,
                     "dephasing_rate | hidden_size | ts_size")
        ->required();
    sweep_cmd->add_option("-v,--values", values, "axis values")
        ->required()
        ->delimiter(',');
    sweep_cmd->add_option("-o,--output-dir", output_dir,
                          "override the output directory");

    std::string kind, out_path, params_text = "{}";
    std::uint64_t seed = 1;
    auto* gen_cmd = app.add_subcommand("gen-data", "emit a task data file");
    gen_cmd->add_option("-k,--kind", kind, "overlap | ipr | chemical")
        ->required();
    gen_cmd->add_option("-o,--out", out_path, "output file")->required();
    gen_cmd->add_option("-s,--seed", seed, "generator seed");
    gen_cmd->add_option("-p,--params", params_text,
                        "generator parameters as inline JSON");

    auto* validate_cmd =
        app.add_subcommand("validate-config", "check a config file");
    validate_cmd->add_option("-c,--config", config_path, "config JSON file")
        ->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run_cmd->parsed()) {
            const qcn::ExperimentConfig cfg =
                qcn::parse_experiment_config(load_json_file(config_path));
            const auto outdir = resolve_output_dir(cfg, output_dir);
            const qcn::RunResult result = qcn::run(cfg, outdir);
            std::cout << qcn::json{{"output_dir", outdir.string()},
                                   {"config_hash", qcn::config_hash(cfg)},
                                   {"summary", summary_json(result.summary)}}
                             .dump(2)
                      << std::endl;
        } else if (sweep_cmd->parsed()) {
            const qcn::ExperimentConfig cfg =
                qcn::parse_experiment_config(load_json_file(config_path));
            const auto outdir = resolve_output_dir(cfg, output_dir);
            const qcn::SweepAxis sweep_axis = qcn::parse_sweep_axis(axis);
            qcn::sweep(cfg, sweep_axis, values, outdir);
            std::cout << qcn::json{{"output_dir", outdir.string()},
                                   {"config_hash", qcn::config_hash(cfg)},
                                   {"rows", values.size()}}
                             .dump(2)
                      << std::endl;
        } else if (gen_cmd->parsed()) {
            qcn::json params;
            try {
                params = qcn::json::parse(params_text);
            } catch (const qcn::json::parse_error& e) {
                throw qcn::ConfigError(std::string("--params: ") + e.what());
            }
            qcn::gen_data(kind, params, seed, out_path);
            std::cout << qcn::json{{"out", out_path}, {"seed", seed}}.dump(2)
                      << std::endl;
        } else if (validate_cmd->parsed()) {
            const qcn::ExperimentConfig cfg =
                qcn::parse_experiment_config(load_json_file(config_path));
            std::cout << qcn::json{{"ok", true},
                                   {"config_hash", qcn::config_hash(cfg)}}
                             .dump(2)
                      << std::endl;
        }
    } catch (const qcn::ConfigError& e) {
        print_error("config", e.what());
        return 1;
    } catch (const qcn::DataError& e) {
        print_error("data", e.what());
        return 1;
    } catch (const qcn::InvalidArgument& e) {
        print_error("invalid_argument", e.what());
        return 1;
    } catch (const qcn::Error& e) {
        print_error("runtime", e.what());
        return 2;
    } catch (const std::exception& e) {
        print_error("internal", e.what());
        return 2;
    }
    return 0;
}
