// Command-line front end. All training/evaluation work happens behind the
// shared library's C interface; this binary only parses flags, assembles the
// config JSON, and prints summaries.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "tkd/tkd.h"

namespace {

using nlohmann::json;

struct GlobalOptions {
  std::string config_path;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  bool verbose = false;
};

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in.good()) {
    throw CLI::ValidationError("--config", "cannot open config file '" + path + "'");
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  json config = json::parse(buffer.str(), nullptr, /*allow_exceptions=*/false);
  if (config.is_discarded()) {
    throw CLI::ValidationError("--config", "config file '" + path + "' is not valid JSON");
  }
  return config;
}

using CommandFn = int (*)(const char*, const char*, char**);

int invoke(CommandFn fn, const json& config, const GlobalOptions& global) {
  const std::string config_text = config.dump();
  if (global.verbose) {
    std::cerr << "[tkd] config: " << config_text << "\n[tkd] out: " << global.out_dir << "\n";
  }
  char* summary = nullptr;
  const int rc = fn(config_text.c_str(), global.out_dir.c_str(), &summary);
  if (rc != TKD_OK) {
    std::cerr << "error: " << tkd_last_error() << "\n";
    return 1;
  }
  if (summary != nullptr) {
    std::cout << summary << "\n";
    tkd_string_free(summary);
  }
  return 0;
}

// Flags override config-file fields; the config file fills whatever flags do
// not set.
void apply_common_overrides(json& config, const GlobalOptions& global, const char* seed_key) {
  if (global.seed) config[seed_key] = *global.seed;
  if (global.jobs) config["jobs"] = *global.jobs;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Temporal distillation trainer and rolling-period experiment runner"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(tkd_version()));

  GlobalOptions global;
  app.add_option("--config", global.config_path, "JSON config file")->envname("TKD_CONFIG");
  app.add_option("--out", global.out_dir, "output directory (default: out)");
  app.add_option("--seed", global.seed, "override the config seed");
  app.add_option("--jobs", global.jobs, "parallel runs (default 1)");
  app.add_flag("--verbose", global.verbose, "print the effective config");

  // synth
  auto* synth = app.add_subcommand("synth", "generate synthetic drifting periods");
  std::optional<int> synth_periods;
  std::optional<int> synth_samples;
  synth->add_option("--periods", synth_periods, "number of periods");
  synth->add_option("--samples", synth_samples, "samples per period");
  synth->callback([&]() {
    json config = load_config(global.config_path);
    if (!config.contains("generator")) config["generator"] = json::object();
    if (synth_periods) config["generator"]["n_periods"] = *synth_periods;
    if (synth_samples) config["generator"]["samples_per_period"] = *synth_samples;
    if (global.seed) config["generator"]["seed"] = *global.seed;
    std::exit(invoke(&tkd_cmd_synth, config, global));
  });

  // preprocess
  auto* preprocess = app.add_subcommand("preprocess", "fit and apply tabular preprocessing");
  std::string preprocess_input;
  preprocess->add_option("--input", preprocess_input, "raw CSV file");
  preprocess->callback([&]() {
    json config = load_config(global.config_path);
    if (!preprocess_input.empty()) config["input_csv"] = preprocess_input;
    std::exit(invoke(&tkd_cmd_preprocess, config, global));
  });

  // train
  auto* train = app.add_subcommand("train", "train a model on labeled periods");
  std::string train_model_kind;
  std::optional<int> train_through;
  train->add_option("--model", train_model_kind, "mlp | gbt | ensemble");
  train->add_option("--through-period", train_through, "last training period");
  train->callback([&]() {
    json config = load_config(global.config_path);
    if (!train_model_kind.empty()) config["model"] = train_model_kind;
    if (train_through) config["train_through_period"] = *train_through;
    apply_common_overrides(config, global, "seed");
    std::exit(invoke(&tkd_cmd_train, config, global));
  });

  // distill
  auto* distill = app.add_subcommand("distill", "train a student on the newest period");
  std::optional<int> distill_period;
  std::string distill_registry;
  std::string distill_student;
  bool distill_register = false;
  distill->add_option("--period", distill_period, "target period");
  distill->add_option("--registry", distill_registry, "teacher registry directory");
  distill->add_option("--student", distill_student, "mlp | gbt | ensemble");
  distill->add_flag("--register", distill_register, "add the student to the registry");
  distill->callback([&]() {
    json config = load_config(global.config_path);
    if (distill_period) config["period"] = *distill_period;
    if (!distill_registry.empty()) config["registry"] = distill_registry;
    if (!distill_student.empty()) config["student"] = distill_student;
    if (distill_register) config["register"] = true;
    apply_common_overrides(config, global, "seed");
    std::exit(invoke(&tkd_cmd_distill, config, global));
  });

  // eval
  auto* eval = app.add_subcommand("eval", "score a model on one period file");
  std::string eval_model;
  std::string eval_data;
  eval->add_option("--model", eval_model, "model JSON file");
  eval->add_option("--data", eval_data, "period data file");
  eval->callback([&]() {
    json config = load_config(global.config_path);
    if (!eval_model.empty()) config["model"] = eval_model;
    if (!eval_data.empty()) config["data"] = eval_data;
    std::exit(invoke(&tkd_cmd_eval, config, global));
  });

  // experiment
  auto* experiment = app.add_subcommand("experiment", "run the rolling-period comparison");
  std::optional<int> experiment_runs;
  experiment->add_option("--runs", experiment_runs, "repetitions per candidate");
  experiment->callback([&]() {
    json config = load_config(global.config_path);
    if (experiment_runs) config["runs"] = *experiment_runs;
    apply_common_overrides(config, global, "base_seed");
    std::exit(invoke(&tkd_cmd_experiment, config, global));
  });

  CLI11_PARSE(app, argc, argv);
  return 0;
}
