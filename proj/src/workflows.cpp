#include "workflows.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "config_io.hpp"
#include "error.hpp"
#include "persist.hpp"
#include "raw_table.hpp"

namespace tkd::workflows {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string period_filename(int period) {
  return "period_" + std::to_string(period) + ".bin";
}

json write_period_files(const std::vector<data::TemporalDataset>& periods, const fs::path& out_dir,
                        std::uint64_t hash) {
  json manifest_periods = json::array();
  for (const auto& ds : periods) {
    const std::string filename = period_filename(ds.period);
    persist::save_dataset(ds, out_dir / filename, hash);
    manifest_periods.push_back(json{{"period", ds.period},
                                    {"path", filename},
                                    {"rows", ds.rows()},
                                    {"cols", ds.cols()},
                                    {"positives", ds.positives()},
                                    {"has_labels", ds.has_labels()}});
  }
  json manifest{{"schema_version", persist::kSchemaVersion},
                {"kind", "dataset_manifest"},
                {"config_hash", hash},
                {"periods", manifest_periods}};
  persist::write_json_atomic(out_dir / "manifest.json", manifest);
  return manifest;
}

std::vector<data::TemporalDataset> load_manifest_periods(const fs::path& manifest_path) {
  const json manifest = persist::read_json(manifest_path);
  require(manifest.value("kind", std::string()) == "dataset_manifest", "workflows",
          "not a dataset manifest: " + manifest_path.string());
  std::vector<data::TemporalDataset> periods;
  for (const auto& pj : manifest.at("periods")) {
    periods.push_back(persist::load_dataset(manifest_path.parent_path() /
                                            pj.at("path").get<std::string>()));
  }
  std::sort(periods.begin(), periods.end(),
            [](const auto& a, const auto& b) { return a.period < b.period; });
  return periods;
}

// Data source for train/distill/experiment: either an existing manifest or an
// inline generator block.
std::vector<data::TemporalDataset> resolve_data(const json& config) {
  require(config.contains("data"), "workflows", "config needs a 'data' section");
  const json& data_cfg = config.at("data");
  if (data_cfg.contains("manifest")) {
    return load_manifest_periods(data_cfg.at("manifest").get<std::string>());
  }
  if (data_cfg.contains("generator")) {
    return data::generate_drift(config::drift_from_json(data_cfg.at("generator")));
  }
  throw Error("workflows", "data section needs either 'manifest' or 'generator'");
}

json train_log_json(const std::vector<nn::TrainLogEntry>& log) {
  json out = json::array();
  for (const auto& entry : log) {
    json row{{"epoch", entry.epoch}, {"train_loss", entry.train_loss}, {"seconds", entry.seconds}};
    row["val_auprc"] = entry.val_auprc.has_value() ? json(*entry.val_auprc) : json(nullptr);
    out.push_back(std::move(row));
  }
  return out;
}

// train/distill configs carry command-specific keys next to the shared
// harness block; pick out just the harness ones.
json harness_subset(const json& config) {
  json out = json::object();
  for (const char* key :
       {"candidates", "runs", "base_seed", "jobs", "loss", "rebalance_target",
        "validation_fraction", "mlp", "gbt", "latest_slice_controls", "extend_timing_periods"}) {
    if (config.contains(key)) out[key] = config.at(key);
  }
  return out;
}

harness::Candidate student_kind(const json& config, const char* key) {
  const std::string kind = config.value(key, std::string("ensemble"));
  if (kind == "mlp") return harness::Candidate::mlp;
  if (kind == "gbt") return harness::Candidate::xg;
  if (kind == "ensemble") return harness::Candidate::mlp_xg;
  throw Error("workflows", std::string("unknown model kind '") + kind + "'");
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

void write_runs_csv(const std::vector<harness::RunRecord>& runs, const fs::path& path) {
  std::ostringstream out;
  out << "candidate,role,experiment_period,run,seed,test_period,auprc,auroc,n_samples,"
         "n_positive,train_seconds,soft_label_seconds,train_rows\n";
  out.precision(17);
  for (const auto& r : runs) {
    out << csv_escape(r.candidate) << ',' << r.role << ',' << r.experiment_period << ',' << r.run
        << ',' << r.seed << ',' << r.test_period << ',' << r.auprc << ',' << r.auroc << ','
        << r.n_samples << ',' << r.n_positive << ',' << r.train_seconds << ','
        << r.soft_label_seconds << ',' << r.train_rows << '\n';
  }
  persist::write_text_atomic(path, out.str());
}

void write_timing_csv(const std::vector<harness::TimingRecord>& timing, const fs::path& path) {
  std::ostringstream out;
  out << "candidate,role,train_period,run,train_seconds,soft_label_seconds,train_rows\n";
  out.precision(17);
  for (const auto& t : timing) {
    out << csv_escape(t.candidate) << ',' << t.role << ',' << t.train_period << ',' << t.run << ','
        << t.train_seconds << ',' << t.soft_label_seconds << ',' << t.train_rows << '\n';
  }
  persist::write_text_atomic(path, out.str());
}

}  // namespace

json cmd_synth(const json& config, const fs::path& out_dir) {
  require(config.contains("generator"), "workflows", "synth config needs a 'generator' section");
  const data::DriftGeneratorConfig gen = config::drift_from_json(config.at("generator"));
  const std::vector<data::TemporalDataset> periods = data::generate_drift(gen);
  fs::create_directories(out_dir);
  const std::uint64_t hash = persist::config_hash(config::to_json(gen));
  const json manifest = write_period_files(periods, out_dir, hash);
  return json{{"command", "synth"},
              {"out_dir", out_dir.string()},
              {"periods", periods.size()},
              {"samples_per_period", gen.samples_per_period},
              {"manifest", (out_dir / "manifest.json").string()},
              {"files", manifest.at("periods")}};
}

json cmd_preprocess(const json& config, const fs::path& out_dir) {
  require(config.contains("input_csv"), "workflows", "preprocess config needs 'input_csv'");
  json schema_json;
  if (config.contains("schema_file")) {
    schema_json = persist::read_json(config.at("schema_file").get<std::string>());
  } else {
    require(config.contains("schema"), "workflows",
            "preprocess config needs 'schema' or 'schema_file'");
    schema_json = config.at("schema");
  }
  const data::TableSchema schema = data::schema_from_json(schema_json);
  const data::RawTable table = load_csv(config.at("input_csv").get<std::string>(), schema);

  data::PreprocessSpec spec;
  if (config.contains("preprocess")) {
    spec = config::preprocess_spec_from_json(config.at("preprocess"));
  }

  std::set<int> training_periods;
  if (config.contains("training_periods")) {
    for (const auto& p : config.at("training_periods")) training_periods.insert(p.get<int>());
  } else {
    for (const auto& row : table.rows) training_periods.insert(row.period);
  }

  const data::FittedPreprocessor prep = fit_preprocessor(table, spec, training_periods);
  const std::vector<data::TemporalDataset> periods = transform(table, prep);

  fs::create_directories(out_dir);
  persist::save_preprocessor(prep, out_dir / "preprocessor.json");
  const std::uint64_t hash = persist::config_hash(config);
  write_period_files(periods, out_dir, hash);

  json period_rows = json::array();
  for (const auto& ds : periods) {
    period_rows.push_back(json{{"period", ds.period},
                               {"rows", ds.rows()},
                               {"has_labels", ds.has_labels()}});
  }
  return json{{"command", "preprocess"},
              {"out_dir", out_dir.string()},
              {"features", prep.feature_count()},
              {"periods", period_rows},
              {"preprocessor", (out_dir / "preprocessor.json").string()}};
}

json cmd_train(const json& config, const fs::path& out_dir) {
  const std::vector<data::TemporalDataset> periods = resolve_data(config);
  harness::ExperimentConfig cfg = config::experiment_from_json(harness_subset(config));
  const harness::Candidate kind = student_kind(config, "model");
  int p = config.value("train_through_period", static_cast<int>(periods.size()) - 1);
  require(p >= 0 && p < static_cast<int>(periods.size()), "workflows",
          "train_through_period out of range");
  const std::uint64_t seed = config.value("seed", cfg.base_seed);

  const harness::TrainedCandidate trained = harness::run_baseline(cfg, periods, p, kind, seed);
  fs::create_directories(out_dir);
  persist::save_model(*trained.model, out_dir / "model.json");
  if (!trained.mlp_log.empty()) {
    persist::write_json_atomic(out_dir / "train_log.json", train_log_json(trained.mlp_log));
  }
  return json{{"command", "train"},
              {"model", (out_dir / "model.json").string()},
              {"model_kind", trained.model->kind()},
              {"trained_through_period", p},
              {"train_rows", trained.train_rows},
              {"train_seconds", trained.train_seconds}};
}

json cmd_distill(const json& config, const fs::path& out_dir) {
  const std::vector<data::TemporalDataset> periods = resolve_data(config);
  harness::ExperimentConfig cfg = config::experiment_from_json(harness_subset(config));
  const harness::Candidate base = student_kind(config, "student");
  const harness::Candidate kind = base == harness::Candidate::mlp  ? harness::Candidate::mlp_tkd
                                  : base == harness::Candidate::xg ? harness::Candidate::xg_tkd
                                                                   : harness::Candidate::mlp_xg_tkd;
  require(config.contains("registry"), "workflows", "distill config needs 'registry'");
  const fs::path registry_dir = config.at("registry").get<std::string>();
  distill::TeacherRegistry registry;
  if (fs::exists(registry_dir / "manifest.json")) {
    registry = persist::load_registry(registry_dir);
  }
  require(config.contains("period"), "workflows", "distill config needs 'period'");
  const int p = config.at("period").get<int>();
  const std::uint64_t seed = config.value("seed", cfg.base_seed);

  distill::TeacherRegistry* register_into = nullptr;
  distill::TeacherRegistry updated = registry;
  if (config.value("register", false)) register_into = &updated;

  const harness::TrainedCandidate trained =
      harness::run_tkd(cfg, periods, p, kind, registry, seed, register_into);
  fs::create_directories(out_dir);
  persist::save_model(*trained.model, out_dir / "model.json");
  if (!trained.mlp_log.empty()) {
    persist::write_json_atomic(out_dir / "train_log.json", train_log_json(trained.mlp_log));
  }
  if (register_into != nullptr) persist::save_registry(updated, registry_dir);

  return json{{"command", "distill"},
              {"model", (out_dir / "model.json").string()},
              {"model_kind", trained.model->kind()},
              {"period", p},
              {"teachers_used", registry.size()},
              {"train_rows", trained.train_rows},
              {"train_seconds", trained.train_seconds},
              {"soft_label_seconds", trained.soft_label_seconds},
              {"registered", register_into != nullptr}};
}

json cmd_eval(const json& config, const fs::path& out_dir) {
  require(config.contains("model") && config.contains("data"), "workflows",
          "eval config needs 'model' and 'data' paths");
  const ModelPtr model = persist::load_model(config.at("model").get<std::string>());
  const data::TemporalDataset ds = persist::load_dataset(config.at("data").get<std::string>());
  require(ds.has_labels(), "workflows", "evaluation data has no labels");

  const std::vector<double> scores = positive_scores(*model, ds.x);
  const metrics::EvalReport eval = metrics::evaluate(scores, ds.labels);

  json curve = json::array();
  for (const auto& p : eval.pr_points) {
    curve.push_back(json{{"threshold", p.threshold}, {"precision", p.precision}, {"recall", p.recall}});
  }
  json report{{"schema_version", persist::kSchemaVersion},
              {"kind", "eval_report"},
              {"model", config.at("model").get<std::string>()},
              {"data", config.at("data").get<std::string>()},
              {"period", ds.period},
              {"auprc", eval.auprc},
              {"auroc", eval.auroc},
              {"n_samples", eval.n_samples},
              {"n_positive", eval.n_positive},
              {"pr_curve", curve}};
  fs::create_directories(out_dir);
  persist::write_json_atomic(out_dir / "eval_report.json", report);
  return json{{"command", "eval"},
              {"report", (out_dir / "eval_report.json").string()},
              {"auprc", eval.auprc},
              {"auroc", eval.auroc},
              {"n_samples", eval.n_samples},
              {"n_positive", eval.n_positive}};
}

json cmd_experiment(const json& config, const fs::path& out_dir) {
  const std::vector<data::TemporalDataset> periods = resolve_data(config);
  const harness::ExperimentConfig cfg = config::experiment_from_json(config);

  distill::TeacherRegistry registry;
  const harness::ExperimentReport report = harness::run_experiment(cfg, periods, &registry);

  fs::create_directories(out_dir);
  write_runs_csv(report.runs, out_dir / "runs.csv");
  write_timing_csv(report.timing, out_dir / "timing.csv");
  if (!registry.empty()) persist::save_registry(registry, out_dir / "registry");

  json schedule = json::array();
  for (const auto& p : report.schedule.periods) {
    schedule.push_back(json{{"index", p.index},
                            {"training_periods", p.training_periods},
                            {"no_label_period", p.no_label_period},
                            {"testing_periods", p.testing_periods}});
  }
  json means = json::array();
  for (const auto& m : report.mean_auprc) {
    means.push_back(json{{"candidate", m.candidate},
                         {"role", m.role},
                         {"experiment_period", m.experiment_period},
                         {"test_period", m.test_period},
                         {"mean_auprc", m.mean_auprc},
                         {"mean_auroc", m.mean_auroc},
                         {"runs", m.runs}});
  }
  json deltas = json::array();
  for (const auto& d : report.deltas) {
    deltas.push_back(json{{"pair", d.pair},
                          {"comparison", d.comparison},
                          {"experiment_period", d.experiment_period},
                          {"test_period", d.test_period},
                          {"base_auprc", d.base_auprc},
                          {"tkd_auprc", d.tkd_auprc},
                          {"delta", d.delta},
                          {"relative_improvement_pct", d.relative_improvement_pct}});
  }

  // Wall-clock timings live in timing.csv only; the report itself is a pure
  // function of (config, seeds) and stays byte-identical across reruns.
  json report_json{{"schema_version", persist::kSchemaVersion},
                   {"kind", "experiment_report"},
                   {"config_echo", config::to_json(cfg)},
                   {"config_hash", persist::config_hash(config::to_json(cfg))},
                   {"n_periods", report.schedule.n_periods},
                   {"schedule", schedule},
                   {"mean_auprc", means},
                   {"deltas", deltas},
                   {"runs_csv", "runs.csv"},
                   {"timing_csv", "timing.csv"},
                   {"registry", registry.empty() ? json(nullptr) : json("registry")}};
  persist::write_json_atomic(out_dir / "report.json", report_json);

  return json{{"command", "experiment"},
              {"report", (out_dir / "report.json").string()},
              {"runs_csv", (out_dir / "runs.csv").string()},
              {"timing_csv", (out_dir / "timing.csv").string()},
              {"run_rows", report.runs.size()},
              {"delta_rows", report.deltas.size()},
              {"teachers", registry.size()}};
}

}  // namespace tkd::workflows
