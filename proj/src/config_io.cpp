#include "config_io.hpp"

#include <set>

#include <nlohmann/json.hpp>

#include "error.hpp"

namespace tkd::config {

using nlohmann::json;

namespace {

void check_keys(const json& j, const std::set<std::string>& allowed, const char* what) {
  require(j.is_object(), "config", std::string(what) + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    require(allowed.count(key) != 0, "config",
            std::string("unknown key '") + key + "' in " + what);
  }
}

}  // namespace

json to_json(const nn::MlpConfig& cfg) {
  return json{{"hidden_widths", cfg.hidden_widths},
              {"keep_prob", cfg.keep_prob},
              {"learning_rate", cfg.learning_rate},
              {"batch_size", cfg.batch_size},
              {"max_epochs", cfg.max_epochs},
              {"patience", cfg.patience},
              {"momentum", cfg.momentum},
              {"bn_momentum", cfg.bn_momentum},
              {"seed", cfg.seed}};
}

nn::MlpConfig mlp_from_json(const json& j) {
  check_keys(j, {"hidden_widths", "keep_prob", "learning_rate", "batch_size", "max_epochs",
                 "patience", "momentum", "bn_momentum", "seed"},
             "mlp config");
  nn::MlpConfig cfg;
  cfg.hidden_widths = j.value("hidden_widths", cfg.hidden_widths);
  cfg.keep_prob = j.value("keep_prob", cfg.keep_prob);
  cfg.learning_rate = j.value("learning_rate", cfg.learning_rate);
  cfg.batch_size = j.value("batch_size", cfg.batch_size);
  cfg.max_epochs = j.value("max_epochs", cfg.max_epochs);
  cfg.patience = j.value("patience", cfg.patience);
  cfg.momentum = j.value("momentum", cfg.momentum);
  cfg.bn_momentum = j.value("bn_momentum", cfg.bn_momentum);
  cfg.seed = j.value("seed", cfg.seed);
  cfg.validate();
  return cfg;
}

json to_json(const gbt::GbtConfig& cfg) {
  return json{{"max_depth", cfg.max_depth},
              {"n_estimators", cfg.n_estimators},
              {"learning_rate", cfg.learning_rate},
              {"min_child_weight", cfg.min_child_weight},
              {"gamma", cfg.gamma},
              {"reg_alpha", cfg.reg_alpha},
              {"reg_lambda", cfg.reg_lambda},
              {"subsample", cfg.subsample},
              {"colsample_bytree", cfg.colsample_bytree},
              {"seed", cfg.seed},
              {"min_child_weight_scale", cfg.min_child_weight_scale}};
}

gbt::GbtConfig gbt_from_json(const json& j) {
  check_keys(j,
             {"max_depth", "n_estimators", "learning_rate", "min_child_weight", "gamma",
              "reg_alpha", "reg_lambda", "subsample", "colsample_bytree", "seed",
              "min_child_weight_scale"},
             "gbt config");
  gbt::GbtConfig cfg;
  cfg.max_depth = j.value("max_depth", cfg.max_depth);
  cfg.n_estimators = j.value("n_estimators", cfg.n_estimators);
  cfg.learning_rate = j.value("learning_rate", cfg.learning_rate);
  cfg.min_child_weight = j.value("min_child_weight", cfg.min_child_weight);
  cfg.gamma = j.value("gamma", cfg.gamma);
  cfg.reg_alpha = j.value("reg_alpha", cfg.reg_alpha);
  cfg.reg_lambda = j.value("reg_lambda", cfg.reg_lambda);
  cfg.subsample = j.value("subsample", cfg.subsample);
  cfg.colsample_bytree = j.value("colsample_bytree", cfg.colsample_bytree);
  cfg.seed = j.value("seed", cfg.seed);
  cfg.min_child_weight_scale = j.value("min_child_weight_scale", cfg.min_child_weight_scale);
  cfg.validate();
  return cfg;
}

json to_json(const distill::TkdLossConfig& cfg) {
  return json{{"alpha", cfg.alpha},
              {"truncation_k", cfg.truncation_k},
              {"agg", distill::aggregation_name(cfg.agg)},
              {"clip_eps", cfg.clip_eps}};
}

distill::TkdLossConfig loss_from_json(const json& j) {
  check_keys(j, {"alpha", "truncation_k", "agg", "clip_eps"}, "loss config");
  distill::TkdLossConfig cfg;
  cfg.alpha = j.value("alpha", cfg.alpha);
  cfg.truncation_k = j.value("truncation_k", cfg.truncation_k);
  if (j.contains("agg")) cfg.agg = distill::aggregation_from_name(j.at("agg").get<std::string>());
  cfg.clip_eps = j.value("clip_eps", cfg.clip_eps);
  cfg.validate();
  return cfg;
}

namespace {

json component_to_json(const data::MixtureComponent& c) {
  return json{{"mean", c.mean}, {"drift", c.drift}, {"stddev", c.stddev}, {"weight", c.weight}};
}

data::MixtureComponent component_from_json(const json& j) {
  check_keys(j, {"mean", "drift", "stddev", "weight"}, "mixture component");
  data::MixtureComponent c;
  c.mean = j.at("mean").get<std::vector<double>>();
  c.drift = j.value("drift", std::vector<double>());
  c.stddev = j.value("stddev", 1.0);
  c.weight = j.value("weight", 1.0);
  return c;
}

}  // namespace

json to_json(const data::DriftGeneratorConfig& cfg) {
  json fraud = json::array(), nonfraud = json::array(), recurrences = json::array();
  for (const auto& c : cfg.fraud_components) fraud.push_back(component_to_json(c));
  for (const auto& c : cfg.nonfraud_components) nonfraud.push_back(component_to_json(c));
  for (const auto& r : cfg.recurrences) {
    recurrences.push_back(json{{"at_period", r.at_period}, {"from_period", r.from_period}});
  }
  return json{{"n_periods", cfg.n_periods},
              {"samples_per_period", cfg.samples_per_period},
              {"fraud_rate", cfg.fraud_rate},
              {"n_features", cfg.n_features},
              {"fraud_components", fraud},
              {"nonfraud_components", nonfraud},
              {"recurrences", recurrences},
              {"seed", cfg.seed}};
}

data::DriftGeneratorConfig drift_from_json(const json& j) {
  check_keys(j,
             {"n_periods", "samples_per_period", "fraud_rate", "n_features", "fraud_components",
              "nonfraud_components", "recurrences", "seed"},
             "generator config");
  data::DriftGeneratorConfig cfg;
  cfg.n_periods = j.value("n_periods", cfg.n_periods);
  cfg.samples_per_period = j.value("samples_per_period", cfg.samples_per_period);
  cfg.fraud_rate = j.value("fraud_rate", cfg.fraud_rate);
  cfg.n_features = j.value("n_features", cfg.n_features);
  require(j.contains("fraud_components") && j.contains("nonfraud_components"), "config",
          "generator config needs fraud_components and nonfraud_components");
  for (const auto& c : j.at("fraud_components")) {
    cfg.fraud_components.push_back(component_from_json(c));
  }
  for (const auto& c : j.at("nonfraud_components")) {
    cfg.nonfraud_components.push_back(component_from_json(c));
  }
  if (j.contains("recurrences")) {
    for (const auto& r : j.at("recurrences")) {
      check_keys(r, {"at_period", "from_period"}, "recurrence");
      cfg.recurrences.push_back({r.at("at_period").get<int>(), r.at("from_period").get<int>()});
    }
  }
  cfg.seed = j.value("seed", cfg.seed);
  cfg.validate();
  return cfg;
}

data::PreprocessSpec preprocess_spec_from_json(const json& j) {
  check_keys(j, {"columns"}, "preprocess spec");
  data::PreprocessSpec spec;
  if (!j.contains("columns")) return spec;
  for (const auto& cj : j.at("columns")) {
    check_keys(cj, {"name", "transform", "encoding", "null_fill", "frequency_threshold"},
               "preprocess column rule");
    const std::string name = cj.at("name").get<std::string>();
    data::ColumnRule rule;
    const std::string transform = cj.value("transform", std::string("identity"));
    if (transform == "log10") {
      rule.transform = data::Transform::log10;
    } else if (transform == "identity") {
      rule.transform = data::Transform::identity;
    } else {
      throw Error("config", "unknown transform '" + transform + "'");
    }
    const std::string encoding = cj.value("encoding", std::string("none"));
    if (encoding == "one-hot") {
      rule.encoding = data::Encoding::one_hot;
    } else if (encoding == "none") {
      rule.encoding = data::Encoding::none;
    } else {
      throw Error("config", "unknown encoding '" + encoding + "'");
    }
    if (cj.contains("null_fill")) rule.null_fill = cj.at("null_fill").get<double>();
    rule.frequency_threshold = cj.value("frequency_threshold", std::size_t{0});
    spec.rules[name] = rule;
  }
  return spec;
}

json to_json(const harness::ExperimentConfig& cfg) {
  json candidates = json::array();
  for (harness::Candidate c : cfg.candidates) candidates.push_back(harness::candidate_name(c));
  return json{{"candidates", candidates},
              {"runs", cfg.runs},
              {"base_seed", cfg.base_seed},
              {"jobs", cfg.jobs},
              {"loss", to_json(cfg.loss)},
              {"rebalance_target", cfg.rebalance_target},
              {"validation_fraction", cfg.validation_fraction},
              {"mlp", to_json(cfg.mlp)},
              {"gbt", to_json(cfg.gbt)},
              {"latest_slice_controls", cfg.latest_slice_controls},
              {"extend_timing_periods", cfg.extend_timing_periods}};
}

harness::ExperimentConfig experiment_from_json(const json& j) {
  check_keys(j,
             {"candidates", "runs", "base_seed", "jobs", "loss", "rebalance_target",
              "validation_fraction", "mlp", "gbt", "latest_slice_controls",
              "extend_timing_periods", "data"},
             "experiment config");
  harness::ExperimentConfig cfg;
  if (j.contains("candidates")) {
    cfg.candidates.clear();
    for (const auto& name : j.at("candidates")) {
      cfg.candidates.push_back(harness::candidate_from_name(name.get<std::string>()));
    }
  }
  cfg.runs = j.value("runs", cfg.runs);
  cfg.base_seed = j.value("base_seed", cfg.base_seed);
  cfg.jobs = j.value("jobs", cfg.jobs);
  if (j.contains("loss")) cfg.loss = loss_from_json(j.at("loss"));
  cfg.rebalance_target = j.value("rebalance_target", cfg.rebalance_target);
  cfg.validation_fraction = j.value("validation_fraction", cfg.validation_fraction);
  if (j.contains("mlp")) cfg.mlp = mlp_from_json(j.at("mlp"));
  if (j.contains("gbt")) cfg.gbt = gbt_from_json(j.at("gbt"));
  cfg.latest_slice_controls = j.value("latest_slice_controls", cfg.latest_slice_controls);
  cfg.extend_timing_periods = j.value("extend_timing_periods", cfg.extend_timing_periods);
  cfg.validate();
  return cfg;
}

}  // namespace tkd::config
