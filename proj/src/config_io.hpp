#pragma once

#include <nlohmann/json_fwd.hpp>

#include "drift.hpp"
#include "gbt.hpp"
#include "harness.hpp"
#include "mlp.hpp"
#include "preprocess.hpp"

namespace tkd::config {

// JSON bindings for every user-facing config block. `from` functions accept
// partial objects and fill the gaps with defaults; unknown keys are an error
// so typos do not silently fall back.

nlohmann::json to_json(const nn::MlpConfig& cfg);
nn::MlpConfig mlp_from_json(const nlohmann::json& j);

nlohmann::json to_json(const gbt::GbtConfig& cfg);
gbt::GbtConfig gbt_from_json(const nlohmann::json& j);

nlohmann::json to_json(const distill::TkdLossConfig& cfg);
distill::TkdLossConfig loss_from_json(const nlohmann::json& j);

nlohmann::json to_json(const data::DriftGeneratorConfig& cfg);
data::DriftGeneratorConfig drift_from_json(const nlohmann::json& j);

data::PreprocessSpec preprocess_spec_from_json(const nlohmann::json& j);

// Everything but the data source, which the workflow layer resolves.
nlohmann::json to_json(const harness::ExperimentConfig& cfg);
harness::ExperimentConfig experiment_from_json(const nlohmann::json& j);

}  // namespace tkd::config
