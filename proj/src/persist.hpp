#pragma once

#include <filesystem>
#include <string>

#include "dataset.hpp"
#include "distill.hpp"
#include "ensemble.hpp"
#include "gbt.hpp"
#include "mlp.hpp"
#include "model.hpp"
#include "preprocess.hpp"

#include <nlohmann/json_fwd.hpp>

namespace tkd::persist {

inline constexpr int kSchemaVersion = 1;

// All writes go through a temp file + rename so readers never observe a
// partial artifact.
void write_text_atomic(const std::filesystem::path& path, const std::string& contents);
void write_json_atomic(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& path);

// FNV-1a over a canonical JSON dump; stamped into artifacts as the producing
// config's fingerprint.
std::uint64_t config_hash(const nlohmann::json& j);

// Models (JSON). Ensembles are a manifest referencing member files written
// next to it.
void save_mlp(const nn::MlpModel& model, const std::filesystem::path& path);
nn::MlpModel load_mlp(const std::filesystem::path& path);
void save_gbt(const gbt::GbtModel& model, const std::filesystem::path& path);
gbt::GbtModel load_gbt(const std::filesystem::path& path);
void save_ensemble(const ensemble::EnsembleModel& model, const std::filesystem::path& path);
void save_model(const Model& model, const std::filesystem::path& path);
ModelPtr load_model(const std::filesystem::path& path);

// Datasets and soft labels (binary, little-endian 64-bit floats).
void save_dataset(const data::TemporalDataset& ds, const std::filesystem::path& path,
                  std::uint64_t config_hash = 0);
data::TemporalDataset load_dataset(const std::filesystem::path& path);
void save_soft_labels(const distill::SoftLabelMatrix& soft, const std::filesystem::path& path);
distill::SoftLabelMatrix load_soft_labels(const std::filesystem::path& path);

// Fitted preprocessor (JSON).
void save_preprocessor(const data::FittedPreprocessor& prep, const std::filesystem::path& path);
data::FittedPreprocessor load_preprocessor(const std::filesystem::path& path);

// Teacher registry directory: registry/period_<t>/model.json plus a
// manifest.json index.
void save_registry(const distill::TeacherRegistry& registry, const std::filesystem::path& dir);
distill::TeacherRegistry load_registry(const std::filesystem::path& dir);

}  // namespace tkd::persist
