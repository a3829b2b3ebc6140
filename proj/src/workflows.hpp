#pragma once

#include <filesystem>

#include <nlohmann/json_fwd.hpp>

namespace tkd::workflows {

// One function per CLI subcommand. Each takes the parsed config object,
// writes its artifacts under out_dir, and returns a machine-readable summary.

nlohmann::json cmd_synth(const nlohmann::json& config, const std::filesystem::path& out_dir);
nlohmann::json cmd_preprocess(const nlohmann::json& config, const std::filesystem::path& out_dir);
nlohmann::json cmd_train(const nlohmann::json& config, const std::filesystem::path& out_dir);
nlohmann::json cmd_distill(const nlohmann::json& config, const std::filesystem::path& out_dir);
nlohmann::json cmd_eval(const nlohmann::json& config, const std::filesystem::path& out_dir);
nlohmann::json cmd_experiment(const nlohmann::json& config, const std::filesystem::path& out_dir);

}  // namespace tkd::workflows
