#include "tkd/tkd.h"

#include <cstring>
#include <string>

#include <nlohmann/json.hpp>

#include "dataset.hpp"
#include "error.hpp"
#include "metrics.hpp"
#include "model.hpp"
#include "persist.hpp"
#include "workflows.hpp"

struct tkd_model_s {
  tkd::ModelPtr model;
};

struct tkd_dataset_s {
  tkd::data::TemporalDataset dataset;
};

namespace {

thread_local std::string g_last_error;

void set_error(const std::string& message) { g_last_error = message; }

// Runs `fn` and converts exceptions into error codes + the thread-local
// message.
template <typename Fn>
int guarded(Fn&& fn) {
  try {
    g_last_error.clear();
    return fn();
  } catch (const tkd::Error& e) {
    set_error(e.what());
    if (e.module() == "persistence") return TKD_ERR_IO;
    if (e.module() == "config" || e.module() == "workflows") return TKD_ERR_CONFIG;
    return TKD_ERR_RUNTIME;
  } catch (const std::exception& e) {
    set_error(e.what());
    return TKD_ERR_RUNTIME;
  } catch (...) {
    set_error("unknown error");
    return TKD_ERR_RUNTIME;
  }
}

int require_arg(bool ok, const char* message) {
  if (!ok) {
    set_error(message);
    return TKD_ERR_INVALID_ARGUMENT;
  }
  return TKD_OK;
}

char* copy_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

using WorkflowFn = nlohmann::json (*)(const nlohmann::json&, const std::filesystem::path&);

int run_workflow(WorkflowFn fn, const char* config_json, const char* out_dir,
                 char** summary_json) {
  if (int rc = require_arg(config_json != nullptr && out_dir != nullptr,
                           "config_json and out_dir are required");
      rc != TKD_OK) {
    return rc;
  }
  return guarded([&]() {
    nlohmann::json config =
        nlohmann::json::parse(config_json, nullptr, /*allow_exceptions=*/false);
    if (config.is_discarded()) {
      throw tkd::Error("config", "config_json is not valid JSON");
    }
    const nlohmann::json summary = fn(config, out_dir);
    if (summary_json != nullptr) *summary_json = copy_string(summary.dump(2));
    return TKD_OK;
  });
}

std::vector<int> to_label_vector(const int32_t* labels, int64_t n) {
  std::vector<int> out(static_cast<std::size_t>(n));
  for (int64_t i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = labels[i];
  return out;
}

}  // namespace

extern "C" {

const char* tkd_version(void) { return "1.0.0"; }

const char* tkd_last_error(void) { return g_last_error.c_str(); }

void tkd_string_free(char* s) { delete[] s; }

int tkd_dataset_load(const char* path, tkd_dataset_t** out) {
  if (int rc = require_arg(path != nullptr && out != nullptr, "path and out are required");
      rc != TKD_OK) {
    return rc;
  }
  return guarded([&]() {
    auto* handle = new tkd_dataset_s{tkd::persist::load_dataset(path)};
    *out = handle;
    return TKD_OK;
  });
}

int tkd_dataset_info(const tkd_dataset_t* dataset, tkd_dataset_info_t* out) {
  if (int rc = require_arg(dataset != nullptr && out != nullptr, "dataset and out are required");
      rc != TKD_OK) {
    return rc;
  }
  out->period = dataset->dataset.period;
  out->rows = static_cast<int64_t>(dataset->dataset.rows());
  out->cols = static_cast<int64_t>(dataset->dataset.cols());
  out->positives = static_cast<int64_t>(dataset->dataset.positives());
  out->has_labels = dataset->dataset.has_labels() ? 1 : 0;
  return TKD_OK;
}

int tkd_dataset_features(const tkd_dataset_t* dataset, double* out, size_t capacity) {
  if (int rc = require_arg(dataset != nullptr && out != nullptr, "dataset and out are required");
      rc != TKD_OK) {
    return rc;
  }
  const auto& data = dataset->dataset.x.data();
  if (int rc = require_arg(capacity >= data.size(), "output buffer too small"); rc != TKD_OK) {
    return rc;
  }
  std::memcpy(out, data.data(), data.size() * sizeof(double));
  return TKD_OK;
}

int tkd_dataset_labels(const tkd_dataset_t* dataset, int32_t* out, size_t capacity) {
  if (int rc = require_arg(dataset != nullptr && out != nullptr, "dataset and out are required");
      rc != TKD_OK) {
    return rc;
  }
  if (int rc = require_arg(dataset->dataset.has_labels(), "dataset has no labels");
      rc != TKD_OK) {
    return rc;
  }
  const auto& labels = dataset->dataset.labels;
  if (int rc = require_arg(capacity >= labels.size(), "output buffer too small"); rc != TKD_OK) {
    return rc;
  }
  for (std::size_t i = 0; i < labels.size(); ++i) out[i] = labels[i];
  return TKD_OK;
}

void tkd_dataset_free(tkd_dataset_t* dataset) { delete dataset; }

int tkd_model_load(const char* path, tkd_model_t** out) {
  if (int rc = require_arg(path != nullptr && out != nullptr, "path and out are required");
      rc != TKD_OK) {
    return rc;
  }
  return guarded([&]() {
    auto* handle = new tkd_model_s{tkd::persist::load_model(path)};
    *out = handle;
    return TKD_OK;
  });
}

int tkd_model_save(const tkd_model_t* model, const char* path) {
  if (int rc = require_arg(model != nullptr && path != nullptr, "model and path are required");
      rc != TKD_OK) {
    return rc;
  }
  return guarded([&]() {
    tkd::persist::save_model(*model->model, path);
    return TKD_OK;
  });
}

int tkd_model_kind(const tkd_model_t* model, char* buffer, size_t capacity) {
  if (int rc = require_arg(model != nullptr && buffer != nullptr, "model and buffer are required");
      rc != TKD_OK) {
    return rc;
  }
  const std::string kind = model->model->kind();
  if (int rc = require_arg(capacity > kind.size(), "buffer too small"); rc != TKD_OK) {
    return rc;
  }
  std::memcpy(buffer, kind.c_str(), kind.size() + 1);
  return TKD_OK;
}

int tkd_model_feature_count(const tkd_model_t* model, int64_t* out) {
  if (int rc = require_arg(model != nullptr && out != nullptr, "model and out are required");
      rc != TKD_OK) {
    return rc;
  }
  *out = static_cast<int64_t>(model->model->feature_count());
  return TKD_OK;
}

int tkd_model_predict_positive(const tkd_model_t* model, const double* features, int64_t rows,
                               int64_t cols, double* out_scores) {
  if (int rc = require_arg(model != nullptr && features != nullptr && out_scores != nullptr,
                           "model, features and out_scores are required");
      rc != TKD_OK) {
    return rc;
  }
  if (int rc = require_arg(rows > 0 && cols > 0, "rows and cols must be positive");
      rc != TKD_OK) {
    return rc;
  }
  return guarded([&]() {
    tkd::Matrix x(static_cast<std::size_t>(rows), static_cast<std::size_t>(cols));
    std::memcpy(x.data().data(), features,
                static_cast<std::size_t>(rows * cols) * sizeof(double));
    const std::vector<double> scores = tkd::positive_scores(*model->model, x);
    std::memcpy(out_scores, scores.data(), scores.size() * sizeof(double));
    return TKD_OK;
  });
}

void tkd_model_free(tkd_model_t* model) { delete model; }

int tkd_auprc(const double* scores, const int32_t* labels, int64_t n, double* out) {
  if (int rc = require_arg(scores != nullptr && labels != nullptr && out != nullptr && n > 0,
                           "scores, labels and out are required");
      rc != TKD_OK) {
    return rc;
  }
  return guarded([&]() {
    const std::vector<int> y = to_label_vector(labels, n);
    *out = tkd::metrics::auprc({scores, static_cast<std::size_t>(n)}, y);
    return TKD_OK;
  });
}

int tkd_auroc(const double* scores, const int32_t* labels, int64_t n, double* out) {
  if (int rc = require_arg(scores != nullptr && labels != nullptr && out != nullptr && n > 0,
                           "scores, labels and out are required");
      rc != TKD_OK) {
    return rc;
  }
  return guarded([&]() {
    const std::vector<int> y = to_label_vector(labels, n);
    *out = tkd::metrics::auroc({scores, static_cast<std::size_t>(n)}, y);
    return TKD_OK;
  });
}

int tkd_cmd_synth(const char* config_json, const char* out_dir, char** summary_json) {
  return run_workflow(&tkd::workflows::cmd_synth, config_json, out_dir, summary_json);
}

int tkd_cmd_preprocess(const char* config_json, const char* out_dir, char** summary_json) {
  return run_workflow(&tkd::workflows::cmd_preprocess, config_json, out_dir, summary_json);
}

int tkd_cmd_train(const char* config_json, const char* out_dir, char** summary_json) {
  return run_workflow(&tkd::workflows::cmd_train, config_json, out_dir, summary_json);
}

int tkd_cmd_distill(const char* config_json, const char* out_dir, char** summary_json) {
  return run_workflow(&tkd::workflows::cmd_distill, config_json, out_dir, summary_json);
}

int tkd_cmd_eval(const char* config_json, const char* out_dir, char** summary_json) {
  return run_workflow(&tkd::workflows::cmd_eval, config_json, out_dir, summary_json);
}

int tkd_cmd_experiment(const char* config_json, const char* out_dir, char** summary_json) {
  return run_workflow(&tkd::workflows::cmd_experiment, config_json, out_dir, summary_json);
}

}  // extern "C"
