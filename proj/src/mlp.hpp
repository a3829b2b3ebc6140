#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dataset.hpp"
#include "distill.hpp"
#include "matrix.hpp"
#include "model.hpp"

namespace tkd::nn {

struct MlpConfig {
  std::vector<std::size_t> hidden_widths{400, 400};
  double keep_prob = 0.5;        // inverted dropout on hidden activations
  double learning_rate = 0.01;
  std::size_t batch_size = 512;
  std::size_t max_epochs = 50;
  std::size_t patience = 5;      // early-stop patience on validation AUPRC
  double momentum = 0.0;         // classical momentum; 0 = plain SGD
  double bn_momentum = 0.9;      // running-statistics decay
  std::uint64_t seed = 0;

  void validate() const;
};

struct DenseLayer {
  Matrix w;
  std::vector<double> b;
};

// Batch normalization after the first hidden layer. Normalization uses the
// biased batch variance in training and the running statistics at inference.
struct BatchNormLayer {
  std::vector<double> gamma;
  std::vector<double> beta;
  std::vector<double> running_mean;
  std::vector<double> running_var;
  double eps = 1e-5;
};

enum class BnMode { batch, running };

class MlpModel : public Model {
 public:
  MlpModel() = default;

  // He-uniform weights, zero biases, identity batch-norm, seeded by cfg.seed.
  static MlpModel initialize(const MlpConfig& cfg, std::size_t input_dim);

  // Inference: running statistics, no dropout.
  Matrix predict_proba(const Matrix& x) const override;

  // Training mode uses batch statistics and applies dropout masks drawn from
  // dropout_seed (skipped when keep_prob is 1). Does not touch the running
  // statistics; the train loop updates those explicitly.
  Matrix forward(const Matrix& x, bool training, std::uint64_t dropout_seed) const;

  std::size_t feature_count() const override { return input_dim_; }
  std::string kind() const override { return "mlp"; }

  const MlpConfig& config() const { return config_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& layers() { return layers_; }
  const BatchNormLayer& batch_norm() const { return bn_; }
  BatchNormLayer& batch_norm() { return bn_; }

  // Flat view over every trainable tensor, used by SGD, serialization, and
  // the finite-difference checks.
  struct ParamRef {
    std::string name;
    double* data;
    std::size_t size;
  };
  std::vector<ParamRef> parameters();

  void set_input_dim(std::size_t d) { input_dim_ = d; }
  void set_config(const MlpConfig& cfg) { config_ = cfg; }

 private:
  friend struct ForwardPass;
  MlpConfig config_;
  std::size_t input_dim_ = 0;
  std::vector<DenseLayer> layers_;  // hidden layers then the 2-wide output
  BatchNormLayer bn_;
};

struct Gradients {
  std::vector<DenseLayer> layers;  // same shapes as the model's layers
  std::vector<double> bn_gamma;
  std::vector<double> bn_beta;
};

struct BackwardResult {
  Gradients grads;
  double loss = 0.0;
  Matrix probs;
  // First-hidden-layer activation statistics of this batch (batch mode only);
  // the train loop folds these into the running estimates.
  std::vector<double> bn_batch_mean;
  std::vector<double> bn_batch_var;
};

// Gradients of the configured loss for one batch: plain cross-entropy when
// `soft` is null or empty, otherwise the composite hard/soft-label loss.
// bn_mode selects batch vs running statistics (and the matching backward
// path); dropout is reproduced from dropout_seed when enabled.
BackwardResult backward(const MlpModel& model, const Matrix& x, const std::vector<int>& labels,
                        const std::vector<distill::SoftLabelMatrix>* soft,
                        const distill::TkdLossConfig& loss_cfg, BnMode bn_mode,
                        bool apply_dropout, std::uint64_t dropout_seed);

struct TrainLogEntry {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  std::optional<double> val_auprc;
  double seconds = 0.0;
};

struct TrainResult {
  MlpModel model;
  std::vector<TrainLogEntry> log;
};

// Minibatch SGD with per-epoch shuffling. Stops early when validation AUPRC
// has not improved for `patience` epochs and returns the best-validation
// checkpoint. Teachers, when given, must align row-for-row with `train_ds`.
TrainResult train(const MlpConfig& cfg, const data::TemporalDataset& train_ds,
                  const data::TemporalDataset* validation,
                  const std::vector<distill::SoftLabelMatrix>* teachers,
                  const distill::TkdLossConfig& loss_cfg);

}  // namespace tkd::nn
