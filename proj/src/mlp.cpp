#include "mlp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "error.hpp"
#include "metrics.hpp"
#include "rng.hpp"

namespace tkd::nn {

namespace {

constexpr std::size_t kOutputWidth = 2;

void softmax_rows(Matrix& logits) {
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    double* row = logits.row(r);
    double max_logit = row[0];
    for (std::size_t c = 1; c < logits.cols(); ++c) max_logit = std::max(max_logit, row[c]);
    double sum = 0.0;
    for (std::size_t c = 0; c < logits.cols(); ++c) {
      row[c] = std::exp(row[c] - max_logit);
      sum += row[c];
    }
    for (std::size_t c = 0; c < logits.cols(); ++c) row[c] /= sum;
  }
}

void add_bias(Matrix& m, const std::vector<double>& b) {
  for (std::size_t r = 0; r < m.rows(); ++r) {
    double* row = m.row(r);
    for (std::size_t c = 0; c < m.cols(); ++c) row[c] += b[c];
  }
}

std::vector<double> column_sums(const Matrix& m) {
  std::vector<double> sums(m.cols(), 0.0);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const double* row = m.row(r);
    for (std::size_t c = 0; c < m.cols(); ++c) sums[c] += row[c];
  }
  return sums;
}

Matrix relu(const Matrix& z) {
  Matrix a = z;
  for (double& v : a.data()) v = v > 0.0 ? v : 0.0;
  return a;
}

struct BnBatchStats {
  std::vector<double> mean;
  std::vector<double> var;  // biased
};

BnBatchStats batch_stats(const Matrix& a) {
  BnBatchStats stats;
  stats.mean.assign(a.cols(), 0.0);
  stats.var.assign(a.cols(), 0.0);
  const double n = static_cast<double>(a.rows());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    const double* row = a.row(r);
    for (std::size_t c = 0; c < a.cols(); ++c) stats.mean[c] += row[c];
  }
  for (double& m : stats.mean) m /= n;
  for (std::size_t r = 0; r < a.rows(); ++r) {
    const double* row = a.row(r);
    for (std::size_t c = 0; c < a.cols(); ++c) {
      const double d = row[c] - stats.mean[c];
      stats.var[c] += d * d;
    }
  }
  for (double& v : stats.var) v /= n;
  return stats;
}

}  // namespace

void MlpConfig::validate() const {
  require(!hidden_widths.empty(), "nn", "at least one hidden layer required");
  for (std::size_t w : hidden_widths) require(w >= 1, "nn", "hidden width must be positive");
  require(keep_prob > 0.0 && keep_prob <= 1.0, "nn", "keep probability must be in (0, 1]");
  require(learning_rate >= 0.0, "nn", "learning rate must be non-negative");
  require(batch_size >= 1, "nn", "batch size must be positive");
  require(bn_momentum >= 0.0 && bn_momentum < 1.0, "nn", "batch-norm momentum must be in [0, 1)");
  require(momentum >= 0.0 && momentum < 1.0, "nn", "momentum must be in [0, 1)");
}

MlpModel MlpModel::initialize(const MlpConfig& cfg, std::size_t input_dim) {
  cfg.validate();
  require(input_dim >= 1, "nn", "input dimension must be positive");
  MlpModel model;
  model.config_ = cfg;
  model.input_dim_ = input_dim;

  Rng rng(cfg.seed);
  std::size_t fan_in = input_dim;
  std::vector<std::size_t> widths = cfg.hidden_widths;
  widths.push_back(kOutputWidth);
  for (std::size_t width : widths) {
    DenseLayer layer;
    layer.w = Matrix(fan_in, width);
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
    for (double& v : layer.w.data()) v = (rng.uniform01() * 2.0 - 1.0) * limit;
    layer.b.assign(width, 0.0);
    model.layers_.push_back(std::move(layer));
    fan_in = width;
  }

  const std::size_t bn_width = cfg.hidden_widths.front();
  model.bn_.gamma.assign(bn_width, 1.0);
  model.bn_.beta.assign(bn_width, 0.0);
  model.bn_.running_mean.assign(bn_width, 0.0);
  model.bn_.running_var.assign(bn_width, 1.0);
  return model;
}

std::vector<MlpModel::ParamRef> MlpModel::parameters() {
  std::vector<ParamRef> refs;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    refs.push_back({"w" + std::to_string(l), layers_[l].w.data().data(), layers_[l].w.data().size()});
    refs.push_back({"b" + std::to_string(l), layers_[l].b.data(), layers_[l].b.size()});
  }
  refs.push_back({"bn_gamma", bn_.gamma.data(), bn_.gamma.size()});
  refs.push_back({"bn_beta", bn_.beta.data(), bn_.beta.size()});
  return refs;
}

// Everything the backward pass needs from one forward evaluation.
struct ForwardPass {
  Matrix input;
  std::vector<Matrix> pre_activation;    // z per dense layer
  std::vector<Matrix> layer_input;       // what each dense layer consumed
  std::vector<Matrix> dropout_masks;     // per hidden layer; empty if unused
  Matrix bn_xhat;
  BnBatchStats bn_stats;                 // batch mode only
  std::vector<double> bn_inv_std;
  Matrix probs;

  static ForwardPass run(const MlpModel& model, const Matrix& x, BnMode bn_mode,
                         bool apply_dropout, std::uint64_t dropout_seed) {
    const MlpConfig& cfg = model.config();
    require(x.cols() == model.feature_count(), "nn",
            "input has " + std::to_string(x.cols()) + " features, model expects " +
                std::to_string(model.feature_count()));
    require(x.all_finite(), "nn", "non-finite input");

    ForwardPass pass;
    pass.input = x;
    Rng dropout_rng(dropout_seed);
    const bool use_dropout = apply_dropout && cfg.keep_prob < 1.0;

    Matrix current = x;
    const std::size_t n_hidden = cfg.hidden_widths.size();
    for (std::size_t l = 0; l < model.layers().size(); ++l) {
      const DenseLayer& layer = model.layers()[l];
      pass.layer_input.push_back(current);
      Matrix z = matmul(current, layer.w);
      add_bias(z, layer.b);
      pass.pre_activation.push_back(z);

      if (l == model.layers().size() - 1) {
        softmax_rows(z);
        pass.probs = std::move(z);
        break;
      }

      Matrix a = relu(z);
      if (l == 0) {
        // Batch normalization sits between the first activation and dropout.
        const BatchNormLayer& bn = model.batch_norm();
        pass.bn_inv_std.assign(a.cols(), 0.0);
        const std::vector<double>* mean = nullptr;
        const std::vector<double>* var = nullptr;
        if (bn_mode == BnMode::batch) {
          pass.bn_stats = batch_stats(a);
          mean = &pass.bn_stats.mean;
          var = &pass.bn_stats.var;
        } else {
          mean = &bn.running_mean;
          var = &bn.running_var;
        }
        for (std::size_t c = 0; c < a.cols(); ++c) {
          pass.bn_inv_std[c] = 1.0 / std::sqrt((*var)[c] + bn.eps);
        }
        pass.bn_xhat = Matrix(a.rows(), a.cols());
        for (std::size_t r = 0; r < a.rows(); ++r) {
          const double* ar = a.row(r);
          double* xh = pass.bn_xhat.row(r);
          double* out = a.row(r);
          for (std::size_t c = 0; c < a.cols(); ++c) {
            xh[c] = (ar[c] - (*mean)[c]) * pass.bn_inv_std[c];
            out[c] = bn.gamma[c] * xh[c] + bn.beta[c];
          }
        }
      }

      if (use_dropout) {
        Matrix mask(a.rows(), a.cols());
        const double scale = 1.0 / cfg.keep_prob;
        for (std::size_t i = 0; i < mask.data().size(); ++i) {
          mask.data()[i] = dropout_rng.uniform01() < cfg.keep_prob ? scale : 0.0;
        }
        for (std::size_t i = 0; i < a.data().size(); ++i) a.data()[i] *= mask.data()[i];
        pass.dropout_masks.push_back(std::move(mask));
      } else {
        pass.dropout_masks.emplace_back();
      }
      current = std::move(a);
    }
    (void)n_hidden;
    return pass;
  }
};

Matrix MlpModel::predict_proba(const Matrix& x) const {
  return ForwardPass::run(*this, x, BnMode::running, /*apply_dropout=*/false, 0).probs;
}

Matrix MlpModel::forward(const Matrix& x, bool training, std::uint64_t dropout_seed) const {
  return ForwardPass::run(*this, x, training ? BnMode::batch : BnMode::running, training,
                          dropout_seed)
      .probs;
}

namespace {

// dLoss/dlogits for the composite objective. Softmax and both loss terms
// collapse to probability differences.
Matrix loss_logit_gradient(const Matrix& probs, const std::vector<int>& labels,
                           const std::vector<distill::SoftLabelMatrix>* soft,
                           const distill::TkdLossConfig& cfg) {
  const std::size_t n = probs.rows();
  const double inv_n = 1.0 / static_cast<double>(n);
  Matrix grad(n, kOutputWidth);

  const bool has_teachers = soft != nullptr && !soft->empty();
  const double hard_weight = has_teachers ? cfg.alpha : 1.0;

  if (hard_weight > 0.0) {
    for (std::size_t r = 0; r < n; ++r) {
      const auto y = static_cast<std::size_t>(labels[r]);
      for (std::size_t c = 0; c < kOutputWidth; ++c) {
        grad(r, c) += hard_weight * inv_n * (probs(r, c) - (c == y ? 1.0 : 0.0));
      }
    }
  }
  if (has_teachers && cfg.alpha < 1.0) {
    const std::vector<double> weights = distill::teacher_gradient_weights(probs, *soft, cfg);
    for (std::size_t i = 0; i < soft->size(); ++i) {
      if (weights[i] == 0.0) continue;
      const double w = (1.0 - cfg.alpha) * weights[i] * inv_n;
      const Matrix& o = (*soft)[i].probs;
      for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < kOutputWidth; ++c) {
          grad(r, c) += w * (probs(r, c) - o(r, c));
        }
      }
    }
  }
  return grad;
}

double composite_loss(const Matrix& probs, const std::vector<int>& labels,
                      const std::vector<distill::SoftLabelMatrix>* soft,
                      const distill::TkdLossConfig& cfg) {
  if (soft != nullptr && !soft->empty()) {
    return distill::tkd_loss(labels, probs, *soft, cfg);
  }
  return distill::cross_entropy(labels, probs, cfg.clip_eps);
}

}  // namespace

BackwardResult backward(const MlpModel& model, const Matrix& x, const std::vector<int>& labels,
                        const std::vector<distill::SoftLabelMatrix>* soft,
                        const distill::TkdLossConfig& loss_cfg, BnMode bn_mode,
                        bool apply_dropout, std::uint64_t dropout_seed) {
  require(labels.size() == x.rows(), "nn", "label count does not match rows");
  if (soft != nullptr) {
    for (const auto& s : *soft) {
      require(s.probs.rows() == x.rows(), "nn", "soft-label rows do not match input rows");
    }
  }
  loss_cfg.validate();

  ForwardPass pass = ForwardPass::run(model, x, bn_mode, apply_dropout, dropout_seed);

  BackwardResult result;
  result.probs = pass.probs;
  result.loss = composite_loss(pass.probs, labels, soft, loss_cfg);
  result.grads.layers.resize(model.layers().size());
  if (bn_mode == BnMode::batch) {
    result.bn_batch_mean = pass.bn_stats.mean;
    result.bn_batch_var = pass.bn_stats.var;
  }

  Matrix delta = loss_logit_gradient(pass.probs, labels, soft, loss_cfg);

  const BatchNormLayer& bn = model.batch_norm();
  for (std::size_t l = model.layers().size(); l-- > 0;) {
    const DenseLayer& layer = model.layers()[l];
    result.grads.layers[l].w = matmul_at_b(pass.layer_input[l], delta);
    result.grads.layers[l].b = column_sums(delta);
    if (l == 0) break;
    Matrix upstream = matmul_a_bt(delta, layer.w);  // gradient at layer l's input

    const std::size_t hidden = l - 1;
    if (!pass.dropout_masks[hidden].empty()) {
      const Matrix& mask = pass.dropout_masks[hidden];
      for (std::size_t i = 0; i < upstream.data().size(); ++i) {
        upstream.data()[i] *= mask.data()[i];
      }
    }

    if (hidden == 0) {
      // Through batch norm back to its input activations.
      const std::size_t width = upstream.cols();
      const std::size_t rows = upstream.rows();
      result.grads.bn_gamma.assign(width, 0.0);
      result.grads.bn_beta.assign(width, 0.0);
      for (std::size_t r = 0; r < rows; ++r) {
        const double* up = upstream.row(r);
        const double* xh = pass.bn_xhat.row(r);
        for (std::size_t c = 0; c < width; ++c) {
          result.grads.bn_gamma[c] += up[c] * xh[c];
          result.grads.bn_beta[c] += up[c];
        }
      }
      Matrix da(rows, width);
      if (bn_mode == BnMode::running) {
        for (std::size_t r = 0; r < rows; ++r) {
          const double* up = upstream.row(r);
          double* out = da.row(r);
          for (std::size_t c = 0; c < width; ++c) {
            out[c] = up[c] * bn.gamma[c] * pass.bn_inv_std[c];
          }
        }
      } else {
        std::vector<double> sum_dxhat(width, 0.0);
        std::vector<double> sum_dxhat_xhat(width, 0.0);
        for (std::size_t r = 0; r < rows; ++r) {
          const double* up = upstream.row(r);
          const double* xh = pass.bn_xhat.row(r);
          for (std::size_t c = 0; c < width; ++c) {
            const double dxhat = up[c] * bn.gamma[c];
            sum_dxhat[c] += dxhat;
            sum_dxhat_xhat[c] += dxhat * xh[c];
          }
        }
        const double m = static_cast<double>(rows);
        for (std::size_t r = 0; r < rows; ++r) {
          const double* up = upstream.row(r);
          const double* xh = pass.bn_xhat.row(r);
          double* out = da.row(r);
          for (std::size_t c = 0; c < width; ++c) {
            const double dxhat = up[c] * bn.gamma[c];
            out[c] = pass.bn_inv_std[c] / m *
                     (m * dxhat - sum_dxhat[c] - xh[c] * sum_dxhat_xhat[c]);
          }
        }
      }
      upstream = std::move(da);
    }

    // Through the ReLU of layer l-1.
    const Matrix& z = pass.pre_activation[l - 1];
    for (std::size_t i = 0; i < upstream.data().size(); ++i) {
      if (z.data()[i] <= 0.0) upstream.data()[i] = 0.0;
    }
    delta = std::move(upstream);
  }

  return result;
}

namespace {

void sgd_step(MlpModel& model, const Gradients& grads, double lr, double mu,
              std::vector<std::vector<double>>& velocity) {
  auto params = model.parameters();
  std::vector<const double*> grad_ptrs;
  std::vector<std::size_t> grad_sizes;
  for (std::size_t l = 0; l < grads.layers.size(); ++l) {
    grad_ptrs.push_back(grads.layers[l].w.data().data());
    grad_sizes.push_back(grads.layers[l].w.data().size());
    grad_ptrs.push_back(grads.layers[l].b.data());
    grad_sizes.push_back(grads.layers[l].b.size());
  }
  grad_ptrs.push_back(grads.bn_gamma.data());
  grad_sizes.push_back(grads.bn_gamma.size());
  grad_ptrs.push_back(grads.bn_beta.data());
  grad_sizes.push_back(grads.bn_beta.size());

  if (velocity.empty() && mu > 0.0) {
    velocity.resize(params.size());
    for (std::size_t t = 0; t < params.size(); ++t) velocity[t].assign(params[t].size, 0.0);
  }
  for (std::size_t t = 0; t < params.size(); ++t) {
    double* theta = params[t].data;
    const double* g = grad_ptrs[t];
    if (mu > 0.0) {
      for (std::size_t i = 0; i < params[t].size; ++i) {
        velocity[t][i] = mu * velocity[t][i] - lr * g[i];
        theta[i] += velocity[t][i];
      }
    } else {
      for (std::size_t i = 0; i < params[t].size; ++i) theta[i] -= lr * g[i];
    }
  }
}

void update_running_stats(BatchNormLayer& bn, const std::vector<double>& mean,
                          const std::vector<double>& var, double momentum) {
  for (std::size_t c = 0; c < bn.running_mean.size(); ++c) {
    bn.running_mean[c] = momentum * bn.running_mean[c] + (1.0 - momentum) * mean[c];
    bn.running_var[c] = momentum * bn.running_var[c] + (1.0 - momentum) * var[c];
  }
}

std::optional<double> validation_auprc(const MlpModel& model, const data::TemporalDataset* val) {
  if (val == nullptr || val->rows() == 0 || !val->has_labels()) return std::nullopt;
  const std::size_t pos = val->positives();
  if (pos == 0 || pos == val->rows()) return std::nullopt;  // AUPRC undefined
  const Matrix probs = model.predict_proba(val->x);
  std::vector<double> scores(probs.rows());
  for (std::size_t r = 0; r < probs.rows(); ++r) scores[r] = probs(r, 1);
  return metrics::auprc(scores, val->labels);
}

}  // namespace

TrainResult train(const MlpConfig& cfg, const data::TemporalDataset& train_ds,
                  const data::TemporalDataset* validation,
                  const std::vector<distill::SoftLabelMatrix>* teachers,
                  const distill::TkdLossConfig& loss_cfg) {
  cfg.validate();
  loss_cfg.validate();
  require(train_ds.rows() > 0, "nn", "empty training data");
  require(train_ds.has_labels(), "nn", "training data has no labels");
  const std::size_t n_pos = train_ds.positives();
  require(n_pos > 0 && n_pos < train_ds.rows(), "nn", "single-class training data");
  if (teachers != nullptr) {
    for (const auto& t : *teachers) {
      require(t.probs.rows() == train_ds.rows(), "nn",
              "soft labels do not align with training rows");
    }
  }

  TrainResult result;
  result.model = MlpModel::initialize(cfg, train_ds.cols());
  if (cfg.max_epochs == 0) return result;

  Rng rng(mix_seed(cfg.seed, 0x7261696e));  // epoch shuffling + dropout seeds
  const std::size_t n = train_ds.rows();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});

  std::vector<std::vector<double>> velocity;
  MlpModel best_model;
  double best_val = -1.0;
  bool have_best = false;
  std::size_t epochs_without_improvement = 0;

  for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    const auto epoch_start = std::chrono::steady_clock::now();
    rng.shuffle(order);

    double loss_sum = 0.0;
    for (std::size_t begin = 0; begin < n; begin += cfg.batch_size) {
      const std::size_t end = std::min(begin + cfg.batch_size, n);
      const std::span<const std::size_t> batch_rows(order.data() + begin, end - begin);

      const Matrix bx = train_ds.x.gather_rows(batch_rows);
      std::vector<int> by(batch_rows.size());
      for (std::size_t i = 0; i < batch_rows.size(); ++i) by[i] = train_ds.labels[batch_rows[i]];

      std::vector<distill::SoftLabelMatrix> batch_soft;
      if (teachers != nullptr && !teachers->empty()) {
        batch_soft.reserve(teachers->size());
        for (const auto& t : *teachers) {
          distill::SoftLabelMatrix s;
          s.teacher_period = t.teacher_period;
          s.target_period = t.target_period;
          s.probs = t.probs.gather_rows(batch_rows);
          batch_soft.push_back(std::move(s));
        }
      }

      const std::uint64_t dropout_seed = rng.next_u64();
      BackwardResult step =
          backward(result.model, bx, by, batch_soft.empty() ? nullptr : &batch_soft, loss_cfg,
                   BnMode::batch, /*apply_dropout=*/true, dropout_seed);
      loss_sum += step.loss * static_cast<double>(batch_rows.size());

      update_running_stats(result.model.batch_norm(), step.bn_batch_mean, step.bn_batch_var,
                           cfg.bn_momentum);
      sgd_step(result.model, step.grads, cfg.learning_rate, cfg.momentum, velocity);
    }

    TrainLogEntry entry;
    entry.epoch = epoch;
    entry.train_loss = loss_sum / static_cast<double>(n);
    entry.val_auprc = validation_auprc(result.model, validation);
    entry.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - epoch_start).count();
    result.log.push_back(entry);

    if (entry.val_auprc.has_value()) {
      if (*entry.val_auprc > best_val) {
        best_val = *entry.val_auprc;
        best_model = result.model;
        have_best = true;
        epochs_without_improvement = 0;
      } else {
        ++epochs_without_improvement;
        if (epochs_without_improvement >= cfg.patience) break;
      }
    }
  }

  if (have_best) result.model = std::move(best_model);
  return result;
}

}  // namespace tkd::nn
