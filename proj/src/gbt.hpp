#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dataset.hpp"
#include "matrix.hpp"
#include "model.hpp"

namespace tkd::gbt {

struct GbtConfig {
  int max_depth = 3;
  int n_estimators = 200;
  double learning_rate = 0.1;
  double min_child_weight = 2.89;  // minimum hessian sum per child
  double gamma = 0.9;              // minimum split gain
  double reg_alpha = 3.0;          // L1 on leaf weights
  double reg_lambda = 40.0;        // L2 on leaf weights
  double subsample = 0.94;         // row sampling rate per tree
  double colsample_bytree = 0.8;   // feature sampling rate per tree
  std::uint64_t seed = 0;
  // Multiplier applied to min_child_weight; per-sample hessians cap at 0.25,
  // so tiny datasets can lower the effective bound without touching the
  // published value.
  double min_child_weight_scale = 1.0;

  void validate() const;
};

// Second-order objective: per-sample gradient and hessian of the composite
// loss at the current logit. An empty teacher list degenerates to plain
// logistic loss. g = alpha*(p - y) + (1 - alpha)*mean_i(p - q_i), h = p(1-p);
// the hessian of each teacher KL term is the same p(1-p), so h does not
// depend on the teachers.
void tkd_objective(double logit, int label, std::span<const double> teacher_probs, double alpha,
                   double* g, double* h);

// Per-sample g/h provider for fit(): hard labels plus optional teacher
// positive-class probabilities (one vector per teacher, aligned with rows).
struct BoostObjective {
  double alpha = 1.0;
  std::vector<std::vector<double>> teacher_positive;  // [teacher][row]

  void eval(std::size_t row, double logit, int label, double* g, double* h) const;
};

struct TreeNode {
  int feature = -1;  // -1 = leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;  // leaf weight (unscaled; shrinkage applied at predict)

  bool is_leaf() const { return feature < 0; }
};

struct Tree {
  std::vector<TreeNode> nodes;  // preorder, root at 0

  double predict_row(const double* x) const;
};

class GbtModel : public Model {
 public:
  GbtModel() = default;
  GbtModel(GbtConfig config, double base_score, std::vector<Tree> trees,
           std::size_t n_features)
      : config_(std::move(config)), base_score_(base_score), trees_(std::move(trees)),
        n_features_(n_features) {}

  std::vector<double> predict_logit(const Matrix& x) const;
  std::vector<double> predict_positive(const Matrix& x) const;  // sigmoid(logit)
  Matrix predict_proba(const Matrix& x) const override;

  std::size_t feature_count() const override { return n_features_; }
  std::string kind() const override { return "gbt"; }

  const GbtConfig& config() const { return config_; }
  double base_score() const { return base_score_; }
  const std::vector<Tree>& trees() const { return trees_; }

 private:
  GbtConfig config_;
  double base_score_ = 0.0;
  std::vector<Tree> trees_;
  std::size_t n_features_ = 0;
};

// Greedy second-order boosting with exact split search over sorted feature
// values. Deterministic under the config seed.
GbtModel fit(const GbtConfig& cfg, const data::TemporalDataset& train,
             const BoostObjective& objective);

double sigmoid(double z);

}  // namespace tkd::gbt
