#include "gbt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "error.hpp"
#include "rng.hpp"

namespace tkd::gbt {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

void GbtConfig::validate() const {
  require(max_depth >= 1, "gbt", "max_depth must be at least 1");
  require(n_estimators >= 0, "gbt", "n_estimators must be non-negative");
  require(learning_rate > 0.0, "gbt", "learning_rate must be positive");
  require(min_child_weight >= 0.0, "gbt", "min_child_weight must be non-negative");
  require(gamma >= 0.0, "gbt", "gamma must be non-negative");
  require(reg_alpha >= 0.0 && reg_lambda >= 0.0, "gbt", "regularization must be non-negative");
  require(subsample > 0.0 && subsample <= 1.0, "gbt", "subsample must be in (0, 1]");
  require(colsample_bytree > 0.0 && colsample_bytree <= 1.0, "gbt",
          "colsample_bytree must be in (0, 1]");
  require(min_child_weight_scale > 0.0, "gbt", "min_child_weight_scale must be positive");
}

void tkd_objective(double logit, int label, std::span<const double> teacher_probs, double alpha,
                   double* g, double* h) {
  require(alpha >= 0.0 && alpha <= 1.0, "gbt", "alpha must be in [0, 1]");
  require(label == 0 || label == 1, "gbt", "label must be 0 or 1");
  const double p = sigmoid(logit);
  *h = p * (1.0 - p);
  if (teacher_probs.empty() || alpha == 1.0) {
    *g = p - static_cast<double>(label);
    return;
  }
  double teacher_term = 0.0;
  for (double q : teacher_probs) {
    require(q >= 0.0 && q <= 1.0, "gbt", "teacher probability outside [0, 1]");
    teacher_term += p - q;
  }
  teacher_term /= static_cast<double>(teacher_probs.size());
  *g = alpha * (p - static_cast<double>(label)) + (1.0 - alpha) * teacher_term;
}

void BoostObjective::eval(std::size_t row, double logit, int label, double* g, double* h) const {
  if (teacher_positive.empty()) {
    tkd_objective(logit, label, {}, alpha, g, h);
    return;
  }
  std::vector<double> probs(teacher_positive.size());
  for (std::size_t t = 0; t < teacher_positive.size(); ++t) probs[t] = teacher_positive[t][row];
  tkd_objective(logit, label, probs, alpha, g, h);
}

double Tree::predict_row(const double* x) const {
  if (nodes.empty()) return 0.0;
  int at = 0;
  while (!nodes[at].is_leaf()) {
    const TreeNode& node = nodes[at];
    at = x[node.feature] < node.threshold ? node.left : node.right;
  }
  return nodes[at].value;
}

std::vector<double> GbtModel::predict_logit(const Matrix& x) const {
  require(x.cols() == n_features_, "gbt",
          "input has " + std::to_string(x.cols()) + " features, model expects " +
              std::to_string(n_features_));
  std::vector<double> logits(x.rows(), base_score_);
  for (const Tree& tree : trees_) {
    for (std::size_t r = 0; r < x.rows(); ++r) {
      logits[r] += config_.learning_rate * tree.predict_row(x.row(r));
    }
  }
  return logits;
}

std::vector<double> GbtModel::predict_positive(const Matrix& x) const {
  std::vector<double> out = predict_logit(x);
  for (double& v : out) v = sigmoid(v);
  return out;
}

Matrix GbtModel::predict_proba(const Matrix& x) const {
  const std::vector<double> pos = predict_positive(x);
  Matrix out(x.rows(), 2);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    out(r, 1) = pos[r];
    out(r, 0) = 1.0 - pos[r];
  }
  return out;
}

namespace {

// L1 soft threshold on the gradient sum.
double shrink(double g, double reg_alpha) {
  if (g > reg_alpha) return g - reg_alpha;
  if (g < -reg_alpha) return g + reg_alpha;
  return 0.0;
}

double leaf_score(double g, double h, const GbtConfig& cfg) {
  const double t = shrink(g, cfg.reg_alpha);
  return t * t / (h + cfg.reg_lambda);
}

double leaf_weight(double g, double h, const GbtConfig& cfg) {
  return -shrink(g, cfg.reg_alpha) / (h + cfg.reg_lambda);
}

struct SplitChoice {
  bool found = false;
  int feature = -1;
  double threshold = 0.0;
  double gain = -std::numeric_limits<double>::infinity();
};

struct TreeBuilder {
  const Matrix& x;
  const std::vector<double>& grad;
  const std::vector<double>& hess;
  const GbtConfig& cfg;
  const std::vector<int>& features;
  double min_child;
  Tree tree;

  // rows: indices into x for this node, sorted ascending
  int build(std::vector<std::size_t> rows, int depth) {
    double g_total = 0.0, h_total = 0.0;
    for (std::size_t r : rows) {
      g_total += grad[r];
      h_total += hess[r];
    }

    SplitChoice best;
    if (depth < cfg.max_depth && rows.size() >= 2) {
      best = find_split(rows, g_total, h_total);
    }

    const int node_id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    if (!best.found) {
      tree.nodes[node_id].value = leaf_weight(g_total, h_total, cfg);
      return node_id;
    }

    std::vector<std::size_t> left_rows, right_rows;
    left_rows.reserve(rows.size());
    right_rows.reserve(rows.size());
    for (std::size_t r : rows) {
      (x(r, static_cast<std::size_t>(best.feature)) < best.threshold ? left_rows : right_rows)
          .push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();

    tree.nodes[node_id].feature = best.feature;
    tree.nodes[node_id].threshold = best.threshold;
    const int left_id = build(std::move(left_rows), depth + 1);
    const int right_id = build(std::move(right_rows), depth + 1);
    tree.nodes[node_id].left = left_id;
    tree.nodes[node_id].right = right_id;
    return node_id;
  }

  SplitChoice find_split(const std::vector<std::size_t>& rows, double g_total, double h_total) {
    SplitChoice best;
    const double parent_score = leaf_score(g_total, h_total, cfg);

    std::vector<std::pair<double, std::size_t>> sorted;
    sorted.reserve(rows.size());
    for (int f : features) {
      sorted.clear();
      for (std::size_t r : rows) sorted.emplace_back(x(r, static_cast<std::size_t>(f)), r);
      std::sort(sorted.begin(), sorted.end());

      double g_left = 0.0, h_left = 0.0;
      for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
        g_left += grad[sorted[i].second];
        h_left += hess[sorted[i].second];
        if (sorted[i].first == sorted[i + 1].first) continue;  // not a boundary
        const double h_right = h_total - h_left;
        if (h_left < min_child || h_right < min_child) continue;
        const double g_right = g_total - g_left;
        const double gain = 0.5 * (leaf_score(g_left, h_left, cfg) +
                                   leaf_score(g_right, h_right, cfg) - parent_score);
        if (gain < cfg.gamma) continue;
        if (gain > best.gain) {
          best.found = true;
          best.gain = gain;
          best.feature = f;
          best.threshold = 0.5 * (sorted[i].first + sorted[i + 1].first);
        }
      }
    }
    return best;
  }
};

}  // namespace

GbtModel fit(const GbtConfig& cfg, const data::TemporalDataset& train,
             const BoostObjective& objective) {
  cfg.validate();
  require(train.rows() > 0, "gbt", "empty training data");
  require(train.has_labels(), "gbt", "training data has no labels");
  for (const auto& teacher : objective.teacher_positive) {
    require(teacher.size() == train.rows(), "gbt",
            "teacher probabilities do not align with training rows");
  }

  const std::size_t n = train.rows();
  const std::size_t n_features = train.cols();

  double pos_rate = static_cast<double>(train.positives()) / static_cast<double>(n);
  pos_rate = std::min(std::max(pos_rate, 1e-15), 1.0 - 1e-15);
  double base_score = std::log(pos_rate / (1.0 - pos_rate));
  base_score = std::min(std::max(base_score, -10.0), 10.0);

  std::vector<double> logits(n, base_score);
  std::vector<double> grad(n, 0.0), hess(n, 0.0);
  std::vector<Tree> trees;
  trees.reserve(static_cast<std::size_t>(cfg.n_estimators));

  Rng rng(mix_seed(cfg.seed, 0x67627400));
  const double min_child = cfg.min_child_weight * cfg.min_child_weight_scale;

  const std::size_t rows_per_tree = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(cfg.subsample * static_cast<double>(n))));
  const std::size_t feats_per_tree = std::max<std::size_t>(
      1, static_cast<std::size_t>(
             std::llround(cfg.colsample_bytree * static_cast<double>(n_features))));

  for (int round = 0; round < cfg.n_estimators; ++round) {
    std::vector<std::size_t> rows =
        rows_per_tree == n ? std::vector<std::size_t>() : rng.sample_without_replacement(n, rows_per_tree);
    if (rows.empty()) {
      rows.resize(n);
      std::iota(rows.begin(), rows.end(), std::size_t{0});
    }
    std::vector<std::size_t> feat_sample =
        feats_per_tree == n_features ? std::vector<std::size_t>()
                                     : rng.sample_without_replacement(n_features, feats_per_tree);
    std::vector<int> features;
    if (feat_sample.empty()) {
      features.resize(n_features);
      std::iota(features.begin(), features.end(), 0);
    } else {
      features.reserve(feat_sample.size());
      for (std::size_t f : feat_sample) features.push_back(static_cast<int>(f));
    }

    for (std::size_t r : rows) {
      objective.eval(r, logits[r], train.labels[r], &grad[r], &hess[r]);
    }

    TreeBuilder builder{train.x, grad, hess, cfg, features, min_child, {}};
    builder.build(std::move(rows), 0);
    trees.push_back(std::move(builder.tree));

    const Tree& tree = trees.back();
    for (std::size_t r = 0; r < n; ++r) {
      logits[r] += cfg.learning_rate * tree.predict_row(train.x.row(r));
    }
  }

  return GbtModel(cfg, base_score, std::move(trees), n_features);
}

}  // namespace tkd::gbt
