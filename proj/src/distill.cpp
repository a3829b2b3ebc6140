#include "distill.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "error.hpp"

namespace tkd::distill {

namespace {

double clamp_prob(double p, double eps) { return std::min(std::max(p, eps), 1.0 - eps); }

void check_rows(const std::vector<int>& labels, const Matrix& student) {
  require(student.cols() == 2, "distill", "student output must have two columns");
  require(labels.size() == student.rows(), "distill", "label/prediction row mismatch");
  require(student.all_finite(), "distill", "NaN in student probabilities");
}

}  // namespace

const char* aggregation_name(Aggregation agg) {
  switch (agg) {
    case Aggregation::mean: return "mean";
    case Aggregation::max: return "max";
    case Aggregation::sum: return "sum";
  }
  return "mean";
}

Aggregation aggregation_from_name(const std::string& name) {
  if (name == "mean") return Aggregation::mean;
  if (name == "max") return Aggregation::max;
  if (name == "sum") return Aggregation::sum;
  throw Error("distill", "unknown aggregation '" + name + "'");
}

void TkdLossConfig::validate() const {
  require(alpha >= 0.0 && alpha <= 1.0, "distill", "alpha must be in [0, 1]");
  require(truncation_k >= 0, "distill", "truncation index must be non-negative");
  require(clip_eps > 0.0 && clip_eps < 0.5, "distill", "clip epsilon must be in (0, 0.5)");
}

void SoftLabelMatrix::validate() const {
  require(probs.cols() == 2, "distill", "soft labels must have two columns");
  for (std::size_t r = 0; r < probs.rows(); ++r) {
    const double sum = probs(r, 0) + probs(r, 1);
    require(std::abs(sum - 1.0) <= 1e-6 && probs(r, 0) >= 0.0 && probs(r, 1) >= 0.0, "distill",
            "soft-label row " + std::to_string(r) + " is not on the probability simplex");
  }
}

void TeacherRegistry::add(int period, ModelPtr model) {
  require(period >= 0, "distill", "teacher period must be non-negative");
  require(model != nullptr, "distill", "null teacher model");
  require(entries_.empty() || entries_.back().period < period, "distill",
          "teacher periods must be strictly increasing");
  entries_.push_back({period, std::move(model)});
}

const TeacherEntry* TeacherRegistry::find(int period) const {
  for (const auto& e : entries_) {
    if (e.period == period) return &e;
  }
  return nullptr;
}

std::vector<SoftLabelMatrix> generate_soft_labels(const TeacherRegistry& registry,
                                                  const Matrix& x, int target_period,
                                                  int truncation_k) {
  require(truncation_k >= 0, "distill", "truncation index must be non-negative");
  std::vector<SoftLabelMatrix> out;
  for (const TeacherEntry& entry : registry.entries()) {
    if (entry.period < truncation_k || entry.period >= target_period) continue;
    require(entry.model->feature_count() == x.cols(), "distill",
            "teacher for period " + std::to_string(entry.period) + " expects " +
                std::to_string(entry.model->feature_count()) + " features, data has " +
                std::to_string(x.cols()));
    SoftLabelMatrix soft;
    soft.teacher_period = entry.period;
    soft.target_period = target_period;
    soft.probs = entry.model->predict_proba(x);
    out.push_back(std::move(soft));
  }
  require(!out.empty(), "distill",
          "no eligible teachers for period " + std::to_string(target_period) +
              " with truncation " + std::to_string(truncation_k));
  return out;
}

double cross_entropy(const std::vector<int>& labels, const Matrix& student, double clip_eps) {
  check_rows(labels, student);
  double total = 0.0;
  for (std::size_t r = 0; r < student.rows(); ++r) {
    const double p_true = clamp_prob(student(r, static_cast<std::size_t>(labels[r])), clip_eps);
    total += -std::log(p_true);
  }
  return total / static_cast<double>(student.rows());
}

std::vector<double> per_teacher_kl(const Matrix& student, const std::vector<SoftLabelMatrix>& soft,
                                   double clip_eps) {
  require(student.all_finite(), "distill", "NaN in student probabilities");
  std::vector<double> kls;
  kls.reserve(soft.size());
  for (const SoftLabelMatrix& teacher : soft) {
    require(teacher.probs.rows() == student.rows(), "distill",
            "soft-label row count does not match student output");
    require(teacher.probs.all_finite(), "distill", "NaN in soft labels");
    double total = 0.0;
    for (std::size_t r = 0; r < student.rows(); ++r) {
      for (std::size_t c = 0; c < 2; ++c) {
        const double o = clamp_prob(teacher.probs(r, c), clip_eps);
        const double y = clamp_prob(student(r, c), clip_eps);
        total += o * std::log(o / y);
      }
    }
    kls.push_back(total / static_cast<double>(student.rows()));
  }
  return kls;
}

double aggregate(std::vector<double> values, Aggregation agg) {
  require(!values.empty(), "distill", "aggregation over zero teachers");
  if (agg == Aggregation::max) {
    return *std::max_element(values.begin(), values.end());
  }
  std::sort(values.begin(), values.end());
  double total = 0.0;
  for (double v : values) total += v;
  return agg == Aggregation::mean ? total / static_cast<double>(values.size()) : total;
}

double tkd_loss(const std::vector<int>& labels, const Matrix& student,
                const std::vector<SoftLabelMatrix>& soft, const TkdLossConfig& cfg) {
  cfg.validate();
  check_rows(labels, student);
  if (cfg.alpha == 1.0) {
    return cross_entropy(labels, student, cfg.clip_eps);
  }
  require(!soft.empty(), "distill", "no teachers supplied while alpha < 1");
  const double kl_term = aggregate(per_teacher_kl(student, soft, cfg.clip_eps), cfg.agg);
  if (cfg.alpha == 0.0) {
    return (1.0 - cfg.alpha) * kl_term;
  }
  return cfg.alpha * cross_entropy(labels, student, cfg.clip_eps) + (1.0 - cfg.alpha) * kl_term;
}

double simplified_loss(const std::vector<int>& labels, const Matrix& student,
                       const std::vector<SoftLabelMatrix>& soft, int truncation_k,
                       int target_period) {
  require(target_period > truncation_k, "distill", "target period must exceed truncation index");
  require(soft.size() == static_cast<std::size_t>(target_period - truncation_k), "distill",
          "expected one teacher per period between truncation and target");
  const double eps = TkdLossConfig{}.clip_eps;
  const std::vector<double> kls = per_teacher_kl(student, soft, eps);
  double kl_sum = 0.0;
  {
    std::vector<double> sorted = kls;
    std::sort(sorted.begin(), sorted.end());
    for (double v : sorted) kl_sum += v;
  }
  return cross_entropy(labels, student, eps) +
         kl_sum / static_cast<double>(target_period - truncation_k);
}

std::vector<double> teacher_gradient_weights(const Matrix& student,
                                             const std::vector<SoftLabelMatrix>& soft,
                                             const TkdLossConfig& cfg) {
  std::vector<double> weights(soft.size(), 0.0);
  if (soft.empty()) return weights;
  switch (cfg.agg) {
    case Aggregation::mean:
      std::fill(weights.begin(), weights.end(), 1.0 / static_cast<double>(soft.size()));
      break;
    case Aggregation::sum:
      std::fill(weights.begin(), weights.end(), 1.0);
      break;
    case Aggregation::max: {
      const std::vector<double> kls = per_teacher_kl(student, soft, cfg.clip_eps);
      std::size_t best = 0;
      for (std::size_t i = 1; i < kls.size(); ++i) {
        if (kls[i] > kls[best]) best = i;
      }
      weights[best] = 1.0;
      break;
    }
  }
  return weights;
}

Matrix loss_grad_wrt_probs(const std::vector<int>& labels, const Matrix& student,
                           const std::vector<SoftLabelMatrix>& soft, const TkdLossConfig& cfg) {
  cfg.validate();
  check_rows(labels, student);
  const double n = static_cast<double>(student.rows());
  Matrix grad(student.rows(), 2);

  if (cfg.alpha > 0.0) {
    for (std::size_t r = 0; r < student.rows(); ++r) {
      const auto c = static_cast<std::size_t>(labels[r]);
      grad(r, c) += cfg.alpha * (-1.0 / (n * student(r, c)));
    }
  }
  if (cfg.alpha < 1.0) {
    require(!soft.empty(), "distill", "no teachers supplied while alpha < 1");
    const std::vector<double> weights = teacher_gradient_weights(student, soft, cfg);
    for (std::size_t i = 0; i < soft.size(); ++i) {
      if (weights[i] == 0.0) continue;
      const double w = (1.0 - cfg.alpha) * weights[i];
      for (std::size_t r = 0; r < student.rows(); ++r) {
        for (std::size_t c = 0; c < 2; ++c) {
          grad(r, c) += w * (-soft[i].probs(r, c) / (n * student(r, c)));
        }
      }
    }
  }
  return grad;
}

}  // namespace tkd::distill
