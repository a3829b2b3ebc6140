#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace tkd::metrics {

struct PrPoint {
  double threshold = 0.0;
  double precision = 0.0;
  double recall = 0.0;
};

// Area under the precision-recall curve in the average-precision form:
// samples sorted by descending score, tied scores entering as one group,
// AUPRC = sum over recall increments of (R_k - R_{k-1}) * P_k.
double auprc(std::span<const double> scores, std::span<const int> labels);

// Mann-Whitney AUROC: P(score_pos > score_neg) + 0.5 * P(tie), computed from
// midranks.
double auroc(std::span<const double> scores, std::span<const int> labels);

std::vector<PrPoint> pr_curve(std::span<const double> scores, std::span<const int> labels);

struct EvalReport {
  double auprc = 0.0;
  double auroc = 0.0;
  std::size_t n_samples = 0;
  std::size_t n_positive = 0;
  std::vector<PrPoint> pr_points;
  double training_seconds = 0.0;
  std::uint64_t seed = 0;
};

EvalReport evaluate(std::span<const double> scores, std::span<const int> labels);

struct DeltaReport {
  double delta = 0.0;
  double relative_improvement_pct = 0.0;
};

// Absolute and relative AUPRC gain of a distilled model over its baseline.
DeltaReport delta(const EvalReport& base, const EvalReport& tkd);
DeltaReport delta(double base_auprc, double tkd_auprc);

}  // namespace tkd::metrics
