#include "metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "error.hpp"

namespace tkd::metrics {

namespace {

void check_inputs(std::span<const double> scores, std::span<const int> labels,
                  bool need_both_classes) {
  require(scores.size() == labels.size(), "metrics", "scores/labels length mismatch");
  require(!scores.empty(), "metrics", "empty input");
  std::size_t pos = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    require(std::isfinite(scores[i]), "metrics", "non-finite score");
    require(labels[i] == 0 || labels[i] == 1, "metrics", "labels must be 0 or 1");
    pos += static_cast<std::size_t>(labels[i]);
  }
  require(pos >= 1, "metrics", "no positive samples");
  if (need_both_classes) {
    require(pos < scores.size(), "metrics", "no negative samples");
  }
}

std::vector<std::size_t> order_by_descending_score(std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

}  // namespace

std::vector<PrPoint> pr_curve(std::span<const double> scores, std::span<const int> labels) {
  check_inputs(scores, labels, /*need_both_classes=*/false);
  const auto order = order_by_descending_score(scores);
  std::size_t total_pos = 0;
  for (int y : labels) total_pos += static_cast<std::size_t>(y);

  std::vector<PrPoint> points;
  std::size_t tp = 0, fp = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    const double threshold = scores[order[i]];
    // Every sample tied at this score enters together.
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == threshold) {
      if (labels[order[j]] == 1) {
        ++tp;
      } else {
        ++fp;
      }
      ++j;
    }
    PrPoint p;
    p.threshold = threshold;
    p.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    p.recall = static_cast<double>(tp) / static_cast<double>(total_pos);
    points.push_back(p);
    i = j;
  }
  return points;
}

double auprc(std::span<const double> scores, std::span<const int> labels) {
  const std::vector<PrPoint> points = pr_curve(scores, labels);
  double area = 0.0;
  double prev_recall = 0.0;
  for (const PrPoint& p : points) {
    area += (p.recall - prev_recall) * p.precision;
    prev_recall = p.recall;
  }
  return area;
}

double auroc(std::span<const double> scores, std::span<const int> labels) {
  check_inputs(scores, labels, /*need_both_classes=*/true);
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Midranks over tie groups; rank sum of positives gives the U statistic.
  double rank_sum_pos = 0.0;
  std::size_t n_pos = 0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);  // ranks are 1-based
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] == 1) {
        rank_sum_pos += midrank;
        ++n_pos;
      }
    }
    i = j;
  }
  const std::size_t n_neg = n - n_pos;
  const double u = rank_sum_pos - static_cast<double>(n_pos) * (static_cast<double>(n_pos) + 1.0) / 2.0;
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

EvalReport evaluate(std::span<const double> scores, std::span<const int> labels) {
  EvalReport report;
  report.pr_points = pr_curve(scores, labels);
  double area = 0.0, prev_recall = 0.0;
  for (const PrPoint& p : report.pr_points) {
    area += (p.recall - prev_recall) * p.precision;
    prev_recall = p.recall;
  }
  report.auprc = area;
  report.n_samples = scores.size();
  for (int y : labels) report.n_positive += static_cast<std::size_t>(y);
  report.auroc = (report.n_positive < scores.size()) ? auroc(scores, labels) : 1.0;
  return report;
}

DeltaReport delta(double base_auprc, double tkd_auprc) {
  require(base_auprc != 0.0, "metrics", "baseline AUPRC is zero");
  DeltaReport d;
  d.delta = tkd_auprc - base_auprc;
  d.relative_improvement_pct = d.delta / base_auprc * 100.0;
  return d;
}

DeltaReport delta(const EvalReport& base, const EvalReport& tkd) {
  return delta(base.auprc, tkd.auprc);
}

}  // namespace tkd::metrics
