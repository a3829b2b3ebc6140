#include "dataset.hpp"

#include <algorithm>
#include <cmath>

#include "error.hpp"
#include "rng.hpp"

namespace tkd::data {

std::size_t TemporalDataset::positives() const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
}

void TemporalDataset::validate() const {
  require(period >= 0, "data", "period index must be non-negative");
  if (has_labels()) {
    require(labels.size() == x.rows(), "data", "label count does not match row count");
    for (int y : labels) {
      require(y == 0 || y == 1, "data", "labels must be 0 or 1");
    }
  }
  if (!feature_names.empty()) {
    require(feature_names.size() == x.cols(), "data", "feature name count does not match column count");
  }
  require(x.all_finite(), "data", "feature matrix contains non-finite values");
}

TemporalDataset without_labels(const TemporalDataset& ds) {
  TemporalDataset out = ds;
  out.labels.clear();
  return out;
}

TemporalDataset concat(const std::vector<TemporalDataset>& parts) {
  require(!parts.empty(), "data", "concat of zero datasets");
  std::size_t total = 0;
  for (const auto& p : parts) {
    require(p.cols() == parts.front().cols(), "data", "concat feature width mismatch");
    require(p.has_labels() == parts.front().has_labels(), "data", "concat label presence mismatch");
    total += p.rows();
  }
  TemporalDataset out;
  out.period = parts.back().period;
  out.feature_names = parts.front().feature_names;
  out.x = Matrix(total, parts.front().cols());
  out.labels.reserve(parts.front().has_labels() ? total : 0);
  std::size_t at = 0;
  for (const auto& p : parts) {
    std::copy(p.x.data().begin(), p.x.data().end(), out.x.data().begin() + at * out.cols());
    if (p.has_labels()) out.labels.insert(out.labels.end(), p.labels.begin(), p.labels.end());
    at += p.rows();
  }
  return out;
}

SplitResult split_tail(const TemporalDataset& ds, double tail_fraction) {
  require(tail_fraction >= 0.0 && tail_fraction < 1.0, "data", "tail fraction must be in [0, 1)");
  const std::size_t n = ds.rows();
  std::size_t tail_n = static_cast<std::size_t>(std::floor(static_cast<double>(n) * tail_fraction));
  if (tail_n >= n && n > 0) tail_n = n - 1;
  const std::size_t head_n = n - tail_n;

  auto take = [&](std::size_t begin, std::size_t count) {
    TemporalDataset part;
    part.period = ds.period;
    part.feature_names = ds.feature_names;
    part.x = Matrix(count, ds.cols());
    std::copy(ds.x.data().begin() + begin * ds.cols(),
              ds.x.data().begin() + (begin + count) * ds.cols(), part.x.data().begin());
    if (ds.has_labels()) {
      part.labels.assign(ds.labels.begin() + static_cast<std::ptrdiff_t>(begin),
                         ds.labels.begin() + static_cast<std::ptrdiff_t>(begin + count));
    }
    return part;
  };

  return {take(0, head_n), take(head_n, tail_n)};
}

TemporalDataset rebalance(const TemporalDataset& ds, double target_positive_ratio,
                          std::uint64_t seed) {
  require(target_positive_ratio > 0.0 && target_positive_ratio < 1.0, "data",
          "target positive ratio must be in (0, 1)");
  require(ds.has_labels(), "data", "rebalance requires labels");
  const std::size_t n_pos = ds.positives();
  const std::size_t n_neg = ds.rows() - n_pos;
  require(n_pos > 0 && n_neg > 0, "data", "rebalance requires both classes present");

  const double keep = std::floor(static_cast<double>(n_pos) *
                                 (1.0 - target_positive_ratio) / target_positive_ratio);
  std::size_t keep_neg = static_cast<std::size_t>(keep);
  if (keep_neg > n_neg) keep_neg = n_neg;  // too few negatives: keep all

  std::vector<std::size_t> neg_rows;
  neg_rows.reserve(n_neg);
  for (std::size_t i = 0; i < ds.rows(); ++i) {
    if (ds.labels[i] == 0) neg_rows.push_back(i);
  }
  Rng rng(seed);
  const std::vector<std::size_t> chosen = rng.sample_without_replacement(neg_rows.size(), keep_neg);

  std::vector<std::size_t> keep_rows;
  keep_rows.reserve(n_pos + keep_neg);
  for (std::size_t i = 0; i < ds.rows(); ++i) {
    if (ds.labels[i] == 1) keep_rows.push_back(i);
  }
  for (std::size_t c : chosen) keep_rows.push_back(neg_rows[c]);
  std::sort(keep_rows.begin(), keep_rows.end());

  TemporalDataset out;
  out.period = ds.period;
  out.feature_names = ds.feature_names;
  out.x = ds.x.gather_rows(keep_rows);
  out.labels.reserve(keep_rows.size());
  for (std::size_t r : keep_rows) out.labels.push_back(ds.labels[r]);
  return out;
}

}  // namespace tkd::data
