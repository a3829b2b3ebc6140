#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "matrix.hpp"

namespace tkd::data {

// One time slice of fully numeric, preprocessed data. `labels` may be empty
// when the slice's labels are withheld (the reporting-delay period).
struct TemporalDataset {
  int period = 0;
  Matrix x;
  std::vector<int> labels;  // 0 = normal, 1 = fraud/anomaly
  std::vector<std::string> feature_names;

  std::size_t rows() const { return x.rows(); }
  std::size_t cols() const { return x.cols(); }
  bool has_labels() const { return !labels.empty(); }
  std::size_t positives() const;

  void validate() const;  // shape + finiteness invariants
};

// Copy with the label column withheld.
TemporalDataset without_labels(const TemporalDataset& ds);

// Row-wise concatenation, feature widths must agree. Period of the result is
// the last input's period.
TemporalDataset concat(const std::vector<TemporalDataset>& parts);

// Time-respecting split: first (1 - tail_fraction) of rows, last tail_fraction
// (at least one row in the head; tail may be empty for tiny inputs).
struct SplitResult {
  TemporalDataset head;
  TemporalDataset tail;
};
SplitResult split_tail(const TemporalDataset& ds, double tail_fraction);

// Class rebalancing: keeps every positive row, uniformly undersamples
// negatives (without replacement) so positives make up `target_positive_ratio`
// of the result, rounding the negative count down. If there are too few
// negatives they are all kept. Row order is preserved.
TemporalDataset rebalance(const TemporalDataset& ds, double target_positive_ratio,
                          std::uint64_t seed);

}  // namespace tkd::data
