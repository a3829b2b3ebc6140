#pragma once

#include <memory>
#include <string>

#include "matrix.hpp"

namespace tkd {

// Common surface for everything that can score samples: the neural net, the
// boosted trees, and ensembles of them. Implementations are immutable after
// training and safe to share across threads.
class Model {
 public:
  virtual ~Model() = default;

  // Class-probability rows (n x 2, column 1 = positive class).
  virtual Matrix predict_proba(const Matrix& x) const = 0;

  virtual std::size_t feature_count() const = 0;
  virtual std::string kind() const = 0;
};

using ModelPtr = std::shared_ptr<const Model>;

// Positive-class column of predict_proba.
std::vector<double> positive_scores(const Model& model, const Matrix& x);

}  // namespace tkd
