#pragma once

#include <vector>

#include "model.hpp"

namespace tkd::ensemble {

// Equal-weight probability average over heterogeneous members.
class EnsembleModel : public Model {
 public:
  explicit EnsembleModel(std::vector<ModelPtr> members);

  Matrix predict_proba(const Matrix& x) const override;
  std::size_t feature_count() const override;
  std::string kind() const override { return "ensemble"; }

  const std::vector<ModelPtr>& members() const { return members_; }

 private:
  std::vector<ModelPtr> members_;
};

}  // namespace tkd::ensemble
