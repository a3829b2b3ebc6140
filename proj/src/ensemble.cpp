#include "ensemble.hpp"

#include "error.hpp"

namespace tkd::ensemble {

EnsembleModel::EnsembleModel(std::vector<ModelPtr> members) : members_(std::move(members)) {
  require(!members_.empty(), "ensemble", "ensemble needs at least one member");
  for (const auto& m : members_) {
    require(m != nullptr, "ensemble", "null ensemble member");
    require(m->feature_count() == members_.front()->feature_count(), "ensemble",
            "ensemble members disagree on feature width");
  }
}

std::size_t EnsembleModel::feature_count() const { return members_.front()->feature_count(); }

Matrix EnsembleModel::predict_proba(const Matrix& x) const {
  Matrix total = members_.front()->predict_proba(x);
  for (std::size_t m = 1; m < members_.size(); ++m) {
    const Matrix probs = members_[m]->predict_proba(x);
    for (std::size_t i = 0; i < total.data().size(); ++i) total.data()[i] += probs.data()[i];
  }
  const double inv = 1.0 / static_cast<double>(members_.size());
  for (double& v : total.data()) v *= inv;
  return total;
}

}  // namespace tkd::ensemble
