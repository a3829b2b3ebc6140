#include "model.hpp"

namespace tkd {

std::vector<double> positive_scores(const Model& model, const Matrix& x) {
  const Matrix probs = model.predict_proba(x);
  std::vector<double> scores(probs.rows());
  for (std::size_t r = 0; r < probs.rows(); ++r) scores[r] = probs(r, 1);
  return scores;
}

}  // namespace tkd
