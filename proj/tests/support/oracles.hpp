// Independent reference implementations used only by tests. These
// deliberately take the slow, obvious route (full rescans, O(n^2) pair
// counts, finite differences) so they share no code path with the library.
#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <set>
#include <vector>

#include "dataset.hpp"
#include "matrix.hpp"
#include "rng.hpp"

namespace oracle {

// Average precision by explicit threshold enumeration: for every distinct
// score, classify score >= threshold as positive and rescan the whole input.
inline double auprc_bruteforce(const std::vector<double>& scores, const std::vector<int>& labels) {
  std::set<double, std::greater<double>> thresholds(scores.begin(), scores.end());
  std::size_t total_pos = 0;
  for (int y : labels) total_pos += static_cast<std::size_t>(y);

  double area = 0.0;
  double prev_recall = 0.0;
  for (double threshold : thresholds) {
    std::size_t tp = 0, fp = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      if (scores[i] >= threshold) {
        if (labels[i] == 1) {
          ++tp;
        } else {
          ++fp;
        }
      }
    }
    const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    const double recall = static_cast<double>(tp) / static_cast<double>(total_pos);
    area += (recall - prev_recall) * precision;
    prev_recall = recall;
  }
  return area;
}

// AUROC by counting every positive/negative pair.
inline double auroc_bruteforce(const std::vector<double>& scores, const std::vector<int>& labels) {
  double wins = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 1) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] != 0) continue;
      ++pairs;
      if (scores[i] > scores[j]) {
        wins += 1.0;
      } else if (scores[i] == scores[j]) {
        wins += 0.5;
      }
    }
  }
  return wins / static_cast<double>(pairs);
}

// Central finite difference of a scalar function of one parameter.
inline double central_difference(const std::function<double()>& f, double* param, double eps) {
  const double saved = *param;
  *param = saved + eps;
  const double up = f();
  *param = saved - eps;
  const double down = f();
  *param = saved;
  return (up - down) / (2.0 * eps);
}

inline double relative_error(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-6});
}

// Two well-separated Gaussian blobs in 2-D, linearly separable by x0 + x1.
inline tkd::data::TemporalDataset separable_blobs(std::size_t n_per_class, std::uint64_t seed) {
  tkd::Rng rng(seed);
  tkd::data::TemporalDataset ds;
  ds.period = 0;
  ds.feature_names = {"f0", "f1"};
  ds.x = tkd::Matrix(2 * n_per_class, 2);
  ds.labels.assign(2 * n_per_class, 0);
  for (std::size_t i = 0; i < 2 * n_per_class; ++i) {
    const bool positive = i % 2 == 1;
    const double cx = positive ? 2.0 : -2.0;
    ds.x(i, 0) = cx + 0.5 * rng.gaussian();
    ds.x(i, 1) = cx + 0.5 * rng.gaussian();
    ds.labels[i] = positive ? 1 : 0;
  }
  return ds;
}

// Plain full-batch logistic regression; the reference learner for "this toy
// problem is easy" claims.
inline std::vector<double> logistic_regression_scores(const tkd::data::TemporalDataset& ds,
                                                      int steps = 500, double lr = 0.5) {
  const std::size_t d = ds.cols();
  std::vector<double> w(d, 0.0);
  double b = 0.0;
  const double inv_n = 1.0 / static_cast<double>(ds.rows());
  for (int step = 0; step < steps; ++step) {
    std::vector<double> gw(d, 0.0);
    double gb = 0.0;
    for (std::size_t i = 0; i < ds.rows(); ++i) {
      double z = b;
      for (std::size_t c = 0; c < d; ++c) z += w[c] * ds.x(i, c);
      const double p = 1.0 / (1.0 + std::exp(-z));
      const double err = (p - static_cast<double>(ds.labels[i])) * inv_n;
      for (std::size_t c = 0; c < d; ++c) gw[c] += err * ds.x(i, c);
      gb += err;
    }
    for (std::size_t c = 0; c < d; ++c) w[c] -= lr * gw[c];
    b -= lr * gb;
  }
  std::vector<double> scores(ds.rows());
  for (std::size_t i = 0; i < ds.rows(); ++i) {
    double z = b;
    for (std::size_t c = 0; c < d; ++c) z += w[c] * ds.x(i, c);
    scores[i] = 1.0 / (1.0 + std::exp(-z));
  }
  return scores;
}

}  // namespace oracle
