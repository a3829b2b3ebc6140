#pragma once

#include <cstdint>
#include <vector>

#include "dataset.hpp"

namespace tkd::data {

// One Gaussian mixture component. The component mean moves by `drift` every
// period, so period t samples from mean + t * drift.
struct MixtureComponent {
  std::vector<double> mean;
  std::vector<double> drift;
  double stddev = 1.0;
  double weight = 1.0;
};

// Period indices at which the fraud-class distribution of an earlier period
// reappears (an old attack pattern coming back).
struct Recurrence {
  int at_period = 0;
  int from_period = 0;
};

struct DriftGeneratorConfig {
  int n_periods = 6;
  int samples_per_period = 1000;
  double fraud_rate = 0.1;
  int n_features = 2;
  std::vector<MixtureComponent> fraud_components;
  std::vector<MixtureComponent> nonfraud_components;
  std::vector<Recurrence> recurrences;
  std::uint64_t seed = 0;

  void validate() const;
};

std::vector<TemporalDataset> generate_drift(const DriftGeneratorConfig& cfg);

}  // namespace tkd::data
