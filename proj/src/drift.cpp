#include "drift.hpp"

#include <cmath>
#include <numeric>

#include "error.hpp"
#include "rng.hpp"

namespace tkd::data {

namespace {

void validate_components(const std::vector<MixtureComponent>& comps, int n_features,
                         const char* which) {
  require(!comps.empty(), "data", std::string(which) + " mixture has no components");
  double total_weight = 0.0;
  for (const auto& c : comps) {
    require(c.mean.size() == static_cast<std::size_t>(n_features), "data",
            std::string(which) + " component mean has wrong dimension");
    require(c.drift.empty() || c.drift.size() == static_cast<std::size_t>(n_features), "data",
            std::string(which) + " component drift has wrong dimension");
    require(c.stddev > 0.0, "data", std::string(which) + " component stddev must be positive");
    require(c.weight > 0.0, "data", std::string(which) + " component weight must be positive");
    total_weight += c.weight;
  }
  require(total_weight > 0.0, "data", std::string(which) + " mixture weights sum to zero");
}

std::size_t pick_component(const std::vector<MixtureComponent>& comps, double total_weight,
                           Rng& rng) {
  const double u = rng.uniform01() * total_weight;
  double acc = 0.0;
  for (std::size_t i = 0; i < comps.size(); ++i) {
    acc += comps[i].weight;
    if (u < acc) return i;
  }
  return comps.size() - 1;
}

void sample_row(const MixtureComponent& comp, int effective_period, double* out,
                std::size_t dims, Rng& rng) {
  for (std::size_t d = 0; d < dims; ++d) {
    const double drift = comp.drift.empty() ? 0.0 : comp.drift[d];
    const double center = comp.mean[d] + static_cast<double>(effective_period) * drift;
    out[d] = center + comp.stddev * rng.gaussian();
  }
}

}  // namespace

void DriftGeneratorConfig::validate() const {
  require(n_periods >= 1, "data", "n_periods must be at least 1");
  require(samples_per_period >= 1, "data", "samples_per_period must be at least 1");
  require(fraud_rate > 0.0 && fraud_rate < 0.5, "data", "fraud_rate must be in (0, 0.5)");
  require(n_features >= 1, "data", "n_features must be at least 1");
  validate_components(fraud_components, n_features, "fraud");
  validate_components(nonfraud_components, n_features, "nonfraud");
  for (const auto& rec : recurrences) {
    require(rec.at_period >= 0 && rec.at_period < n_periods, "data",
            "recurrence period out of range");
    require(rec.from_period >= 0 && rec.from_period < rec.at_period, "data",
            "recurrence must reference a strictly earlier period");
  }
}

std::vector<TemporalDataset> generate_drift(const DriftGeneratorConfig& cfg) {
  cfg.validate();

  auto total_weight = [](const std::vector<MixtureComponent>& comps) {
    double w = 0.0;
    for (const auto& c : comps) w += c.weight;
    return w;
  };
  const double fraud_weight = total_weight(cfg.fraud_components);
  const double nonfraud_weight = total_weight(cfg.nonfraud_components);

  std::vector<std::string> names;
  names.reserve(cfg.n_features);
  for (int d = 0; d < cfg.n_features; ++d) names.push_back("f" + std::to_string(d));

  std::vector<TemporalDataset> out;
  out.reserve(cfg.n_periods);
  for (int t = 0; t < cfg.n_periods; ++t) {
    // Independent stream per period: insensitive to generation order.
    Rng rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(t)));

    int fraud_period = t;
    for (const auto& rec : cfg.recurrences) {
      if (rec.at_period == t) fraud_period = rec.from_period;
    }

    const std::size_t n = static_cast<std::size_t>(cfg.samples_per_period);
    const std::size_t n_pos = static_cast<std::size_t>(
        std::llround(static_cast<double>(n) * cfg.fraud_rate));

    TemporalDataset ds;
    ds.period = t;
    ds.feature_names = names;
    ds.x = Matrix(n, static_cast<std::size_t>(cfg.n_features));
    ds.labels.assign(n, 0);

    for (std::size_t i = 0; i < n; ++i) {
      const bool positive = i < n_pos;
      const auto& comps = positive ? cfg.fraud_components : cfg.nonfraud_components;
      const double weight = positive ? fraud_weight : nonfraud_weight;
      const int effective = positive ? fraud_period : t;
      const std::size_t k = pick_component(comps, weight, rng);
      sample_row(comps[k], effective, ds.x.row(i), ds.cols(), rng);
      ds.labels[i] = positive ? 1 : 0;
    }

    // Shuffle rows so labels are not grouped by class.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(order);
    TemporalDataset shuffled;
    shuffled.period = ds.period;
    shuffled.feature_names = ds.feature_names;
    shuffled.x = ds.x.gather_rows(order);
    shuffled.labels.reserve(n);
    for (std::size_t idx : order) shuffled.labels.push_back(ds.labels[idx]);
    out.push_back(std::move(shuffled));
  }
  return out;
}

}  // namespace tkd::data
