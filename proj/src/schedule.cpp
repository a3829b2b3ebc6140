#include "schedule.hpp"

#include "error.hpp"

namespace tkd::harness {

PeriodSchedule build_schedule(int n_periods) {
  require(n_periods >= 3, "harness",
          "need at least 3 periods for a training/no-label/testing split");
  PeriodSchedule schedule;
  schedule.n_periods = n_periods;
  for (int p = 0; p <= n_periods - 3; ++p) {
    ExperimentPeriod period;
    period.index = p;
    for (int t = 0; t <= p; ++t) period.training_periods.push_back(t);
    period.no_label_period = p + 1;
    for (int t = p + 2; t < n_periods; ++t) period.testing_periods.push_back(t);
    schedule.periods.push_back(std::move(period));
  }
  return schedule;
}

}  // namespace tkd::harness
