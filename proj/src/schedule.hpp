#pragma once

#include <vector>

namespace tkd::harness {

// Rolling experiment layout under a one-period labeling delay: at experiment
// period p, labels exist for periods 0..p, period p+1 is still unlabeled,
// and periods p+2..N-1 are held out for testing.
struct ExperimentPeriod {
  int index = 0;
  std::vector<int> training_periods;  // {0..p}
  int no_label_period = 0;            // p+1
  std::vector<int> testing_periods;   // {p+2..N-1}, never empty
};

struct PeriodSchedule {
  int n_periods = 0;
  std::vector<ExperimentPeriod> periods;
};

// Requires n_periods >= 3 (one training, one unlabeled, one testing period).
PeriodSchedule build_schedule(int n_periods);

}  // namespace tkd::harness
