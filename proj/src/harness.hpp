#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dataset.hpp"
#include "distill.hpp"
#include "gbt.hpp"
#include "metrics.hpp"
#include "mlp.hpp"
#include "schedule.hpp"

namespace tkd::harness {

// The six model candidates: three trained the conventional way on all labeled
// history, three trained on the newest slice only under teacher supervision.
enum class Candidate { mlp, xg, mlp_xg, mlp_tkd, xg_tkd, mlp_xg_tkd };

const char* candidate_name(Candidate c);
Candidate candidate_from_name(const std::string& name);
bool is_distilled(Candidate c);
// The conventionally trained counterpart of a distilled candidate.
Candidate base_of(Candidate c);

struct ExperimentConfig {
  std::vector<Candidate> candidates{Candidate::mlp_xg, Candidate::mlp_xg_tkd};
  int runs = 10;
  std::uint64_t base_seed = 0;
  int jobs = 1;
  distill::TkdLossConfig loss;
  double rebalance_target = 0.3;
  double validation_fraction = 0.1;
  nn::MlpConfig mlp;
  gbt::GbtConfig gbt;
  // Also trains, for every distilled candidate, the same model on the newest
  // slice without teachers; isolates what the teachers contribute.
  bool latest_slice_controls = true;
  // Keeps training models past the last experiment period so the timing
  // series covers every period.
  bool extend_timing_periods = true;

  void validate() const;
};

// One trained candidate with its cost accounting. Timing covers model fitting
// (and soft-label generation for distilled paths); data assembly is excluded.
struct TrainedCandidate {
  ModelPtr model;
  double train_seconds = 0.0;
  double soft_label_seconds = 0.0;
  std::size_t train_rows = 0;
  std::vector<nn::TrainLogEntry> mlp_log;  // empty when no MLP member was trained
};

// Conventional path: fit on all labeled periods 0..p (each slice rebalanced),
// optionally registering the result as the period-p teacher.
TrainedCandidate run_baseline(const ExperimentConfig& cfg,
                              const std::vector<data::TemporalDataset>& periods, int p,
                              Candidate kind, std::uint64_t seed,
                              distill::TeacherRegistry* register_into = nullptr);

// Distilled path: fit on period p only, regularized by soft labels from every
// registered teacher in [truncation_k, p). Period 0 has no teachers and must
// go through run_baseline.
TrainedCandidate run_tkd(const ExperimentConfig& cfg,
                         const std::vector<data::TemporalDataset>& periods, int p, Candidate kind,
                         const distill::TeacherRegistry& registry, std::uint64_t seed,
                         distill::TeacherRegistry* register_into = nullptr);

struct RunRecord {
  std::string candidate;
  std::string role;  // "candidate" or "control"
  int experiment_period = 0;
  int run = 0;
  std::uint64_t seed = 0;
  int test_period = 0;
  double auprc = 0.0;
  double auroc = 0.0;
  std::size_t n_samples = 0;
  std::size_t n_positive = 0;
  double train_seconds = 0.0;
  double soft_label_seconds = 0.0;
  std::size_t train_rows = 0;
};

struct TimingRecord {
  std::string candidate;
  std::string role;
  int train_period = 0;
  int run = 0;
  double train_seconds = 0.0;
  double soft_label_seconds = 0.0;
  std::size_t train_rows = 0;
};

struct MeanAuprcRecord {
  std::string candidate;
  std::string role;
  int experiment_period = 0;
  int test_period = 0;
  double mean_auprc = 0.0;
  double mean_auroc = 0.0;
  int runs = 0;
};

struct DeltaRecord {
  std::string pair;  // e.g. "MLP-TKD vs MLP"
  std::string comparison;  // "cumulative" or "latest-slice"
  int experiment_period = 0;
  int test_period = 0;
  double base_auprc = 0.0;
  double tkd_auprc = 0.0;
  double delta = 0.0;
  double relative_improvement_pct = 0.0;
};

struct ExperimentReport {
  PeriodSchedule schedule;
  std::vector<RunRecord> runs;
  std::vector<MeanAuprcRecord> mean_auprc;
  std::vector<DeltaRecord> deltas;
  std::vector<TimingRecord> timing;
  std::map<std::string, double> mean_train_seconds;  // "candidate|period" -> mean
};

// The full rolling experiment: builds the teacher chain period by period,
// trains every candidate `runs` times per experiment period with seeds
// base_seed + run, evaluates per testing period, and assembles the mean and
// delta tables. The registry out-param receives the final teacher chain.
ExperimentReport run_experiment(const ExperimentConfig& cfg,
                                const std::vector<data::TemporalDataset>& periods,
                                distill::TeacherRegistry* out_registry = nullptr);

}  // namespace tkd::harness
