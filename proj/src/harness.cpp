#include "harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <map>
#include <thread>
#include <tuple>

#include "ensemble.hpp"
#include "error.hpp"
#include "model.hpp"
#include "rng.hpp"

namespace tkd::harness {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

constexpr std::uint64_t kMlpStream = 0x6d6c7000;
constexpr std::uint64_t kGbtStream = 0x67627400;
constexpr std::uint64_t kChainStream = 0x636e6e00;

}  // namespace

const char* candidate_name(Candidate c) {
  switch (c) {
    case Candidate::mlp: return "MLP";
    case Candidate::xg: return "XG";
    case Candidate::mlp_xg: return "MLP-XG";
    case Candidate::mlp_tkd: return "MLP-TKD";
    case Candidate::xg_tkd: return "XG-TKD";
    case Candidate::mlp_xg_tkd: return "MLP-XG-TKD";
  }
  return "MLP-XG";
}

Candidate candidate_from_name(const std::string& name) {
  for (Candidate c : {Candidate::mlp, Candidate::xg, Candidate::mlp_xg, Candidate::mlp_tkd,
                      Candidate::xg_tkd, Candidate::mlp_xg_tkd}) {
    if (name == candidate_name(c)) return c;
  }
  throw Error("harness", "unknown candidate '" + name + "'");
}

bool is_distilled(Candidate c) {
  return c == Candidate::mlp_tkd || c == Candidate::xg_tkd || c == Candidate::mlp_xg_tkd;
}

Candidate base_of(Candidate c) {
  switch (c) {
    case Candidate::mlp_tkd: return Candidate::mlp;
    case Candidate::xg_tkd: return Candidate::xg;
    case Candidate::mlp_xg_tkd: return Candidate::mlp_xg;
    default: return c;
  }
}

void ExperimentConfig::validate() const {
  require(!candidates.empty(), "harness", "no candidates configured");
  require(runs >= 1, "harness", "runs must be at least 1");
  require(jobs >= 1, "harness", "jobs must be at least 1");
  require(rebalance_target > 0.0 && rebalance_target < 1.0, "harness",
          "rebalance target must be in (0, 1)");
  require(validation_fraction >= 0.0 && validation_fraction < 1.0, "harness",
          "validation fraction must be in [0, 1)");
  loss.validate();
  mlp.validate();
  gbt.validate();
}

namespace {

struct PathData {
  data::TemporalDataset train;
  data::TemporalDataset validation;
  std::size_t rows = 0;
};

// Per-slice rebalancing keeps every slice at the target class mix, so the
// assembled size is exactly the sum of the per-period rebalanced sizes.
PathData assemble(const ExperimentConfig& cfg, const std::vector<data::TemporalDataset>& periods,
                  int first, int last, std::uint64_t seed) {
  std::vector<data::TemporalDataset> parts;
  parts.reserve(static_cast<std::size_t>(last - first + 1));
  for (int t = first; t <= last; ++t) {
    require(t >= 0 && t < static_cast<int>(periods.size()), "harness",
            "missing data for period " + std::to_string(t));
    require(periods[t].has_labels(), "harness",
            "period " + std::to_string(t) + " has no labels");
    parts.push_back(data::rebalance(periods[t], cfg.rebalance_target,
                                    mix_seed(seed, static_cast<std::uint64_t>(t))));
  }
  const data::TemporalDataset pool = data::concat(parts);
  PathData out;
  out.rows = pool.rows();
  auto split = data::split_tail(pool, cfg.validation_fraction);
  out.train = std::move(split.head);
  out.validation = std::move(split.tail);
  return out;
}

struct MemberSet {
  std::shared_ptr<const nn::MlpModel> mlp;
  std::shared_ptr<const gbt::GbtModel> gbt;
  double mlp_seconds = 0.0;
  double gbt_seconds = 0.0;
  double soft_label_seconds = 0.0;
  std::size_t train_rows = 0;
  std::vector<nn::TrainLogEntry> mlp_log;
};

// Trains the MLP and/or boosted-tree member on prepared data. `soft` is null
// for undistilled paths.
MemberSet train_members(const ExperimentConfig& cfg, const PathData& prepared,
                        const std::vector<distill::SoftLabelMatrix>* soft, std::uint64_t seed,
                        bool need_mlp, bool need_gbt) {
  MemberSet members;
  members.train_rows = prepared.rows;

  if (need_mlp) {
    nn::MlpConfig mlp_cfg = cfg.mlp;
    mlp_cfg.seed = mix_seed(seed, kMlpStream);
    const auto start = Clock::now();
    nn::TrainResult trained =
        nn::train(mlp_cfg, prepared.train,
                  prepared.validation.rows() > 0 ? &prepared.validation : nullptr, soft, cfg.loss);
    members.mlp_seconds = seconds_since(start);
    members.mlp = std::make_shared<nn::MlpModel>(std::move(trained.model));
    members.mlp_log = std::move(trained.log);
  }

  if (need_gbt) {
    gbt::GbtConfig gbt_cfg = cfg.gbt;
    gbt_cfg.seed = mix_seed(seed, kGbtStream);
    gbt::BoostObjective objective;
    objective.alpha = soft != nullptr && !soft->empty() ? cfg.loss.alpha : 1.0;
    if (soft != nullptr) {
      for (const auto& s : *soft) {
        std::vector<double> positive(s.probs.rows());
        for (std::size_t r = 0; r < s.probs.rows(); ++r) positive[r] = s.probs(r, 1);
        objective.teacher_positive.push_back(std::move(positive));
      }
    }
    const auto start = Clock::now();
    gbt::GbtModel trained = gbt::fit(gbt_cfg, prepared.train, objective);
    members.gbt_seconds = seconds_since(start);
    members.gbt = std::make_shared<gbt::GbtModel>(std::move(trained));
  }
  return members;
}

MemberSet train_cumulative(const ExperimentConfig& cfg,
                           const std::vector<data::TemporalDataset>& periods, int p,
                           std::uint64_t seed, bool need_mlp, bool need_gbt) {
  const PathData prepared = assemble(cfg, periods, 0, p, seed);
  return train_members(cfg, prepared, nullptr, seed, need_mlp, need_gbt);
}

MemberSet train_latest(const ExperimentConfig& cfg,
                       const std::vector<data::TemporalDataset>& periods, int p,
                       std::uint64_t seed, bool need_mlp, bool need_gbt) {
  const PathData prepared = assemble(cfg, periods, p, p, seed);
  return train_members(cfg, prepared, nullptr, seed, need_mlp, need_gbt);
}

MemberSet train_distilled(const ExperimentConfig& cfg,
                          const std::vector<data::TemporalDataset>& periods, int p,
                          const distill::TeacherRegistry& registry, std::uint64_t seed,
                          bool need_mlp, bool need_gbt) {
  const PathData prepared = assemble(cfg, periods, p, p, seed);
  const auto start = Clock::now();
  const std::vector<distill::SoftLabelMatrix> soft =
      distill::generate_soft_labels(registry, prepared.train.x, p, cfg.loss.truncation_k);
  const double soft_seconds = seconds_since(start);
  MemberSet members = train_members(cfg, prepared, &soft, seed, need_mlp, need_gbt);
  members.soft_label_seconds = soft_seconds;
  return members;
}

ModelPtr compose(const MemberSet& members, Candidate kind) {
  switch (base_of(kind)) {
    case Candidate::mlp: return members.mlp;
    case Candidate::xg: return members.gbt;
    default:
      return std::make_shared<ensemble::EnsembleModel>(
          std::vector<ModelPtr>{members.mlp, members.gbt});
  }
}

double candidate_seconds(const MemberSet& members, Candidate kind) {
  switch (base_of(kind)) {
    case Candidate::mlp: return members.mlp_seconds;
    case Candidate::xg: return members.gbt_seconds;
    default: return members.mlp_seconds + members.gbt_seconds;
  }
}

TrainedCandidate to_trained(const MemberSet& members, Candidate kind) {
  TrainedCandidate out;
  out.model = compose(members, kind);
  out.train_seconds = candidate_seconds(members, kind);
  out.soft_label_seconds = members.soft_label_seconds;
  out.train_rows = members.train_rows;
  out.mlp_log = members.mlp_log;
  return out;
}

void member_needs(Candidate kind, bool* mlp, bool* gbt) {
  switch (base_of(kind)) {
    case Candidate::mlp: *mlp = true; break;
    case Candidate::xg: *gbt = true; break;
    default:
      *mlp = true;
      *gbt = true;
      break;
  }
}

}  // namespace

TrainedCandidate run_baseline(const ExperimentConfig& cfg,
                              const std::vector<data::TemporalDataset>& periods, int p,
                              Candidate kind, std::uint64_t seed,
                              distill::TeacherRegistry* register_into) {
  cfg.validate();
  require(p >= 0 && p < static_cast<int>(periods.size()), "harness", "period out of range");
  bool need_mlp = false, need_gbt = false;
  member_needs(kind, &need_mlp, &need_gbt);
  const bool register_teacher = register_into != nullptr;
  const MemberSet members = train_cumulative(cfg, periods, p, seed, need_mlp || register_teacher,
                                             need_gbt || register_teacher);
  if (register_teacher) {
    register_into->add(p, compose(members, Candidate::mlp_xg));
  }
  return to_trained(members, kind);
}

TrainedCandidate run_tkd(const ExperimentConfig& cfg,
                         const std::vector<data::TemporalDataset>& periods, int p, Candidate kind,
                         const distill::TeacherRegistry& registry, std::uint64_t seed,
                         distill::TeacherRegistry* register_into) {
  cfg.validate();
  require(p >= 1 && p < static_cast<int>(periods.size()), "harness",
          "distilled training starts at period 1; period 0 has no teachers");
  bool need_mlp = false, need_gbt = false;
  member_needs(kind, &need_mlp, &need_gbt);
  const bool register_teacher = register_into != nullptr;
  const MemberSet members =
      train_distilled(cfg, periods, p, registry, seed, need_mlp || register_teacher,
                      need_gbt || register_teacher);
  if (register_teacher) {
    register_into->add(p, compose(members, Candidate::mlp_xg));
  }
  return to_trained(members, kind);
}

namespace {

// Teachers are the period ensembles, trained once with the base seed; the
// chain feeds itself: each period's teacher is distilled from the previous
// ones.
void ensure_teacher_chain(const ExperimentConfig& cfg,
                          const std::vector<data::TemporalDataset>& periods,
                          distill::TeacherRegistry& registry, int through_period) {
  for (int t = static_cast<int>(registry.size()); t <= through_period; ++t) {
    const std::uint64_t seed = mix_seed(cfg.base_seed, kChainStream + static_cast<std::uint64_t>(t));
    const MemberSet members =
        t == 0 ? train_cumulative(cfg, periods, 0, seed, true, true)
               : train_distilled(cfg, periods, t, registry, seed, true, true);
    registry.add(t, compose(members, Candidate::mlp_xg));
  }
}

struct RunOutput {
  std::vector<RunRecord> records;
  std::vector<TimingRecord> timing;
};

struct EvalTask {
  std::string name;
  std::string role;
  ModelPtr model;
  double train_seconds = 0.0;
  double soft_label_seconds = 0.0;
  std::size_t train_rows = 0;
};

RunOutput execute_run(const ExperimentConfig& cfg,
                      const std::vector<data::TemporalDataset>& periods,
                      const distill::TeacherRegistry& registry, const ExperimentPeriod& period,
                      int run_index, bool timing_only) {
  const std::uint64_t seed = cfg.base_seed + static_cast<std::uint64_t>(run_index);
  const int p = period.index;

  bool cum_mlp = false, cum_gbt = false, tkd_mlp = false, tkd_gbt = false;
  bool any_tkd = false;
  for (Candidate c : cfg.candidates) {
    if (is_distilled(c)) {
      any_tkd = true;
      member_needs(c, &tkd_mlp, &tkd_gbt);
    } else {
      member_needs(c, &cum_mlp, &cum_gbt);
    }
  }
  // At period 0 the distilled path has no teachers and falls back to the
  // conventional one, which at that point sees the same single slice.
  if (p == 0 && any_tkd) {
    cum_mlp = cum_mlp || tkd_mlp;
    cum_gbt = cum_gbt || tkd_gbt;
  }
  const bool want_controls = cfg.latest_slice_controls && any_tkd && p >= 1 && !timing_only;

  MemberSet cumulative;
  if (cum_mlp || cum_gbt) {
    cumulative = train_cumulative(cfg, periods, p, seed, cum_mlp, cum_gbt);
  }
  MemberSet distilled;
  if (p >= 1 && (tkd_mlp || tkd_gbt)) {
    distilled = train_distilled(cfg, periods, p, registry, seed, tkd_mlp, tkd_gbt);
  }
  MemberSet latest;
  if (want_controls) {
    latest = train_latest(cfg, periods, p, seed, tkd_mlp, tkd_gbt);
  }

  std::vector<EvalTask> tasks;
  for (Candidate c : cfg.candidates) {
    EvalTask task;
    task.name = candidate_name(c);
    task.role = "candidate";
    const MemberSet& source = is_distilled(c) ? (p == 0 ? cumulative : distilled) : cumulative;
    const TrainedCandidate trained = to_trained(source, c);
    task.model = trained.model;
    task.train_seconds = trained.train_seconds;
    task.soft_label_seconds = trained.soft_label_seconds;
    task.train_rows = trained.train_rows;
    tasks.push_back(std::move(task));
  }
  if (want_controls) {
    for (Candidate c : cfg.candidates) {
      if (!is_distilled(c)) continue;
      EvalTask task;
      task.name = candidate_name(base_of(c));
      task.role = "control";
      const TrainedCandidate trained = to_trained(latest, base_of(c));
      task.model = trained.model;
      task.train_seconds = trained.train_seconds;
      task.train_rows = trained.train_rows;
      tasks.push_back(std::move(task));
    }
  }

  RunOutput out;
  for (const EvalTask& task : tasks) {
    TimingRecord timing;
    timing.candidate = task.name;
    timing.role = task.role;
    timing.train_period = p;
    timing.run = run_index;
    timing.train_seconds = task.train_seconds;
    timing.soft_label_seconds = task.soft_label_seconds;
    timing.train_rows = task.train_rows;
    out.timing.push_back(timing);

    if (timing_only) continue;
    for (int m : period.testing_periods) {
      const data::TemporalDataset& test = periods[static_cast<std::size_t>(m)];
      require(test.has_labels(), "harness",
              "testing period " + std::to_string(m) + " has no labels");
      const std::vector<double> scores = positive_scores(*task.model, test.x);
      const metrics::EvalReport eval = metrics::evaluate(scores, test.labels);

      RunRecord record;
      record.candidate = task.name;
      record.role = task.role;
      record.experiment_period = p;
      record.run = run_index;
      record.seed = seed;
      record.test_period = m;
      record.auprc = eval.auprc;
      record.auroc = eval.auroc;
      record.n_samples = eval.n_samples;
      record.n_positive = eval.n_positive;
      record.train_seconds = task.train_seconds;
      record.soft_label_seconds = task.soft_label_seconds;
      record.train_rows = task.train_rows;
      out.records.push_back(std::move(record));
    }
  }
  return out;
}

std::vector<RunOutput> execute_period(const ExperimentConfig& cfg,
                                      const std::vector<data::TemporalDataset>& periods,
                                      const distill::TeacherRegistry& registry,
                                      const ExperimentPeriod& period, bool timing_only) {
  std::vector<RunOutput> outputs(static_cast<std::size_t>(cfg.runs));
  const int workers = std::min(cfg.jobs, cfg.runs);
  if (workers <= 1) {
    for (int r = 0; r < cfg.runs; ++r) {
      outputs[static_cast<std::size_t>(r)] =
          execute_run(cfg, periods, registry, period, r, timing_only);
    }
    return outputs;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int r = next.fetch_add(1); r < cfg.runs; r = next.fetch_add(1)) {
        outputs[static_cast<std::size_t>(r)] =
            execute_run(cfg, periods, registry, period, r, timing_only);
      }
    });
  }
  for (auto& t : pool) t.join();
  return outputs;
}

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& cfg,
                                const std::vector<data::TemporalDataset>& periods,
                                distill::TeacherRegistry* out_registry) {
  cfg.validate();
  const int n_periods = static_cast<int>(periods.size());
  for (int t = 0; t < n_periods; ++t) {
    require(periods[static_cast<std::size_t>(t)].period == t, "harness",
            "periods must be contiguous from 0");
  }

  ExperimentReport report;
  report.schedule = build_schedule(n_periods);

  bool any_tkd = false;
  for (Candidate c : cfg.candidates) any_tkd = any_tkd || is_distilled(c);

  distill::TeacherRegistry registry;

  for (const ExperimentPeriod& period : report.schedule.periods) {
    // After period p the registry holds M_0..M_p; the new entry only serves
    // later periods (soft-label generation at t ignores teachers >= t).
    if (any_tkd) {
      ensure_teacher_chain(cfg, periods, registry, period.index);
    }
    const auto outputs = execute_period(cfg, periods, registry, period, /*timing_only=*/false);
    for (const RunOutput& out : outputs) {
      report.runs.insert(report.runs.end(), out.records.begin(), out.records.end());
      report.timing.insert(report.timing.end(), out.timing.begin(), out.timing.end());
    }
  }

  if (cfg.extend_timing_periods) {
    for (int t = report.schedule.periods.back().index + 1; t < n_periods; ++t) {
      if (any_tkd) ensure_teacher_chain(cfg, periods, registry, t);
      ExperimentPeriod pseudo;
      pseudo.index = t;
      const auto outputs = execute_period(cfg, periods, registry, pseudo, /*timing_only=*/true);
      for (const RunOutput& out : outputs) {
        report.timing.insert(report.timing.end(), out.timing.begin(), out.timing.end());
      }
    }
  }

  // Mean AUPRC per (candidate, role, experiment period, testing period).
  std::map<std::tuple<std::string, std::string, int, int>, std::vector<const RunRecord*>> groups;
  for (const RunRecord& r : report.runs) {
    groups[{r.candidate, r.role, r.experiment_period, r.test_period}].push_back(&r);
  }
  for (const auto& [key, rows] : groups) {
    MeanAuprcRecord mean;
    mean.candidate = std::get<0>(key);
    mean.role = std::get<1>(key);
    mean.experiment_period = std::get<2>(key);
    mean.test_period = std::get<3>(key);
    mean.runs = static_cast<int>(rows.size());
    for (const RunRecord* r : rows) {
      mean.mean_auprc += r->auprc;
      mean.mean_auroc += r->auroc;
    }
    mean.mean_auprc /= static_cast<double>(rows.size());
    mean.mean_auroc /= static_cast<double>(rows.size());
    report.mean_auprc.push_back(std::move(mean));
  }

  auto find_mean = [&](const std::string& name, const std::string& role, int p,
                       int m) -> const MeanAuprcRecord* {
    for (const auto& rec : report.mean_auprc) {
      if (rec.candidate == name && rec.role == role && rec.experiment_period == p &&
          rec.test_period == m) {
        return &rec;
      }
    }
    return nullptr;
  };

  for (Candidate c : cfg.candidates) {
    if (!is_distilled(c)) continue;
    const std::string tkd_name = candidate_name(c);
    const std::string base_name = candidate_name(base_of(c));
    for (const ExperimentPeriod& period : report.schedule.periods) {
      if (period.index == 0) continue;  // identical training inputs, delta is trivially 0
      for (int m : period.testing_periods) {
        const MeanAuprcRecord* tkd = find_mean(tkd_name, "candidate", period.index, m);
        if (tkd == nullptr) continue;
        const auto add_delta = [&](const MeanAuprcRecord* base, const std::string& comparison,
                                   const std::string& pair) {
          if (base == nullptr || base->mean_auprc == 0.0) return;
          const metrics::DeltaReport d = metrics::delta(base->mean_auprc, tkd->mean_auprc);
          DeltaRecord record;
          record.pair = pair;
          record.comparison = comparison;
          record.experiment_period = period.index;
          record.test_period = m;
          record.base_auprc = base->mean_auprc;
          record.tkd_auprc = tkd->mean_auprc;
          record.delta = d.delta;
          record.relative_improvement_pct = d.relative_improvement_pct;
          report.deltas.push_back(record);
        };
        add_delta(find_mean(base_name, "candidate", period.index, m), "cumulative",
                  tkd_name + " vs " + base_name);
        add_delta(find_mean(base_name, "control", period.index, m), "latest-slice",
                  tkd_name + " vs " + base_name + " (latest slice)");
      }
    }
  }

  // Mean wall-clock per (candidate, role, training period).
  std::map<std::tuple<std::string, std::string, int>, std::pair<double, int>> timing_groups;
  for (const TimingRecord& t : report.timing) {
    auto& slot = timing_groups[{t.candidate, t.role, t.train_period}];
    slot.first += t.train_seconds + t.soft_label_seconds;
    slot.second += 1;
  }
  for (const auto& [key, value] : timing_groups) {
    report.mean_train_seconds[std::get<0>(key) + "|" + std::get<1>(key) + "|" +
                              std::to_string(std::get<2>(key))] =
        value.first / static_cast<double>(value.second);
  }

  if (out_registry != nullptr) *out_registry = std::move(registry);
  return report;
}

}  // namespace tkd::harness
