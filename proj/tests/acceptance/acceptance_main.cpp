// Acceptance suite: one check per release criterion, each printing a single
// PASS/FAIL line with its runtime. Run with --criterion N for one criterion
// or no arguments for all. Exit code is the number of failures.

#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "config_io.hpp"
#include "dataset.hpp"
#include "distill.hpp"
#include "drift.hpp"
#include "ensemble.hpp"
#include "gbt.hpp"
#include "harness.hpp"
#include "metrics.hpp"
#include "mlp.hpp"
#include "oracles.hpp"
#include "persist.hpp"
#include "preprocess.hpp"
#include "raw_table.hpp"
#include "rng.hpp"
#include "schedule.hpp"
#include "tkd/tkd.h"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace tkd;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

struct Check {
  int id;
  const char* name;
  double time_limit_seconds;
  std::function<Outcome()> run;
};

// ---------------------------------------------------------------------------
// 1. Gradient fidelity: analytic gradients vs central finite differences
//    (eps = 1e-5, relative error < 1e-4) over alpha x teacher-count grids.
// ---------------------------------------------------------------------------

std::vector<distill::SoftLabelMatrix> fixture_teachers(Rng& rng, std::size_t rows,
                                                       std::size_t count) {
  std::vector<distill::SoftLabelMatrix> soft(count);
  for (std::size_t i = 0; i < count; ++i) {
    soft[i].teacher_period = static_cast<int>(i);
    soft[i].target_period = static_cast<int>(count);
    soft[i].probs = Matrix(rows, 2);
    for (std::size_t r = 0; r < rows; ++r) {
      const double p = 0.15 + 0.7 * rng.uniform01();
      soft[i].probs(r, 0) = p;
      soft[i].probs(r, 1) = 1.0 - p;
    }
  }
  return soft;
}

double mlp_worst_gradient_error(double alpha, std::size_t teacher_count) {
  Rng rng(911 + teacher_count);
  const std::size_t n = 3, d = 4;
  Matrix x(n, d);
  for (double& v : x.data()) v = rng.gaussian();
  const std::vector<int> labels{1, 0, 1};
  const auto soft = fixture_teachers(rng, n, teacher_count);

  nn::MlpConfig cfg;
  cfg.hidden_widths = {5, 4};
  cfg.keep_prob = 1.0;
  cfg.seed = 7 + teacher_count;
  nn::MlpModel model = nn::MlpModel::initialize(cfg, d);
  auto& bn = model.batch_norm();
  for (std::size_t c = 0; c < bn.gamma.size(); ++c) {
    bn.gamma[c] = 0.9 + 0.2 * rng.uniform01();
    bn.beta[c] = 0.1 * rng.gaussian();
    bn.running_mean[c] = 0.2 * rng.gaussian();
    bn.running_var[c] = 0.6 + rng.uniform01();
  }

  distill::TkdLossConfig loss_cfg;
  loss_cfg.alpha = alpha;
  const auto* soft_ptr = soft.empty() ? nullptr : &soft;
  const nn::BackwardResult result = nn::backward(model, x, labels, soft_ptr, loss_cfg,
                                                 nn::BnMode::running, false, 0);

  const auto loss_at = [&]() {
    const Matrix probs = model.predict_proba(x);
    if (soft_ptr != nullptr) return distill::tkd_loss(labels, probs, *soft_ptr, loss_cfg);
    return distill::cross_entropy(labels, probs, loss_cfg.clip_eps);
  };

  std::vector<std::pair<const double*, std::size_t>> grads;
  for (const auto& layer : result.grads.layers) {
    grads.emplace_back(layer.w.data().data(), layer.w.data().size());
    grads.emplace_back(layer.b.data(), layer.b.size());
  }
  grads.emplace_back(result.grads.bn_gamma.data(), result.grads.bn_gamma.size());
  grads.emplace_back(result.grads.bn_beta.data(), result.grads.bn_beta.size());

  double worst = 0.0;
  auto params = model.parameters();
  for (std::size_t t = 0; t < params.size(); ++t) {
    for (std::size_t i = 0; i < params[t].size; ++i) {
      const double fd = oracle::central_difference(loss_at, params[t].data + i, 1e-5);
      worst = std::max(worst, oracle::relative_error(fd, grads[t].first[i]));
    }
  }
  return worst;
}

double scalar_composite_loss(double logit, int y, const std::vector<double>& teachers,
                             double alpha) {
  const double p = 1.0 / (1.0 + std::exp(-logit));
  const double ce = -(y * std::log(p) + (1 - y) * std::log(1.0 - p));
  if (teachers.empty()) return ce;
  double kl = 0.0;
  for (double q : teachers) {
    if (q > 0.0) kl += q * std::log(q / p);
    if (q < 1.0) kl += (1.0 - q) * std::log((1.0 - q) / (1.0 - p));
  }
  kl /= static_cast<double>(teachers.size());
  return alpha * ce + (1.0 - alpha) * kl;
}

Outcome criterion_gradients() {
  Outcome out;
  double worst_mlp = 0.0;
  for (const std::size_t teachers : {0u, 1u, 3u}) {
    for (const double alpha : {0.0, 0.5, 1.0}) {
      worst_mlp = std::max(worst_mlp, mlp_worst_gradient_error(alpha, teachers));
    }
  }
  if (worst_mlp >= 1e-4) {
    out.pass = false;
    out.detail = "mlp worst rel err " + std::to_string(worst_mlp);
    return out;
  }

  Rng rng(913);
  double worst_gbt = 0.0;
  for (const double logit : {-2.0, 0.0, 3.0}) {
    for (const std::size_t n_teachers : {0u, 1u, 3u}) {
      for (const double alpha : {0.0, 0.5, 1.0}) {
        if (n_teachers == 0 && alpha < 1.0) continue;
        for (const int y : {0, 1}) {
          std::vector<double> teachers;
          for (std::size_t i = 0; i < n_teachers; ++i) {
            teachers.push_back(0.1 + 0.8 * rng.uniform01());
          }
          double g = 0.0, h = 0.0;
          gbt::tkd_objective(logit, y, teachers, alpha, &g, &h);

          double z = logit;
          const auto loss = [&]() { return scalar_composite_loss(z, y, teachers, alpha); };
          const double g_fd = oracle::central_difference(loss, &z, 1e-5);
          worst_gbt = std::max(worst_gbt, oracle::relative_error(g, g_fd));

          const double eps = 1e-5;
          const double up = scalar_composite_loss(logit + eps, y, teachers, alpha);
          const double mid = scalar_composite_loss(logit, y, teachers, alpha);
          const double down = scalar_composite_loss(logit - eps, y, teachers, alpha);
          const double h_fd = (up - 2.0 * mid + down) / (eps * eps);
          worst_gbt = std::max(worst_gbt, oracle::relative_error(h, h_fd));
        }
      }
    }
  }
  if (worst_gbt >= 1e-4) {
    out.pass = false;
    out.detail = "gbt worst rel err " + std::to_string(worst_gbt);
    return out;
  }
  std::ostringstream detail;
  detail << "worst rel err: mlp " << worst_mlp << ", gbt " << worst_gbt;
  out.detail = detail.str();
  return out;
}

// ---------------------------------------------------------------------------
// 2. Loss identities.
// ---------------------------------------------------------------------------

Outcome criterion_loss_identities() {
  Outcome out;
  Rng rng(921);
  double worst_factor_gap = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t n = 2 + rng.below(6);
    Matrix student(n, 2);
    std::vector<int> labels(n);
    for (std::size_t r = 0; r < n; ++r) {
      const double p = 0.05 + 0.9 * rng.uniform01();
      student(r, 0) = p;
      student(r, 1) = 1.0 - p;
      labels[r] = rng.uniform01() < 0.5 ? 1 : 0;
    }
    const int t = 2 + static_cast<int>(rng.below(3));
    std::vector<distill::SoftLabelMatrix> soft;
    for (int i = 0; i < t; ++i) {
      distill::SoftLabelMatrix s;
      s.teacher_period = i;
      s.target_period = t;
      s.probs = Matrix(n, 2);
      for (std::size_t r = 0; r < n; ++r) {
        const double q = 0.05 + 0.9 * rng.uniform01();
        s.probs(r, 0) = q;
        s.probs(r, 1) = 1.0 - q;
      }
      soft.push_back(std::move(s));
    }

    // alpha = 1 collapses to cross-entropy, bit-exactly.
    distill::TkdLossConfig ce_cfg;
    ce_cfg.alpha = 1.0;
    if (distill::tkd_loss(labels, student, soft, ce_cfg) !=
        distill::cross_entropy(labels, student, ce_cfg.clip_eps)) {
      out.pass = false;
      out.detail = "alpha=1 is not exactly cross-entropy";
      return out;
    }

    // Teachers identical to the student: KL term vanishes within 1e-9.
    std::vector<distill::SoftLabelMatrix> self(1);
    self[0].teacher_period = 0;
    self[0].target_period = 1;
    self[0].probs = student;
    for (double kl : distill::per_teacher_kl(student, self, 1e-12)) {
      if (std::abs(kl) > 1e-9) {
        out.pass = false;
        out.detail = "KL(student||student) = " + std::to_string(kl);
        return out;
      }
    }

    // The unhalved two-term form is exactly twice the alpha=0.5 mean form.
    distill::TkdLossConfig half;
    const double composite = distill::tkd_loss(labels, student, soft, half);
    const double simplified = distill::simplified_loss(labels, student, soft, 0, t);
    const double gap = std::abs(simplified - 2.0 * composite);
    worst_factor_gap = std::max(worst_factor_gap, gap);
    if (gap >= 1e-12) {
      out.pass = false;
      out.detail = "rescaling identity off by " + std::to_string(gap);
      return out;
    }
  }
  out.detail = "identities hold on 100 random fixtures (worst rescaling gap " +
               std::to_string(worst_factor_gap) + ")";
  return out;
}

// ---------------------------------------------------------------------------
// 3. Metric equivalence against brute-force oracles, ties included.
// ---------------------------------------------------------------------------

Outcome criterion_metric_oracles() {
  Outcome out;
  Rng rng(931);
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t n = 20;
    std::vector<double> scores(n);
    std::vector<int> labels(n);
    const bool tie_heavy = rep % 2 == 0;
    for (std::size_t i = 0; i < n; ++i) {
      scores[i] = tie_heavy ? std::floor(rng.uniform01() * 8.0) / 8.0 : rng.uniform01();
      labels[i] = rng.uniform01() < 0.35 ? 1 : 0;
    }
    labels[0] = 1;
    labels[1] = 0;

    const double ap = metrics::auprc(scores, labels);
    const double ap_oracle = oracle::auprc_bruteforce(scores, labels);
    if (ap != ap_oracle) {
      out.pass = false;
      out.detail = "auprc " + std::to_string(ap) + " vs oracle " + std::to_string(ap_oracle);
      return out;
    }
    const double roc = metrics::auroc(scores, labels);
    const double roc_oracle = oracle::auroc_bruteforce(scores, labels);
    if (roc != roc_oracle) {
      out.pass = false;
      out.detail = "auroc " + std::to_string(roc) + " vs oracle " + std::to_string(roc_oracle);
      return out;
    }
  }
  out.detail = "200 fixtures, exact agreement";
  return out;
}

// ---------------------------------------------------------------------------
// 4. Schedule golden rows for six periods.
// ---------------------------------------------------------------------------

Outcome criterion_schedule() {
  Outcome out;
  const harness::PeriodSchedule schedule = harness::build_schedule(6);
  const std::vector<std::vector<int>> want_train{{0}, {0, 1}, {0, 1, 2}, {0, 1, 2, 3}};
  const std::vector<int> want_no_label{1, 2, 3, 4};
  const std::vector<std::vector<int>> want_test{{2, 3, 4, 5}, {3, 4, 5}, {4, 5}, {5}};
  if (schedule.periods.size() != 4) {
    out.pass = false;
    out.detail = "expected 4 experiment periods";
    return out;
  }
  for (std::size_t p = 0; p < 4; ++p) {
    const auto& period = schedule.periods[p];
    if (period.training_periods != want_train[p] || period.no_label_period != want_no_label[p] ||
        period.testing_periods != want_test[p]) {
      out.pass = false;
      out.detail = "row " + std::to_string(p) + " does not match";
      return out;
    }
  }
  out.detail = "all four rows match";
  return out;
}

// ---------------------------------------------------------------------------
// 5. Preprocessing golden fixture, byte-stable output.
// ---------------------------------------------------------------------------

Outcome criterion_preprocessing() {
  Outcome out;
  const fs::path dir = fs::temp_directory_path() / "tkd_accept_prep";
  fs::create_directories(dir);
  const fs::path csv = dir / "fixture.csv";
  {
    std::ofstream f(csv, std::ios::trunc);
    f << "month,TransactionAmt,dist1,card4,device_name,label\n"
         "0,100.0,5.0,visa,chrome,0\n"
         "0,10.0,,mastercard,chrome,1\n"
         "0,1000.0,2.5,visa,safari,0\n"
         "0,1.0,0.001,,chrome,0\n"
         "1,100.0,,visa,edge,1\n";
  }
  const json schema_json{
      {"timestamp_column", "month"},
      {"period_mapping", "index"},
      {"label_column", "label"},
      {"columns",
       json::array({{{"name", "TransactionAmt"}, {"kind", "continuous"}},
                    {{"name", "dist1"}, {"kind", "continuous"}},
                    {{"name", "card4"}, {"kind", "categorical"}},
                    {{"name", "device_name"}, {"kind", "categorical"}}})}};
  const data::TableSchema schema = data::schema_from_json(schema_json);
  const data::RawTable table = data::load_csv(csv.string(), schema);

  data::PreprocessSpec spec;
  data::ColumnRule amt;
  amt.transform = data::Transform::log10;
  spec.rules["TransactionAmt"] = amt;
  data::ColumnRule dist;
  dist.transform = data::Transform::log10;
  dist.null_fill = -0.001;
  spec.rules["dist1"] = dist;
  data::ColumnRule card;
  card.encoding = data::Encoding::one_hot;
  spec.rules["card4"] = card;
  data::ColumnRule device;
  device.encoding = data::Encoding::one_hot;
  device.frequency_threshold = 2;
  spec.rules["device_name"] = device;

  const auto run_once = [&](const fs::path& out_path) {
    const data::FittedPreprocessor prep = fit_preprocessor(table, spec, {0});
    const std::vector<data::TemporalDataset> periods = transform(table, prep);
    persist::save_dataset(periods[0], out_path);
    return periods;
  };

  const auto periods = run_once(dir / "a.bin");
  run_once(dir / "b.bin");

  const auto read_bytes = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  };
  if (read_bytes(dir / "a.bin") != read_bytes(dir / "b.bin")) {
    out.pass = false;
    out.detail = "repeated runs differ byte-wise";
    return out;
  }

  const data::TemporalDataset& p0 = periods[0];
  const auto close = [](double a, double b) { return std::abs(a - b) < 1e-12; };
  const bool values_ok =
      close(p0.x(0, 0), 2.0) &&                    // log10(100)
      p0.x(1, 1) == -0.001 &&                      // null fill, untransformed
      close(p0.x(0, 1), 0.6989700043360187) &&     // log10(5)
      close(p0.x(3, 1), -3.0) &&                   // log10(0.001)
      p0.x(3, 4) == 1.0 &&                         // null card4 -> NA slot
      p0.x(2, 6) == 1.0 &&                         // safari -> Others bucket
      periods[1].x(0, 5) == 0.0 && periods[1].x(0, 6) == 0.0 &&
      periods[1].x(0, 7) == 0.0;                   // unseen category -> zeros
  if (!values_ok) {
    out.pass = false;
    out.detail = "frozen cell values do not match";
    return out;
  }
  out.detail = "byte-stable and all frozen values match";
  return out;
}

// ---------------------------------------------------------------------------
// Shared synthetic-drift configs for the two experiment criteria.
// ---------------------------------------------------------------------------

data::DriftGeneratorConfig timing_generator() {
  data::DriftGeneratorConfig gen;
  gen.n_periods = 6;
  gen.samples_per_period = 10000;
  gen.fraud_rate = 0.10;
  gen.n_features = 6;
  data::MixtureComponent fraud;
  fraud.mean = {3.0, 0.0, 0.0, 0.0, 0.0, 0.0};
  fraud.drift = {-1.0, 0.0, 0.0, 0.0, 0.0, 0.0};
  fraud.stddev = 0.8;
  gen.fraud_components = {fraud};
  data::MixtureComponent normal;
  normal.mean = {0.0, 0.0, 0.0, 0.0, 0.0, 0.0};
  normal.stddev = 3.0;
  gen.nonfraud_components = {normal};
  gen.seed = 1717;
  return gen;
}

harness::ExperimentConfig timing_config() {
  harness::ExperimentConfig cfg;
  cfg.candidates = {harness::Candidate::mlp_xg, harness::Candidate::mlp_xg_tkd};
  cfg.runs = 1;
  cfg.base_seed = 404;
  cfg.rebalance_target = 0.3;
  cfg.validation_fraction = 0.1;
  cfg.latest_slice_controls = false;
  cfg.extend_timing_periods = true;
  cfg.mlp.hidden_widths = {400, 400};  // published architecture
  cfg.mlp.learning_rate = 0.01;
  cfg.mlp.batch_size = 512;
  cfg.mlp.keep_prob = 0.5;
  cfg.mlp.max_epochs = 4;   // fixed budget so time tracks data size
  cfg.mlp.patience = 1000;  // early stopping disabled for the timing run
  cfg.gbt = gbt::GbtConfig{};  // published boosting hyperparameters
  return cfg;
}

// ---------------------------------------------------------------------------
// 6. Training-time scaling.
// ---------------------------------------------------------------------------

Outcome criterion_timing() {
  Outcome out;
  const auto periods = data::generate_drift(timing_generator());
  const harness::ExperimentConfig cfg = timing_config();
  const harness::ExperimentReport report = harness::run_experiment(cfg, periods);

  std::map<int, double> baseline, distilled;
  std::map<int, int> baseline_n, distilled_n;
  for (const harness::TimingRecord& t : report.timing) {
    if (t.role != "candidate") continue;
    const double total = t.train_seconds + t.soft_label_seconds;
    if (t.candidate == "MLP-XG") {
      baseline[t.train_period] += total;
      baseline_n[t.train_period] += 1;
    } else if (t.candidate == "MLP-XG-TKD") {
      distilled[t.train_period] += total;
      distilled_n[t.train_period] += 1;
    }
  }
  for (auto& [p, v] : baseline) v /= baseline_n[p];
  for (auto& [p, v] : distilled) v /= distilled_n[p];

  if (baseline.size() != 6 || distilled.size() != 6) {
    out.pass = false;
    out.detail = "expected timing for all 6 periods";
    return out;
  }

  std::ostringstream series;
  series.precision(3);
  series << "baseline[s]:";
  for (int p = 0; p < 6; ++p) series << " " << baseline[p];
  series << " | distilled[s]:";
  for (int p = 0; p < 6; ++p) series << " " << distilled[p];

  for (int p = 1; p < 5; ++p) {
    if (!(baseline[p] < baseline[p + 1])) {
      out.pass = false;
      out.detail = "baseline time not strictly increasing at period " + std::to_string(p + 1) +
                   " (" + series.str() + ")";
      return out;
    }
  }

  double lo = distilled[1], hi = distilled[1], mean = 0.0;
  for (int p = 1; p < 6; ++p) {
    lo = std::min(lo, distilled[p]);
    hi = std::max(hi, distilled[p]);
    mean += distilled[p];
  }
  mean /= 5.0;
  const double variation = (hi - lo) / mean;
  if (!(variation < 0.25)) {
    out.pass = false;
    out.detail = "distilled-time variation " + std::to_string(variation) + " (" + series.str() + ")";
    return out;
  }

  if (!(distilled[5] <= 0.5 * baseline[5])) {
    out.pass = false;
    out.detail = "final-period ratio " + std::to_string(distilled[5] / baseline[5]) + " (" +
                 series.str() + ")";
    return out;
  }

  std::ostringstream detail;
  detail.precision(3);
  detail << "variation " << variation << ", final ratio " << distilled[5] / baseline[5] << "; "
         << series.str();
  out.detail = detail.str();
  return out;
}

// ---------------------------------------------------------------------------
// 7. Performance benefit on drifting data with a recurring pattern.
// ---------------------------------------------------------------------------

data::DriftGeneratorConfig benefit_generator() {
  data::DriftGeneratorConfig gen;
  gen.n_periods = 6;
  gen.samples_per_period = 2500;
  gen.fraud_rate = 0.12;
  gen.n_features = 3;
  data::MixtureComponent fraud;
  fraud.mean = {4.0, 0.0, 0.0};
  fraud.drift = {-1.6, 0.0, 0.0};
  fraud.stddev = 0.8;
  gen.fraud_components = {fraud};
  for (double center : {-7.0, -5.0, -3.0, -1.0, 1.0, 3.0, 5.0, 7.0}) {
    data::MixtureComponent normal;
    normal.mean = {center, 0.0, 0.0};
    normal.stddev = 1.4;
    gen.nonfraud_components.push_back(normal);
  }
  gen.recurrences = {{5, 0}};  // the first attack pattern returns in the last period
  gen.seed = 2024;
  return gen;
}

harness::ExperimentConfig benefit_config() {
  harness::ExperimentConfig cfg;
  cfg.candidates = {harness::Candidate::mlp_xg, harness::Candidate::mlp_tkd,
                    harness::Candidate::xg_tkd, harness::Candidate::mlp_xg_tkd};
  cfg.runs = 10;
  cfg.base_seed = 1234;
  cfg.rebalance_target = 0.3;
  cfg.validation_fraction = 0.1;
  cfg.latest_slice_controls = true;
  cfg.extend_timing_periods = false;
  cfg.mlp.hidden_widths = {64, 32};
  cfg.mlp.learning_rate = 0.01;
  cfg.mlp.batch_size = 128;
  cfg.mlp.keep_prob = 0.8;
  cfg.mlp.max_epochs = 30;
  cfg.mlp.patience = 6;
  cfg.gbt = gbt::GbtConfig{};
  return cfg;
}

Outcome criterion_benefit() {
  Outcome out;
  const auto periods = data::generate_drift(benefit_generator());
  const harness::ExperimentConfig cfg = benefit_config();
  const harness::ExperimentReport report = harness::run_experiment(cfg, periods);

  const int final_period = report.schedule.periods.back().index;  // 3
  const int final_test = 5;

  const auto mean_of = [&](const std::string& name, const std::string& role) {
    for (const auto& m : report.mean_auprc) {
      if (m.candidate == name && m.role == role && m.experiment_period == final_period &&
          m.test_period == final_test) {
        return m.mean_auprc;
      }
    }
    return -1.0;
  };

  std::ostringstream detail;
  detail.precision(4);
  for (const auto& [tkd_name, base_name] :
       std::vector<std::pair<std::string, std::string>>{
           {"MLP-TKD", "MLP"}, {"XG-TKD", "XG"}, {"MLP-XG-TKD", "MLP-XG"}}) {
    const double tkd = mean_of(tkd_name, "candidate");
    const double control = mean_of(base_name, "control");
    detail << tkd_name << " " << tkd << " vs latest " << control << "; ";
    if (tkd < 0.0 || control < 0.0) {
      out.pass = false;
      out.detail = "missing mean rows for " + tkd_name;
      return out;
    }
    if (!(tkd > control)) {
      out.pass = false;
      out.detail = tkd_name + " mean " + std::to_string(tkd) + " not above latest-only " +
                   std::to_string(control);
      return out;
    }
  }

  const double cumulative = mean_of("MLP-XG", "candidate");
  const double ensemble_tkd = mean_of("MLP-XG-TKD", "candidate");
  detail << "MLP-XG cumulative " << cumulative << ", MLP-XG-TKD " << ensemble_tkd;
  if (!(ensemble_tkd >= cumulative - 0.05)) {
    out.pass = false;
    out.detail = "ensemble student " + std::to_string(ensemble_tkd) +
                 " more than 0.05 below cumulative " + std::to_string(cumulative);
    return out;
  }
  out.detail = detail.str();
  return out;
}

// ---------------------------------------------------------------------------
// 8. Determinism of the full experiment workflow through the C interface.
// ---------------------------------------------------------------------------

Outcome criterion_determinism() {
  Outcome out;
  json config{
      {"data",
       {{"generator",
         {{"n_periods", 4},
          {"samples_per_period", 400},
          {"fraud_rate", 0.15},
          {"n_features", 3},
          {"fraud_components",
           json::array({{{"mean", {2.5, 0.0, 0.0}}, {"drift", {-1.0, 0.0, 0.0}}, {"stddev", 0.7}}})},
          {"nonfraud_components", json::array({{{"mean", {0.0, 0.0, 0.0}}, {"stddev", 2.0}}})},
          {"seed", 55}}}}},
      {"candidates", {"MLP-XG", "MLP-XG-TKD"}},
      {"runs", 2},
      {"base_seed", 99},
      {"jobs", 2},
      {"rebalance_target", 0.35},
      {"mlp",
       {{"hidden_widths", {10, 6}}, {"max_epochs", 3}, {"batch_size", 64}, {"keep_prob", 0.5}}},
      {"gbt", {{"n_estimators", 10}, {"max_depth", 2}, {"min_child_weight", 0.2}, {"gamma", 0.0}}},
      {"extend_timing_periods", false}};

  const fs::path dir = fs::temp_directory_path() / "tkd_accept_det";
  fs::remove_all(dir);
  const std::string text = config.dump();
  for (const char* leaf : {"a", "b"}) {
    char* summary = nullptr;
    const int rc = tkd_cmd_experiment(text.c_str(), (dir / leaf).string().c_str(), &summary);
    if (rc != TKD_OK) {
      out.pass = false;
      out.detail = std::string("experiment failed: ") + tkd_last_error();
      return out;
    }
    tkd_string_free(summary);
  }
  const auto read_bytes = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  };
  const std::string a = read_bytes(dir / "a" / "report.json");
  const std::string b = read_bytes(dir / "b" / "report.json");
  if (a.empty() || a != b) {
    out.pass = false;
    out.detail = "report.json differs between executions";
    return out;
  }
  out.detail = "report.json byte-identical (" + std::to_string(a.size()) + " bytes)";
  return out;
}

// ---------------------------------------------------------------------------
// 9. Round-trip fidelity for every artifact kind.
// ---------------------------------------------------------------------------

Outcome criterion_roundtrip() {
  Outcome out;
  const fs::path dir = fs::temp_directory_path() / "tkd_accept_rt";
  fs::remove_all(dir);
  fs::create_directories(dir);

  const auto ds = oracle::separable_blobs(120, 2718);
  Rng rng(31415);
  Matrix probe(40, 2);
  for (double& v : probe.data()) v = rng.gaussian();

  nn::MlpConfig mlp_cfg;
  mlp_cfg.hidden_widths = {8, 6};
  mlp_cfg.max_epochs = 3;
  mlp_cfg.batch_size = 32;
  mlp_cfg.seed = 5;
  const nn::MlpModel mlp = nn::train(mlp_cfg, ds, nullptr, nullptr, {.alpha = 1.0}).model;
  persist::save_mlp(mlp, dir / "mlp.json");
  if (!(persist::load_mlp(dir / "mlp.json").predict_proba(probe) == mlp.predict_proba(probe))) {
    out.pass = false;
    out.detail = "mlp predictions changed after round trip";
    return out;
  }

  gbt::GbtConfig gbt_cfg;
  gbt_cfg.n_estimators = 12;
  gbt_cfg.max_depth = 3;
  gbt_cfg.min_child_weight = 0.2;
  gbt_cfg.gamma = 0.0;
  gbt_cfg.seed = 6;
  const gbt::GbtModel tree_model = gbt::fit(gbt_cfg, ds, gbt::BoostObjective{});
  persist::save_gbt(tree_model, dir / "gbt.json");
  if (persist::load_gbt(dir / "gbt.json").predict_positive(probe) !=
      tree_model.predict_positive(probe)) {
    out.pass = false;
    out.detail = "gbt predictions changed after round trip";
    return out;
  }

  const ensemble::EnsembleModel ens({std::make_shared<nn::MlpModel>(mlp),
                                     std::make_shared<gbt::GbtModel>(tree_model)});
  fs::create_directories(dir / "ens");
  persist::save_ensemble(ens, dir / "ens" / "model.json");
  if (!(persist::load_model(dir / "ens" / "model.json")->predict_proba(probe) ==
        ens.predict_proba(probe))) {
    out.pass = false;
    out.detail = "ensemble predictions changed after round trip";
    return out;
  }

  persist::save_dataset(ds, dir / "ds.bin", 77);
  const data::TemporalDataset ds2 = persist::load_dataset(dir / "ds.bin");
  if (!(ds2.x == ds.x) || ds2.labels != ds.labels || ds2.feature_names != ds.feature_names) {
    out.pass = false;
    out.detail = "dataset round trip lost data";
    return out;
  }

  distill::SoftLabelMatrix soft;
  soft.teacher_period = 1;
  soft.target_period = 3;
  soft.probs = mlp.predict_proba(probe);
  persist::save_soft_labels(soft, dir / "soft.bin");
  const auto soft2 = persist::load_soft_labels(dir / "soft.bin");
  if (!(soft2.probs == soft.probs) || soft2.teacher_period != 1 || soft2.target_period != 3) {
    out.pass = false;
    out.detail = "soft-label round trip lost data";
    return out;
  }

  distill::TeacherRegistry registry;
  registry.add(0, std::make_shared<ensemble::EnsembleModel>(ens));
  persist::save_registry(registry, dir / "registry");
  const auto registry2 = persist::load_registry(dir / "registry");
  if (!(registry2.entries()[0].model->predict_proba(probe) == ens.predict_proba(probe))) {
    out.pass = false;
    out.detail = "registry round trip changed the teacher";
    return out;
  }

  // Preprocessor: compare transforms before and after the round trip.
  const fs::path csv = dir / "prep.csv";
  {
    std::ofstream f(csv);
    f << "month,amt,browser,label\n0,10.0,chrome,0\n0,100.0,lynx,1\n0,20.0,chrome,0\n"
         "0,,chrome,0\n";
  }
  const json schema_json{{"timestamp_column", "month"},
                         {"label_column", "label"},
                         {"columns",
                          json::array({{{"name", "amt"}, {"kind", "continuous"}},
                                       {{"name", "browser"}, {"kind", "categorical"}}})}};
  const data::RawTable table = data::load_csv(csv.string(), data::schema_from_json(schema_json));
  data::PreprocessSpec spec;
  data::ColumnRule amt_rule;
  amt_rule.transform = data::Transform::log10;
  amt_rule.null_fill = -0.001;
  spec.rules["amt"] = amt_rule;
  data::ColumnRule browser_rule;
  browser_rule.encoding = data::Encoding::one_hot;
  browser_rule.frequency_threshold = 2;
  spec.rules["browser"] = browser_rule;
  const data::FittedPreprocessor prep = fit_preprocessor(table, spec, {0});
  persist::save_preprocessor(prep, dir / "prep.json");
  const data::FittedPreprocessor prep2 = persist::load_preprocessor(dir / "prep.json");
  if (!(transform(table, prep2)[0].x == transform(table, prep)[0].x)) {
    out.pass = false;
    out.detail = "preprocessor round trip changed the transform";
    return out;
  }

  out.detail = "mlp, gbt, ensemble, dataset, soft labels, registry, preprocessor all bit-stable";
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc) {
      only = std::atoi(argv[i + 1]);
      ++i;
    } else {
      std::cerr << "usage: acceptance [--criterion N]\n";
      return 2;
    }
  }

  const std::vector<Check> checks{
      {1, "gradient-fidelity", 10.0, criterion_gradients},
      {2, "loss-identities", 10.0, criterion_loss_identities},
      {3, "metric-oracle-equivalence", 10.0, criterion_metric_oracles},
      {4, "schedule-golden", 10.0, criterion_schedule},
      {5, "preprocessing-golden", 10.0, criterion_preprocessing},
      {6, "training-time-scaling", 900.0, criterion_timing},
      {7, "performance-benefit", 1800.0, criterion_benefit},
      {8, "experiment-determinism", 600.0, criterion_determinism},
      {9, "artifact-round-trip", 60.0, criterion_roundtrip},
  };

  int failures = 0;
  for (const Check& check : checks) {
    if (only != 0 && check.id != only) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = check.run();
    } catch (const std::exception& e) {
      outcome.pass = false;
      outcome.detail = std::string("exception: ") + e.what();
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (seconds >= check.time_limit_seconds) {
      outcome.pass = false;
      outcome.detail += " [over time budget of " + std::to_string(check.time_limit_seconds) + "s]";
    }
    std::ostringstream line;
    line.precision(1);
    line << std::fixed << (outcome.pass ? "[PASS] " : "[FAIL] ") << check.id << " " << check.name
         << " (" << seconds << "s)";
    if (!outcome.detail.empty()) line << ": " << outcome.detail;
    std::cout << line.str() << std::endl;
    if (!outcome.pass) ++failures;
  }
  return failures;
}
