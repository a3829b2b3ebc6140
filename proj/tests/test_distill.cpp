#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "distill.hpp"
#include "ensemble.hpp"
#include "error.hpp"
#include "oracles.hpp"
#include "rng.hpp"

using namespace tkd;
using namespace tkd::distill;

namespace {

Matrix simplex_rows(Rng& rng, std::size_t n) {
  Matrix m(n, 2);
  for (std::size_t r = 0; r < n; ++r) {
    const double p = 0.05 + 0.9 * rng.uniform01();
    m(r, 0) = p;
    m(r, 1) = 1.0 - p;
  }
  return m;
}

SoftLabelMatrix teacher_matrix(const Matrix& probs, int teacher_period = 0,
                               int target_period = 1) {
  SoftLabelMatrix s;
  s.teacher_period = teacher_period;
  s.target_period = target_period;
  s.probs = probs;
  return s;
}

std::vector<int> random_labels(Rng& rng, std::size_t n) {
  std::vector<int> labels(n);
  for (auto& y : labels) y = rng.uniform01() < 0.5 ? 1 : 0;
  return labels;
}

// Constant-output stub model for registry tests.
class ConstantModel : public Model {
 public:
  ConstantModel(std::size_t features, double positive) : features_(features), positive_(positive) {}
  Matrix predict_proba(const Matrix& x) const override {
    Matrix out(x.rows(), 2);
    for (std::size_t r = 0; r < x.rows(); ++r) {
      out(r, 0) = 1.0 - positive_;
      out(r, 1) = positive_;
    }
    return out;
  }
  std::size_t feature_count() const override { return features_; }
  std::string kind() const override { return "mlp"; }

 private:
  std::size_t features_;
  double positive_;
};

}  // namespace

TEST_CASE("cross-entropy of the uniform prediction is ln 2") {
  Matrix uniform(3, 2, 0.5);
  const std::vector<int> labels{0, 1, 0};
  TkdLossConfig cfg;
  cfg.alpha = 1.0;
  const double loss = tkd_loss(labels, uniform, {}, cfg);
  CHECK(loss == doctest::Approx(0.6931471805599453).epsilon(1e-12));
}

TEST_CASE("single-sample composite loss matches the hand-computed value") {
  // alpha=0.5, teacher [0.9, 0.1], student [0.6, 0.4], true class 0:
  // 0.5*(-ln 0.6) + 0.5*(0.9 ln(0.9/0.6) + 0.1 ln(0.1/0.4)) = 0.36855739...
  Matrix student = Matrix::from_rows({{0.6, 0.4}});
  const std::vector<SoftLabelMatrix> soft{teacher_matrix(Matrix::from_rows({{0.9, 0.1}}))};
  const std::vector<int> labels{0};
  TkdLossConfig cfg;  // alpha = 0.5, mean
  CHECK(tkd_loss(labels, student, soft, cfg) ==
        doctest::Approx(0.3685573924756748).epsilon(1e-12));
}

TEST_CASE("teachers equal to the student collapse the divergence term") {
  Rng rng(31);
  const Matrix student = simplex_rows(rng, 5);
  const std::vector<int> labels = random_labels(rng, 5);
  const std::vector<SoftLabelMatrix> soft{teacher_matrix(student), teacher_matrix(student, 1, 2)};
  TkdLossConfig cfg;
  const double composite = tkd_loss(labels, student, soft, cfg);
  const double ce = cross_entropy(labels, student, cfg.clip_eps);
  CHECK(composite == doctest::Approx(cfg.alpha * ce).epsilon(1e-9));
  for (double kl : per_teacher_kl(student, soft, cfg.clip_eps)) {
    CHECK(std::abs(kl) < 1e-9);
  }
}

TEST_CASE("mean and sum aggregation agree for a single teacher") {
  Rng rng(32);
  const Matrix student = simplex_rows(rng, 4);
  const std::vector<int> labels = random_labels(rng, 4);
  const std::vector<SoftLabelMatrix> soft{teacher_matrix(simplex_rows(rng, 4))};
  TkdLossConfig mean_cfg;
  mean_cfg.agg = Aggregation::mean;
  TkdLossConfig sum_cfg;
  sum_cfg.agg = Aggregation::sum;
  CHECK(tkd_loss(labels, student, soft, mean_cfg) == tkd_loss(labels, student, soft, sum_cfg));
}

TEST_CASE("alpha=1 reduces to cross-entropy exactly") {
  Rng rng(33);
  const Matrix student = simplex_rows(rng, 6);
  const std::vector<int> labels = random_labels(rng, 6);
  const std::vector<SoftLabelMatrix> soft{teacher_matrix(simplex_rows(rng, 6))};
  TkdLossConfig cfg;
  cfg.alpha = 1.0;
  CHECK(tkd_loss(labels, student, soft, cfg) == cross_entropy(labels, student, cfg.clip_eps));
}

TEST_CASE("empty teacher list with alpha below 1 is a configuration error") {
  Matrix student = Matrix::from_rows({{0.6, 0.4}});
  TkdLossConfig cfg;
  CHECK_THROWS_AS(tkd_loss({0}, student, {}, cfg), Error);
}

TEST_CASE("simplified form is exactly twice the halved composite") {
  Rng rng(34);
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t n = 3 + static_cast<std::size_t>(rng.below(5));
    const int t = 3, k = 0;
    const Matrix student = simplex_rows(rng, n);
    const std::vector<int> labels = random_labels(rng, n);
    std::vector<SoftLabelMatrix> soft;
    for (int i = k; i < t; ++i) soft.push_back(teacher_matrix(simplex_rows(rng, n), i, t));

    TkdLossConfig cfg;  // alpha 0.5, mean
    const double composite = tkd_loss(labels, student, soft, cfg);
    const double simplified = simplified_loss(labels, student, soft, k, t);
    CHECK(std::abs(simplified - 2.0 * composite) < 1e-12);
  }
}

TEST_CASE("simplified form: single-teacher and perfect-agreement cases") {
  Rng rng(35);
  const Matrix student = simplex_rows(rng, 4);
  const std::vector<int> labels = random_labels(rng, 4);
  const std::vector<SoftLabelMatrix> soft{teacher_matrix(simplex_rows(rng, 4), 2, 3)};
  const double expected =
      cross_entropy(labels, student, 1e-12) + per_teacher_kl(student, soft, 1e-12)[0];
  CHECK(simplified_loss(labels, student, soft, 2, 3) == doctest::Approx(expected).epsilon(1e-12));

  // One-hot teachers equal to one-hot student (clip keeps logs finite).
  Matrix hard(3, 2);
  std::vector<int> hard_labels{1, 0, 1};
  for (std::size_t r = 0; r < 3; ++r) {
    hard(r, static_cast<std::size_t>(hard_labels[r])) = 1.0;
  }
  const std::vector<SoftLabelMatrix> hard_soft{teacher_matrix(hard, 0, 1)};
  CHECK(simplified_loss(hard_labels, hard, hard_soft, 0, 1) ==
        doctest::Approx(0.0).epsilon(1e-9));

  CHECK_THROWS_AS(simplified_loss(labels, student, soft, 0, 3), Error);  // count mismatch
}

TEST_CASE("KL is non-negative and zero only at equality") {
  Rng rng(36);
  for (int rep = 0; rep < 200; ++rep) {
    const Matrix student = simplex_rows(rng, 3);
    const Matrix teacher = simplex_rows(rng, 3);
    const double kl = per_teacher_kl(student, {teacher_matrix(teacher)}, 1e-12)[0];
    CHECK(kl >= -1e-15);
    double max_gap = 0.0;
    for (std::size_t r = 0; r < 3; ++r) {
      max_gap = std::max(max_gap, std::abs(student(r, 0) - teacher(r, 0)));
    }
    if (kl < 1e-12) CHECK(max_gap < 1e-5);
  }
}

TEST_CASE("loss is invariant under teacher permutation") {
  Rng rng(37);
  const Matrix student = simplex_rows(rng, 5);
  const std::vector<int> labels = random_labels(rng, 5);
  std::vector<SoftLabelMatrix> soft;
  for (int i = 0; i < 4; ++i) soft.push_back(teacher_matrix(simplex_rows(rng, 5), i, 4));

  for (Aggregation agg : {Aggregation::mean, Aggregation::sum, Aggregation::max}) {
    TkdLossConfig cfg;
    cfg.agg = agg;
    const double reference = tkd_loss(labels, student, soft, cfg);
    std::vector<SoftLabelMatrix> shuffled = soft;
    std::reverse(shuffled.begin(), shuffled.end());
    CHECK(tkd_loss(labels, student, shuffled, cfg) == reference);
    std::rotate(shuffled.begin(), shuffled.begin() + 1, shuffled.end());
    CHECK(tkd_loss(labels, student, shuffled, cfg) == reference);
  }
}

TEST_CASE("dropping the max-divergence teacher never raises the max term") {
  Rng rng(38);
  for (int rep = 0; rep < 100; ++rep) {
    const Matrix student = simplex_rows(rng, 4);
    std::vector<SoftLabelMatrix> soft;
    for (int i = 0; i < 3; ++i) soft.push_back(teacher_matrix(simplex_rows(rng, 4), i, 3));
    const std::vector<double> kls = per_teacher_kl(student, soft, 1e-12);
    const std::size_t worst = static_cast<std::size_t>(
        std::max_element(kls.begin(), kls.end()) - kls.begin());
    std::vector<SoftLabelMatrix> pruned;
    for (std::size_t i = 0; i < soft.size(); ++i) {
      if (i != worst) pruned.push_back(soft[i]);
    }
    const double before = aggregate(per_teacher_kl(student, soft, 1e-12), Aggregation::max);
    const double after = aggregate(per_teacher_kl(student, pruned, 1e-12), Aggregation::max);
    CHECK(after <= before);
  }
}

TEST_CASE("gradient with respect to probabilities matches finite differences") {
  Rng rng(39);
  Matrix student = simplex_rows(rng, 3);
  const std::vector<int> labels = random_labels(rng, 3);
  std::vector<SoftLabelMatrix> soft;
  for (int i = 0; i < 2; ++i) soft.push_back(teacher_matrix(simplex_rows(rng, 3), i, 2));

  for (Aggregation agg : {Aggregation::mean, Aggregation::sum}) {
    for (double alpha : {0.0, 0.5, 1.0}) {
      TkdLossConfig cfg;
      cfg.agg = agg;
      cfg.alpha = alpha;
      const Matrix grad = loss_grad_wrt_probs(labels, student, soft, cfg);
      for (std::size_t r = 0; r < student.rows(); ++r) {
        for (std::size_t c = 0; c < 2; ++c) {
          const double fd = oracle::central_difference(
              [&]() { return tkd_loss(labels, student, soft, cfg); }, &student(r, c), 1e-6);
          CHECK(oracle::relative_error(grad(r, c), fd) < 1e-5);
        }
      }
    }
  }
}

TEST_CASE("registry enforces ordering and truncation selects the window") {
  TeacherRegistry registry;
  registry.add(0, std::make_shared<ConstantModel>(3, 0.2));
  registry.add(1, std::make_shared<ConstantModel>(3, 0.5));
  registry.add(2, std::make_shared<ConstantModel>(3, 0.8));
  CHECK_THROWS_AS(registry.add(2, std::make_shared<ConstantModel>(3, 0.1)), Error);
  CHECK_THROWS_AS(registry.add(1, std::make_shared<ConstantModel>(3, 0.1)), Error);

  Matrix x(4, 3, 1.0);

  SUBCASE("K=1, t=3 selects periods 1 and 2") {
    const auto soft = generate_soft_labels(registry, x, 3, 1);
    REQUIRE(soft.size() == 2);
    CHECK(soft[0].teacher_period == 1);
    CHECK(soft[1].teacher_period == 2);
    CHECK(soft[0].target_period == 3);
  }

  SUBCASE("K=t-1 selects exactly the most recent teacher") {
    const auto soft = generate_soft_labels(registry, x, 3, 2);
    REQUIRE(soft.size() == 1);
    CHECK(soft[0].teacher_period == 2);
  }

  SUBCASE("a constant teacher produces constant rows") {
    const auto soft = generate_soft_labels(registry, x, 1, 0);
    REQUIRE(soft.size() == 1);
    for (std::size_t r = 0; r < 4; ++r) {
      CHECK(soft[0].probs(r, 1) == doctest::Approx(0.2));
    }
  }

  SUBCASE("no eligible teachers is an error") {
    CHECK_THROWS_WITH_AS(static_cast<void>(generate_soft_labels(registry, x, 0, 0)),
                         doctest::Contains("no eligible teachers"), Error);
    TeacherRegistry empty;
    CHECK_THROWS_AS(static_cast<void>(generate_soft_labels(empty, x, 3, 0)), Error);
  }

  SUBCASE("feature width mismatch is an error") {
    Matrix wrong(4, 5, 1.0);
    CHECK_THROWS_AS(static_cast<void>(generate_soft_labels(registry, wrong, 3, 0)), Error);
  }
}

TEST_CASE("ensemble: averaging, identity, and simplex closure") {
  auto a = std::make_shared<ConstantModel>(2, 0.8);
  auto b = std::make_shared<ConstantModel>(2, 0.6);
  Matrix x(3, 2, 0.0);

  ensemble::EnsembleModel pair({a, b});
  const Matrix avg = pair.predict_proba(x);
  CHECK(avg(0, 1) == doctest::Approx(0.7));
  CHECK(avg(0, 0) == doctest::Approx(0.3));

  ensemble::EnsembleModel single({a});
  const Matrix same = single.predict_proba(x);
  CHECK(same(0, 1) == doctest::Approx(0.8));

  ensemble::EnsembleModel swapped({b, a});
  const Matrix avg2 = swapped.predict_proba(x);
  CHECK(avg2(0, 1) == doctest::Approx(avg(0, 1)));

  for (std::size_t r = 0; r < avg.rows(); ++r) {
    CHECK(avg(r, 0) + avg(r, 1) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(avg(r, 0) >= 0.0);
    CHECK(avg(r, 1) >= 0.0);
  }

  CHECK_THROWS_AS(ensemble::EnsembleModel(std::vector<ModelPtr>{}), Error);
  auto wide = std::make_shared<ConstantModel>(5, 0.5);
  CHECK_THROWS_AS(ensemble::EnsembleModel({a, wide}), Error);
}
