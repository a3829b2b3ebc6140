#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "error.hpp"
#include "gbt.hpp"
#include "oracles.hpp"
#include "persist.hpp"
#include "rng.hpp"

using namespace tkd;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  const fs::path dir = fs::temp_directory_path() / "tkd_persist_test";
  fs::create_directories(dir);
  return dir;
}

nn::MlpModel trained_mlp(std::uint64_t seed) {
  nn::MlpConfig cfg;
  cfg.hidden_widths = {6, 4};
  cfg.keep_prob = 0.8;
  cfg.max_epochs = 2;
  cfg.batch_size = 32;
  cfg.seed = seed;
  const auto ds = oracle::separable_blobs(60, seed);
  return nn::train(cfg, ds, nullptr, nullptr, {.alpha = 1.0}).model;
}

gbt::GbtModel trained_gbt(std::uint64_t seed) {
  gbt::GbtConfig cfg;
  cfg.n_estimators = 6;
  cfg.max_depth = 2;
  cfg.min_child_weight = 0.1;
  cfg.gamma = 0.0;
  cfg.reg_alpha = 0.5;
  cfg.reg_lambda = 1.0;
  cfg.seed = seed;
  const auto ds = oracle::separable_blobs(60, seed + 1);
  return gbt::fit(cfg, ds, gbt::BoostObjective{});
}

void corrupt_tail(const fs::path& path, std::size_t keep_bytes) {
  std::ifstream in(path, std::ios::binary);
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  in.close();
  data.resize(std::min(keep_bytes, data.size()));
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << data;
}

}  // namespace

TEST_CASE("mlp round-trip reproduces predictions bit-exactly") {
  Rng rng(81);
  const nn::MlpModel model = trained_mlp(4);
  const fs::path path = temp_dir() / "mlp.json";
  persist::save_mlp(model, path);
  const nn::MlpModel loaded = persist::load_mlp(path);

  Matrix x(10, 2);
  for (double& v : x.data()) v = rng.gaussian();
  const Matrix a = model.predict_proba(x);
  const Matrix b = loaded.predict_proba(x);
  CHECK(a == b);
}

TEST_CASE("gbt round-trip reproduces node arrays and predictions") {
  const gbt::GbtModel model = trained_gbt(9);
  const fs::path path = temp_dir() / "gbt.json";
  persist::save_gbt(model, path);
  const gbt::GbtModel loaded = persist::load_gbt(path);

  REQUIRE(loaded.trees().size() == model.trees().size());
  for (std::size_t t = 0; t < model.trees().size(); ++t) {
    const auto& ta = model.trees()[t].nodes;
    const auto& tb = loaded.trees()[t].nodes;
    REQUIRE(ta.size() == tb.size());
    for (std::size_t n = 0; n < ta.size(); ++n) {
      CHECK(ta[n].feature == tb[n].feature);
      CHECK(ta[n].threshold == tb[n].threshold);
      CHECK(ta[n].value == tb[n].value);
    }
  }
  const auto ds = oracle::separable_blobs(30, 5);
  CHECK(model.predict_positive(ds.x) == loaded.predict_positive(ds.x));
}

TEST_CASE("ensemble round-trip through the generic model loader") {
  auto mlp = std::make_shared<nn::MlpModel>(trained_mlp(6));
  auto gbtm = std::make_shared<gbt::GbtModel>(trained_gbt(7));
  const ensemble::EnsembleModel ens({mlp, gbtm});

  const fs::path dir = temp_dir() / "ens";
  fs::create_directories(dir);
  persist::save_ensemble(ens, dir / "model.json");
  const ModelPtr loaded = persist::load_model(dir / "model.json");
  CHECK(loaded->kind() == "ensemble");

  const auto ds = oracle::separable_blobs(25, 8);
  CHECK(ens.predict_proba(ds.x) == loaded->predict_proba(ds.x));
}

TEST_CASE("randomized dataset round-trips are lossless") {
  Rng rng(83);
  for (int rep = 0; rep < 10; ++rep) {
    data::TemporalDataset ds;
    ds.period = static_cast<int>(rng.below(12));
    const std::size_t rows = 1 + rng.below(40);
    const std::size_t cols = 1 + rng.below(6);
    ds.x = Matrix(rows, cols);
    for (double& v : ds.x.data()) v = rng.gaussian() * 1e3;
    const bool labeled = rep % 3 != 0;
    if (labeled) {
      ds.labels.resize(rows);
      for (auto& y : ds.labels) y = rng.uniform01() < 0.5 ? 1 : 0;
    }
    for (std::size_t c = 0; c < cols; ++c) ds.feature_names.push_back("f" + std::to_string(c));

    const fs::path path = temp_dir() / "ds.bin";
    persist::save_dataset(ds, path, 0xabcd);
    const data::TemporalDataset loaded = persist::load_dataset(path);
    CHECK(loaded.period == ds.period);
    CHECK(loaded.x == ds.x);
    CHECK(loaded.labels == ds.labels);
    CHECK(loaded.feature_names == ds.feature_names);
  }
}

TEST_CASE("soft-label round-trip keeps the header and matrix") {
  Rng rng(84);
  distill::SoftLabelMatrix soft;
  soft.teacher_period = 2;
  soft.target_period = 5;
  soft.probs = Matrix(17, 2);
  for (std::size_t r = 0; r < 17; ++r) {
    const double p = rng.uniform01();
    soft.probs(r, 0) = p;
    soft.probs(r, 1) = 1.0 - p;
  }
  const fs::path path = temp_dir() / "soft.bin";
  persist::save_soft_labels(soft, path);
  const distill::SoftLabelMatrix loaded = persist::load_soft_labels(path);
  CHECK(loaded.teacher_period == 2);
  CHECK(loaded.target_period == 5);
  CHECK(loaded.probs == soft.probs);
}

TEST_CASE("preprocessor round-trip preserves vocabularies and slots") {
  std::vector<data::FittedColumn> columns;
  data::FittedColumn amount;
  amount.name = "amount";
  amount.kind = data::ColumnKind::continuous;
  amount.transform = data::Transform::log10;
  amount.null_fill = -0.001;
  columns.push_back(amount);
  data::FittedColumn browser;
  browser.name = "browser";
  browser.kind = data::ColumnKind::categorical;
  browser.vocabulary = {"chrome", "Others", "NA"};
  browser.slots = {{"chrome", 0}, {"opera", 1}, {"lynx", 1}};
  columns.push_back(browser);
  const data::FittedPreprocessor prep(std::move(columns));

  const fs::path path = temp_dir() / "prep.json";
  persist::save_preprocessor(prep, path);
  const data::FittedPreprocessor loaded = persist::load_preprocessor(path);
  CHECK(loaded.feature_names() == prep.feature_names());
  CHECK(loaded.columns()[1].vocabulary == prep.columns()[1].vocabulary);
  CHECK(loaded.columns()[1].slots.at("lynx") == 1);
  CHECK(loaded.columns()[0].null_fill == prep.columns()[0].null_fill);
}

TEST_CASE("registry round-trip preserves order and model behavior") {
  distill::TeacherRegistry registry;
  registry.add(0, std::make_shared<nn::MlpModel>(trained_mlp(31)));
  registry.add(1, std::make_shared<ensemble::EnsembleModel>(std::vector<ModelPtr>{
                      std::make_shared<nn::MlpModel>(trained_mlp(32)),
                      std::make_shared<gbt::GbtModel>(trained_gbt(33))}));

  const fs::path dir = temp_dir() / "registry";
  fs::remove_all(dir);
  persist::save_registry(registry, dir);
  CHECK(fs::exists(dir / "manifest.json"));
  CHECK(fs::exists(dir / "period_0" / "model.json"));
  CHECK(fs::exists(dir / "period_1" / "model.json"));

  const distill::TeacherRegistry loaded = persist::load_registry(dir);
  REQUIRE(loaded.size() == 2);
  CHECK(loaded.entries()[0].period == 0);
  CHECK(loaded.entries()[1].model->kind() == "ensemble");

  const auto ds = oracle::separable_blobs(20, 9);
  CHECK(registry.entries()[1].model->predict_proba(ds.x) ==
        loaded.entries()[1].model->predict_proba(ds.x));
}

TEST_CASE("truncated artifacts fail with an error, not a crash") {
  const fs::path dir = temp_dir();

  data::TemporalDataset ds = oracle::separable_blobs(20, 10);
  const fs::path bin = dir / "trunc.bin";
  persist::save_dataset(ds, bin);
  corrupt_tail(bin, 40);
  CHECK_THROWS_AS(persist::load_dataset(bin), Error);

  const fs::path model_path = dir / "trunc.json";
  persist::save_gbt(trained_gbt(12), model_path);
  corrupt_tail(model_path, 100);
  CHECK_THROWS_AS(persist::load_gbt(model_path), Error);
}

TEST_CASE("future schema versions are rejected with a clear message") {
  const fs::path dir = temp_dir();
  const fs::path path = dir / "future.json";
  persist::save_gbt(trained_gbt(13), path);

  nlohmann::json j = persist::read_json(path);
  j["schema_version"] = persist::kSchemaVersion + 1;
  persist::write_json_atomic(path, j);
  CHECK_THROWS_WITH_AS(static_cast<void>(persist::load_gbt(path)),
                       doctest::Contains("unsupported schema version"), Error);
}

TEST_CASE("wrong artifact kind is rejected") {
  const fs::path dir = temp_dir();
  const fs::path path = dir / "kind.json";
  persist::save_gbt(trained_gbt(14), path);
  CHECK_THROWS_AS(persist::load_mlp(path), Error);
}

TEST_CASE("missing files are reported as errors") {
  CHECK_THROWS_AS(persist::load_dataset(temp_dir() / "nope.bin"), Error);
  CHECK_THROWS_AS(persist::load_model(temp_dir() / "nope.json"), Error);
}
