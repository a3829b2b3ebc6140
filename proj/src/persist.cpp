#include "persist.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "config_io.hpp"
#include "error.hpp"

static_assert(std::endian::native == std::endian::little,
              "binary artifacts assume a little-endian host");

namespace tkd::persist {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr char kBinaryMagic[8] = {'T', 'K', 'D', 'B', 'I', 'N', '0', '\0'};
constexpr std::uint32_t kKindDataset = 1;
constexpr std::uint32_t kKindSoftLabels = 2;

void check_schema(const json& j, const std::string& expected_kind, const fs::path& path) {
  require(j.is_object(), "persistence", "not a JSON object: " + path.string());
  require(j.contains("schema_version") && j.at("schema_version").is_number_integer(),
          "persistence", "missing schema_version in " + path.string());
  const int version = j.at("schema_version").get<int>();
  require(version <= kSchemaVersion, "persistence",
          "unsupported schema version " + std::to_string(version) + " in " + path.string() +
              " (this build reads up to " + std::to_string(kSchemaVersion) + ")");
  require(version >= 1, "persistence", "invalid schema version in " + path.string());
  const std::string kind = j.value("kind", std::string());
  require(kind == expected_kind, "persistence",
          "artifact kind '" + kind + "' in " + path.string() + ", expected '" + expected_kind + "'");
}

class BinaryWriter {
 public:
  explicit BinaryWriter(std::string* out) : out_(out) {}

  template <typename T>
  void put(const T& value) {
    static_assert(std::is_trivially_copyable_v<T>);
    const char* bytes = reinterpret_cast<const char*>(&value);
    out_->append(bytes, sizeof(T));
  }

  void put_doubles(const double* values, std::size_t count) {
    out_->append(reinterpret_cast<const char*>(values), count * sizeof(double));
  }

  void put_string(const std::string& s) {
    put<std::uint64_t>(s.size());
    out_->append(s);
  }

 private:
  std::string* out_;
};

class BinaryReader {
 public:
  BinaryReader(std::string data, const fs::path& path)
      : data_(std::move(data)), path_(path.string()) {}

  template <typename T>
  T get() {
    static_assert(std::is_trivially_copyable_v<T>);
    need(sizeof(T));
    T value;
    std::memcpy(&value, data_.data() + at_, sizeof(T));
    at_ += sizeof(T);
    return value;
  }

  void get_doubles(double* out, std::size_t count) {
    need(count * sizeof(double));
    std::memcpy(out, data_.data() + at_, count * sizeof(double));
    at_ += count * sizeof(double);
  }

  std::string get_string() {
    const auto len = get<std::uint64_t>();
    need(len);
    std::string s = data_.substr(at_, len);
    at_ += len;
    return s;
  }

  std::uint32_t open(std::uint32_t expected_kind) {
    need(sizeof(kBinaryMagic));
    require(std::memcmp(data_.data(), kBinaryMagic, sizeof(kBinaryMagic)) == 0, "persistence",
            "bad magic in " + path_);
    at_ = sizeof(kBinaryMagic);
    const auto version = get<std::uint32_t>();
    require(version >= 1 && version <= static_cast<std::uint32_t>(kSchemaVersion), "persistence",
            "unsupported schema version " + std::to_string(version) + " in " + path_);
    const auto kind = get<std::uint32_t>();
    require(kind == expected_kind, "persistence", "wrong artifact kind in " + path_);
    return version;
  }

 private:
  void need(std::size_t bytes) {
    require(at_ + bytes <= data_.size(), "persistence", "truncated artifact " + path_);
  }

  std::string data_;
  std::string path_;
  std::size_t at_ = 0;
};

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "persistence", "cannot open " + path.string());
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return data;
}

}  // namespace

void write_text_atomic(const fs::path& path, const std::string& contents) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    require(out.good(), "persistence", "cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    require(out.good(), "persistence", "write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

void write_json_atomic(const fs::path& path, const json& j) {
  write_text_atomic(path, j.dump(2) + "\n");
}

json read_json(const fs::path& path) {
  const std::string text = read_file(path);
  json j = json::parse(text, nullptr, /*allow_exceptions=*/false);
  require(!j.is_discarded(), "persistence", "malformed JSON in " + path.string());
  return j;
}

std::uint64_t config_hash(const json& j) {
  const std::string dump = j.dump();
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : dump) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

void save_mlp(const nn::MlpModel& model, const fs::path& path) {
  json layers = json::array();
  for (const auto& layer : model.layers()) {
    layers.push_back(json{{"rows", layer.w.rows()},
                          {"cols", layer.w.cols()},
                          {"w", layer.w.data()},
                          {"b", layer.b}});
  }
  const auto& bn = model.batch_norm();
  json j{{"schema_version", kSchemaVersion},
         {"kind", "mlp"},
         {"config", config::to_json(model.config())},
         {"input_dim", model.feature_count()},
         {"layers", layers},
         {"batch_norm",
          json{{"gamma", bn.gamma},
               {"beta", bn.beta},
               {"running_mean", bn.running_mean},
               {"running_var", bn.running_var},
               {"eps", bn.eps}}}};
  write_json_atomic(path, j);
}

nn::MlpModel load_mlp(const fs::path& path) {
  const json j = read_json(path);
  check_schema(j, "mlp", path);
  nn::MlpModel model;
  model.set_config(config::mlp_from_json(j.at("config")));
  model.set_input_dim(j.at("input_dim").get<std::size_t>());
  for (const auto& lj : j.at("layers")) {
    nn::DenseLayer layer;
    const auto rows = lj.at("rows").get<std::size_t>();
    const auto cols = lj.at("cols").get<std::size_t>();
    layer.w = Matrix(rows, cols);
    const auto flat = lj.at("w").get<std::vector<double>>();
    require(flat.size() == rows * cols, "persistence", "layer shape mismatch in " + path.string());
    layer.w.data() = flat;
    layer.b = lj.at("b").get<std::vector<double>>();
    require(layer.b.size() == cols, "persistence", "bias shape mismatch in " + path.string());
    model.layers().push_back(std::move(layer));
  }
  require(!model.layers().empty(), "persistence", "no layers in " + path.string());
  const json& bj = j.at("batch_norm");
  auto& bn = model.batch_norm();
  bn.gamma = bj.at("gamma").get<std::vector<double>>();
  bn.beta = bj.at("beta").get<std::vector<double>>();
  bn.running_mean = bj.at("running_mean").get<std::vector<double>>();
  bn.running_var = bj.at("running_var").get<std::vector<double>>();
  bn.eps = bj.at("eps").get<double>();
  return model;
}

void save_gbt(const gbt::GbtModel& model, const fs::path& path) {
  json trees = json::array();
  for (const auto& tree : model.trees()) {
    json feature = json::array(), threshold = json::array(), left = json::array(),
         right = json::array(), value = json::array();
    for (const auto& node : tree.nodes) {
      feature.push_back(node.feature);
      threshold.push_back(node.threshold);
      left.push_back(node.left);
      right.push_back(node.right);
      value.push_back(node.value);
    }
    trees.push_back(json{{"feature", feature},
                         {"threshold", threshold},
                         {"left", left},
                         {"right", right},
                         {"value", value}});
  }
  json j{{"schema_version", kSchemaVersion},
         {"kind", "gbt"},
         {"config", config::to_json(model.config())},
         {"n_features", model.feature_count()},
         {"base_score", model.base_score()},
         {"trees", trees}};
  write_json_atomic(path, j);
}

gbt::GbtModel load_gbt(const fs::path& path) {
  const json j = read_json(path);
  check_schema(j, "gbt", path);
  std::vector<gbt::Tree> trees;
  for (const auto& tj : j.at("trees")) {
    gbt::Tree tree;
    const auto feature = tj.at("feature").get<std::vector<int>>();
    const auto threshold = tj.at("threshold").get<std::vector<double>>();
    const auto left = tj.at("left").get<std::vector<int>>();
    const auto right = tj.at("right").get<std::vector<int>>();
    const auto value = tj.at("value").get<std::vector<double>>();
    require(feature.size() == threshold.size() && feature.size() == left.size() &&
                feature.size() == right.size() && feature.size() == value.size(),
            "persistence", "ragged tree arrays in " + path.string());
    tree.nodes.resize(feature.size());
    for (std::size_t i = 0; i < feature.size(); ++i) {
      tree.nodes[i] = {feature[i], threshold[i], left[i], right[i], value[i]};
      if (!tree.nodes[i].is_leaf()) {
        const bool valid = left[i] >= 0 && right[i] >= 0 &&
                           left[i] < static_cast<int>(feature.size()) &&
                           right[i] < static_cast<int>(feature.size());
        require(valid, "persistence", "invalid tree topology in " + path.string());
      }
    }
    trees.push_back(std::move(tree));
  }
  return gbt::GbtModel(config::gbt_from_json(j.at("config")), j.at("base_score").get<double>(),
                       std::move(trees), j.at("n_features").get<std::size_t>());
}

void save_ensemble(const ensemble::EnsembleModel& model, const fs::path& path) {
  const fs::path dir = path.parent_path();
  json members = json::array();
  for (std::size_t i = 0; i < model.members().size(); ++i) {
    const auto& member = model.members()[i];
    const std::string filename = "member_" + std::to_string(i) + "_" + member->kind() + ".json";
    save_model(*member, dir / filename);
    members.push_back(json{{"kind", member->kind()}, {"path", filename}});
  }
  json j{{"schema_version", kSchemaVersion}, {"kind", "ensemble"}, {"members", members}};
  write_json_atomic(path, j);
}

void save_model(const Model& model, const fs::path& path) {
  if (const auto* mlp = dynamic_cast<const nn::MlpModel*>(&model)) {
    save_mlp(*mlp, path);
  } else if (const auto* g = dynamic_cast<const gbt::GbtModel*>(&model)) {
    save_gbt(*g, path);
  } else if (const auto* ens = dynamic_cast<const ensemble::EnsembleModel*>(&model)) {
    save_ensemble(*ens, path);
  } else {
    throw Error("persistence", "unknown model kind '" + model.kind() + "'");
  }
}

ModelPtr load_model(const fs::path& path) {
  const json j = read_json(path);
  const std::string kind = j.value("kind", std::string());
  if (kind == "mlp") {
    return std::make_shared<nn::MlpModel>(load_mlp(path));
  }
  if (kind == "gbt") {
    return std::make_shared<gbt::GbtModel>(load_gbt(path));
  }
  if (kind == "ensemble") {
    check_schema(j, "ensemble", path);
    std::vector<ModelPtr> members;
    for (const auto& mj : j.at("members")) {
      const fs::path member_path = path.parent_path() / mj.at("path").get<std::string>();
      members.push_back(load_model(member_path));
    }
    return std::make_shared<ensemble::EnsembleModel>(std::move(members));
  }
  throw Error("persistence", "unknown model kind '" + kind + "' in " + path.string());
}

void save_dataset(const data::TemporalDataset& ds, const fs::path& path,
                  std::uint64_t config_hash_value) {
  std::string buffer;
  buffer.reserve(64 + ds.x.data().size() * sizeof(double));
  BinaryWriter w(&buffer);
  buffer.append(kBinaryMagic, sizeof(kBinaryMagic));
  w.put<std::uint32_t>(kSchemaVersion);
  w.put<std::uint32_t>(kKindDataset);
  w.put<std::int32_t>(ds.period);
  w.put<std::uint64_t>(ds.rows());
  w.put<std::uint64_t>(ds.cols());
  w.put<std::uint64_t>(config_hash_value);
  w.put<std::uint8_t>(ds.has_labels() ? 1 : 0);
  w.put<std::uint64_t>(ds.feature_names.size());
  for (const auto& name : ds.feature_names) w.put_string(name);
  w.put_doubles(ds.x.data().data(), ds.x.data().size());
  if (ds.has_labels()) {
    for (int y : ds.labels) w.put<std::uint8_t>(static_cast<std::uint8_t>(y));
  }
  write_text_atomic(path, buffer);
}

data::TemporalDataset load_dataset(const fs::path& path) {
  BinaryReader r(read_file(path), path);
  r.open(kKindDataset);
  data::TemporalDataset ds;
  ds.period = r.get<std::int32_t>();
  const auto rows = r.get<std::uint64_t>();
  const auto cols = r.get<std::uint64_t>();
  r.get<std::uint64_t>();  // config hash, informational
  const bool has_labels = r.get<std::uint8_t>() != 0;
  const auto n_names = r.get<std::uint64_t>();
  ds.feature_names.reserve(n_names);
  for (std::uint64_t i = 0; i < n_names; ++i) ds.feature_names.push_back(r.get_string());
  ds.x = Matrix(rows, cols);
  r.get_doubles(ds.x.data().data(), rows * cols);
  if (has_labels) {
    ds.labels.reserve(rows);
    for (std::uint64_t i = 0; i < rows; ++i) ds.labels.push_back(r.get<std::uint8_t>());
  }
  ds.validate();
  return ds;
}

void save_soft_labels(const distill::SoftLabelMatrix& soft, const fs::path& path) {
  std::string buffer;
  BinaryWriter w(&buffer);
  buffer.append(kBinaryMagic, sizeof(kBinaryMagic));
  w.put<std::uint32_t>(kSchemaVersion);
  w.put<std::uint32_t>(kKindSoftLabels);
  w.put<std::int32_t>(soft.teacher_period);
  w.put<std::int32_t>(soft.target_period);
  w.put<std::uint64_t>(soft.probs.rows());
  w.put<std::uint64_t>(soft.probs.cols());
  w.put_doubles(soft.probs.data().data(), soft.probs.data().size());
  write_text_atomic(path, buffer);
}

distill::SoftLabelMatrix load_soft_labels(const fs::path& path) {
  BinaryReader r(read_file(path), path);
  r.open(kKindSoftLabels);
  distill::SoftLabelMatrix soft;
  soft.teacher_period = r.get<std::int32_t>();
  soft.target_period = r.get<std::int32_t>();
  const auto rows = r.get<std::uint64_t>();
  const auto cols = r.get<std::uint64_t>();
  soft.probs = Matrix(rows, cols);
  r.get_doubles(soft.probs.data().data(), rows * cols);
  return soft;
}

void save_preprocessor(const data::FittedPreprocessor& prep, const fs::path& path) {
  json columns = json::array();
  for (const auto& col : prep.columns()) {
    json cj{{"name", col.name},
            {"kind", col.kind == data::ColumnKind::continuous ? "continuous" : "categorical"}};
    if (col.kind == data::ColumnKind::continuous) {
      cj["transform"] = col.transform == data::Transform::log10 ? "log10" : "identity";
      if (col.null_fill) cj["null_fill"] = *col.null_fill;
    } else {
      cj["vocabulary"] = col.vocabulary;
      json slots = json::object();
      for (const auto& [category, slot] : std::map<std::string, std::size_t>(col.slots.begin(),
                                                                             col.slots.end())) {
        slots[category] = slot;
      }
      cj["slots"] = slots;
    }
    columns.push_back(std::move(cj));
  }
  json j{{"schema_version", kSchemaVersion}, {"kind", "preprocessor"}, {"columns", columns}};
  write_json_atomic(path, j);
}

data::FittedPreprocessor load_preprocessor(const fs::path& path) {
  const json j = read_json(path);
  check_schema(j, "preprocessor", path);
  std::vector<data::FittedColumn> columns;
  for (const auto& cj : j.at("columns")) {
    data::FittedColumn col;
    col.name = cj.at("name").get<std::string>();
    const std::string kind = cj.at("kind").get<std::string>();
    col.kind = kind == "continuous" ? data::ColumnKind::continuous : data::ColumnKind::categorical;
    if (col.kind == data::ColumnKind::continuous) {
      col.transform = cj.at("transform").get<std::string>() == "log10" ? data::Transform::log10
                                                                       : data::Transform::identity;
      if (cj.contains("null_fill")) col.null_fill = cj.at("null_fill").get<double>();
    } else {
      col.vocabulary = cj.at("vocabulary").get<std::vector<std::string>>();
      for (const auto& [category, slot] : cj.at("slots").items()) {
        col.slots[category] = slot.get<std::size_t>();
      }
    }
    columns.push_back(std::move(col));
  }
  return data::FittedPreprocessor(std::move(columns));
}

void save_registry(const distill::TeacherRegistry& registry, const fs::path& dir) {
  fs::create_directories(dir);
  json entries = json::array();
  for (const auto& entry : registry.entries()) {
    const std::string rel = "period_" + std::to_string(entry.period) + "/model.json";
    save_model(*entry.model, dir / rel);
    entries.push_back(
        json{{"period", entry.period}, {"model", rel}, {"model_kind", entry.model->kind()}});
  }
  json j{{"schema_version", kSchemaVersion}, {"kind", "registry"}, {"entries", entries}};
  write_json_atomic(dir / "manifest.json", j);
}

distill::TeacherRegistry load_registry(const fs::path& dir) {
  const fs::path manifest = dir / "manifest.json";
  const json j = read_json(manifest);
  check_schema(j, "registry", manifest);
  distill::TeacherRegistry registry;
  for (const auto& ej : j.at("entries")) {
    registry.add(ej.at("period").get<int>(), load_model(dir / ej.at("model").get<std::string>()));
  }
  return registry;
}

}  // namespace tkd::persist
