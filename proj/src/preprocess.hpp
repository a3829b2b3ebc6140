#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "dataset.hpp"
#include "raw_table.hpp"

namespace tkd::data {

enum class Transform { identity, log10 };
enum class Encoding { none, one_hot };

struct ColumnRule {
  Transform transform = Transform::identity;
  Encoding encoding = Encoding::none;
  std::optional<double> null_fill;      // continuous columns
  std::size_t frequency_threshold = 0;  // categorical columns; counts below it
                                        // collapse into the "Others" bucket
};

// Per-column preprocessing rules. Columns without an explicit rule default to
// identity transform (continuous) or one-hot encoding (categorical).
struct PreprocessSpec {
  std::map<std::string, ColumnRule> rules;
};

inline constexpr const char* kOthersCategory = "Others";
inline constexpr const char* kNullCategory = "NA";

struct FittedColumn {
  std::string name;
  ColumnKind kind = ColumnKind::continuous;
  // continuous
  Transform transform = Transform::identity;
  std::optional<double> null_fill;
  // categorical: kept categories sorted lexicographically, then "Others" when
  // any category was bucketed, then "NA". `slots` maps every category seen at
  // fit time (bucketed ones included) to its one-hot position; categories
  // never seen at fit time encode as all zeros.
  std::vector<std::string> vocabulary;
  std::unordered_map<std::string, std::size_t> slots;
};

class FittedPreprocessor {
 public:
  FittedPreprocessor() = default;
  explicit FittedPreprocessor(std::vector<FittedColumn> columns);

  const std::vector<FittedColumn>& columns() const { return columns_; }
  const std::vector<std::string>& feature_names() const { return feature_names_; }
  std::size_t feature_count() const { return feature_names_.size(); }

 private:
  std::vector<FittedColumn> columns_;
  std::vector<std::string> feature_names_;
};

// Builds categorical vocabularies from the training periods only. Null
// categorical values count as the "NA" category; "NA" always has a slot.
FittedPreprocessor fit_preprocessor(const RawTable& table, const PreprocessSpec& spec,
                                    const std::set<int>& training_periods);

// Applies the fitted rules to every row and partitions the result by period
// (ascending). A period's labels are included only when every row in it is
// labeled; a partially labeled period is an error.
std::vector<TemporalDataset> transform(const RawTable& table, const FittedPreprocessor& prep);

}  // namespace tkd::data
