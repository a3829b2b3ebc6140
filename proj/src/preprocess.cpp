#include "preprocess.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "error.hpp"

namespace tkd::data {

namespace {

ColumnRule rule_for(const PreprocessSpec& spec, const RawColumn& col) {
  const auto it = spec.rules.find(col.name);
  if (it != spec.rules.end()) return it->second;
  ColumnRule rule;
  rule.encoding = col.kind == ColumnKind::categorical ? Encoding::one_hot : Encoding::none;
  return rule;
}

double parse_number(const RawCell& cell, const std::string& col, std::size_t row) {
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.text.data(), cell.text.data() + cell.text.size(), value);
  require(ec == std::errc{} && ptr == cell.text.data() + cell.text.size(), "data",
          "cannot parse number '" + cell.text + "' in column " + col + " row " +
              std::to_string(row));
  require(std::isfinite(value), "data",
          "non-finite value in column " + col + " row " + std::to_string(row));
  return value;
}

}  // namespace

FittedPreprocessor::FittedPreprocessor(std::vector<FittedColumn> columns)
    : columns_(std::move(columns)) {
  for (const auto& col : columns_) {
    if (col.kind == ColumnKind::continuous) {
      feature_names_.push_back(col.name);
    } else {
      for (const auto& category : col.vocabulary) {
        feature_names_.push_back(col.name + "=" + category);
      }
    }
  }
}

FittedPreprocessor fit_preprocessor(const RawTable& table, const PreprocessSpec& spec,
                                    const std::set<int>& training_periods) {
  require(!training_periods.empty(), "data", "training period filter is empty");
  for (const auto& [name, rule] : spec.rules) {
    const auto idx = table.column_index(name);
    require(idx.has_value(), "data", "unknown column '" + name + "' in preprocess rules");
    const RawColumn& col = table.columns[*idx];
    if (col.kind == ColumnKind::continuous) {
      require(rule.encoding != Encoding::one_hot, "data",
              "continuous column '" + name + "' cannot be one-hot encoded");
    } else {
      require(rule.encoding == Encoding::one_hot, "data",
              "categorical column '" + name + "' requires one-hot encoding");
      require(rule.transform == Transform::identity, "data",
              "categorical column '" + name + "' cannot have a numeric transform");
    }
  }

  std::vector<FittedColumn> fitted;
  fitted.reserve(table.columns.size());
  for (std::size_t c = 0; c < table.columns.size(); ++c) {
    const RawColumn& col = table.columns[c];
    const ColumnRule rule = rule_for(spec, col);
    FittedColumn out;
    out.name = col.name;
    out.kind = col.kind;
    if (col.kind == ColumnKind::continuous) {
      out.transform = rule.transform;
      out.null_fill = rule.null_fill;
      fitted.push_back(std::move(out));
      continue;
    }

    std::map<std::string, std::size_t> counts;  // ordered: deterministic vocabulary
    for (const RawRow& row : table.rows) {
      if (!training_periods.count(row.period)) continue;
      const RawCell& cell = row.cells[c];
      if (!cell.null) ++counts[cell.text];
    }

    std::vector<std::string> kept;
    bool bucketed = false;
    for (const auto& [category, n] : counts) {
      if (n >= rule.frequency_threshold) {
        kept.push_back(category);
      } else {
        bucketed = true;
      }
    }

    out.vocabulary = kept;  // already lexicographic via std::map
    if (bucketed) out.vocabulary.push_back(kOthersCategory);
    out.vocabulary.push_back(kNullCategory);

    const std::size_t others_slot = out.vocabulary.size() - 2;
    for (const auto& [category, n] : counts) {
      if (n >= rule.frequency_threshold) {
        const auto it = std::find(kept.begin(), kept.end(), category);
        out.slots[category] = static_cast<std::size_t>(it - kept.begin());
      } else {
        out.slots[category] = others_slot;
      }
    }
    fitted.push_back(std::move(out));
  }
  return FittedPreprocessor(std::move(fitted));
}

std::vector<TemporalDataset> transform(const RawTable& table, const FittedPreprocessor& prep) {
  require(prep.feature_count() > 0, "data", "preprocessor is not fitted");
  require(prep.columns().size() == table.columns.size(), "data",
          "table shape does not match the fitted preprocessor");
  for (std::size_t c = 0; c < table.columns.size(); ++c) {
    require(table.columns[c].name == prep.columns()[c].name &&
                table.columns[c].kind == prep.columns()[c].kind,
            "data", "table column '" + table.columns[c].name + "' does not match preprocessor");
  }

  // Group row indices by period, preserving file order within each period.
  std::map<int, std::vector<std::size_t>> by_period;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    by_period[table.rows[r].period].push_back(r);
  }

  std::vector<TemporalDataset> out;
  out.reserve(by_period.size());
  for (const auto& [period, row_indices] : by_period) {
    TemporalDataset ds;
    ds.period = period;
    ds.feature_names = prep.feature_names();
    ds.x = Matrix(row_indices.size(), prep.feature_count());

    std::size_t labeled = 0;
    for (std::size_t i = 0; i < row_indices.size(); ++i) {
      const RawRow& row = table.rows[row_indices[i]];
      if (row.label) ++labeled;
      double* dst = ds.x.row(i);
      std::size_t offset = 0;
      for (std::size_t c = 0; c < prep.columns().size(); ++c) {
        const FittedColumn& col = prep.columns()[c];
        const RawCell& cell = row.cells[c];
        if (col.kind == ColumnKind::continuous) {
          if (cell.null) {
            require(col.null_fill.has_value(), "data",
                    "null in column " + col.name + " row " + std::to_string(row_indices[i]) +
                        " with no fill value configured");
            // The fill constant replaces the transform output; it is not
            // itself transformed (log10 of a negative sentinel is undefined).
            dst[offset] = *col.null_fill;
          } else {
            const double raw = parse_number(cell, col.name, row_indices[i]);
            if (col.transform == Transform::log10) {
              require(raw > 0.0, "data",
                      "log10 of non-positive value " + std::to_string(raw) + " in column " +
                          col.name + " row " + std::to_string(row_indices[i]));
              dst[offset] = std::log10(raw);
            } else {
              dst[offset] = raw;
            }
          }
          offset += 1;
        } else {
          const std::string& category = cell.null ? kNullCategory : cell.text;
          const auto it = cell.null ? col.slots.end() : col.slots.find(category);
          if (cell.null) {
            dst[offset + col.vocabulary.size() - 1] = 1.0;  // NA is always last
          } else if (it != col.slots.end()) {
            dst[offset + it->second] = 1.0;
          }
          // Unseen category: the whole block stays zero.
          offset += col.vocabulary.size();
        }
      }
    }

    if (labeled == row_indices.size()) {
      ds.labels.reserve(row_indices.size());
      for (std::size_t r : row_indices) ds.labels.push_back(*table.rows[r].label);
    } else {
      require(labeled == 0, "data",
              "period " + std::to_string(period) + " is partially labeled");
    }
    ds.validate();
    out.push_back(std::move(ds));
  }
  return out;
}

}  // namespace tkd::data
