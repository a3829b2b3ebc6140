#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace tkd::data {

enum class ColumnKind { continuous, categorical };

struct RawColumn {
  std::string name;
  ColumnKind kind = ColumnKind::continuous;
};

struct RawCell {
  bool null = true;
  std::string text;
};

struct RawRow {
  int period = 0;
  std::optional<int> label;
  std::vector<RawCell> cells;  // one per feature column, table order
};

struct RawTable {
  std::vector<RawColumn> columns;
  std::vector<RawRow> rows;

  std::optional<std::size_t> column_index(const std::string& name) const;
};

// How the timestamp column maps to period indices:
//   index          - the column already holds integer period indices
//   calendar_month - the column holds ISO dates (YYYY-MM or YYYY-MM-DD);
//                    periods are whole calendar months counted from the
//                    earliest month present
enum class PeriodMapping { index, calendar_month };

struct TableSchema {
  std::string timestamp_column;
  PeriodMapping period_mapping = PeriodMapping::index;
  std::string label_column;  // empty = no label column
  std::vector<RawColumn> columns;
};

TableSchema schema_from_json(const nlohmann::json& j);

// Comma-separated text with a header row. Empty fields are nulls. Fields may
// be wrapped in double quotes ("" escapes a quote).
RawTable load_csv(const std::string& csv_path, const TableSchema& schema);

}  // namespace tkd::data
