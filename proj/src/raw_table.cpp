#include "raw_table.hpp"

#include <charconv>
#include <fstream>
#include <limits>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "error.hpp"

namespace tkd::data {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          current.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        current.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(current));
      current.clear();
    } else if (c != '\r') {
      current.push_back(c);
    }
  }
  fields.push_back(std::move(current));
  return fields;
}

int parse_int_field(const std::string& text, const std::string& what) {
  int value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  require(ec == std::errc{} && ptr == text.data() + text.size(), "data",
          "cannot parse " + what + " from '" + text + "'");
  return value;
}

// Months since year 0 for an ISO date prefix YYYY-MM.
long month_code(const std::string& text) {
  require(text.size() >= 7 && text[4] == '-', "data",
          "cannot parse calendar month from '" + text + "'");
  const int year = parse_int_field(text.substr(0, 4), "year");
  const int month = parse_int_field(text.substr(5, 2), "month");
  require(month >= 1 && month <= 12, "data", "month out of range in '" + text + "'");
  return static_cast<long>(year) * 12 + (month - 1);
}

}  // namespace

std::optional<std::size_t> RawTable::column_index(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i].name == name) return i;
  }
  return std::nullopt;
}

TableSchema schema_from_json(const nlohmann::json& j) {
  TableSchema schema;
  require(j.contains("timestamp_column"), "data", "schema missing timestamp_column");
  schema.timestamp_column = j.at("timestamp_column").get<std::string>();
  const std::string mapping = j.value("period_mapping", std::string("index"));
  if (mapping == "index") {
    schema.period_mapping = PeriodMapping::index;
  } else if (mapping == "calendar_month") {
    schema.period_mapping = PeriodMapping::calendar_month;
  } else {
    throw Error("data", "unknown period_mapping '" + mapping + "'");
  }
  schema.label_column = j.value("label_column", std::string());
  require(j.contains("columns") && j.at("columns").is_array(), "data",
          "schema missing columns array");
  for (const auto& c : j.at("columns")) {
    RawColumn col;
    col.name = c.at("name").get<std::string>();
    const std::string kind = c.at("kind").get<std::string>();
    if (kind == "continuous") {
      col.kind = ColumnKind::continuous;
    } else if (kind == "categorical") {
      col.kind = ColumnKind::categorical;
    } else {
      throw Error("data", "unknown column kind '" + kind + "' for column " + col.name);
    }
    schema.columns.push_back(std::move(col));
  }
  require(!schema.columns.empty(), "data", "schema declares no feature columns");
  return schema;
}

RawTable load_csv(const std::string& csv_path, const TableSchema& schema) {
  std::ifstream in(csv_path);
  require(in.good(), "data", "cannot open '" + csv_path + "'");

  std::string line;
  require(static_cast<bool>(std::getline(in, line)), "data", "empty file '" + csv_path + "'");
  const std::vector<std::string> header = split_csv_line(line);

  std::unordered_map<std::string, std::size_t> header_index;
  for (std::size_t i = 0; i < header.size(); ++i) header_index[header[i]] = i;

  auto locate = [&](const std::string& name) {
    const auto it = header_index.find(name);
    require(it != header_index.end(), "data", "column '" + name + "' not found in " + csv_path);
    return it->second;
  };

  const std::size_t ts_col = locate(schema.timestamp_column);
  std::optional<std::size_t> label_col;
  if (!schema.label_column.empty() && header_index.count(schema.label_column)) {
    label_col = header_index.at(schema.label_column);
  }

  RawTable table;
  table.columns = schema.columns;
  std::vector<std::size_t> feature_cols;
  feature_cols.reserve(schema.columns.size());
  for (const auto& col : schema.columns) feature_cols.push_back(locate(col.name));

  std::vector<long> raw_periods;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_csv_line(line);
    require(fields.size() == header.size(), "data",
            "row " + std::to_string(line_no) + " has " + std::to_string(fields.size()) +
                " fields, expected " + std::to_string(header.size()));

    RawRow row;
    const std::string& ts = fields[ts_col];
    require(!ts.empty(), "data", "row " + std::to_string(line_no) + " has empty timestamp");
    raw_periods.push_back(schema.period_mapping == PeriodMapping::index
                              ? parse_int_field(ts, "period index")
                              : month_code(ts));

    if (label_col) {
      const std::string& lab = fields[*label_col];
      if (!lab.empty()) {
        const int v = parse_int_field(lab, "label");
        require(v == 0 || v == 1, "data", "label must be 0 or 1 at row " + std::to_string(line_no));
        row.label = v;
      }
    }

    row.cells.reserve(feature_cols.size());
    for (std::size_t fc : feature_cols) {
      RawCell cell;
      cell.null = fields[fc].empty();
      if (!cell.null) cell.text = fields[fc];
      row.cells.push_back(std::move(cell));
    }
    table.rows.push_back(std::move(row));
  }

  // Month codes are rebased to the earliest month present; explicit indices
  // are taken as-is.
  long base = 0;
  if (schema.period_mapping == PeriodMapping::calendar_month) {
    base = std::numeric_limits<long>::max();
    for (long p : raw_periods) base = std::min(base, p);
  }
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const long p = raw_periods[i] - base;
    require(p >= 0, "data", "negative period index in '" + csv_path + "'");
    table.rows[i].period = static_cast<int>(p);
  }
  return table;
}

}  // namespace tkd::data
