#include "msb/core/dataset.hpp"

#include <charconv>
#include <cmath>
#include <iterator>
#include <sstream>

#include "msb/core/error.hpp"

namespace msb::core {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

std::optional<double> parse_number(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(value)) {
    return std::nullopt;
  }
  return value;
}

bool is_numeric_kind(InputKind k) { return k == InputKind::Numeric || k == InputKind::GroundTruth; }

}  // namespace

std::string cell_text(const Cell& c) {
  if (const auto* s = std::get_if<std::string>(&c)) return *s;
  if (const auto* d = std::get_if<double>(&c)) {
    std::ostringstream out;
    out << *d;
    return out.str();
  }
  return {};
}

std::optional<std::size_t> Dataset::column_index(std::string_view field) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] == field) return i;
  }
  return std::nullopt;
}

void validate_dataset(const Schema& schema, const Dataset& dataset) {
  for (const auto& f : schema.fields()) {
    if (!dataset.column_index(f.name)) {
      throw Error(ErrorCode::SchemaMismatch,
                  "dataset '" + dataset.name + "' has no column '" + f.name + "'", f.name);
    }
  }
  if (dataset.columns.size() != schema.size()) {
    for (const auto& c : dataset.columns) {
      if (!schema.index_of(c)) {
        throw Error(ErrorCode::SchemaMismatch,
                    "dataset '" + dataset.name + "' has column '" + c + "' not in the schema", c);
      }
    }
  }
  for (std::size_t r = 0; r < dataset.rows.size(); ++r) {
    const auto& row = dataset.rows[r];
    if (row.size() != dataset.columns.size()) {
      throw Error(ErrorCode::SchemaMismatch,
                  "dataset '" + dataset.name + "' row " + std::to_string(r) + " has " +
                      std::to_string(row.size()) + " cells, expected " +
                      std::to_string(dataset.columns.size()),
                  {}, static_cast<long long>(r));
    }
    for (std::size_t c = 0; c < row.size(); ++c) {
      const auto& name = dataset.columns[c];
      const InputKind kind = *schema.kind_of(name);
      const Cell& cell = row[c];
      if (is_missing(cell)) continue;
      if (is_numeric_kind(kind) != std::holds_alternative<double>(cell)) {
        throw Error(ErrorCode::SchemaMismatch,
                    "dataset '" + dataset.name + "' row " + std::to_string(r) + " field '" + name +
                        "' does not hold a " + std::string(to_string(kind)) + " value",
                    name, static_cast<long long>(r));
      }
      if (kind == InputKind::GroundTruth) {
        const double v = std::get<double>(cell);
        if (!(v >= 0.0 && v <= 1.0)) {
          throw Error(ErrorCode::GroundTruthOutOfRange,
                      "ground truth " + cell_text(cell) + " at row " + std::to_string(r) +
                          " is outside [0, 1]",
                      name, static_cast<long long>(r));
        }
      }
    }
  }
}

std::vector<std::vector<std::string>> parse_csv_records(std::string_view text) {
  if (text.size() >= 3 && text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);

  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;

  auto end_record = [&] {
    record.push_back(std::move(field));
    field.clear();
    // A record consisting of one empty field is a blank line.
    if (!(record.size() == 1 && record[0].empty() && !field_started)) {
      records.push_back(std::move(record));
    }
    record.clear();
    field_started = false;
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char ch = text[i];
    if (in_quotes) {
      if (ch == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(ch);
      }
      continue;
    }
    switch (ch) {
      case '"':
        in_quotes = true;
        field_started = true;
        break;
      case ',':
        record.push_back(std::move(field));
        field.clear();
        field_started = true;
        break;
      case '\r':
        if (i + 1 < text.size() && text[i + 1] == '\n') ++i;
        end_record();
        break;
      case '\n':
        end_record();
        break;
      default:
        field.push_back(ch);
        field_started = true;
    }
  }
  if (field_started || !field.empty() || !record.empty()) end_record();
  return records;
}

Dataset ingest_csv_text(std::string_view text, const Schema& schema, std::string name) {
  const auto records = parse_csv_records(text);
  if (records.empty()) {
    throw Error(ErrorCode::EmptyFile, "CSV input for dataset '" + name + "' is empty");
  }
  const auto& header = records.front();

  Dataset ds;
  ds.name = std::move(name);
  std::vector<std::size_t> source_column;
  for (const auto& f : schema.fields()) {
    std::optional<std::size_t> found;
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (trim(header[i]) == f.name) {
        found = i;
        break;
      }
    }
    if (!found) {
      throw Error(ErrorCode::HeaderMissingField, "CSV header lacks field '" + f.name + "'", f.name);
    }
    ds.columns.push_back(f.name);
    source_column.push_back(*found);
  }

  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    const std::size_t row_index = r - 1;
    std::vector<Cell> row;
    row.reserve(schema.size());
    for (std::size_t c = 0; c < schema.size(); ++c) {
      const auto& spec = schema.fields()[c];
      const std::size_t src = source_column[c];
      const std::string raw = src < rec.size() ? rec[src] : std::string{};
      if (trim(raw).empty()) {
        row.emplace_back(std::monostate{});
        continue;
      }
      if (is_numeric_kind(spec.kind)) {
        auto v = parse_number(raw);
        if (!v) {
          throw Error(ErrorCode::BadNumeric,
                      "row " + std::to_string(row_index) + " field '" + spec.name +
                          "': '" + raw + "' is not a number",
                      spec.name, static_cast<long long>(row_index));
        }
        row.emplace_back(*v);
      } else {
        row.emplace_back(raw);
      }
    }
    ds.rows.push_back(std::move(row));
  }
  validate_dataset(schema, ds);
  return ds;
}

Dataset ingest_csv(std::istream& in, const Schema& schema, std::string name) {
  std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return ingest_csv_text(text, schema, std::move(name));
}

std::vector<std::optional<double>> ground_truth_column(const Schema& schema,
                                                       const Dataset& dataset) {
  std::vector<std::optional<double>> out(dataset.size());
  const auto gt = schema.ground_truth_field();
  if (!gt) return out;
  const auto col = dataset.column_index(*gt);
  if (!col) return out;
  for (std::size_t r = 0; r < dataset.size(); ++r) {
    if (const auto* v = std::get_if<double>(&dataset.rows[r][*col])) out[r] = *v;
  }
  return out;
}

bool is_labeled(const Schema& schema, const Dataset& dataset) {
  for (const auto& v : ground_truth_column(schema, dataset)) {
    if (v) return true;
  }
  return false;
}

}  // namespace msb::core
