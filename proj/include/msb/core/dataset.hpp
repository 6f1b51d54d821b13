#pragma once

#include <cstddef>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "msb/core/schema.hpp"

namespace msb::core {

// Text and image references are both strings; the schema says which is which.
using Cell = std::variant<std::monostate, std::string, double>;

inline bool is_missing(const Cell& c) { return std::holds_alternative<std::monostate>(c); }

// Textual content of a cell; missing cells read as "".
std::string cell_text(const Cell& c);

// A named table whose columns are exactly the schema fields in schema order.
// Row position (0-based) is the row identity.
struct Dataset {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  std::size_t size() const noexcept { return rows.size(); }
  std::optional<std::size_t> column_index(std::string_view field) const;
  const Cell& at(std::size_t row, std::size_t column) const { return rows.at(row).at(column); }
};

// Throws SchemaMismatch naming the first offending field (and row, via
// Error::detail) or GroundTruthOutOfRange.
void validate_dataset(const Schema& schema, const Dataset& dataset);

// Parses RFC 4180 style CSV (first record is the header). Columns not named in
// the schema are dropped; empty cells become missing.
Dataset ingest_csv(std::istream& in, const Schema& schema, std::string name);
Dataset ingest_csv_text(std::string_view text, const Schema& schema, std::string name);

// Splits CSV text into records; exposed for tests and the CLI.
std::vector<std::vector<std::string>> parse_csv_records(std::string_view text);

// Ground-truth value per row; nullopt for rows whose label is missing or when
// the schema has no ground-truth field.
std::vector<std::optional<double>> ground_truth_column(const Schema& schema,
                                                       const Dataset& dataset);

// True when the schema has a ground-truth field and at least one row carries a label.
bool is_labeled(const Schema& schema, const Dataset& dataset);

}  // namespace msb::core
