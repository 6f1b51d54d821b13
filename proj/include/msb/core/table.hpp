#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "msb/core/dataset.hpp"
#include "msb/core/json.hpp"

namespace msb::core {

// A rendered view: named columns over a subset of dataset rows in display order.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::size_t> row_index;  // source row for each displayed row
  std::vector<std::vector<Cell>> rows;
};

// Row order by key, descending or ascending; equal keys keep ascending row index.
std::vector<std::size_t> sorted_order(std::span<const double> keys, bool descending);

// {"columns": [...], "rows": [{"row": i, "values": [...]}, ...]}
Json to_json(const Table& table);
// Inverse of to_json; strings, numbers and nulls map back to cells.
Table table_from_json(const Json& j);
// Fixed-width text rendering; long cells are cut to max_cell characters.
std::string render_text(const Table& table, std::size_t max_cell = 40);

Json cell_to_json(const Cell& c);

}  // namespace msb::core
