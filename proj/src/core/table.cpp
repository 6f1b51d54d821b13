#include "msb/core/table.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

namespace msb::core {
namespace {

std::string display(const Cell& c) {
  if (const auto* d = std::get_if<double>(&c)) {
    std::ostringstream out;
    out.precision(6);
    out << *d;
    return out.str();
  }
  std::string s = cell_text(c);
  for (auto& ch : s) {
    if (ch == '\n' || ch == '\r' || ch == '\t') ch = ' ';
  }
  return s;
}

}  // namespace

std::vector<std::size_t> sorted_order(std::span<const double> keys, bool descending) {
  std::vector<std::size_t> order(keys.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return descending ? keys[a] > keys[b] : keys[a] < keys[b];
  });
  return order;
}

Json cell_to_json(const Cell& c) {
  if (const auto* s = std::get_if<std::string>(&c)) return *s;
  if (const auto* d = std::get_if<double>(&c)) return *d;
  return nullptr;
}

Json to_json(const Table& table) {
  Json rows = Json::array();
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    Json values = Json::array();
    for (const auto& c : table.rows[i]) values.push_back(cell_to_json(c));
    rows.push_back(Json{{"row", table.row_index[i]}, {"values", values}});
  }
  return Json{{"columns", table.columns}, {"rows", rows}};
}

Table table_from_json(const Json& j) {
  Table t;
  t.columns = j.at("columns").get<std::vector<std::string>>();
  for (const auto& r : j.at("rows")) {
    t.row_index.push_back(r.at("row").get<std::size_t>());
    std::vector<Cell> cells;
    for (const auto& v : r.at("values")) {
      if (v.is_string()) cells.emplace_back(v.get<std::string>());
      else if (v.is_number()) cells.emplace_back(v.get<double>());
      else cells.emplace_back(std::monostate{});
    }
    t.rows.push_back(std::move(cells));
  }
  return t;
}

std::string render_text(const Table& table, std::size_t max_cell) {
  std::vector<std::string> header{"row"};
  header.insert(header.end(), table.columns.begin(), table.columns.end());
  std::vector<std::vector<std::string>> body;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    std::vector<std::string> line{std::to_string(table.row_index[i])};
    for (const auto& c : table.rows[i]) {
      std::string s = display(c);
      if (s.size() > max_cell) s = s.substr(0, max_cell - 3) + "...";
      line.push_back(std::move(s));
    }
    body.push_back(std::move(line));
  }
  std::vector<std::size_t> width(header.size(), 0);
  for (std::size_t c = 0; c < header.size(); ++c) width[c] = header[c].size();
  for (const auto& line : body) {
    for (std::size_t c = 0; c < line.size() && c < width.size(); ++c) {
      width[c] = std::max(width[c], line[c].size());
    }
  }
  std::ostringstream out;
  auto emit = [&](const std::vector<std::string>& line) {
    for (std::size_t c = 0; c < line.size(); ++c) {
      out << line[c];
      if (c + 1 < line.size()) out << std::string(width[c] - line[c].size() + 2, ' ');
    }
    out << '\n';
  };
  emit(header);
  for (const auto& line : body) emit(line);
  return out.str();
}

}  // namespace msb::core
