#include "msb/eval/views.hpp"

#include <cmath>
#include <limits>
#include <numeric>

#include "msb/concepts/engine.hpp"
#include "msb/core/error.hpp"
#include "msb/sketch/ops.hpp"

namespace msb::eval {
namespace {

struct Labeled {
  std::vector<double> predictions;
  std::vector<double> truth;
};

Labeled labeled_rows(const core::Sketchbook& sb, const core::Dataset& ds,
                     const std::vector<double>& predictions) {
  if (!core::is_labeled(sb.schema, ds)) {
    throw Error(ErrorCode::UnlabeledDataset, "dataset '" + ds.name + "' carries no labels",
                "dataset");
  }
  Labeled out;
  const auto truth = core::ground_truth_column(sb.schema, ds);
  for (std::size_t r = 0; r < truth.size(); ++r) {
    if (!truth[r]) continue;
    out.predictions.push_back(predictions[r]);
    out.truth.push_back(*truth[r]);
  }
  return out;
}

}  // namespace

core::Table sketch_view(core::Sketchbook& sb, scoring::ScorerRegistry& scorers,
                        std::string_view sketch_id, const std::string& dataset,
                        const std::string& sort_column, bool descending) {
  const sketch::SketchModel s = sketch::sketch_or_throw(sb, sketch_id);
  const auto& ds = core::dataset_or_throw(sb, dataset);
  const bool labeled = core::is_labeled(sb.schema, ds);
  const auto gt_field = sb.schema.ground_truth_field();

  std::vector<std::size_t> input_columns;
  core::Table table;
  for (std::size_t c = 0; c < ds.columns.size(); ++c) {
    if (gt_field && ds.columns[c] == *gt_field) continue;
    input_columns.push_back(c);
    table.columns.push_back(ds.columns[c]);
  }

  const auto x = sketch::concept_matrix(sb, scorers, s.concept_ids, dataset);
  const auto predictions = sketch::predict(sb, scorers, s.id, dataset);
  const auto truth = core::ground_truth_column(sb.schema, ds);
  const double missing = std::numeric_limits<double>::quiet_NaN();

  // Computed columns as numbers; NaN marks a missing value.
  std::vector<std::pair<std::string, std::vector<double>>> computed;
  for (std::size_t j = 0; j < s.concept_ids.size(); ++j) computed.emplace_back(s.concept_ids[j], x.column(j));
  computed.emplace_back("prediction", predictions);
  if (labeled) {
    std::vector<double> t(ds.size(), missing), d(ds.size(), missing), a(ds.size(), missing);
    for (std::size_t r = 0; r < ds.size(); ++r) {
      if (!truth[r]) continue;
      t[r] = *truth[r];
      d[r] = predictions[r] - *truth[r];
      a[r] = std::abs(d[r]);
    }
    computed.emplace_back("ground_truth", std::move(t));
    computed.emplace_back("diff", std::move(d));
    computed.emplace_back("abs_diff", std::move(a));
  }
  for (const auto& [name, values] : computed) table.columns.push_back(name);

  std::vector<std::size_t> order(ds.size());
  std::iota(order.begin(), order.end(), 0);
  if (!sort_column.empty()) {
    const std::vector<double>* keys = nullptr;
    for (const auto& [name, values] : computed) {
      if (name == sort_column) keys = &values;
    }
    if (!keys) {
      for (std::size_t j = 0; j < s.concept_ids.size(); ++j) {
        if (sb.concepts.at(s.concept_ids[j]).term == sort_column) keys = &computed[j].second;
      }
    }
    if (!keys) {
      throw Error(ErrorCode::UnknownSortColumn,
                  "cannot sort by '" + sort_column + "'" +
                      (labeled ? "" : " (dataset is unlabeled, so truth and diff columns are absent)"),
                  "sort");
    }
    const double last = descending ? -std::numeric_limits<double>::infinity()
                                   : std::numeric_limits<double>::infinity();
    std::vector<double> k(*keys);
    for (auto& v : k) {
      if (std::isnan(v)) v = last;
    }
    order = core::sorted_order(k, descending);
  }

  for (std::size_t r : order) {
    std::vector<core::Cell> row;
    row.reserve(table.columns.size());
    for (std::size_t c : input_columns) row.push_back(ds.rows[r][c]);
    for (const auto& [name, values] : computed) {
      if (std::isnan(values[r])) row.emplace_back(std::monostate{});
      else row.emplace_back(values[r]);
    }
    table.row_index.push_back(r);
    table.rows.push_back(std::move(row));
  }
  return table;
}

MetricsReport evaluate_sketch(core::Sketchbook& sb, scoring::ScorerRegistry& scorers,
                              std::string_view sketch_id, const std::string& dataset,
                              double threshold) {
  const auto& ds = core::dataset_or_throw(sb, dataset);
  const auto predictions = sketch::predict(sb, scorers, sketch_id, dataset);
  const auto rows = labeled_rows(sb, ds, predictions);
  return compute_metrics(rows.predictions, rows.truth, threshold);
}

Comparison compare_sketches(core::Sketchbook& sb, scoring::ScorerRegistry& scorers,
                            const std::vector<std::string>& sketch_ids, const std::string& dataset,
                            double threshold) {
  if (sketch_ids.size() < 2) {
    throw Error(ErrorCode::TooFewSketches, "comparison needs at least two sketches", "ids");
  }
  for (const auto& id : sketch_ids) sketch::sketch_or_throw(sb, id);
  const auto& ds = core::dataset_or_throw(sb, dataset);
  if (!core::is_labeled(sb.schema, ds)) {
    throw Error(ErrorCode::UnlabeledDataset, "dataset '" + dataset + "' carries no labels",
                "dataset");
  }
  Comparison out;
  for (const auto& id : sketch_ids) {
    out.emplace_back(id, evaluate_sketch(sb, scorers, id, dataset, threshold));
  }
  return out;
}

TestResult test_sketch(core::Sketchbook& sb, scoring::ScorerRegistry& scorers,
                       std::string_view sketch_id, const std::string& dataset,
                       const std::string& sort_column, bool descending) {
  sketch::sketch_or_throw(sb, sketch_id);
  const auto& ds = core::dataset_or_throw(sb, dataset);
  TestResult out;
  out.view = sketch_view(sb, scorers, sketch_id, dataset, sort_column, descending);
  if (core::is_labeled(sb.schema, ds)) out.metrics = evaluate_sketch(sb, scorers, sketch_id, dataset);
  return out;
}

Json to_json(const Comparison& c) {
  Json rows = Json::array();
  for (const auto& [id, m] : c) {
    Json row{{"sketch_id", id}};
    row.update(to_json(m));
    rows.push_back(std::move(row));
  }
  return rows;
}

Json to_json(const TestResult& r) {
  return Json{{"view", core::to_json(r.view)},
              {"metrics", r.metrics ? to_json(*r.metrics) : Json(nullptr)}};
}

}  // namespace msb::eval
