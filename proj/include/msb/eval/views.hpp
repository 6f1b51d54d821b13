#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "msb/core/sketchbook.hpp"
#include "msb/core/table.hpp"
#include "msb/eval/metrics.hpp"
#include "msb/scoring/backend.hpp"

namespace msb::eval {

// Input fields, one column per concept (named by concept id), "prediction",
// and for labeled datasets "ground_truth", "diff" (prediction - truth) and
// "abs_diff". sort_column may be any of the computed columns or a concept id
// or term; empty keeps dataset order. Rows without a value in the sort column
// go last. Throws UnknownSortColumn.
core::Table sketch_view(core::Sketchbook& sb, scoring::ScorerRegistry& scorers,
                        std::string_view sketch_id, const std::string& dataset,
                        const std::string& sort_column = {}, bool descending = true);

// Metrics over the labeled rows of a dataset. Throws UnlabeledDataset.
MetricsReport evaluate_sketch(core::Sketchbook& sb, scoring::ScorerRegistry& scorers,
                              std::string_view sketch_id, const std::string& dataset,
                              double threshold = 0.5);

using Comparison = std::vector<std::pair<std::string, MetricsReport>>;

// One report per sketch, in the given order. Throws TooFewSketches,
// UnknownSketch or UnlabeledDataset.
Comparison compare_sketches(core::Sketchbook& sb, scoring::ScorerRegistry& scorers,
                            const std::vector<std::string>& sketch_ids, const std::string& dataset,
                            double threshold = 0.5);

struct TestResult {
  core::Table view;
  std::optional<MetricsReport> metrics;  // only for labeled datasets
};

TestResult test_sketch(core::Sketchbook& sb, scoring::ScorerRegistry& scorers,
                       std::string_view sketch_id, const std::string& dataset,
                       const std::string& sort_column = {}, bool descending = true);

Json to_json(const Comparison& c);
Json to_json(const TestResult& r);

}  // namespace msb::eval
