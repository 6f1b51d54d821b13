#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "msb/core/sketchbook.hpp"
#include "msb/kernels/matrix.hpp"
#include "msb/scoring/backend.hpp"
#include "msb/sketch/model.hpp"

namespace msb::sketch {

// Concept scores as columns, in the given concept order, for every row of a dataset.
kernels::Matrix concept_matrix(core::Sketchbook& sb, scoring::ScorerRegistry& scorers,
                               const std::vector<std::string>& concept_ids,
                               const std::string& dataset);

struct FeatureSet {
  kernels::Matrix x;
  std::vector<double> y;
  std::vector<std::size_t> rows;  // dataset row of each matrix row
  std::size_t unlabeled = 0;      // rows left out for a missing label
};

// Labeled rows only. Throws NoGroundTruth when the schema has no label field.
FeatureSet build_features(core::Sketchbook& sb, scoring::ScorerRegistry& scorers,
                          const std::vector<std::string>& concept_ids, const std::string& dataset);

struct TrainRequest {
  std::vector<std::string> concepts;        // ids or unique terms
  std::optional<AggregatorKind> kind;       // LinearRegression when absent
  std::optional<TrainOptions> options;
  std::string id;                           // generated when empty
  std::string dataset;                      // default_dataset() when empty
};

SketchModel train_sketch(core::Sketchbook& sb, scoring::ScorerRegistry& scorers,
                         const TrainRequest& request);

SketchModel manual_sketch(core::Sketchbook& sb, const std::vector<std::string>& concepts,
                          const std::vector<double>& weights, double intercept,
                          std::string id = {});

const SketchModel& sketch_or_throw(const core::Sketchbook& sb, std::string_view id);

std::vector<double> predict(core::Sketchbook& sb, scoring::ScorerRegistry& scorers,
                            std::string_view sketch_id, const std::string& dataset);

void delete_sketch(core::Sketchbook& sb, std::string_view sketch_id);

}  // namespace msb::sketch
