#include "msb/sketch/ops.hpp"

#include "msb/concepts/engine.hpp"
#include "msb/core/error.hpp"
#include "msb/sketch/aggregators.hpp"

namespace msb::sketch {
namespace {

std::vector<std::string> resolve_all(const core::Sketchbook& sb,
                                     const std::vector<std::string>& refs) {
  if (refs.empty()) throw Error(ErrorCode::EmptyInput, "a sketch needs at least one concept", "concepts");
  std::vector<std::string> ids;
  ids.reserve(refs.size());
  for (const auto& ref : refs) ids.push_back(concepts::resolve_concept(sb, ref).id);
  return ids;
}

std::string concept_list(const std::vector<std::string>& ids) {
  std::string out;
  for (const auto& id : ids) out += (out.empty() ? "" : ", ") + id;
  return out;
}

}  // namespace

kernels::Matrix concept_matrix(core::Sketchbook& sb, scoring::ScorerRegistry& scorers,
                               const std::vector<std::string>& concept_ids,
                               const std::string& dataset) {
  const auto& ds = core::dataset_or_throw(sb, dataset);
  kernels::Matrix x(ds.size(), concept_ids.size());
  for (std::size_t j = 0; j < concept_ids.size(); ++j) {
    const auto scores = concepts::score_concept(sb, scorers, concept_ids[j], dataset).scores;
    for (std::size_t r = 0; r < ds.size(); ++r) x(r, j) = scores[r];
  }
  return x;
}

FeatureSet build_features(core::Sketchbook& sb, scoring::ScorerRegistry& scorers,
                          const std::vector<std::string>& concept_ids, const std::string& dataset) {
  if (!sb.schema.ground_truth_field()) {
    throw Error(ErrorCode::NoGroundTruth, "the schema declares no ground-truth field", "schema");
  }
  const auto& ds = core::dataset_or_throw(sb, dataset);
  const auto truth = core::ground_truth_column(sb.schema, ds);
  const auto all = concept_matrix(sb, scorers, concept_ids, dataset);
  FeatureSet out;
  for (std::size_t r = 0; r < truth.size(); ++r) {
    if (truth[r]) {
      out.rows.push_back(r);
      out.y.push_back(*truth[r]);
    } else {
      ++out.unlabeled;
    }
  }
  out.x = all.select_rows(out.rows);
  return out;
}

SketchModel train_sketch(core::Sketchbook& sb, scoring::ScorerRegistry& scorers,
                         const TrainRequest& request) {
  const auto kind = request.kind.value_or(AggregatorKind::LinearRegression);
  if (kind == AggregatorKind::ManualWeights) {
    throw Error(ErrorCode::BadRequest, "manual-weight sketches are created with manual_sketch",
                "kind");
  }
  const auto ids = resolve_all(sb, request.concepts);
  if (!request.id.empty()) sb.check_new_id(request.id);
  const std::string dataset =
      request.dataset.empty() ? concepts::default_dataset(sb) : request.dataset;

  auto features = build_features(sb, scorers, ids, dataset);
  if (features.y.size() < 2) {
    throw Error(ErrorCode::TooFewRows,
                "dataset '" + dataset + "' has " + std::to_string(features.y.size()) +
                    " labeled rows; training needs at least 2",
                "dataset");
  }
  if (is_classifier(kind)) {
    for (auto& v : features.y) v = v >= 0.5 ? 1.0 : 0.0;
  }

  SketchModel s;
  s.concept_ids = ids;
  s.kind = kind;
  s.train_dataset = dataset;
  s.options = request.options.value_or(TrainOptions{});
  s.seed = s.options.seed;
  switch (kind) {
    case AggregatorKind::LinearRegression:
      s.params = fit_ols(features.x, features.y);
      break;
    case AggregatorKind::LogisticRegression:
      s.params = fit_logistic(features.x, features.y, s.options.logistic);
      break;
    case AggregatorKind::DecisionTree:
      s.params = fit_tree(features.x, features.y, s.options.tree);
      break;
    case AggregatorKind::RandomForest:
      s.params = fit_forest(features.x, features.y, s.options.forest, s.seed);
      break;
    case AggregatorKind::Mlp:
      s.params = fit_mlp(features.x, features.y, s.options.mlp, s.seed);
      break;
    case AggregatorKind::ManualWeights:
      break;
  }

  s.id = request.id.empty() ? sb.allocate_id("s") : request.id;
  std::string summary = std::string(to_string(kind)) + " sketch over [" + concept_list(ids) +
                        "] on " + dataset + " (" + std::to_string(features.y.size()) + " rows";
  if (features.unlabeled) summary += ", " + std::to_string(features.unlabeled) + " unlabeled skipped";
  summary += ")";
  s.trained_at = sb.history.append(core::EventKind::SketchTrained, s.id, summary).seq;
  sb.sketches.emplace(s.id, s);
  return s;
}

SketchModel manual_sketch(core::Sketchbook& sb, const std::vector<std::string>& concepts,
                          const std::vector<double>& weights, double intercept, std::string id) {
  const auto ids = resolve_all(sb, concepts);
  if (weights.size() != ids.size()) {
    throw Error(ErrorCode::LengthMismatch,
                std::to_string(weights.size()) + " weights for " + std::to_string(ids.size()) +
                    " concepts",
                "weights");
  }
  if (!id.empty()) sb.check_new_id(id);
  SketchModel s;
  s.concept_ids = ids;
  s.kind = AggregatorKind::ManualWeights;
  s.params = LinearModel{weights, intercept};
  s.id = id.empty() ? sb.allocate_id("s") : std::move(id);
  s.trained_at = sb.history
                     .append(core::EventKind::SketchTrained, s.id,
                             "manual sketch over [" + concept_list(ids) + "]")
                     .seq;
  sb.sketches.emplace(s.id, s);
  return s;
}

const SketchModel& sketch_or_throw(const core::Sketchbook& sb, std::string_view id) {
  auto it = sb.sketches.find(std::string(id));
  if (it == sb.sketches.end()) {
    throw Error(ErrorCode::UnknownSketch, "no sketch '" + std::string(id) + "'", "sketch_id");
  }
  return it->second;
}

std::vector<double> predict(core::Sketchbook& sb, scoring::ScorerRegistry& scorers,
                            std::string_view sketch_id, const std::string& dataset) {
  const SketchModel s = sketch_or_throw(sb, sketch_id);
  const auto x = concept_matrix(sb, scorers, s.concept_ids, dataset);
  std::vector<double> out(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) out[r] = predict_row(s.params, x.row(r));
  return out;
}

void delete_sketch(core::Sketchbook& sb, std::string_view sketch_id) {
  const std::string id = sketch_or_throw(sb, sketch_id).id;
  sb.sketches.erase(id);
  sb.retired_ids.insert(id);
  sb.history.append(core::EventKind::SketchDeleted, id, "deleted sketch");
}

}  // namespace msb::sketch
