#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "msb/core/json.hpp"
#include "msb/kernels/kernels.hpp"

namespace msb::sketch {

enum class AggregatorKind {
  LinearRegression,
  LogisticRegression,
  DecisionTree,
  RandomForest,
  Mlp,
  ManualWeights,
};

std::string_view to_string(AggregatorKind kind);
std::optional<AggregatorKind> aggregator_from_string(std::string_view name);
// Kinds trained on ground truth binarized at 0.5.
bool is_classifier(AggregatorKind kind);

struct LogisticOptions {
  double learning_rate = 0.5;
  int epochs = 2000;
  double l2 = 0.0;
};

struct TreeOptions {
  int max_depth = 3;
  std::size_t min_leaf = 1;
};

struct ForestOptions {
  std::size_t n_trees = 25;
  bool bootstrap = true;
  std::size_t max_features = 0;  // 0: ceil(sqrt(d)) per split
  TreeOptions tree;
};

struct MlpOptions {
  std::size_t hidden = 8;
  double learning_rate = 0.1;
  int epochs = 500;
};

struct TrainOptions {
  std::uint64_t seed = 42;
  LogisticOptions logistic;
  TreeOptions tree;
  ForestOptions forest;
  MlpOptions mlp;
};

struct LinearModel {
  std::vector<double> weights;
  double intercept = 0.0;
};

struct LogisticModel {
  std::vector<double> weights;
  double intercept = 0.0;
};

// Internal nodes send x[feature] <= threshold left. Leaves have feature == -1
// and predict `value`, the positive-class fraction of their training rows.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;
  std::size_t samples = 0;
  double gini = 0.0;
};

struct TreeModel {
  std::vector<TreeNode> nodes;  // nodes[0] is the root
};

struct ForestModel {
  std::vector<TreeModel> trees;
};

struct MlpModel {
  kernels::MlpShape shape;
  std::vector<double> params;
};

using ModelParams = std::variant<LinearModel, LogisticModel, TreeModel, ForestModel, MlpModel>;

struct SketchModel {
  std::string id;
  std::vector<std::string> concept_ids;
  AggregatorKind kind = AggregatorKind::LinearRegression;
  ModelParams params;
  std::string train_dataset;
  std::uint64_t seed = 42;
  TrainOptions options;
  std::uint64_t trained_at = 0;  // history sequence number
};

// Forward pass for one feature row. Linear outputs are clamped to [0, 1].
double predict_row(const ModelParams& params, std::span<const double> x);

Json to_json(const TrainOptions& o);
TrainOptions train_options_from_json(const Json& j, TrainOptions defaults = {});
Json to_json(const SketchModel& s);
SketchModel sketch_from_json(const Json& j);

}  // namespace msb::sketch
