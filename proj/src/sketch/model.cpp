#include "msb/sketch/model.hpp"

#include <algorithm>
#include <cctype>

#include "msb/core/error.hpp"
#include "msb/sketch/aggregators.hpp"

namespace msb::sketch {
namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

Json tree_to_json(const TreeModel& t) {
  Json nodes = Json::array();
  for (const auto& n : t.nodes) {
    nodes.push_back(Json{{"feature", n.feature},
                         {"threshold", n.threshold},
                         {"left", n.left},
                         {"right", n.right},
                         {"value", n.value},
                         {"samples", n.samples},
                         {"gini", n.gini}});
  }
  return Json{{"nodes", nodes}};
}

TreeModel tree_from_json(const Json& j) {
  TreeModel t;
  for (const auto& n : j.at("nodes")) {
    TreeNode node;
    node.feature = n.at("feature").get<int>();
    node.threshold = n.at("threshold").get<double>();
    node.left = n.at("left").get<int>();
    node.right = n.at("right").get<int>();
    node.value = n.at("value").get<double>();
    node.samples = n.at("samples").get<std::size_t>();
    node.gini = n.at("gini").get<double>();
    t.nodes.push_back(node);
  }
  const int count = static_cast<int>(t.nodes.size());
  for (const auto& n : t.nodes) {
    if (n.feature >= 0 && (n.left <= 0 || n.right <= 0 || n.left >= count || n.right >= count)) {
      throw Error(ErrorCode::CorruptDocument, "tree node points outside the tree");
    }
  }
  return t;
}

Json params_to_json(const ModelParams& p) {
  return std::visit(
      overloaded{
          [](const LinearModel& m) { return Json{{"weights", m.weights}, {"intercept", m.intercept}}; },
          [](const LogisticModel& m) {
            return Json{{"weights", m.weights}, {"intercept", m.intercept}};
          },
          [](const TreeModel& m) { return tree_to_json(m); },
          [](const ForestModel& m) {
            Json trees = Json::array();
            for (const auto& t : m.trees) trees.push_back(tree_to_json(t));
            return Json{{"trees", trees}};
          },
          [](const MlpModel& m) {
            return Json{{"inputs", m.shape.inputs}, {"hidden", m.shape.hidden}, {"params", m.params}};
          },
      },
      p);
}

ModelParams params_from_json(AggregatorKind kind, const Json& j) {
  switch (kind) {
    case AggregatorKind::LinearRegression:
    case AggregatorKind::ManualWeights:
      return LinearModel{j.at("weights").get<std::vector<double>>(), j.at("intercept").get<double>()};
    case AggregatorKind::LogisticRegression:
      return LogisticModel{j.at("weights").get<std::vector<double>>(),
                           j.at("intercept").get<double>()};
    case AggregatorKind::DecisionTree: return tree_from_json(j);
    case AggregatorKind::RandomForest: {
      ForestModel f;
      for (const auto& t : j.at("trees")) f.trees.push_back(tree_from_json(t));
      return f;
    }
    case AggregatorKind::Mlp: {
      MlpModel m;
      m.shape.inputs = j.at("inputs").get<std::size_t>();
      m.shape.hidden = j.at("hidden").get<std::size_t>();
      m.params = j.at("params").get<std::vector<double>>();
      if (m.params.size() != m.shape.parameter_count()) {
        throw Error(ErrorCode::CorruptDocument, "mlp parameter count does not match its shape");
      }
      return m;
    }
  }
  throw Error(ErrorCode::CorruptDocument, "unknown aggregator");
}

}  // namespace

std::string_view to_string(AggregatorKind kind) {
  switch (kind) {
    case AggregatorKind::LinearRegression: return "linear_regression";
    case AggregatorKind::LogisticRegression: return "logistic_regression";
    case AggregatorKind::DecisionTree: return "decision_tree";
    case AggregatorKind::RandomForest: return "random_forest";
    case AggregatorKind::Mlp: return "mlp";
    case AggregatorKind::ManualWeights: return "manual_weights";
  }
  return "linear_regression";
}

std::optional<AggregatorKind> aggregator_from_string(std::string_view name) {
  std::string s;
  for (char c : name) {
    if (c == '-' || c == ' ') c = '_';
    s.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  if (s == "linear_regression" || s == "linear") return AggregatorKind::LinearRegression;
  if (s == "logistic_regression" || s == "logistic") return AggregatorKind::LogisticRegression;
  if (s == "decision_tree" || s == "tree") return AggregatorKind::DecisionTree;
  if (s == "random_forest" || s == "forest") return AggregatorKind::RandomForest;
  if (s == "mlp") return AggregatorKind::Mlp;
  if (s == "manual_weights" || s == "manual") return AggregatorKind::ManualWeights;
  return std::nullopt;
}

bool is_classifier(AggregatorKind kind) {
  return kind == AggregatorKind::LogisticRegression || kind == AggregatorKind::DecisionTree ||
         kind == AggregatorKind::RandomForest || kind == AggregatorKind::Mlp;
}

double predict_row(const ModelParams& params, std::span<const double> x) {
  return std::visit(
      overloaded{
          [&](const LinearModel& m) {
            return std::clamp(m.intercept + dot(m.weights, x), 0.0, 1.0);
          },
          [&](const LogisticModel& m) { return kernels::sigmoid(m.intercept + dot(m.weights, x)); },
          [&](const TreeModel& m) { return predict_tree(m, x); },
          [&](const ForestModel& m) {
            if (m.trees.empty()) return 0.0;
            double s = 0.0;
            for (const auto& t : m.trees) s += predict_tree(t, x);
            return s / static_cast<double>(m.trees.size());
          },
          [&](const MlpModel& m) { return kernels::mlp_forward(m.shape, m.params, x); },
      },
      params);
}

Json to_json(const TrainOptions& o) {
  return Json{{"seed", o.seed},
              {"logistic",
               {{"learning_rate", o.logistic.learning_rate},
                {"epochs", o.logistic.epochs},
                {"l2", o.logistic.l2}}},
              {"tree", {{"max_depth", o.tree.max_depth}, {"min_leaf", o.tree.min_leaf}}},
              {"forest",
               {{"n_trees", o.forest.n_trees},
                {"bootstrap", o.forest.bootstrap},
                {"max_features", o.forest.max_features},
                {"max_depth", o.forest.tree.max_depth},
                {"min_leaf", o.forest.tree.min_leaf}}},
              {"mlp",
               {{"hidden", o.mlp.hidden},
                {"learning_rate", o.mlp.learning_rate},
                {"epochs", o.mlp.epochs}}}};
}

TrainOptions train_options_from_json(const Json& j, TrainOptions o) {
  try {
    o.seed = j.value("seed", o.seed);
    if (j.contains("logistic")) {
      const Json& l = j.at("logistic");
      o.logistic.learning_rate = l.value("learning_rate", o.logistic.learning_rate);
      o.logistic.epochs = l.value("epochs", o.logistic.epochs);
      o.logistic.l2 = l.value("l2", o.logistic.l2);
    }
    if (j.contains("tree")) {
      const Json& t = j.at("tree");
      o.tree.max_depth = t.value("max_depth", o.tree.max_depth);
      o.tree.min_leaf = t.value("min_leaf", o.tree.min_leaf);
    }
    if (j.contains("forest")) {
      const Json& f = j.at("forest");
      o.forest.n_trees = f.value("n_trees", o.forest.n_trees);
      o.forest.bootstrap = f.value("bootstrap", o.forest.bootstrap);
      o.forest.max_features = f.value("max_features", o.forest.max_features);
      o.forest.tree.max_depth = f.value("max_depth", o.forest.tree.max_depth);
      o.forest.tree.min_leaf = f.value("min_leaf", o.forest.tree.min_leaf);
    }
    if (j.contains("mlp")) {
      const Json& m = j.at("mlp");
      o.mlp.hidden = m.value("hidden", o.mlp.hidden);
      o.mlp.learning_rate = m.value("learning_rate", o.mlp.learning_rate);
      o.mlp.epochs = m.value("epochs", o.mlp.epochs);
    }
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::BadHyperparameter, std::string("malformed options: ") + e.what(),
                "options");
  }
  return o;
}

Json to_json(const SketchModel& s) {
  return Json{{"id", s.id},
              {"concept_ids", s.concept_ids},
              {"kind", to_string(s.kind)},
              {"train_dataset", s.train_dataset},
              {"seed", s.seed},
              {"trained_at", s.trained_at},
              {"options", to_json(s.options)},
              {"params", params_to_json(s.params)}};
}

SketchModel sketch_from_json(const Json& j) {
  SketchModel s;
  s.id = j.at("id").get<std::string>();
  s.concept_ids = j.at("concept_ids").get<std::vector<std::string>>();
  const auto kind = aggregator_from_string(j.at("kind").get<std::string>());
  if (!kind) throw Error(ErrorCode::CorruptDocument, "unknown aggregator for sketch " + s.id);
  s.kind = *kind;
  s.train_dataset = j.at("train_dataset").get<std::string>();
  s.seed = j.at("seed").get<std::uint64_t>();
  s.trained_at = j.at("trained_at").get<std::uint64_t>();
  s.options = train_options_from_json(j.at("options"));
  s.params = params_from_json(s.kind, j.at("params"));
  return s;
}

}  // namespace msb::sketch
