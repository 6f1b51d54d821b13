#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "msb/concepts/engine.hpp"
#include "msb/core/error.hpp"
#include "msb/core/random.hpp"
#include "msb/sketch/aggregators.hpp"
#include "msb/sketch/ops.hpp"
#include "support/fixtures.hpp"

using namespace msb;
using namespace msb::sketch;
using kernels::Matrix;

namespace {

// Seed whose XOR run reaches training accuracy 1.0 with kXorOptions.
constexpr std::uint64_t kMlpXorSeed = 1;
const MlpOptions kXorOptions{8, 1.0, 5000};

template <class F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no msb::Error thrown";
  return ErrorCode::NotFound;
}

Matrix random_matrix(core::Rng& rng, std::size_t n, std::size_t d) {
  Matrix m(n, d);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < d; ++c) m(r, c) = rng.uniform(-1.0, 1.0);
  }
  return m;
}

Eigen::MatrixXd augmented(const Matrix& x) {
  Eigen::MatrixXd a(x.rows(), x.cols() + 1);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t c = 0; c < x.cols(); ++c) a(r, c) = x(r, c);
    a(r, x.cols()) = 1.0;
  }
  return a;
}

// Least-squares solution by complete orthogonal decomposition (the minimum-norm
// pseudo-inverse solution); intercept last.
Eigen::VectorXd pinv_solution(const Matrix& x, const std::vector<double>& y) {
  const Eigen::Map<const Eigen::VectorXd> yv(y.data(), y.size());
  return augmented(x).completeOrthogonalDecomposition().solve(yv);
}

double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-6});
}

double accuracy(const ModelParams& params, const Matrix& x, const std::vector<double>& y) {
  std::size_t right = 0;
  for (std::size_t r = 0; r < x.rows(); ++r) right += (predict_row(params, x.row(r)) >= 0.5) == (y[r] >= 0.5);
  return static_cast<double>(right) / x.rows();
}

const Matrix kXor = Matrix::from_rows({{0, 0}, {0, 1}, {1, 0}, {1, 1}});
const std::vector<double> kXorY{0, 1, 1, 0};

}  // namespace

TEST(Ols, SingleColumnIdentity) {
  const auto x = Matrix::from_rows({{0.1}, {0.4}, {0.35}, {0.9}});
  const auto m = fit_ols(x, std::vector<double>{0.1, 0.4, 0.35, 0.9});
  EXPECT_NEAR(m.weights[0], 1.0, 1e-9);
  EXPECT_NEAR(m.intercept, 0.0, 1e-9);
}

TEST(Ols, TwoConceptExactFit) {
  const auto x = Matrix::from_rows({{0, 0}, {1, 0}, {0, 1}, {1, 1}});
  const auto m = fit_ols(x, std::vector<double>{0.1, 0.6, 0.4, 0.9});
  EXPECT_NEAR(m.weights[0], 0.5, 1e-12);
  EXPECT_NEAR(m.weights[1], 0.3, 1e-12);
  EXPECT_NEAR(m.intercept, 0.1, 1e-12);
}

TEST(Ols, MatchesPseudoInverseOracle) {
  core::Rng rng(21);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t d = 1 + rng.below(6);
    const std::size_t n = d + 2 + rng.below(50 - d - 1);
    const auto x = random_matrix(rng, n, d);
    std::vector<double> y(n);
    for (auto& v : y) v = rng.uniform01();
    const auto m = fit_ols(x, y);
    const auto oracle = pinv_solution(x, y);
    for (std::size_t j = 0; j < d; ++j) EXPECT_NEAR(m.weights[j], oracle(j), 1e-8) << trial;
    EXPECT_NEAR(m.intercept, oracle(d), 1e-8) << trial;

    Eigen::VectorXd beta(d + 1);
    for (std::size_t j = 0; j < d; ++j) beta(j) = m.weights[j];
    beta(d) = m.intercept;
    const Eigen::Map<const Eigen::VectorXd> yv(y.data(), n);
    const Eigen::VectorXd residual = yv - augmented(x) * beta;
    EXPECT_LT((augmented(x).transpose() * residual).cwiseAbs().maxCoeff(), 1e-6) << trial;
  }
}

TEST(Ols, ConstantColumnFallsBackToRidge) {
  core::Rng rng(22);
  auto x = random_matrix(rng, 20, 3);
  for (std::size_t r = 0; r < x.rows(); ++r) x(r, 1) = 0.7;
  std::vector<double> y(20);
  for (auto& v : y) v = rng.uniform01();
  const auto m = fit_ols(x, y);
  for (double w : m.weights) EXPECT_TRUE(std::isfinite(w));
  EXPECT_TRUE(std::isfinite(m.intercept));
  // Fitted values are unique even though the coefficients are not.
  const auto oracle = pinv_solution(x, y);
  const Eigen::VectorXd fitted = augmented(x) * oracle;
  Eigen::VectorXd beta(4);
  beta << m.weights[0], m.weights[1], m.weights[2], m.intercept;
  const Eigen::Map<const Eigen::VectorXd> yv(y.data(), y.size());
  EXPECT_LT((augmented(x) * beta - fitted).cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_LT((augmented(x).transpose() * (yv - augmented(x) * beta)).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Logistic, SeparableOrdering) {
  const auto x = Matrix::from_rows({{0}, {1}});
  const auto m = fit_logistic(x, std::vector<double>{0, 1});
  const ModelParams p = m;
  EXPECT_LT(predict_row(p, std::vector<double>{0}), 0.5);
  EXPECT_GT(predict_row(p, std::vector<double>{1}), 0.5);
}

TEST(Logistic, GradientMatchesFiniteDifferences) {
  core::Rng rng(23);
  const double h = 1e-5;
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t d = 1 + rng.below(4), n = 3 + rng.below(12);
    const auto x = random_matrix(rng, n, d);
    std::vector<double> y(n), w(d), g(d);
    for (auto& v : y) v = rng.below(2);
    for (auto& v : w) v = rng.uniform(-1, 1);
    const double b = rng.uniform(-1, 1), l2 = trial % 2 ? 0.1 : 0.0;
    double gb = 0, scratch_b = 0;
    std::vector<double> scratch(d);
    kernels::serial::logistic_loss_grad(x, y, w, b, l2, g, gb);
    for (std::size_t j = 0; j <= d; ++j) {
      auto wp = w, wm = w;
      double bp = b, bm = b;
      (j < d ? wp[j] : bp) += h;
      (j < d ? wm[j] : bm) -= h;
      const double numeric = (kernels::serial::logistic_loss_grad(x, y, wp, bp, l2, scratch, scratch_b) -
                              kernels::serial::logistic_loss_grad(x, y, wm, bm, l2, scratch, scratch_b)) /
                             (2 * h);
      EXPECT_LT(relative_error(j < d ? g[j] : gb, numeric), 1e-4) << trial << " " << j;
    }
  }
}

TEST(Logistic, RowOrderInvariant) {
  core::Rng rng(24);
  const auto x = random_matrix(rng, 30, 3);
  std::vector<double> y(30);
  for (std::size_t r = 0; r < 30; ++r) y[r] = x(r, 0) + 0.3 * x(r, 1) > 0 ? 1 : 0;
  std::vector<std::size_t> perm(30);
  for (std::size_t i = 0; i < 30; ++i) perm[i] = (i * 7) % 30;
  std::vector<double> py(30);
  for (std::size_t i = 0; i < 30; ++i) py[i] = y[perm[i]];
  const auto a = fit_logistic(x, y);
  const auto b = fit_logistic(x.select_rows(perm), py);
  for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(a.weights[j], b.weights[j], 1e-12);
  EXPECT_NEAR(a.intercept, b.intercept, 1e-12);
}

TEST(Logistic, LossNeverIncreases) {
  core::Rng rng(25);
  const auto x = random_matrix(rng, 40, 2);
  std::vector<double> y(40);
  for (auto& v : y) v = rng.below(2);
  double previous = INFINITY;
  for (int epochs : {0, 1, 5, 20, 100, 400}) {
    const auto m = fit_logistic(x, y, {2.0, epochs, 0.0});
    std::vector<double> g(2);
    double gb = 0;
    const double loss = kernels::serial::logistic_loss_grad(x, y, m.weights, m.intercept, 0.0, g, gb);
    EXPECT_LE(loss, previous + 1e-15);
    previous = loss;
  }
}

TEST(Logistic, SingleClassRejected) {
  EXPECT_EQ(code_of([] { fit_logistic(Matrix::from_rows({{0}, {1}}), std::vector<double>{0, 0}); }),
            ErrorCode::DegenerateTarget);
}

TEST(Tree, ForcedPureSplit) {
  const auto t = fit_tree(Matrix::from_rows({{0}, {1}, {0}, {1}}), std::vector<double>{0, 1, 0, 1});
  ASSERT_EQ(t.nodes.size(), 3u);
  EXPECT_EQ(t.nodes[0].feature, 0);
  EXPECT_EQ(t.nodes[0].threshold, 0.5);
  EXPECT_EQ(t.nodes[t.nodes[0].left].value, 0.0);
  EXPECT_EQ(t.nodes[t.nodes[0].right].value, 1.0);
  EXPECT_EQ(t.nodes[t.nodes[0].left].gini, 0.0);
}

TEST(Tree, DepthZeroPredictsPrevalence) {
  const auto t = fit_tree(Matrix::from_rows({{0}, {1}, {2}, {3}}), std::vector<double>{0, 1, 1, 1}, {0, 1});
  ASSERT_EQ(t.nodes.size(), 1u);
  EXPECT_EQ(predict_tree(t, std::vector<double>{9}), 0.75);
}

TEST(Tree, LearnsXorAtDepthTwo) {
  const ModelParams t = fit_tree(kXor, kXorY, {2, 1});
  EXPECT_EQ(accuracy(t, kXor, kXorY), 1.0);
}

TEST(Tree, SplitsNeverRaiseWeightedGini) {
  core::Rng rng(26);
  for (int trial = 0; trial < 30; ++trial) {
    const auto x = random_matrix(rng, 40, 3);
    std::vector<double> y(40);
    for (auto& v : y) v = rng.below(2);
    y[0] = 0;
    y[1] = 1;
    const auto t = fit_tree(x, y, {4, 1 + rng.below(3)});
    for (const auto& node : t.nodes) {
      if (node.feature < 0) continue;
      const auto& l = t.nodes[node.left];
      const auto& r = t.nodes[node.right];
      EXPECT_EQ(l.samples + r.samples, node.samples);
      const double weighted = (l.samples * l.gini + r.samples * r.gini) / node.samples;
      EXPECT_LE(weighted, node.gini + 1e-12);
    }
  }
}

TEST(Forest, SingleTreeWithoutBootstrapEqualsTree) {
  core::Rng rng(27);
  for (std::size_t d : {1u, 3u}) {
    const auto x = random_matrix(rng, 30, d);
    std::vector<double> y(30);
    for (std::size_t r = 0; r < 30; ++r) y[r] = x(r, 0) > 0.1 ? 1 : 0;
    y[0] = 1 - y[0];
    ForestOptions options;
    options.n_trees = 1;
    options.bootstrap = false;
    options.max_features = d;
    options.tree = {3, 1};
    const ModelParams forest = fit_forest(x, y, options, 99);
    const auto tree = fit_tree(x, y, options.tree);
    for (std::size_t r = 0; r < 30; ++r) EXPECT_EQ(predict_row(forest, x.row(r)), predict_tree(tree, x.row(r)));
  }
}

TEST(Forest, SameSeedSameModel) {
  core::Rng rng(28);
  const auto x = random_matrix(rng, 50, 4);
  std::vector<double> y(50);
  for (auto& v : y) v = rng.below(2);
  const ForestOptions options;
  const auto a = fit_forest(x, y, options, 7);
  const auto b = fit_forest(x, y, options, 7);
  EXPECT_EQ(to_json(SketchModel{"s", {}, AggregatorKind::RandomForest, a}),
            to_json(SketchModel{"s", {}, AggregatorKind::RandomForest, b}));
  const auto c = fit_forest(x, y, options, 8);
  EXPECT_NE(to_json(SketchModel{"s", {}, AggregatorKind::RandomForest, a}),
            to_json(SketchModel{"s", {}, AggregatorKind::RandomForest, c}));
}

TEST(Forest, PureSignal) {
  core::Rng rng(29);
  const auto x = random_matrix(rng, 60, 3);
  std::vector<double> y(60);
  for (std::size_t r = 0; r < 60; ++r) y[r] = x(r, 0) > 0.2 ? 1 : 0;
  ForestOptions options;
  options.max_features = 3;
  const ModelParams forest = fit_forest(x, y, options, 3);
  EXPECT_EQ(accuracy(forest, x, y), 1.0);
}

TEST(Mlp, GradientMatchesFiniteDifferences) {
  core::Rng rng(30);
  const double h = 1e-5;
  for (int trial = 0; trial < 20; ++trial) {
    const auto x = random_matrix(rng, 6, 3);
    std::vector<double> y(6);
    for (auto& v : y) v = rng.below(2);
    const kernels::MlpShape shape{3, 1 + rng.below(5)};
    auto params = mlp_initial_params(shape, trial);
    std::vector<double> grad(params.size()), scratch(params.size());
    kernels::serial::mlp_loss_grad(x, y, shape, params, grad);
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto plus = params, minus = params;
      plus[i] += h;
      minus[i] -= h;
      const double numeric = (kernels::serial::mlp_loss_grad(x, y, shape, plus, scratch) -
                              kernels::serial::mlp_loss_grad(x, y, shape, minus, scratch)) /
                             (2 * h);
      EXPECT_LT(relative_error(grad[i], numeric), 1e-3) << trial << " " << i;
    }
  }
}

TEST(Mlp, SameSeedSameParameters) {
  const auto a = fit_mlp(kXor, kXorY, {4, 0.5, 200}, 3);
  const auto b = fit_mlp(kXor, kXorY, {4, 0.5, 200}, 3);
  EXPECT_EQ(a.params, b.params);
  const auto init = mlp_initial_params({2, 4}, 3);
  for (double p : init) EXPECT_TRUE(p >= -0.5 && p < 0.5);
}

TEST(Mlp, LearnsXorForSomeSeed) {
  bool any = false;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const ModelParams m = fit_mlp(kXor, kXorY, kXorOptions, seed);
    any = any || accuracy(m, kXor, kXorY) == 1.0;
  }
  EXPECT_TRUE(any);
  const ModelParams pinned = fit_mlp(kXor, kXorY, kXorOptions, kMlpXorSeed);
  EXPECT_EQ(accuracy(pinned, kXor, kXorY), 1.0);
}

TEST(Predict, ManualWeightsClampAndIdentity) {
  EXPECT_DOUBLE_EQ(predict_row(LinearModel{{1.0}, 0.0}, std::vector<double>{0.7}), 0.7);
  EXPECT_EQ(predict_row(LinearModel{{0.6, 0.6}, 0.0}, std::vector<double>{1, 1}), 1.0);
  EXPECT_EQ(predict_row(LinearModel{{-2.0}, 0.1}, std::vector<double>{1}), 0.0);
}

TEST(Predict, OutputsStayInUnitInterval) {
  core::Rng rng(31);
  const auto x = random_matrix(rng, 40, 3);
  std::vector<double> y(40);
  for (auto& v : y) v = rng.below(2);
  y[0] = 0;
  y[1] = 1;
  const std::vector<ModelParams> models{fit_ols(x, y), fit_logistic(x, y), fit_tree(x, y),
                                        fit_forest(x, y, ForestOptions{}, 1), fit_mlp(x, y, {}, 1)};
  for (const auto& m : models) {
    for (int i = 0; i < 50; ++i) {
      const std::vector<double> probe{rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5)};
      const double p = predict_row(m, probe);
      EXPECT_TRUE(p >= 0.0 && p <= 1.0);
      EXPECT_EQ(p, predict_row(m, probe));
    }
  }
}

class SketchOps : public ::testing::Test {
 protected:
  core::Sketchbook sb = fx::weather_sketchbook();
  scoring::ScorerRegistry scorers;

  void SetUp() override {
    concepts::create_concept(sb, scorers, {"sunny", "text", "lex", std::nullopt, {}, ""});
    concepts::create_concept(sb, scorers, {"warm", "text", "lex", std::nullopt, {}, ""});
  }
};

TEST_F(SketchOps, DefaultKindIsLinearAndRecoversWeights) {
  const auto s = train_sketch(sb, scorers, {{"sunny", "warm"}, std::nullopt, std::nullopt, "", ""});
  EXPECT_EQ(s.kind, AggregatorKind::LinearRegression);
  const auto& m = std::get<LinearModel>(s.params);
  EXPECT_NEAR(m.weights[0], 0.5, 1e-9);
  EXPECT_NEAR(m.weights[1], 0.3, 1e-9);
  EXPECT_NEAR(m.intercept, 0.1, 1e-9);
  const auto preds = predict(sb, scorers, s.id, "train");
  const auto truth = core::ground_truth_column(sb.schema, sb.datasets.at("train"));
  for (std::size_t r = 0; r < preds.size(); ++r) EXPECT_NEAR(preds[r], *truth[r], 1e-9);
  EXPECT_EQ(s.trained_at, sb.history.last_seq());
  EXPECT_EQ(sb.history.events().back().kind, core::EventKind::SketchTrained);
}

TEST_F(SketchOps, NamedSketchId) {
  const auto s = train_sketch(sb, scorers, {{"sunny", "warm"}, std::nullopt, std::nullopt, "sketch_version_1", ""});
  EXPECT_EQ(s.id, "sketch_version_1");
  EXPECT_EQ(sketch_or_throw(sb, "sketch_version_1").concept_ids.size(), 2u);
}

TEST_F(SketchOps, ClassifierNeedsBothClasses) {
  // Keep only the rows labeled below the 0.5 threshold.
  auto& train = sb.datasets.at("train");
  std::erase_if(train.rows, [](const auto& row) { return std::get<double>(row[1]) >= 0.5; });
  EXPECT_EQ(code_of([&] {
              train_sketch(sb, scorers, {{"sunny"}, AggregatorKind::LogisticRegression, std::nullopt, "", ""});
            }),
            ErrorCode::DegenerateTarget);
}

TEST_F(SketchOps, Errors) {
  EXPECT_EQ(code_of([&] { train_sketch(sb, scorers, {{}, std::nullopt, std::nullopt, "", ""}); }),
            ErrorCode::EmptyInput);
  EXPECT_EQ(code_of([&] { train_sketch(sb, scorers, {{"nope"}, std::nullopt, std::nullopt, "", ""}); }),
            ErrorCode::UnknownConcept);
  EXPECT_EQ(code_of([&] { manual_sketch(sb, {"sunny"}, {}, 0.0); }), ErrorCode::LengthMismatch);
  EXPECT_EQ(code_of([&] { sketch_or_throw(sb, "zzz"); }), ErrorCode::UnknownSketch);

  core::Schema unlabeled_schema;
  unlabeled_schema.add("text", core::InputKind::Text);
  core::Dataset ds{"train", {"text"}, {{std::string("sunny")}, {std::string("warm")}}};
  std::map<std::string, core::Dataset> datasets;
  datasets.emplace("train", ds);
  auto bare = core::create_sketchbook("g", std::move(datasets), unlabeled_schema);
  core::add_backend(bare, sb.backends.at("lex"));
  concepts::create_concept(bare, scorers, {"sunny", "text", "lex", std::nullopt, {}, ""});
  EXPECT_EQ(code_of([&] { train_sketch(bare, scorers, {{"sunny"}, std::nullopt, std::nullopt, "", ""}); }),
            ErrorCode::NoGroundTruth);

  auto& rows = sb.datasets.at("train").rows;
  rows.resize(1);
  EXPECT_EQ(code_of([&] { train_sketch(sb, scorers, {{"sunny"}, std::nullopt, std::nullopt, "", ""}); }),
            ErrorCode::TooFewRows);
}

TEST_F(SketchOps, ManualSketchArithmetic) {
  const auto s = manual_sketch(sb, {"sunny", "warm"}, {0.6, 0.6}, 0.0);
  EXPECT_EQ(s.kind, AggregatorKind::ManualWeights);
  const auto x = concept_matrix(sb, scorers, s.concept_ids, "train");
  const auto preds = predict(sb, scorers, s.id, "train");
  for (std::size_t r = 0; r < 3; ++r) {
    EXPECT_DOUBLE_EQ(preds[r], std::clamp(0.6 * x(r, 0) + 0.6 * x(r, 1), 0.0, 1.0));
  }
}

TEST_F(SketchOps, EveryKindTrainsAndPredictsDeterministically) {
  for (auto kind : {AggregatorKind::LinearRegression, AggregatorKind::LogisticRegression,
                    AggregatorKind::DecisionTree, AggregatorKind::RandomForest, AggregatorKind::Mlp}) {
    const auto s = train_sketch(sb, scorers, {{"sunny", "warm"}, kind, std::nullopt, "", ""});
    const auto a = predict(sb, scorers, s.id, "test");
    EXPECT_EQ(a, predict(sb, scorers, s.id, "test"));
    for (double p : a) EXPECT_TRUE(p >= 0.0 && p <= 1.0);
    EXPECT_EQ(to_json(sketch_from_json(to_json(s))), to_json(s));
  }
}
