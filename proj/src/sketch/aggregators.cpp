#include "msb/sketch/aggregators.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "msb/core/error.hpp"
#include "msb/core/random.hpp"
#include "msb/kernels/kernels.hpp"

namespace msb::sketch {
namespace {

// In-place Cholesky solve of a symmetric system. Returns false when a pivot
// is not safely positive.
bool cholesky_solve(kernels::Matrix a, std::vector<double>& b) {
  const std::size_t n = a.rows();
  double scale = 0.0;
  for (std::size_t i = 0; i < n; ++i) scale = std::max(scale, std::abs(a(i, i)));
  const double tol = 1e-12 * std::max(scale, 1.0);
  for (std::size_t j = 0; j < n; ++j) {
    double d = a(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= a(j, k) * a(j, k);
    if (!(d > tol)) return false;
    const double ljj = std::sqrt(d);
    a(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= a(i, k) * a(j, k);
      a(i, j) = s / ljj;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    double s = b[i];
    for (std::size_t k = 0; k < i; ++k) s -= a(i, k) * b[k];
    b[i] = s / a(i, i);
  }
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= a(k, i) * b[k];
    b[i] = s / a(i, i);
  }
  return true;
}

double gini(double positives, double total) {
  if (total <= 0.0) return 0.0;
  const double p = positives / total;
  return 1.0 - p * p - (1.0 - p) * (1.0 - p);
}

using FeatureSampler = std::function<std::vector<std::size_t>()>;

class TreeBuilder {
 public:
  TreeBuilder(const kernels::Matrix& x, std::span<const double> y, const TreeOptions& options,
              FeatureSampler sampler)
      : x_(x), y_(y), options_(options), sampler_(std::move(sampler)) {}

  TreeModel build(std::vector<std::size_t> rows) {
    TreeModel tree;
    grow(tree, std::move(rows), 0);
    return tree;
  }

 private:
  struct Split {
    double weighted_gini;
    std::size_t feature;
    double threshold;
  };

  int grow(TreeModel& tree, std::vector<std::size_t> rows, int depth) {
    const int index = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    double positives = 0.0;
    for (std::size_t r : rows) positives += y_[r];
    const double n = static_cast<double>(rows.size());
    {
      TreeNode& node = tree.nodes[index];
      node.samples = rows.size();
      node.value = rows.empty() ? 0.0 : positives / n;
      node.gini = gini(positives, n);
    }
    const double node_gini = tree.nodes[index].gini;
    if (depth >= options_.max_depth || node_gini <= 0.0 ||
        rows.size() < 2 * std::max<std::size_t>(1, options_.min_leaf)) {
      return index;
    }
    const auto best = best_split(rows);
    if (!best || best->weighted_gini > node_gini + 1e-12) return index;

    std::vector<std::size_t> left, right;
    for (std::size_t r : rows) {
      (x_(r, best->feature) <= best->threshold ? left : right).push_back(r);
    }
    const int l = grow(tree, std::move(left), depth + 1);
    const int rgt = grow(tree, std::move(right), depth + 1);
    TreeNode& node = tree.nodes[index];
    node.feature = static_cast<int>(best->feature);
    node.threshold = best->threshold;
    node.left = l;
    node.right = rgt;
    return index;
  }

  std::optional<Split> best_split(const std::vector<std::size_t>& rows) const {
    std::vector<std::size_t> features;
    if (sampler_) {
      features = sampler_();
    } else {
      features.resize(x_.cols());
      std::iota(features.begin(), features.end(), std::size_t{0});
    }
    const std::size_t min_leaf = std::max<std::size_t>(1, options_.min_leaf);
    const double n = static_cast<double>(rows.size());
    double total_pos = 0.0;
    for (std::size_t r : rows) total_pos += y_[r];

    std::optional<Split> best;
    std::vector<std::size_t> order(rows);
    for (std::size_t f : features) {
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) { return x_(a, f) < x_(b, f); });
      double left_pos = 0.0;
      for (std::size_t k = 0; k + 1 < order.size(); ++k) {
        left_pos += y_[order[k]];
        const double v = x_(order[k], f);
        const double next = x_(order[k + 1], f);
        if (!(v < next)) continue;
        const std::size_t left_n = k + 1;
        const std::size_t right_n = order.size() - left_n;
        if (left_n < min_leaf || right_n < min_leaf) continue;
        const double ln = static_cast<double>(left_n);
        const double rn = static_cast<double>(right_n);
        const double wg =
            (ln * gini(left_pos, ln) + rn * gini(total_pos - left_pos, rn)) / n;
        if (!best || wg < best->weighted_gini - 1e-12) {
          best = Split{wg, f, 0.5 * (v + next)};
        }
      }
    }
    return best;
  }

  const kernels::Matrix& x_;
  std::span<const double> y_;
  TreeOptions options_;
  FeatureSampler sampler_;
};

void check_shape(const kernels::Matrix& x, std::span<const double> y) {
  if (x.rows() != y.size()) {
    throw Error(ErrorCode::LengthMismatch, "feature rows and targets differ in length");
  }
  if (x.rows() == 0) throw Error(ErrorCode::TooFewRows, "no training rows");
}

}  // namespace

void require_two_classes(std::span<const double> y) {
  std::size_t pos = 0, neg = 0;
  for (double v : y) {
    if (v == 1.0) {
      ++pos;
    } else if (v == 0.0) {
      ++neg;
    } else {
      throw Error(ErrorCode::DegenerateTarget, "classification targets must be 0 or 1");
    }
  }
  if (pos == 0 || neg == 0) {
    throw Error(ErrorCode::DegenerateTarget,
                "training labels are all " + std::string(pos == 0 ? "negative" : "positive") +
                    " (" + std::to_string(pos) + " positive vs " + std::to_string(neg) +
                    " negative at threshold 0.5); a classifier needs both classes");
  }
}

LinearModel fit_ols(const kernels::Matrix& x, std::span<const double> y) {
  check_shape(x, y);
  const auto sys = kernels::parallel::normal_equations(x, y);
  std::vector<double> solution = sys.rhs;
  if (!cholesky_solve(sys.gram, solution)) {
    kernels::Matrix ridged = sys.gram;
    for (std::size_t i = 0; i < ridged.rows(); ++i) ridged(i, i) += kRidgeFallback;
    solution = sys.rhs;
    if (!cholesky_solve(ridged, solution)) {
      // Only reachable with non-finite inputs.
      throw Error(ErrorCode::BadHyperparameter, "least-squares system is not solvable");
    }
  }
  LinearModel m;
  m.weights.assign(solution.begin(), solution.end() - 1);
  m.intercept = solution.back();
  return m;
}

LogisticModel fit_logistic(const kernels::Matrix& x, std::span<const double> y,
                           const LogisticOptions& options) {
  check_shape(x, y);
  require_two_classes(y);
  if (!(options.learning_rate > 0.0) || options.epochs < 0 || options.l2 < 0.0) {
    throw Error(ErrorCode::BadHyperparameter, "logistic options must be positive");
  }
  const std::size_t d = x.cols();
  std::vector<double> w(d, 0.0), grad(d), trial_w(d), trial_grad(d);
  double b = 0.0, grad_b = 0.0, trial_b = 0.0, trial_grad_b = 0.0;
  double lr = options.learning_rate;
  double loss = kernels::parallel::logistic_loss_grad(x, y, w, b, options.l2, grad, grad_b);

  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    bool accepted = false;
    while (lr > 1e-12) {
      for (std::size_t j = 0; j < d; ++j) trial_w[j] = w[j] - lr * grad[j];
      trial_b = b - lr * grad_b;
      const double trial_loss = kernels::parallel::logistic_loss_grad(
          x, y, trial_w, trial_b, options.l2, trial_grad, trial_grad_b);
      if (trial_loss <= loss) {
        w.swap(trial_w);
        grad.swap(trial_grad);
        b = trial_b;
        grad_b = trial_grad_b;
        loss = trial_loss;
        accepted = true;
        break;
      }
      lr *= 0.5;
    }
    if (!accepted) break;
  }
  return LogisticModel{std::move(w), b};
}

TreeModel fit_tree(const kernels::Matrix& x, std::span<const double> y,
                   const TreeOptions& options) {
  check_shape(x, y);
  require_two_classes(y);
  if (options.max_depth < 0) throw Error(ErrorCode::BadHyperparameter, "max_depth must be >= 0");
  std::vector<std::size_t> rows(x.rows());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return TreeBuilder(x, y, options, nullptr).build(std::move(rows));
}

ForestModel fit_forest(const kernels::Matrix& x, std::span<const double> y,
                       const ForestOptions& options, std::uint64_t seed) {
  check_shape(x, y);
  require_two_classes(y);
  if (options.n_trees == 0 || options.tree.max_depth < 0) {
    throw Error(ErrorCode::BadHyperparameter, "forest needs n_trees >= 1 and max_depth >= 0");
  }
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  const std::size_t k =
      options.max_features == 0
          ? static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(d))))
          : std::min(options.max_features, d);

  ForestModel forest;
  forest.trees.resize(options.n_trees);
  const auto trees = static_cast<std::ptrdiff_t>(options.n_trees);
#pragma omp parallel for schedule(dynamic) if (trees > 1)
  for (std::ptrdiff_t t = 0; t < trees; ++t) {
    core::Rng rng(core::splitmix64(seed ^ core::splitmix64(static_cast<std::uint64_t>(t) + 1)));
    std::vector<std::size_t> rows(n);
    if (options.bootstrap) {
      for (auto& r : rows) r = rng.below(n);
    } else {
      std::iota(rows.begin(), rows.end(), std::size_t{0});
    }
    FeatureSampler sampler = [&rng, d, k] { return rng.sample_without_replacement(d, k); };
    forest.trees[t] = TreeBuilder(x, y, options.tree, sampler).build(std::move(rows));
  }
  return forest;
}

std::vector<double> mlp_initial_params(kernels::MlpShape shape, std::uint64_t seed) {
  core::Rng rng(seed);
  std::vector<double> p(shape.parameter_count());
  for (auto& v : p) v = rng.uniform(-0.5, 0.5);
  return p;
}

MlpModel fit_mlp(const kernels::Matrix& x, std::span<const double> y, const MlpOptions& options,
                 std::uint64_t seed) {
  check_shape(x, y);
  require_two_classes(y);
  if (options.hidden == 0 || !(options.learning_rate > 0.0) || options.epochs < 0) {
    throw Error(ErrorCode::BadHyperparameter, "mlp needs hidden >= 1 and a positive learning rate");
  }
  const kernels::MlpShape shape{x.cols(), options.hidden};
  std::vector<double> params = mlp_initial_params(shape, seed);
  std::vector<double> grad(params.size());
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    kernels::parallel::mlp_loss_grad(x, y, shape, params, grad);
    for (std::size_t i = 0; i < params.size(); ++i) params[i] -= options.learning_rate * grad[i];
  }
  return MlpModel{shape, std::move(params)};
}

double predict_tree(const TreeModel& tree, std::span<const double> x) {
  if (tree.nodes.empty()) return 0.0;
  int i = 0;
  while (tree.nodes[i].feature >= 0) {
    const auto& node = tree.nodes[i];
    i = x[node.feature] <= node.threshold ? node.left : node.right;
  }
  return tree.nodes[i].value;
}

}  // namespace msb::sketch
