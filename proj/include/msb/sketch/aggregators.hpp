#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "msb/kernels/matrix.hpp"
#include "msb/sketch/model.hpp"

namespace msb::sketch {

inline constexpr double kRidgeFallback = 1e-8;

// Least squares with intercept via the augmented normal equations, solved by
// Cholesky. A singular system is retried with kRidgeFallback on the diagonal.
LinearModel fit_ols(const kernels::Matrix& x, std::span<const double> y);

// Full-batch gradient descent on mean log-loss. A step that would raise the
// loss is retried with half the learning rate, so the loss never increases.
LogisticModel fit_logistic(const kernels::Matrix& x, std::span<const double> y,
                           const LogisticOptions& options = {});

// Greedy weighted-Gini tree. Candidate thresholds are midpoints between
// consecutive distinct values; ties go to the lower feature, then the lower
// threshold. Zero-gain splits are taken on impure nodes, so interactions such
// as XOR remain learnable; a split never raises the weighted Gini.
TreeModel fit_tree(const kernels::Matrix& x, std::span<const double> y,
                   const TreeOptions& options = {});

// Bagged trees, each grown from its own seed derived from `seed` and its index,
// so the forest does not depend on the thread count.
ForestModel fit_forest(const kernels::Matrix& x, std::span<const double> y,
                       const ForestOptions& options, std::uint64_t seed);

// One sigmoid hidden layer and a sigmoid output, full-batch gradient descent.
MlpModel fit_mlp(const kernels::Matrix& x, std::span<const double> y, const MlpOptions& options,
                 std::uint64_t seed);

// Initial perceptron parameters: uniform(-0.5, 0.5) from `seed`.
std::vector<double> mlp_initial_params(kernels::MlpShape shape, std::uint64_t seed);

double predict_tree(const TreeModel& tree, std::span<const double> x);

// Throws DegenerateTarget unless y holds both 0 and 1 (and nothing else).
void require_two_classes(std::span<const double> y);

}  // namespace msb::sketch
