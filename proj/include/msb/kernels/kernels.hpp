#pragma once

// Data-parallel inner loops. Every kernel has a plain serial reference in
// `serial` and an OpenMP version in `parallel` with the same signature; the
// engine calls `parallel`, tests check one against the other.
//
// The parallel reductions accumulate fixed blocks of kBlockRows rows and then
// add the block partials in block order, so their results do not depend on
// the number of threads.

#include <cstddef>
#include <span>
#include <vector>

#include "msb/kernels/matrix.hpp"

namespace msb::kernels {

inline constexpr std::size_t kBlockRows = 64;

// Augmented normal equations for least squares with an intercept. The
// intercept is the last unknown: gram is (d+1)x(d+1), rhs has d+1 entries.
struct NormalSystem {
  Matrix gram;
  std::vector<double> rhs;
};

// Parameter layout of the one-hidden-layer perceptron:
// [w1 (hidden x inputs, row-major) | b1 (hidden) | w2 (hidden) | b2].
struct MlpShape {
  std::size_t inputs = 0;
  std::size_t hidden = 0;

  std::size_t parameter_count() const noexcept { return hidden * inputs + 2 * hidden + 1; }
};

double sigmoid(double z);
// log(1 + exp(z)) without overflow.
double softplus(double z);

// Forward pass of the perceptron for one example.
double mlp_forward(MlpShape shape, std::span<const double> params, std::span<const double> x);

namespace serial {

// out[i] = cos(vectors.row(rows[i]), query).
void cosine_scores(const Matrix& vectors, std::span<const std::size_t> rows,
                   std::span<const double> query, std::span<double> out);

NormalSystem normal_equations(const Matrix& x, std::span<const double> y);

// Mean log-loss of sigmoid(x.w + b) plus (l2/2)|w|^2. Writes the gradient.
double logistic_loss_grad(const Matrix& x, std::span<const double> y, std::span<const double> w,
                          double b, double l2, std::span<double> grad_w, double& grad_b);

// Mean log-loss of the perceptron; grad has shape.parameter_count() entries.
double mlp_loss_grad(const Matrix& x, std::span<const double> y, MlpShape shape,
                     std::span<const double> params, std::span<double> grad);

}  // namespace serial

namespace parallel {

void cosine_scores(const Matrix& vectors, std::span<const std::size_t> rows,
                   std::span<const double> query, std::span<double> out);

NormalSystem normal_equations(const Matrix& x, std::span<const double> y);

double logistic_loss_grad(const Matrix& x, std::span<const double> y, std::span<const double> w,
                          double b, double l2, std::span<double> grad_w, double& grad_b);

double mlp_loss_grad(const Matrix& x, std::span<const double> y, MlpShape shape,
                     std::span<const double> params, std::span<double> grad);

}  // namespace parallel

}  // namespace msb::kernels
