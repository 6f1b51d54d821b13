#include "msb/kernels/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace msb::kernels {
namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double cosine_row(std::span<const double> v, std::span<const double> query, double query_norm) {
  return dot(v, query) / (std::sqrt(dot(v, v)) * query_norm);
}

// Upper triangle of the augmented Gram matrix and the rhs, rows [begin, end).
void accumulate_normal(const Matrix& x, std::span<const double> y, std::size_t begin,
                       std::size_t end, std::span<double> gram, std::span<double> rhs) {
  const std::size_t d = x.cols();
  const std::size_t m = d + 1;
  for (std::size_t r = begin; r < end; ++r) {
    const auto row = x.row(r);
    for (std::size_t a = 0; a < m; ++a) {
      const double xa = a < d ? row[a] : 1.0;
      for (std::size_t b = a; b < m; ++b) {
        const double xb = b < d ? row[b] : 1.0;
        gram[a * m + b] += xa * xb;
      }
      rhs[a] += xa * y[r];
    }
  }
}

NormalSystem finish_normal(std::size_t d, std::span<const double> gram, std::span<const double> rhs) {
  const std::size_t m = d + 1;
  NormalSystem sys{Matrix(m, m), std::vector<double>(rhs.begin(), rhs.end())};
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = a; b < m; ++b) {
      sys.gram(a, b) = gram[a * m + b];
      sys.gram(b, a) = gram[a * m + b];
    }
  }
  return sys;
}

// Unnormalized (sum over rows) log-loss and gradient for rows [begin, end).
double accumulate_logistic(const Matrix& x, std::span<const double> y, std::span<const double> w,
                           double b, std::size_t begin, std::size_t end, std::span<double> grad_w,
                           double& grad_b) {
  double loss = 0.0;
  for (std::size_t r = begin; r < end; ++r) {
    const auto row = x.row(r);
    const double z = dot(row, w) + b;
    loss += softplus(z) - y[r] * z;
    const double residual = sigmoid(z) - y[r];
    for (std::size_t j = 0; j < w.size(); ++j) grad_w[j] += residual * row[j];
    grad_b += residual;
  }
  return loss;
}

double finish_logistic(std::size_t n, double loss_sum, std::span<const double> w, double l2,
                       std::span<double> grad_w, double& grad_b) {
  const double inv_n = 1.0 / static_cast<double>(n);
  double penalty = 0.0;
  for (std::size_t j = 0; j < w.size(); ++j) {
    grad_w[j] = grad_w[j] * inv_n + l2 * w[j];
    penalty += w[j] * w[j];
  }
  grad_b *= inv_n;
  return loss_sum * inv_n + 0.5 * l2 * penalty;
}

// Unnormalized perceptron loss and gradient for rows [begin, end). `hidden`
// is scratch space of shape.hidden entries.
double accumulate_mlp(const Matrix& x, std::span<const double> y, MlpShape shape,
                      std::span<const double> p, std::size_t begin, std::size_t end,
                      std::span<double> grad, std::span<double> hidden) {
  const std::size_t in = shape.inputs;
  const std::size_t h = shape.hidden;
  const std::size_t b1 = h * in;
  const std::size_t w2 = b1 + h;
  const std::size_t b2 = w2 + h;
  double loss = 0.0;
  for (std::size_t r = begin; r < end; ++r) {
    const auto row = x.row(r);
    double out = p[b2];
    for (std::size_t j = 0; j < h; ++j) {
      hidden[j] = sigmoid(dot(p.subspan(j * in, in), row) + p[b1 + j]);
      out += p[w2 + j] * hidden[j];
    }
    loss += softplus(out) - y[r] * out;
    const double delta = sigmoid(out) - y[r];
    grad[b2] += delta;
    for (std::size_t j = 0; j < h; ++j) {
      grad[w2 + j] += delta * hidden[j];
      const double dh = delta * p[w2 + j] * hidden[j] * (1.0 - hidden[j]);
      grad[b1 + j] += dh;
      for (std::size_t k = 0; k < in; ++k) grad[j * in + k] += dh * row[k];
    }
  }
  return loss;
}

std::size_t block_count(std::size_t n) { return (n + kBlockRows - 1) / kBlockRows; }

}  // namespace

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

double mlp_forward(MlpShape shape, std::span<const double> p, std::span<const double> x) {
  const std::size_t in = shape.inputs;
  const std::size_t h = shape.hidden;
  double out = p[h * in + 2 * h];
  for (std::size_t j = 0; j < h; ++j) {
    const double a = sigmoid(dot(p.subspan(j * in, in), x) + p[h * in + j]);
    out += p[h * in + h + j] * a;
  }
  return sigmoid(out);
}

namespace serial {

void cosine_scores(const Matrix& vectors, std::span<const std::size_t> rows,
                   std::span<const double> query, std::span<double> out) {
  const double qn = std::sqrt(dot(query, query));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out[i] = cosine_row(vectors.row(rows[i]), query, qn);
  }
}

NormalSystem normal_equations(const Matrix& x, std::span<const double> y) {
  const std::size_t m = x.cols() + 1;
  std::vector<double> gram(m * m, 0.0);
  std::vector<double> rhs(m, 0.0);
  accumulate_normal(x, y, 0, x.rows(), gram, rhs);
  return finish_normal(x.cols(), gram, rhs);
}

double logistic_loss_grad(const Matrix& x, std::span<const double> y, std::span<const double> w,
                          double b, double l2, std::span<double> grad_w, double& grad_b) {
  std::fill(grad_w.begin(), grad_w.end(), 0.0);
  grad_b = 0.0;
  const double loss = accumulate_logistic(x, y, w, b, 0, x.rows(), grad_w, grad_b);
  return finish_logistic(x.rows(), loss, w, l2, grad_w, grad_b);
}

double mlp_loss_grad(const Matrix& x, std::span<const double> y, MlpShape shape,
                     std::span<const double> params, std::span<double> grad) {
  std::fill(grad.begin(), grad.end(), 0.0);
  std::vector<double> hidden(shape.hidden);
  const double loss = accumulate_mlp(x, y, shape, params, 0, x.rows(), grad, hidden);
  const double inv_n = 1.0 / static_cast<double>(x.rows());
  for (auto& g : grad) g *= inv_n;
  return loss * inv_n;
}

}  // namespace serial

namespace parallel {

void cosine_scores(const Matrix& vectors, std::span<const std::size_t> rows,
                   std::span<const double> query, std::span<double> out) {
  const double qn = std::sqrt(dot(query, query));
  const auto n = static_cast<std::ptrdiff_t>(rows.size());
#pragma omp parallel for schedule(static) if (n > 256)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    out[i] = cosine_row(vectors.row(rows[i]), query, qn);
  }
}

NormalSystem normal_equations(const Matrix& x, std::span<const double> y) {
  const std::size_t m = x.cols() + 1;
  const std::size_t blocks = block_count(x.rows());
  std::vector<double> gram_parts(blocks * m * m, 0.0);
  std::vector<double> rhs_parts(blocks * m, 0.0);
  const auto nb = static_cast<std::ptrdiff_t>(blocks);
#pragma omp parallel for schedule(static) if (nb > 1)
  for (std::ptrdiff_t blk = 0; blk < nb; ++blk) {
    const std::size_t begin = static_cast<std::size_t>(blk) * kBlockRows;
    const std::size_t end = std::min(begin + kBlockRows, x.rows());
    accumulate_normal(x, y, begin, end, std::span(gram_parts).subspan(blk * m * m, m * m),
                      std::span(rhs_parts).subspan(blk * m, m));
  }
  std::vector<double> gram(m * m, 0.0);
  std::vector<double> rhs(m, 0.0);
  for (std::size_t blk = 0; blk < blocks; ++blk) {
    for (std::size_t i = 0; i < m * m; ++i) gram[i] += gram_parts[blk * m * m + i];
    for (std::size_t i = 0; i < m; ++i) rhs[i] += rhs_parts[blk * m + i];
  }
  return finish_normal(x.cols(), gram, rhs);
}

double logistic_loss_grad(const Matrix& x, std::span<const double> y, std::span<const double> w,
                          double b, double l2, std::span<double> grad_w, double& grad_b) {
  const std::size_t d = w.size();
  const std::size_t stride = d + 1;
  const std::size_t blocks = block_count(x.rows());
  std::vector<double> parts(blocks * stride, 0.0);
  std::vector<double> losses(blocks, 0.0);
  const auto nb = static_cast<std::ptrdiff_t>(blocks);
#pragma omp parallel for schedule(static) if (nb > 1)
  for (std::ptrdiff_t blk = 0; blk < nb; ++blk) {
    const std::size_t begin = static_cast<std::size_t>(blk) * kBlockRows;
    const std::size_t end = std::min(begin + kBlockRows, x.rows());
    auto part = std::span(parts).subspan(blk * stride, stride);
    losses[blk] = accumulate_logistic(x, y, w, b, begin, end, part.first(d), part[d]);
  }
  std::fill(grad_w.begin(), grad_w.end(), 0.0);
  grad_b = 0.0;
  double loss = 0.0;
  for (std::size_t blk = 0; blk < blocks; ++blk) {
    for (std::size_t j = 0; j < d; ++j) grad_w[j] += parts[blk * stride + j];
    grad_b += parts[blk * stride + d];
    loss += losses[blk];
  }
  return finish_logistic(x.rows(), loss, w, l2, grad_w, grad_b);
}

double mlp_loss_grad(const Matrix& x, std::span<const double> y, MlpShape shape,
                     std::span<const double> params, std::span<double> grad) {
  const std::size_t count = shape.parameter_count();
  const std::size_t blocks = block_count(x.rows());
  std::vector<double> parts(blocks * count, 0.0);
  std::vector<double> losses(blocks, 0.0);
  const auto nb = static_cast<std::ptrdiff_t>(blocks);
#pragma omp parallel for schedule(static) if (nb > 1)
  for (std::ptrdiff_t blk = 0; blk < nb; ++blk) {
    const std::size_t begin = static_cast<std::size_t>(blk) * kBlockRows;
    const std::size_t end = std::min(begin + kBlockRows, x.rows());
    std::vector<double> hidden(shape.hidden);
    losses[blk] = accumulate_mlp(x, y, shape, params, begin, end,
                                 std::span(parts).subspan(blk * count, count), hidden);
  }
  std::fill(grad.begin(), grad.end(), 0.0);
  double loss = 0.0;
  for (std::size_t blk = 0; blk < blocks; ++blk) {
    for (std::size_t i = 0; i < count; ++i) grad[i] += parts[blk * count + i];
    loss += losses[blk];
  }
  const double inv_n = 1.0 / static_cast<double>(x.rows());
  for (auto& g : grad) g *= inv_n;
  return loss * inv_n;
}

}  // namespace parallel

}  // namespace msb::kernels
