// Serial reference vs OpenMP kernels. Run with OMP_NUM_THREADS to vary the pool.

#include <benchmark/benchmark.h>

#include <numeric>

#include "msb/core/random.hpp"
#include "msb/kernels/kernels.hpp"
#include "msb/sketch/aggregators.hpp"

using namespace msb;
using kernels::Matrix;

namespace {

struct Data {
  Matrix x;
  std::vector<double> y;
};

Data make_data(std::size_t n, std::size_t d) {
  core::Rng rng(17);
  Data data{Matrix(n, d), std::vector<double>(n)};
  for (std::size_t r = 0; r < n; ++r) {
    double s = 0;
    for (std::size_t c = 0; c < d; ++c) s += (data.x(r, c) = rng.uniform(-1, 1));
    data.y[r] = s > 0 ? 1.0 : 0.0;
  }
  return data;
}

template <bool Parallel>
void BM_NormalEquations(benchmark::State& state) {
  const auto data = make_data(state.range(0), 8);
  for (auto _ : state) {
    auto sys = Parallel ? kernels::parallel::normal_equations(data.x, data.y)
                        : kernels::serial::normal_equations(data.x, data.y);
    benchmark::DoNotOptimize(sys.rhs.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <bool Parallel>
void BM_LogisticGrad(benchmark::State& state) {
  const auto data = make_data(state.range(0), 8);
  std::vector<double> w(8, 0.1), g(8);
  double gb = 0;
  for (auto _ : state) {
    const double loss = Parallel ? kernels::parallel::logistic_loss_grad(data.x, data.y, w, 0.0, 0.0, g, gb)
                                 : kernels::serial::logistic_loss_grad(data.x, data.y, w, 0.0, 0.0, g, gb);
    benchmark::DoNotOptimize(loss);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <bool Parallel>
void BM_MlpGrad(benchmark::State& state) {
  const auto data = make_data(state.range(0), 8);
  const kernels::MlpShape shape{8, 16};
  const auto params = sketch::mlp_initial_params(shape, 3);
  std::vector<double> grad(params.size());
  for (auto _ : state) {
    const double loss = Parallel ? kernels::parallel::mlp_loss_grad(data.x, data.y, shape, params, grad)
                                 : kernels::serial::mlp_loss_grad(data.x, data.y, shape, params, grad);
    benchmark::DoNotOptimize(loss);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <bool Parallel>
void BM_Cosine(benchmark::State& state) {
  const auto data = make_data(state.range(0), 512);
  std::vector<std::size_t> rows(state.range(0));
  std::iota(rows.begin(), rows.end(), 0);
  std::vector<double> query(512, 0.5), out(rows.size());
  for (auto _ : state) {
    if (Parallel) kernels::parallel::cosine_scores(data.x, rows, query, out);
    else kernels::serial::cosine_scores(data.x, rows, query, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_NormalEquations<false>)->Name("normal_equations/serial")->Range(256, 1 << 16);
BENCHMARK(BM_NormalEquations<true>)->Name("normal_equations/parallel")->Range(256, 1 << 16);
BENCHMARK(BM_LogisticGrad<false>)->Name("logistic_grad/serial")->Range(256, 1 << 16);
BENCHMARK(BM_LogisticGrad<true>)->Name("logistic_grad/parallel")->Range(256, 1 << 16);
BENCHMARK(BM_MlpGrad<false>)->Name("mlp_grad/serial")->Range(256, 1 << 14);
BENCHMARK(BM_MlpGrad<true>)->Name("mlp_grad/parallel")->Range(256, 1 << 14);
BENCHMARK(BM_Cosine<false>)->Name("cosine/serial")->Range(256, 1 << 13);
BENCHMARK(BM_Cosine<true>)->Name("cosine/parallel")->Range(256, 1 << 13);

BENCHMARK_MAIN();
