#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "msb/concepts/concept.hpp"
#include "msb/core/json.hpp"
#include "msb/core/random.hpp"
#include "msb/core/schema.hpp"
#include "msb/eval/metrics.hpp"
#include "msb/scoring/backend.hpp"
#include "msb/sketch/model.hpp"

namespace msb::eval {

struct BenchConcepts {
  std::string field;
  std::string backend;
  std::vector<std::string> terms;
  std::vector<concepts::Transform> transforms;
};

// "<metric><op><value>", op one of < <= > >=.
struct Gate {
  std::string metric;
  std::string op;
  double value = 0.0;

  bool passes(double observed) const;
};

Gate parse_gate(const std::string& text);

struct BenchConfig {
  std::string name;
  std::filesystem::path train_csv;
  std::filesystem::path eval_csv;
  core::Schema schema;
  double label_max = 1.0;  // labels in the CSVs run 0..label_max
  std::vector<scoring::BackendConfig> backends;
  std::vector<BenchConcepts> concepts;
  sketch::AggregatorKind kind = sketch::AggregatorKind::LinearRegression;
  sketch::TrainOptions options;
  std::string metric = "mae";
  std::uint64_t seed = 42;
  std::size_t train_limit = 500;
  std::size_t eval_limit = 100;
  std::optional<Gate> gate;
  Json reference;  // documented figures, never compared against
};

// Relative paths (CSV files, lexicon tables) resolve against base_dir.
// Throws BadConfig.
BenchConfig bench_config_from_json(const Json& j, const std::filesystem::path& base_dir);
BenchConfig load_bench_config(const std::filesystem::path& path);

struct BenchReport {
  std::string name;
  std::string metric;
  double value = 0.0;  // headline metric; MAE on the original label scale
  MetricsReport metrics;
  std::size_t n_train = 0;
  std::size_t n_eval = 0;
  std::optional<bool> gate_passed;
  std::optional<Gate> gate;
  std::vector<double> weights;  // linear kinds only
  std::optional<double> intercept;
  Json reference;
};

// Samples up to train_limit rows, trains the sketch, and evaluates on up to
// eval_limit labeled rows drawn to preserve the label distribution.
BenchReport run_bench(const BenchConfig& config, scoring::ScorerRegistry& scorers);

Json to_json(const BenchReport& r);

// Per distinct label value, a quota proportional to its share (largest
// remainder), filled by seeded sampling. Result ascending.
std::vector<std::size_t> stratified_sample(const std::vector<double>& labels, std::size_t limit,
                                           core::Rng& rng);

}  // namespace msb::eval
