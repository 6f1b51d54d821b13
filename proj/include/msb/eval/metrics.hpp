#pragma once

#include <cstddef>
#include <optional>
#include <span>

#include "msb/core/json.hpp"

namespace msb::eval {

struct Confusion {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
};

struct MetricsReport {
  double mae = 0.0;
  double accuracy = 0.0;
  double f1 = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  std::optional<double> auroc;  // absent when the labels hold a single class
  std::size_t n_rows = 0;
  double threshold = 0.5;
  Confusion confusion;
};

// Predictions and truth both label as x >= threshold. A metric whose
// denominator is zero reports 0.0. Throws EmptyInput, LengthMismatch or
// ValueOutOfRange.
MetricsReport compute_metrics(std::span<const double> predictions,
                              std::span<const double> ground_truth, double threshold = 0.5);

// Probability that a random positive outscores a random negative, ties 0.5,
// via midranks. Labels must be 0/1. Throws SingleClass.
double auroc(std::span<const double> scores, std::span<const double> labels);

Json to_json(const MetricsReport& m);

}  // namespace msb::eval
