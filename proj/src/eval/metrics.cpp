#include "msb/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "msb/core/error.hpp"

namespace msb::eval {
namespace {

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

void check_unit(std::span<const double> v, const char* field) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!(v[i] >= 0.0 && v[i] <= 1.0)) {
      throw Error(ErrorCode::ValueOutOfRange,
                  std::string(field) + "[" + std::to_string(i) + "] = " + std::to_string(v[i]) +
                      " is outside [0, 1]",
                  field, i);
    }
  }
}

}  // namespace

MetricsReport compute_metrics(std::span<const double> predictions,
                              std::span<const double> ground_truth, double threshold) {
  if (predictions.empty()) throw Error(ErrorCode::EmptyInput, "no predictions to evaluate", "predictions");
  if (predictions.size() != ground_truth.size()) {
    throw Error(ErrorCode::LengthMismatch,
                std::to_string(predictions.size()) + " predictions for " +
                    std::to_string(ground_truth.size()) + " labels",
                "ground_truth");
  }
  check_unit(predictions, "predictions");
  check_unit(ground_truth, "ground_truth");

  MetricsReport m;
  m.n_rows = predictions.size();
  m.threshold = threshold;
  double abs_sum = 0.0;
  bool any_pos = false, any_neg = false;
  std::vector<double> labels(m.n_rows);
  for (std::size_t i = 0; i < m.n_rows; ++i) {
    abs_sum += std::abs(predictions[i] - ground_truth[i]);
    const bool p = predictions[i] >= threshold;
    const bool t = ground_truth[i] >= threshold;
    labels[i] = t ? 1.0 : 0.0;
    (t ? any_pos : any_neg) = true;
    if (p && t) ++m.confusion.tp;
    else if (p) ++m.confusion.fp;
    else if (t) ++m.confusion.fn;
    else ++m.confusion.tn;
  }
  const auto& c = m.confusion;
  m.mae = abs_sum / static_cast<double>(m.n_rows);
  m.accuracy = ratio(c.tp + c.tn, m.n_rows);
  m.precision = ratio(c.tp, c.tp + c.fp);
  m.recall = ratio(c.tp, c.tp + c.fn);
  m.f1 = ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn);
  if (any_pos && any_neg) m.auroc = auroc(predictions, labels);
  return m;
}

double auroc(std::span<const double> scores, std::span<const double> labels) {
  if (scores.size() != labels.size()) {
    throw Error(ErrorCode::LengthMismatch, "scores and labels differ in length", "labels");
  }
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  double pos_rank_sum = 0.0;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);  // average of ranks i+1..j
    for (std::size_t k = i; k < j; ++k) {
      const double y = labels[order[k]];
      if (y != 0.0 && y != 1.0) {
        throw Error(ErrorCode::ValueOutOfRange, "auroc labels must be 0 or 1", "labels", order[k]);
      }
      if (y == 1.0) {
        pos_rank_sum += midrank;
        ++n_pos;
      }
    }
    i = j;
  }
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) {
    throw Error(ErrorCode::SingleClass,
                n_pos == 0 ? "no positive labels; auroc is undefined"
                           : "no negative labels; auroc is undefined",
                "labels");
  }
  const double np = static_cast<double>(n_pos);
  return (pos_rank_sum - np * (np + 1.0) / 2.0) / (np * static_cast<double>(n_neg));
}

Json to_json(const MetricsReport& m) {
  Json j{{"mae", m.mae},
         {"accuracy", m.accuracy},
         {"f1", m.f1},
         {"precision", m.precision},
         {"recall", m.recall},
         {"auroc", m.auroc ? Json(*m.auroc) : Json(nullptr)},
         {"n_rows", m.n_rows},
         {"threshold", m.threshold},
         {"confusion",
          {{"tp", m.confusion.tp}, {"fp", m.confusion.fp}, {"fn", m.confusion.fn}, {"tn", m.confusion.tn}}}};
  return j;
}

}  // namespace msb::eval
