#pragma once

#include <cstddef>
#include <istream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "msb/kernels/matrix.hpp"
#include "msb/scoring/backend.hpp"

namespace msb::scoring {

// dot(a, b) / (|a| |b|). Throws DimensionMismatch or ZeroVector.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

// Precomputed example vectors keyed by dataset row index.
//
// Sidecar text format:
//   dim=<N>
//   <row_index>\t<f1>,<f2>,...,<fN>
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  explicit EmbeddingTable(std::size_t dim) : dim_(dim), vectors_(0, dim) {}

  // Throws DimensionMismatch, ZeroVector or BadSidecar (duplicate row).
  void add(std::size_t row, std::span<const double> vector);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return slot_.size(); }
  std::optional<std::size_t> slot(std::size_t row) const;
  const kernels::Matrix& vectors() const noexcept { return vectors_; }

 private:
  std::size_t dim_ = 0;
  kernels::Matrix vectors_;
  std::map<std::size_t, std::size_t> slot_;

  friend EmbeddingTable read_sidecar(std::istream& in);
};

EmbeddingTable read_sidecar(std::istream& in);
EmbeddingTable load_sidecar(const std::string& path);

// Term file: one `<term>\t<f1>,...,<fN>` per line.
std::map<std::string, std::vector<double>> read_term_file(std::istream& in);
std::map<std::string, std::vector<double>> load_term_file(const std::string& path);

// Embeds a concept term through a remote endpoint: sends {"input": term}
// and reads "embedding" or data[0].embedding.
class TermEmbedder {
 public:
  virtual ~TermEmbedder() = default;
  virtual std::vector<double> embed(const std::string& term) = 0;
};

class HttpTermEmbedder final : public TermEmbedder {
 public:
  HttpTermEmbedder(std::string url, std::string api_key, EmbeddingConfig config);
  std::vector<double> embed(const std::string& term) override;

 private:
  std::string url_;
  std::string api_key_;
  EmbeddingConfig config_;
};

// Cosine similarity between sidecar example vectors and the term vector.
// Term vectors come from the term file first, then the endpoint.
class EmbeddingScorer final : public ScorerBackend {
 public:
  EmbeddingScorer(EmbeddingConfig config, std::shared_ptr<TermEmbedder> embedder);

  BackendKind kind() const override { return BackendKind::Embedding; }
  ScoreBatch score(const ScoreRequest& request) override;

  std::vector<double> term_vector(const std::string& term);

 private:
  std::shared_ptr<const EmbeddingTable> table_for(const std::string& dataset);

  EmbeddingConfig config_;
  std::shared_ptr<TermEmbedder> embedder_;
  std::mutex mu_;
  std::map<std::string, std::vector<double>> terms_;
  std::map<std::string, std::shared_ptr<const EmbeddingTable>> tables_;
};

std::shared_ptr<EmbeddingScorer> make_embedding_scorer(const EmbeddingConfig& config);

}  // namespace msb::scoring
