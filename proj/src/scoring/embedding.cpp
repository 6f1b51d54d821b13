#include "msb/scoring/embedding.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "msb/core/error.hpp"
#include "msb/core/json.hpp"
#include "msb/kernels/kernels.hpp"
#include "msb/scoring/http_endpoint.hpp"

namespace msb::scoring {
namespace {

std::vector<double> parse_vector(std::string_view s, const std::string& where) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    auto comma = s.find(',', pos);
    if (comma == std::string_view::npos) comma = s.size();
    std::string_view tok = s.substr(pos, comma - pos);
    while (!tok.empty() && (tok.front() == ' ' || tok.front() == '\t')) tok.remove_prefix(1);
    while (!tok.empty() && (tok.back() == ' ' || tok.back() == '\r')) tok.remove_suffix(1);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (tok.empty() || ec != std::errc{} || ptr != tok.data() + tok.size() || !std::isfinite(v)) {
      throw Error(ErrorCode::BadSidecar, where + ": '" + std::string(tok) + "' is not a number");
    }
    out.push_back(v);
    pos = comma + 1;
  }
  return out;
}

bool is_zero(std::span<const double> v) {
  for (double x : v) {
    if (x != 0.0) return false;
  }
  return true;
}

std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

}  // namespace

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::DimensionMismatch, "vectors have dimensions " +
                                                  std::to_string(a.size()) + " and " +
                                                  std::to_string(b.size()));
  }
  if (a.empty() || is_zero(a) || is_zero(b)) {
    throw Error(ErrorCode::ZeroVector, "cosine similarity of a zero vector is undefined");
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const double c = dot / (std::sqrt(na) * std::sqrt(nb));
  return std::clamp(c, -1.0, 1.0);
}

void EmbeddingTable::add(std::size_t row, std::span<const double> vector) {
  if (vector.size() != dim_) {
    throw Error(ErrorCode::DimensionMismatch,
                "row " + std::to_string(row) + " has " + std::to_string(vector.size()) +
                    " components, expected " + std::to_string(dim_),
                {}, static_cast<long long>(row));
  }
  if (is_zero(vector)) {
    throw Error(ErrorCode::ZeroVector, "row " + std::to_string(row) + " has a zero embedding", {},
                static_cast<long long>(row));
  }
  if (slot_.count(row)) {
    throw Error(ErrorCode::BadSidecar, "row " + std::to_string(row) + " appears twice", {},
                static_cast<long long>(row));
  }
  kernels::Matrix grown(vectors_.rows() + 1, dim_);
  for (std::size_t r = 0; r < vectors_.rows(); ++r) {
    for (std::size_t c = 0; c < dim_; ++c) grown(r, c) = vectors_(r, c);
  }
  for (std::size_t c = 0; c < dim_; ++c) grown(vectors_.rows(), c) = vector[c];
  slot_[row] = vectors_.rows();
  vectors_ = std::move(grown);
}

std::optional<std::size_t> EmbeddingTable::slot(std::size_t row) const {
  auto it = slot_.find(row);
  if (it == slot_.end()) return std::nullopt;
  return it->second;
}

EmbeddingTable read_sidecar(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::BadSidecar, "sidecar is empty");
  line = strip_cr(line);
  if (line.rfind("dim=", 0) != 0) {
    throw Error(ErrorCode::BadSidecar, "sidecar must start with 'dim=<N>'");
  }
  std::size_t dim = 0;
  {
    const std::string_view v = std::string_view(line).substr(4);
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), dim);
    if (ec != std::errc{} || ptr != v.data() + v.size() || dim == 0) {
      throw Error(ErrorCode::BadSidecar, "bad sidecar dimension '" + line + "'");
    }
  }

  EmbeddingTable table(dim);
  std::vector<std::vector<double>> rows;
  std::vector<std::size_t> indices;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    const std::string where = "sidecar line " + std::to_string(line_no);
    if (tab == std::string::npos) throw Error(ErrorCode::BadSidecar, where + ": missing tab");
    std::size_t row = 0;
    auto [ptr, ec] = std::from_chars(line.data(), line.data() + tab, row);
    if (ec != std::errc{} || ptr != line.data() + tab) {
      throw Error(ErrorCode::BadSidecar, where + ": bad row index");
    }
    auto vec = parse_vector(std::string_view(line).substr(tab + 1), where);
    if (vec.size() != dim) {
      throw Error(ErrorCode::DimensionMismatch,
                  where + ": " + std::to_string(vec.size()) + " components, expected " +
                      std::to_string(dim),
                  {}, static_cast<long long>(row));
    }
    if (is_zero(vec)) {
      throw Error(ErrorCode::ZeroVector, where + ": zero vector for row " + std::to_string(row), {},
                  static_cast<long long>(row));
    }
    if (table.slot_.count(row)) {
      throw Error(ErrorCode::BadSidecar, where + ": row " + std::to_string(row) + " repeated");
    }
    table.slot_[row] = rows.size();
    rows.push_back(std::move(vec));
  }
  table.vectors_ = kernels::Matrix::from_rows(rows);
  if (rows.empty()) table.vectors_ = kernels::Matrix(0, dim);
  return table;
}

EmbeddingTable load_sidecar(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open sidecar '" + path + "'", "sidecars");
  return read_sidecar(in);
}

std::map<std::string, std::vector<double>> read_term_file(std::istream& in) {
  std::map<std::string, std::vector<double>> out;
  std::string line;
  std::size_t line_no = 0;
  std::size_t dim = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    const std::string where = "term file line " + std::to_string(line_no);
    if (tab == std::string::npos || tab == 0) {
      throw Error(ErrorCode::BadSidecar, where + ": expected '<term>\\t<vector>'");
    }
    auto vec = parse_vector(std::string_view(line).substr(tab + 1), where);
    if (dim == 0) dim = vec.size();
    if (vec.size() != dim) {
      throw Error(ErrorCode::DimensionMismatch, where + ": inconsistent dimension");
    }
    if (is_zero(vec)) throw Error(ErrorCode::ZeroVector, where + ": zero vector");
    out[line.substr(0, tab)] = std::move(vec);
  }
  return out;
}

std::map<std::string, std::vector<double>> load_term_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open term file '" + path + "'", "term_file");
  return read_term_file(in);
}

HttpTermEmbedder::HttpTermEmbedder(std::string url, std::string api_key, EmbeddingConfig config)
    : url_(std::move(url)), api_key_(std::move(api_key)), config_(std::move(config)) {}

std::vector<double> HttpTermEmbedder::embed(const std::string& term) {
  Json req{{"input", term}};
  if (!config_.model.empty()) req["model"] = config_.model;
  HeaderList headers;
  if (!api_key_.empty()) headers.emplace_back("Authorization", "Bearer " + api_key_);
  const HttpResult res = post_json(url_, req.dump(), headers, config_.timeout);
  if (res.status < 200 || res.status >= 300) {
    throw Error(ErrorCode::EndpointError,
                "embedding endpoint returned HTTP " + std::to_string(res.status), "endpoint_url",
                res.status);
  }
  try {
    const Json body = Json::parse(res.body);
    const Json& vec = body.contains("embedding") ? body.at("embedding")
                                                 : body.at("data").at(0).at("embedding");
    return vec.get<std::vector<double>>();
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::EndpointError,
                std::string("embedding endpoint returned an unreadable body: ") + e.what(),
                "endpoint_url", res.status);
  }
}

EmbeddingScorer::EmbeddingScorer(EmbeddingConfig config, std::shared_ptr<TermEmbedder> embedder)
    : config_(std::move(config)), embedder_(std::move(embedder)) {
  if (!config_.term_file.empty()) terms_ = load_term_file(config_.term_file);
}

std::shared_ptr<const EmbeddingTable> EmbeddingScorer::table_for(const std::string& dataset) {
  std::lock_guard lock(mu_);
  if (auto it = tables_.find(dataset); it != tables_.end()) return it->second;
  auto path = config_.sidecars.find(dataset);
  if (path == config_.sidecars.end()) {
    throw Error(ErrorCode::MissingRowEmbedding,
                "no embedding sidecar configured for dataset '" + dataset + "'", "sidecars");
  }
  auto table = std::make_shared<const EmbeddingTable>(load_sidecar(path->second));
  tables_[dataset] = table;
  return table;
}

std::vector<double> EmbeddingScorer::term_vector(const std::string& term) {
  {
    std::lock_guard lock(mu_);
    if (auto it = terms_.find(term); it != terms_.end()) return it->second;
  }
  if (!embedder_) {
    throw Error(ErrorCode::TermEmbeddingUnavailable,
                "no embedding for term '" + term + "' in the term file and no endpoint configured",
                "term");
  }
  auto vec = embedder_->embed(term);
  if (vec.empty()) {
    throw Error(ErrorCode::TermEmbeddingUnavailable, "endpoint returned no vector for '" + term + "'",
                "term");
  }
  std::lock_guard lock(mu_);
  terms_[term] = vec;
  return vec;
}

ScoreBatch EmbeddingScorer::score(const ScoreRequest& request) {
  if (request.term.empty()) throw Error(ErrorCode::EmptyTerm, "concept term is empty", "term");
  ScoreBatch out;
  if (request.rows.empty()) return out;
  const auto table = table_for(request.dataset);
  std::vector<std::size_t> slots;
  slots.reserve(request.rows.size());
  for (std::size_t row : request.rows) {
    auto s = table->slot(row);
    if (!s) {
      throw Error(ErrorCode::MissingRowEmbedding,
                  "sidecar for dataset '" + request.dataset + "' has no vector for row " +
                      std::to_string(row),
                  "sidecars", static_cast<long long>(row));
    }
    slots.push_back(*s);
  }
  const auto term = term_vector(request.term);
  if (term.size() != table->dim()) {
    throw Error(ErrorCode::DimensionMismatch,
                "term vector has " + std::to_string(term.size()) + " components, sidecar has " +
                    std::to_string(table->dim()),
                "term");
  }
  if (is_zero(term)) throw Error(ErrorCode::ZeroVector, "term vector is zero", "term");
  out.scores.resize(slots.size());
  kernels::parallel::cosine_scores(table->vectors(), slots, term, out.scores);
  for (auto& s : out.scores) s = std::clamp(s, -1.0, 1.0);
  return out;
}

std::shared_ptr<EmbeddingScorer> make_embedding_scorer(const EmbeddingConfig& config) {
  std::shared_ptr<TermEmbedder> embedder;
  std::string url = config.endpoint_url;
  if (url.empty() && !config.url_env.empty()) url = env_or_empty(config.url_env.c_str());
  if (!url.empty()) {
    const std::string key =
        config.credentials_env.empty() ? std::string() : env_or_empty(config.credentials_env.c_str());
    embedder = std::make_shared<HttpTermEmbedder>(url, key, config);
  }
  return std::make_shared<EmbeddingScorer>(config, std::move(embedder));
}

}  // namespace msb::scoring
