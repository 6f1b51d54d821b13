#pragma once

#include <chrono>
#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "msb/core/json.hpp"
#include "msb/core/schema.hpp"

namespace msb::scoring {

enum class BackendKind { Prompt, Embedding, Lexicon };

std::string_view to_string(BackendKind kind);
std::optional<BackendKind> backend_kind_from_string(std::string_view name);

// True when a backend of this kind can score fields of that kind.
bool accepts(BackendKind backend, core::InputKind field);
// Prompt and lexicon scorers emit {0, 1}; embedding scorers emit raw cosines.
bool emits_binary(BackendKind kind);

struct RetryPolicy {
  int max_retries = 2;
  std::chrono::milliseconds initial_backoff{500};
};

struct PromptConfig {
  std::string endpoint_url;  // empty: taken from MSB_COMPLETIONS_URL
  std::string url_env = "MSB_COMPLETIONS_URL";
  std::string credentials_env = "MSB_COMPLETIONS_KEY";  // empty: no Authorization header
  std::string adapter = "completion";                   // "completion" | "chat"
  std::string model;
  std::size_t batch_size = 20;
  std::size_t max_in_flight = 4;
  RetryPolicy retry;
  std::chrono::milliseconds timeout{60000};
};

struct EmbeddingConfig {
  std::map<std::string, std::string> sidecars;  // dataset name -> sidecar path
  std::string term_file;
  std::string endpoint_url;  // empty: taken from MSB_EMBEDDINGS_URL when set
  std::string url_env = "MSB_EMBEDDINGS_URL";
  std::string credentials_env = "MSB_EMBEDDINGS_KEY";
  std::string model;
  std::chrono::milliseconds timeout{30000};
};

struct LexiconConfig {
  std::map<std::string, std::vector<std::string>> table;  // term -> keywords
  std::string table_file;
};

struct BackendConfig {
  std::string id;
  BackendKind kind = BackendKind::Lexicon;
  PromptConfig prompt;
  EmbeddingConfig embedding;
  LexiconConfig lexicon;
};

Json to_json(const BackendConfig& config);
BackendConfig backend_config_from_json(const Json& j);

// One scoring call. Text scorers read `texts`; the embedding scorer reads
// `rows` of `dataset`. Both are populated by the concept engine.
struct ScoreRequest {
  std::string term;
  std::string dataset;
  std::vector<std::size_t> rows;
  std::vector<std::string> texts;
};

struct ScoreBatch {
  std::vector<double> scores;  // one per input, input order
  std::size_t warnings = 0;
};

// A zero-shot scorer. Implementations are safe for concurrent score() calls.
class ScorerBackend {
 public:
  virtual ~ScorerBackend() = default;
  virtual BackendKind kind() const = 0;
  virtual ScoreBatch score(const ScoreRequest& request) = 0;
};

// Builds the concrete scorer for a configuration.
std::shared_ptr<ScorerBackend> make_backend(const BackendConfig& config);

// Runtime instances for backend configurations, created on first use and
// reused while the configuration is unchanged.
class ScorerRegistry {
 public:
  using Factory = std::function<std::shared_ptr<ScorerBackend>(const BackendConfig&)>;

  explicit ScorerRegistry(Factory factory = make_backend);

  std::shared_ptr<ScorerBackend> get(const BackendConfig& config);
  // Pins an instance for a backend id regardless of its configuration.
  void install(const std::string& id, std::shared_ptr<ScorerBackend> backend);

 private:
  struct Entry {
    std::string fingerprint;
    std::shared_ptr<ScorerBackend> backend;
  };
  Factory factory_;
  std::mutex mu_;
  std::map<std::string, Entry> instances_;
  std::map<std::string, std::shared_ptr<ScorerBackend>> pinned_;
};

}  // namespace msb::scoring
