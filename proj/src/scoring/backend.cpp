#include "msb/scoring/backend.hpp"

#include <cctype>

#include "msb/core/error.hpp"
#include "msb/scoring/embedding.hpp"
#include "msb/scoring/lexicon.hpp"
#include "msb/scoring/prompt.hpp"

namespace msb::scoring {

std::string_view to_string(BackendKind kind) {
  switch (kind) {
    case BackendKind::Prompt: return "prompt";
    case BackendKind::Embedding: return "embedding";
    case BackendKind::Lexicon: return "lexicon";
  }
  return "lexicon";
}

std::optional<BackendKind> backend_kind_from_string(std::string_view name) {
  std::string s;
  for (char c : name) s.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (s == "prompt") return BackendKind::Prompt;
  if (s == "embedding") return BackendKind::Embedding;
  if (s == "lexicon") return BackendKind::Lexicon;
  return std::nullopt;
}

bool accepts(BackendKind backend, core::InputKind field) {
  switch (backend) {
    case BackendKind::Prompt:
    case BackendKind::Lexicon: return field == core::InputKind::Text;
    case BackendKind::Embedding: return field == core::InputKind::Image;
  }
  return false;
}

bool emits_binary(BackendKind kind) { return kind != BackendKind::Embedding; }

Json to_json(const BackendConfig& c) {
  Json j{{"id", c.id}, {"kind", to_string(c.kind)}};
  switch (c.kind) {
    case BackendKind::Prompt: {
      const auto& p = c.prompt;
      j["endpoint_url"] = p.endpoint_url;
      j["url_env"] = p.url_env;
      j["credentials_env"] = p.credentials_env;
      j["adapter"] = p.adapter;
      j["model"] = p.model;
      j["batch_size"] = p.batch_size;
      j["max_in_flight"] = p.max_in_flight;
      j["max_retries"] = p.retry.max_retries;
      j["initial_backoff_ms"] = p.retry.initial_backoff.count();
      j["timeout_ms"] = p.timeout.count();
      break;
    }
    case BackendKind::Embedding: {
      const auto& e = c.embedding;
      Json sidecars = Json::object();
      for (const auto& [k, v] : e.sidecars) sidecars[k] = v;
      j["sidecars"] = sidecars;
      j["term_file"] = e.term_file;
      j["endpoint_url"] = e.endpoint_url;
      j["url_env"] = e.url_env;
      j["credentials_env"] = e.credentials_env;
      j["model"] = e.model;
      j["timeout_ms"] = e.timeout.count();
      break;
    }
    case BackendKind::Lexicon: {
      Json table = Json::object();
      for (const auto& [k, v] : c.lexicon.table) table[k] = v;
      j["table"] = table;
      j["table_file"] = c.lexicon.table_file;
      break;
    }
  }
  return j;
}

BackendConfig backend_config_from_json(const Json& j) {
  BackendConfig c;
  try {
    c.id = j.at("id").get<std::string>();
    const auto kind = backend_kind_from_string(j.at("kind").get<std::string>());
    if (!kind) {
      throw Error(ErrorCode::BadConfig, "unknown backend kind '" + j.at("kind").dump() + "'",
                  "kind");
    }
    c.kind = *kind;
    switch (c.kind) {
      case BackendKind::Prompt: {
        auto& p = c.prompt;
        p.endpoint_url = j.value("endpoint_url", p.endpoint_url);
        p.url_env = j.value("url_env", p.url_env);
        p.credentials_env = j.value("credentials_env", p.credentials_env);
        p.adapter = j.value("adapter", p.adapter);
        p.model = j.value("model", p.model);
        p.batch_size = j.value("batch_size", p.batch_size);
        p.max_in_flight = j.value("max_in_flight", p.max_in_flight);
        p.retry.max_retries = j.value("max_retries", p.retry.max_retries);
        p.retry.initial_backoff =
            std::chrono::milliseconds(j.value("initial_backoff_ms", p.retry.initial_backoff.count()));
        p.timeout = std::chrono::milliseconds(j.value("timeout_ms", p.timeout.count()));
        if (p.batch_size == 0) throw Error(ErrorCode::BadConfig, "batch_size must be positive", "batch_size");
        if (p.retry.max_retries < 0) throw Error(ErrorCode::BadConfig, "max_retries must be >= 0", "max_retries");
        if (p.adapter != "completion" && p.adapter != "chat") {
          throw Error(ErrorCode::BadConfig, "unknown prompt adapter '" + p.adapter + "'", "adapter");
        }
        break;
      }
      case BackendKind::Embedding: {
        auto& e = c.embedding;
        if (j.contains("sidecars")) {
          for (const auto& [k, v] : j.at("sidecars").items()) e.sidecars[k] = v.get<std::string>();
        }
        e.term_file = j.value("term_file", e.term_file);
        e.endpoint_url = j.value("endpoint_url", e.endpoint_url);
        e.url_env = j.value("url_env", e.url_env);
        e.credentials_env = j.value("credentials_env", e.credentials_env);
        e.model = j.value("model", e.model);
        e.timeout = std::chrono::milliseconds(j.value("timeout_ms", e.timeout.count()));
        break;
      }
      case BackendKind::Lexicon: {
        if (j.contains("table")) {
          for (const auto& [k, v] : j.at("table").items()) {
            c.lexicon.table[k] = v.get<std::vector<std::string>>();
          }
        }
        c.lexicon.table_file = j.value("table_file", c.lexicon.table_file);
        break;
      }
    }
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::BadConfig, std::string("malformed backend configuration: ") + e.what(),
                "backends");
  }
  if (c.id.empty()) throw Error(ErrorCode::BadConfig, "backend id must be non-empty", "id");
  return c;
}

std::shared_ptr<ScorerBackend> make_backend(const BackendConfig& config) {
  switch (config.kind) {
    case BackendKind::Prompt: return make_prompt_scorer(config.prompt);
    case BackendKind::Embedding: return make_embedding_scorer(config.embedding);
    case BackendKind::Lexicon: return std::make_shared<LexiconScorer>(config.lexicon);
  }
  throw Error(ErrorCode::UnknownBackend, "unsupported backend kind");
}

ScorerRegistry::ScorerRegistry(Factory factory) : factory_(std::move(factory)) {}

std::shared_ptr<ScorerBackend> ScorerRegistry::get(const BackendConfig& config) {
  std::lock_guard lock(mu_);
  if (auto it = pinned_.find(config.id); it != pinned_.end()) return it->second;
  const std::string fingerprint = to_json(config).dump();
  auto it = instances_.find(config.id);
  if (it != instances_.end() && it->second.fingerprint == fingerprint) return it->second.backend;
  auto backend = factory_(config);
  instances_[config.id] = Entry{fingerprint, backend};
  return backend;
}

void ScorerRegistry::install(const std::string& id, std::shared_ptr<ScorerBackend> backend) {
  std::lock_guard lock(mu_);
  pinned_[id] = std::move(backend);
}

}  // namespace msb::scoring
