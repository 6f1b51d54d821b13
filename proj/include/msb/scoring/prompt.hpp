#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <semaphore>
#include <string>
#include <string_view>
#include <vector>

#include "msb/scoring/backend.hpp"

namespace msb::scoring {

// Batched binary-classification prompt:
//
//   Decide whether these comments are "<term>" or "not <term>".
//   1. <text>
//   ...
//
//   Comment results:
//
// Newlines inside a text are replaced by spaces.
std::string build_prompt(std::string_view term, const std::vector<std::string>& texts);

struct ParsedLabels {
  std::vector<double> scores;
  std::size_t warnings = 0;
};

// Total parser for completions of build_prompt. For each i in 1..n the first
// line starting with "i." decides the label: the term gives 1.0, "not <term>"
// gives 0.0 (case and whitespace folded). Anything else is 0.0 plus a warning.
ParsedLabels parse_labels(std::string_view response, std::string_view term, std::size_t n);

// "Prompt in, completion text out". Throws EndpointUnreachable or
// EndpointError (detail = HTTP status) on failure.
class CompletionClient {
 public:
  virtual ~CompletionClient() = default;
  virtual std::string complete(const std::string& prompt) = 0;
};

// Talks to an HTTP completion endpoint. The "completion" adapter sends
// {"prompt", "max_tokens", "temperature"} and reads "completion" or
// choices[0].text; the "chat" adapter sends a one-message "messages" array
// and reads choices[0].message.content.
class HttpCompletionClient final : public CompletionClient {
 public:
  HttpCompletionClient(std::string url, std::string api_key, const PromptConfig& config);
  std::string complete(const std::string& prompt) override;

 private:
  std::string url_;
  std::string api_key_;
  PromptConfig config_;
};

// Runs `attempt` with the retry policy: transport failures, HTTP 429 and 5xx
// are retried with exponential backoff. Exhaustion raises RetriesExhausted,
// or EndpointUnreachable when no attempt reached the endpoint.
std::string with_retries(const RetryPolicy& policy, const std::function<std::string()>& attempt);

class PromptScorer final : public ScorerBackend {
 public:
  PromptScorer(PromptConfig config, std::shared_ptr<CompletionClient> client);

  BackendKind kind() const override { return BackendKind::Prompt; }
  ScoreBatch score(const ScoreRequest& request) override;

 private:
  PromptConfig config_;
  std::shared_ptr<CompletionClient> client_;
  std::counting_semaphore<> in_flight_;
};

// Resolves URL and key from the configuration and environment. Throws
// MissingCredentials naming the environment variable that is not set.
std::shared_ptr<PromptScorer> make_prompt_scorer(const PromptConfig& config);

}  // namespace msb::scoring
