#include "msb/scoring/prompt.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

#include "msb/core/error.hpp"
#include "msb/core/json.hpp"
#include "msb/scoring/http_endpoint.hpp"

namespace msb::scoring {
namespace {

// Lowercase with whitespace runs collapsed to one space and ends trimmed.
std::string fold(std::string_view s) {
  std::string out;
  bool pending_space = false;
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

std::string_view trim_left(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  return s;
}

bool is_transient(const Error& e) {
  if (e.code() == ErrorCode::EndpointUnreachable) return true;
  if (e.code() != ErrorCode::EndpointError) return false;
  const long long status = e.detail().value_or(0);
  return status == 429 || status >= 500;
}

}  // namespace

std::string build_prompt(std::string_view term, const std::vector<std::string>& texts) {
  if (term.empty()) throw Error(ErrorCode::EmptyTerm, "concept term is empty", "term");
  if (texts.empty()) throw Error(ErrorCode::EmptyBatch, "no texts to classify");

  std::string out = "Decide whether these comments are \"";
  out.append(term).append("\" or \"not ").append(term).append("\".\n");
  for (std::size_t i = 0; i < texts.size(); ++i) {
    out.append(std::to_string(i + 1)).append(". ");
    const std::string& t = texts[i];
    for (std::size_t k = 0; k < t.size(); ++k) {
      if (t[k] == '\r') {
        out.push_back(' ');
        if (k + 1 < t.size() && t[k + 1] == '\n') ++k;
      } else if (t[k] == '\n') {
        out.push_back(' ');
      } else {
        out.push_back(t[k]);
      }
    }
    out.push_back('\n');
  }
  out.append("\nComment results:");
  return out;
}

ParsedLabels parse_labels(std::string_view response, std::string_view term, std::size_t n) {
  const std::string positive = fold(term);
  const std::string negative = fold("not " + std::string(term));

  // First labelled line per index.
  std::vector<std::optional<std::string>> found(n);
  std::size_t pos = 0;
  while (pos <= response.size()) {
    auto eol = response.find('\n', pos);
    if (eol == std::string_view::npos) eol = response.size();
    std::string_view line = trim_left(response.substr(pos, eol - pos));
    pos = eol + 1;

    std::size_t digits = 0;
    while (digits < line.size() && std::isdigit(static_cast<unsigned char>(line[digits]))) ++digits;
    if (digits == 0 || digits > 9 || digits >= line.size() || line[digits] != '.') continue;
    const std::size_t index = std::stoul(std::string(line.substr(0, digits)));
    if (index == 0 || index > n || found[index - 1]) continue;
    found[index - 1] = fold(line.substr(digits + 1));
  }

  ParsedLabels out;
  out.scores.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (found[i] && *found[i] == positive) {
      out.scores[i] = 1.0;
    } else if (!(found[i] && *found[i] == negative)) {
      ++out.warnings;
    }
  }
  return out;
}

HttpCompletionClient::HttpCompletionClient(std::string url, std::string api_key,
                                           const PromptConfig& config)
    : url_(std::move(url)), api_key_(std::move(api_key)), config_(config) {}

std::string HttpCompletionClient::complete(const std::string& prompt) {
  Json req;
  if (!config_.model.empty()) req["model"] = config_.model;
  if (config_.adapter == "chat") {
    req["messages"] = Json::array({Json{{"role", "user"}, {"content", prompt}}});
  } else {
    req["prompt"] = prompt;
    req["max_tokens"] = 16 * static_cast<int>(config_.batch_size) + 16;
  }
  req["temperature"] = 0;

  HeaderList headers;
  if (!api_key_.empty()) headers.emplace_back("Authorization", "Bearer " + api_key_);
  const HttpResult res = post_json(url_, req.dump(), headers, config_.timeout);
  if (res.status < 200 || res.status >= 300) {
    throw Error(ErrorCode::EndpointError,
                "completion endpoint returned HTTP " + std::to_string(res.status), "endpoint_url",
                res.status);
  }
  try {
    const Json body = Json::parse(res.body);
    if (body.contains("completion")) return body.at("completion").get<std::string>();
    const Json& choice = body.at("choices").at(0);
    if (choice.contains("message")) return choice.at("message").at("content").get<std::string>();
    return choice.at("text").get<std::string>();
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::EndpointError,
                std::string("completion endpoint returned an unreadable body: ") + e.what(),
                "endpoint_url", res.status);
  }
}

std::string with_retries(const RetryPolicy& policy, const std::function<std::string()>& attempt) {
  auto backoff = policy.initial_backoff;
  bool reached = false;
  std::string last_message;
  for (int i = 0; i <= policy.max_retries; ++i) {
    if (i > 0) {
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
    try {
      return attempt();
    } catch (const Error& e) {
      if (!is_transient(e)) throw;
      reached = reached || e.code() == ErrorCode::EndpointError;
      last_message = e.what();
    }
  }
  const std::string attempts = std::to_string(policy.max_retries + 1);
  if (!reached) {
    throw Error(ErrorCode::EndpointUnreachable,
                "endpoint unreachable after " + attempts + " attempts: " + last_message,
                "endpoint_url");
  }
  throw Error(ErrorCode::RetriesExhausted,
              "giving up after " + attempts + " attempts: " + last_message, "endpoint_url");
}

PromptScorer::PromptScorer(PromptConfig config, std::shared_ptr<CompletionClient> client)
    : config_(std::move(config)),
      client_(std::move(client)),
      in_flight_(static_cast<std::ptrdiff_t>(std::max<std::size_t>(1, config_.max_in_flight))) {
  if (config_.batch_size == 0) {
    throw Error(ErrorCode::BadConfig, "prompt batch size must be positive", "batch_size");
  }
}

ScoreBatch PromptScorer::score(const ScoreRequest& request) {
  if (request.term.empty()) throw Error(ErrorCode::EmptyTerm, "concept term is empty", "term");
  ScoreBatch out;
  const std::size_t n = request.texts.size();
  if (n == 0) return out;

  const std::size_t chunk = config_.batch_size;
  const std::size_t chunks = (n + chunk - 1) / chunk;
  std::vector<ParsedLabels> parsed(chunks);

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&] {
    for (std::size_t c = next++; c < chunks; c = next++) {
      try {
        const std::size_t begin = c * chunk;
        const std::size_t end = std::min(n, begin + chunk);
        std::vector<std::string> texts(request.texts.begin() + begin, request.texts.begin() + end);
        const std::string prompt = build_prompt(request.term, texts);
        in_flight_.acquire();
        std::string completion;
        try {
          completion = with_retries(config_.retry, [&] { return client_->complete(prompt); });
        } catch (...) {
          in_flight_.release();
          throw;
        }
        in_flight_.release();
        parsed[c] = parse_labels(completion, request.term, texts.size());
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
        next = chunks;
      }
    }
  };

  const std::size_t threads = std::min(chunks, std::max<std::size_t>(1, config_.max_in_flight));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  out.scores.reserve(n);
  for (const auto& p : parsed) {
    out.scores.insert(out.scores.end(), p.scores.begin(), p.scores.end());
    out.warnings += p.warnings;
  }
  return out;
}

std::shared_ptr<PromptScorer> make_prompt_scorer(const PromptConfig& config) {
  std::string key;
  if (!config.credentials_env.empty()) {
    key = env_or_empty(config.credentials_env.c_str());
    if (key.empty()) {
      throw Error(ErrorCode::MissingCredentials,
                  "prompt backend needs an API key in " + config.credentials_env,
                  config.credentials_env);
    }
  }
  std::string url = config.endpoint_url;
  if (url.empty() && !config.url_env.empty()) url = env_or_empty(config.url_env.c_str());
  if (url.empty()) {
    throw Error(ErrorCode::MissingCredentials,
                "prompt backend needs a completion endpoint URL in " + config.url_env,
                config.url_env);
  }
  auto client = std::make_shared<HttpCompletionClient>(url, key, config);
  return std::make_shared<PromptScorer>(config, std::move(client));
}

}  // namespace msb::scoring
