// Local stand-in for completion and embedding endpoints, for demos and tests.
#include <CLI11.hpp>
#include <httplib.h>

#include <algorithm>
#include <atomic>
#include <cctype>
#include <csignal>
#include <iostream>
#include <regex>

#include "msb/core/json.hpp"
#include "msb/core/random.hpp"

namespace {

using msb::Json;

httplib::Server* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

// Answers every numbered item: positive when `all_positive` or the item text
// contains the term.
std::string answer(const std::string& prompt, bool all_positive) {
  static const std::regex term_re("comments are \"([^\"]*)\" or");
  static const std::regex item_re("^(\\d+)\\. (.*)$");
  std::smatch m;
  const std::string term = std::regex_search(prompt, m, term_re) ? m[1].str() : "yes";
  std::string out;
  std::size_t start = 0;
  while (start < prompt.size()) {
    auto end = prompt.find('\n', start);
    if (end == std::string::npos) end = prompt.size();
    const std::string line = prompt.substr(start, end - start);
    if (std::regex_match(line, m, item_re)) {
      const bool pos = all_positive || lower(m[2].str()).find(lower(term)) != std::string::npos;
      out += m[1].str() + ". " + (pos ? term : "not " + term) + "\n";
    }
    start = end + 1;
  }
  return out;
}

std::vector<double> embed(const std::string& text, std::size_t dim) {
  msb::core::Rng rng(std::hash<std::string>{}(lower(text)));
  std::vector<double> v(dim);
  for (auto& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  std::string host = "127.0.0.1";
  int port = 8091;
  std::string mode = "keyword";
  std::size_t dim = 8;

  CLI::App app{"msb_stub_server: fake completion and embedding endpoints", "msb_stub_server"};
  app.add_option("--host", host);
  app.add_option("--port", port);
  app.add_option("--mode", mode, "keyword | positive | fail")
      ->check(CLI::IsMember({"keyword", "positive", "fail"}));
  app.add_option("--dim", dim, "Embedding dimension")->check(CLI::Range(1, 4096));
  CLI11_PARSE(app, argc, argv);

  httplib::Server server;
  std::atomic<std::size_t> calls{0};

  auto completion = [&](const httplib::Request& req, httplib::Response& res, bool chat) {
    ++calls;
    if (mode == "fail") {
      res.status = 500;
      res.set_content(R"({"error":"stub failure"})", "application/json");
      return;
    }
    Json body;
    try {
      body = Json::parse(req.body);
    } catch (const Json::parse_error&) {
      res.status = 400;
      return;
    }
    const std::string prompt =
        chat ? body.at("messages").back().at("content").get<std::string>() : body.value("prompt", "");
    const std::string text = answer(prompt, mode == "positive");
    Json reply = chat ? Json{{"choices", {{{"message", {{"role", "assistant"}, {"content", text}}}}}}}
                      : Json{{"choices", {{{"text", text}}}}};
    res.set_content(reply.dump(), "application/json");
  };
  server.Post("/v1/completions",
              [&](const httplib::Request& q, httplib::Response& r) { completion(q, r, false); });
  server.Post("/v1/chat/completions",
              [&](const httplib::Request& q, httplib::Response& r) { completion(q, r, true); });
  server.Post("/v1/embeddings", [&](const httplib::Request& req, httplib::Response& res) {
    ++calls;
    const Json body = Json::parse(req.body, nullptr, false);
    if (body.is_discarded() || !body.contains("input")) {
      res.status = 400;
      return;
    }
    const auto input = body["input"].is_array() ? body["input"][0].get<std::string>()
                                                : body["input"].get<std::string>();
    res.set_content(Json{{"data", {{{"embedding", embed(input, dim)}}}}}.dump(), "application/json");
  });
  server.Get("/stats", [&](const httplib::Request&, httplib::Response& res) {
    res.set_content(Json{{"calls", calls.load()}}.dump(), "application/json");
  });

  g_server = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  if (!server.bind_to_port(host, port)) {
    std::cerr << "cannot bind " << host << ":" << port << '\n';
    return 1;
  }
  std::cout << "stub endpoints on http://" << host << ":" << port << " (mode " << mode << ")" << std::endl;
  server.listen_after_bind();
  return 0;
}
