#pragma once

#include <httplib.h>

#include <atomic>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "msb/core/random.hpp"
#include "msb/core/sketchbook.hpp"
#include "msb/scoring/backend.hpp"

namespace msb::fx {

// Removes the directory on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("msb-test-" + std::to_string(rd()) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

// An httplib server on a free loopback port, running on its own thread.
class LocalServer {
 public:
  LocalServer() = default;
  ~LocalServer() { stop(); }

  httplib::Server& server() { return server_; }

  void start() {
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  void stop() {
    if (thread_.joinable()) {
      server_.stop();
      thread_.join();
    }
  }
  int port() const { return port_; }
  std::string url(const std::string& path = {}) const {
    return "http://127.0.0.1:" + std::to_string(port_) + path;
  }

 private:
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
};

// Wraps a backend and counts score() calls.
class CountingBackend : public scoring::ScorerBackend {
 public:
  explicit CountingBackend(std::shared_ptr<scoring::ScorerBackend> inner) : inner_(std::move(inner)) {}
  scoring::BackendKind kind() const override { return inner_->kind(); }
  scoring::ScoreBatch score(const scoring::ScoreRequest& r) override {
    ++calls;
    return inner_->score(r);
  }
  std::atomic<int> calls{0};

 private:
  std::shared_ptr<scoring::ScorerBackend> inner_;
};

inline scoring::BackendConfig lexicon_backend(const std::string& id,
                                              std::map<std::string, std::vector<std::string>> table) {
  scoring::BackendConfig b;
  b.id = id;
  b.kind = scoring::BackendKind::Lexicon;
  b.lexicon.table = std::move(table);
  return b;
}

inline core::Schema text_schema() {
  core::Schema s;
  s.add("text", core::InputKind::Text);
  s.add("label", core::InputKind::GroundTruth);
  return s;
}

inline core::Dataset text_dataset(const std::string& name, const std::vector<std::string>& texts,
                                  const std::vector<double>& labels) {
  core::Dataset ds;
  ds.name = name;
  ds.columns = {"text", "label"};
  for (std::size_t i = 0; i < texts.size(); ++i) {
    core::Cell label = std::monostate{};
    if (i < labels.size()) label = labels[i];
    ds.rows.push_back({texts[i], label});
  }
  return ds;
}

// Rows whose label is the exact linear function 0.1 + 0.5*[sunny] + 0.3*[warm].
struct LinearFixture {
  std::vector<std::string> texts;
  std::vector<double> labels;
};

inline LinearFixture linear_fixture(std::size_t n, std::uint64_t seed) {
  core::Rng rng(seed);
  LinearFixture f;
  for (std::size_t i = 0; i < n; ++i) {
    // Cycle through all four patterns first so every combination is present.
    const std::size_t pattern = i < 4 ? i : rng.below(4);
    const bool a = pattern & 1, b = pattern & 2;
    std::string text = "day " + std::to_string(i);
    if (a) text += " sunny";
    if (b) text += " warm";
    f.texts.push_back(text);
    f.labels.push_back(0.1 + 0.5 * a + 0.3 * b);
  }
  return f;
}

inline core::Sketchbook weather_sketchbook(std::size_t train_rows = 40, std::size_t test_rows = 20) {
  const auto train = linear_fixture(train_rows, 7);
  const auto test = linear_fixture(test_rows, 8);
  std::map<std::string, core::Dataset> datasets;
  datasets.emplace("train", text_dataset("train", train.texts, train.labels));
  datasets.emplace("test", text_dataset("test", test.texts, test.labels));
  auto sb = core::create_sketchbook("Predict how pleasant the weather is.", std::move(datasets),
                                    text_schema());
  core::add_backend(sb, lexicon_backend("lex", {{"sunny", {"sunny"}}, {"warm", {"warm"}}}));
  return sb;
}

}  // namespace msb::fx
