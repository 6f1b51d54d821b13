#include <CLI11.hpp>

#include <csignal>
#include <cstdlib>
#include <iostream>

#include "msb/core/error.hpp"
#include "msb/scoring/backend.hpp"
#include "msb/service/api.hpp"
#include "msb/service/http.hpp"
#include "msb/service/jobs.hpp"
#include "msb/service/store.hpp"

namespace {

msb::service::HttpServer* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

std::string env_or(const char* name, std::string fallback) {
  const char* v = std::getenv(name);
  return v && *v ? v : fallback;
}

}  // namespace

int main(int argc, char** argv) {
  std::string bind = env_or("MSB_BIND", "127.0.0.1:8080");
  std::string data_dir = env_or("MSB_DATA_DIR", "msb-data");
  std::size_t workers = 4;
  int timeout_s = 30;

  CLI::App app{"msb_server: HTTP service for sketchbooks", "msb_server"};
  app.add_option("--bind", bind, "host:port (MSB_BIND)");
  app.add_option("--data-dir", data_dir, "Sketchbook storage (MSB_DATA_DIR)");
  app.add_option("--workers", workers, "Scoring job threads")->check(CLI::Range(1, 64));
  app.add_option("--timeout", timeout_s, "Request read/write timeout in seconds")->check(CLI::Range(1, 3600));
  CLI11_PARSE(app, argc, argv);

  try {
    msb::service::Store store(data_dir);
    msb::scoring::ScorerRegistry scorers;
    msb::service::JobManager jobs(workers);
    msb::service::Api api(store, scorers, jobs);
    msb::service::HttpServer server(api, std::chrono::seconds(timeout_s));
    const auto endpoint = msb::service::parse_bind(bind);
    const int port = server.bind(endpoint);

    g_server = &server;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    std::cout << "msb_server listening on " << endpoint.host << ":" << port << " (data: " << data_dir
              << ")" << std::endl;
    server.listen();

    g_server = nullptr;
    jobs.shutdown();
    store.flush();
    std::cout << "msb_server stopped" << std::endl;
  } catch (const msb::Error& e) {
    std::cerr << "error: " << msb::to_string(e.code()) << ": " << e.what() << '\n';
    return 1;
  }
  return 0;
}
