#include "msb/scoring/http_endpoint.hpp"

#include <httplib.h>

#include <cstdlib>

#include "msb/core/error.hpp"

namespace msb::scoring {
namespace {

std::pair<std::string, std::string> split_url(const std::string& url) {
  const auto scheme = url.find("://");
  if (scheme == std::string::npos) {
    throw Error(ErrorCode::BadConfig, "endpoint URL '" + url + "' has no scheme", "endpoint_url");
  }
  const auto slash = url.find('/', scheme + 3);
  if (slash == std::string::npos) return {url, "/"};
  return {url.substr(0, slash), url.substr(slash)};
}

}  // namespace

HttpResult post_json(const std::string& url, const std::string& body, const HeaderList& headers,
                     std::chrono::milliseconds timeout) {
  const auto [base, path] = split_url(url);
  httplib::Client client(base);
  const auto sec = static_cast<time_t>(timeout.count() / 1000);
  const auto usec = static_cast<time_t>((timeout.count() % 1000) * 1000);
  client.set_connection_timeout(sec, usec);
  client.set_read_timeout(sec, usec);
  client.set_write_timeout(sec, usec);
  httplib::Headers hdrs;
  for (const auto& [k, v] : headers) hdrs.emplace(k, v);
  auto res = client.Post(path, hdrs, body, "application/json");
  if (!res) {
    throw Error(ErrorCode::EndpointUnreachable,
                "cannot reach " + url + ": " + httplib::to_string(res.error()), "endpoint_url");
  }
  return {res->status, res->body};
}

std::string env_or_empty(const char* name) {
  const char* v = std::getenv(name);
  return v ? std::string(v) : std::string();
}

}  // namespace msb::scoring
