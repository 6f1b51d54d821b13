#include "msb/service/http.hpp"

#include <httplib.h>

#include <algorithm>
#include <cctype>
#include <charconv>

namespace msb::service {
namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

Request to_request(const httplib::Request& req) {
  Request r;
  r.method = req.method;
  r.path = req.path;
  for (const auto& [k, v] : req.params) r.query.emplace(k, v);
  for (const auto& [k, v] : req.headers) r.headers.emplace(lower(k), v);
  r.body = req.body;
  return r;
}

}  // namespace

Endpoint parse_bind(const std::string& text) {
  Endpoint e;
  const auto colon = text.rfind(':');
  std::string port = text;
  if (colon != std::string::npos) {
    if (colon > 0) e.host = text.substr(0, colon);
    port = text.substr(colon + 1);
  }
  const auto [ptr, ec] = std::from_chars(port.data(), port.data() + port.size(), e.port);
  if (port.empty() || ec != std::errc{} || ptr != port.data() + port.size() || e.port < 0 || e.port > 65535) {
    throw Error(ErrorCode::BadConfig, "bind address '" + text + "' needs a port", "bind");
  }
  return e;
}

HttpServer::HttpServer(Api& api, std::chrono::seconds request_timeout)
    : api_(api), server_(std::make_unique<httplib::Server>()) {
  server_->set_read_timeout(request_timeout.count(), 0);
  server_->set_write_timeout(request_timeout.count(), 0);
  auto handler = [this](const httplib::Request& req, httplib::Response& res) {
    const Response r = api_.handle(to_request(req));
    res.status = r.status;
    res.set_header("Access-Control-Allow-Origin", "*");
    res.set_content(r.body.dump(), "application/json");
  };
  server_->Get(".*", handler);
  server_->Post(".*", handler);
  server_->Delete(".*", handler);
  server_->Patch(".*", handler);
  server_->Options(".*", [](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Origin", "*");
    res.set_header("Access-Control-Allow-Methods", "GET, POST, PATCH, DELETE, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type, Idempotency-Key");
    res.status = 204;
  });
}

HttpServer::~HttpServer() = default;

int HttpServer::bind(const Endpoint& endpoint) {
  int port = endpoint.port;
  if (port == 0) {
    port = server_->bind_to_any_port(endpoint.host);
  } else if (!server_->bind_to_port(endpoint.host, port)) {
    port = -1;
  }
  if (port < 0) {
    throw Error(ErrorCode::BindFailure,
                "cannot bind " + endpoint.host + ":" + std::to_string(endpoint.port), "bind");
  }
  return port;
}

void HttpServer::listen() { server_->listen_after_bind(); }

void HttpServer::stop() { server_->stop(); }

Response send_remote(const std::string& base_url, const Request& request) {
  httplib::Client client(base_url);
  client.set_connection_timeout(10, 0);
  client.set_read_timeout(120, 0);
  httplib::Headers headers;
  for (const auto& [k, v] : request.headers) headers.emplace(k, v);
  httplib::Params params;
  for (const auto& [k, v] : request.query) params.emplace(k, v);
  const std::string target = httplib::append_query_params(request.path, params);

  httplib::Result res;
  if (request.method == "GET") {
    res = client.Get(target, headers);
  } else if (request.method == "DELETE") {
    res = client.Delete(target, headers, request.body, "application/json");
  } else if (request.method == "PATCH") {
    res = client.Patch(target, headers, request.body, "application/json");
  } else {
    res = client.Post(target, headers, request.body, "application/json");
  }
  if (!res) {
    throw Error(ErrorCode::EndpointUnreachable,
                "cannot reach " + base_url + ": " + httplib::to_string(res.error()), "remote");
  }
  Response out;
  out.status = res->status;
  try {
    out.body = Json::parse(res->body);
  } catch (const Json::parse_error&) {
    throw Error(ErrorCode::EndpointError, "service at " + base_url + " returned non-JSON", "remote",
                res->status);
  }
  return out;
}

}  // namespace msb::service
