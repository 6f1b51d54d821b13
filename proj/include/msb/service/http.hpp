#pragma once

#include <chrono>
#include <functional>
#include <memory>
#include <string>

#include "msb/service/api.hpp"

namespace httplib {
class Server;
}

namespace msb::service {

struct Endpoint {
  std::string host = "127.0.0.1";
  int port = 8080;
};

// "host:port", ":port" or "port". Throws BadConfig.
Endpoint parse_bind(const std::string& text);

// Serves an Api over HTTP until stop() is called.
class HttpServer {
 public:
  HttpServer(Api& api, std::chrono::seconds request_timeout = std::chrono::seconds(30));
  ~HttpServer();

  // Binds (port 0 picks a free port) and returns the bound port. Throws BindFailure.
  int bind(const Endpoint& endpoint);
  // Blocks serving requests.
  void listen();
  void stop();

 private:
  Api& api_;
  std::unique_ptr<httplib::Server> server_;
};

// Sends one request to a running service; used by `msb --remote`.
Response send_remote(const std::string& base_url, const Request& request);

}  // namespace msb::service
