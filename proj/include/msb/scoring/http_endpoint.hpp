#pragma once

#include <chrono>
#include <string>
#include <utility>
#include <vector>

namespace msb::scoring {

struct HttpResult {
  int status = 0;
  std::string body;
};

using HeaderList = std::vector<std::pair<std::string, std::string>>;

// POSTs a JSON body to an absolute http(s) URL. Connection failures throw
// Error(EndpointUnreachable); any HTTP status is returned to the caller.
HttpResult post_json(const std::string& url, const std::string& body, const HeaderList& headers,
                     std::chrono::milliseconds timeout);

// Environment lookup; empty string when unset.
std::string env_or_empty(const char* name);

}  // namespace msb::scoring
