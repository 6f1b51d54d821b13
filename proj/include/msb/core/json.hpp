#pragma once

#include <json.hpp>

namespace msb {

// Insertion-ordered JSON keeps documents and API responses byte-stable.
using Json = nlohmann::ordered_json;

}  // namespace msb
