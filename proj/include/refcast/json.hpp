#pragma once

#include <nlohmann/json.hpp>

namespace refcast {

/// Insertion-ordered so emitted documents keep a stable, readable key order.
using Json = nlohmann::ordered_json;

}  // namespace refcast
