#pragma once

#include <nlohmann/json.hpp>

namespace gamici {

/// Every document we read or write is JSON with insertion-ordered keys, so the
/// serialized form follows the field order of the canonical layouts.
using Json = nlohmann::ordered_json;

}  // namespace gamici
