#pragma once

#include <string>

#include "json.hpp"

namespace promptgrade {

using Json = nlohmann::json;

/// Canonical JSON text: object keys sorted, no insignificant whitespace.
std::string canonical_json(const Json& value);

/// Structural equality where numbers compare numerically (integers exactly,
/// anything involving a float with relative tolerance `rel_tol`).
/// Booleans never equal numbers.
bool json_values_equal(const Json& a, const Json& b, double rel_tol = 1e-9);

}  // namespace promptgrade
