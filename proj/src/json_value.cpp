#include "promptgrade/json_value.hpp"

#include <algorithm>
#include <cmath>

namespace promptgrade {

std::string canonical_json(const Json& value) {
  // nlohmann::json stores objects in a std::map, so dump() already sorts keys.
  return value.dump(-1, ' ', false, Json::error_handler_t::replace);
}

bool json_values_equal(const Json& a, const Json& b, double rel_tol) {
  if (a.is_number() && b.is_number()) {
    if (!a.is_number_float() && !b.is_number_float()) {
      if (a.is_number_unsigned() && b.is_number_unsigned()) return a.get<std::uint64_t>() == b.get<std::uint64_t>();
      if (a.is_number_unsigned() || b.is_number_unsigned()) {
        const auto& u = a.is_number_unsigned() ? a : b;
        const auto& s = a.is_number_unsigned() ? b : a;
        const auto sv = s.get<std::int64_t>();
        return sv >= 0 && static_cast<std::uint64_t>(sv) == u.get<std::uint64_t>();
      }
      return a.get<std::int64_t>() == b.get<std::int64_t>();
    }
    const double x = a.get<double>();
    const double y = b.get<double>();
    if (x == y) return true;
    if (!std::isfinite(x) || !std::isfinite(y)) return false;
    return std::fabs(x - y) <= rel_tol * std::max(std::fabs(x), std::fabs(y));
  }
  if (a.type() != b.type()) return false;
  if (a.is_array()) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (!json_values_equal(a[i], b[i], rel_tol)) return false;
    }
    return true;
  }
  if (a.is_object()) {
    if (a.size() != b.size()) return false;
    for (auto it = a.begin(); it != a.end(); ++it) {
      const auto other = b.find(it.key());
      if (other == b.end() || !json_values_equal(it.value(), *other, rel_tol)) return false;
    }
    return true;
  }
  return a == b;
}

}  // namespace promptgrade
