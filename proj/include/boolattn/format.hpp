#pragma once

#include <string>
#include <string_view>

namespace boolattn {

/// Shortest-form-independent rendering with 17 significant digits, so every
/// double round-trips through text.
std::string format_double(double v);

/// Strict parse of a whole token; throws std::invalid_argument on junk.
double parse_double(std::string_view text);

}  // namespace boolattn
