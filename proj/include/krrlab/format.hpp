#pragma once

#include <string>
#include <string_view>

namespace krrlab {

/// Shortest decimal that parses back to the same double; NaN prints as "nan".
std::string to_shortest(double value);

/// Strict parse of a full token; throws std::invalid_argument on trailing junk.
double parse_double(std::string_view token);

}  // namespace krrlab
