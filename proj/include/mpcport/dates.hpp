#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace mpcport::dates {

/// Parses a strict ISO-8601 calendar date ("YYYY-MM-DD") to days since
/// 1970-01-01. Throws ParseError on malformed or impossible dates.
std::int64_t to_days(std::string_view iso);

/// Formats days since 1970-01-01 back to "YYYY-MM-DD".
std::string from_days(std::int64_t days);

/// True if the string is a valid ISO-8601 calendar date.
bool is_valid(std::string_view iso);

}  // namespace mpcport::dates
