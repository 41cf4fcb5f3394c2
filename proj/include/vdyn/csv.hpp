#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace vdyn {

// Locale-independent shortest-of-9-significant-digits formatting.
std::string format_number(double value, int significant = 9);

// Locale-independent strict parse; throws ConfigError with `context` on failure.
double parse_number(std::string_view text, const std::string& context);

std::vector<std::string_view> split(std::string_view line, char sep);
std::string_view trim(std::string_view text);

}  // namespace vdyn
