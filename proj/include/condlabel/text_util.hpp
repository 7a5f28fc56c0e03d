#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace condlabel::text {

std::vector<std::string_view> split_ws(std::string_view s);
std::vector<std::string_view> split_on(std::string_view s, char sep);
std::string_view trim(std::string_view s);

std::optional<double> parse_double(std::string_view s);
std::optional<long long> parse_int(std::string_view s);

// Shortest decimal representation that parses back to the same double.
std::string format_double(double v);

}  // namespace condlabel::text
