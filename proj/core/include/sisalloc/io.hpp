#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace sisalloc {

/// Shortest decimal text that parses back to exactly `x`.
std::string format_number(double x);

/// Strict full-string parse; throws IoError on trailing garbage.
double parse_number(std::string_view text);

std::vector<std::string> split_csv_line(const std::string& line);

/// 64-bit FNV-1a, used to tag output files with the config they came from.
std::uint64_t fnv1a64(std::string_view bytes);

std::string hex64(std::uint64_t value);

} // namespace sisalloc
