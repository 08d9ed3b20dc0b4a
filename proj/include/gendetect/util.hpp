#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gendetect {

// Shortest decimal form that round-trips exactly through parse_double.
std::string format_double(double v);

// Fixed-point with the given number of decimals ("0.82995" style output).
std::string format_fixed(double v, int decimals);

// Strict parsers; throw InputError when the whole field does not parse.
double parse_double(std::string_view s);
long long parse_int(std::string_view s);

std::vector<std::string> split(std::string_view s, char delim);

// Splits file content into lines. Accepts LF endings with or without a
// trailing newline; a single trailing '\r' per line is stripped.
std::vector<std::string> split_lines(std::string_view content);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

// FNV-1a, used for config/manifest fingerprints in run logs.
std::uint64_t fnv1a64(std::string_view s);
std::string to_hex(std::uint64_t v);

// Rejects field values that would break the unquoted CSV formats (comma,
// quote, CR, LF).
void check_csv_field(std::string_view field, std::string_view what);

}  // namespace gendetect
