#pragma once
// Small text helpers shared by the file formats and the config loader.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace coil {

/// Shortest decimal that round-trips to the same double.
std::string format_real(double x);

double parse_real(std::string_view text, std::string_view what);
std::int64_t parse_int64(std::string_view text, std::string_view what);
int parse_int(std::string_view text, std::string_view what);
bool parse_bool(std::string_view text, std::string_view what);

std::string_view trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);

/// Reads "key = value" lines; '#' starts a comment. Throws ParseError on a
/// line without '=' or a repeated key.
std::map<std::string, std::string> read_key_values(std::istream& in);
std::map<std::string, std::string> read_key_values_file(const std::string& path);
void write_key_values(std::ostream& out, const std::map<std::string, std::string>& kv);

}  // namespace coil
