#include "coil/textio.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include "coil/errors.hpp"

namespace coil {

std::string format_real(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  if (ec != std::errc()) throw std::runtime_error("format_real failed");
  return std::string(buf, end);
}

double parse_real(std::string_view text, std::string_view what) {
  text = trim(text);
  double v = 0.0;
  auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || end != text.data() + text.size() || text.empty())
    throw InputError("invalid real for " + std::string(what) + ": '" + std::string(text) + "'");
  return v;
}

std::int64_t parse_int64(std::string_view text, std::string_view what) {
  text = trim(text);
  std::int64_t v = 0;
  auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || end != text.data() + text.size() || text.empty())
    throw InputError("invalid integer for " + std::string(what) + ": '" + std::string(text) + "'");
  return v;
}

int parse_int(std::string_view text, std::string_view what) {
  const auto v = parse_int64(text, what);
  if (v < INT32_MIN || v > INT32_MAX) throw InputError("integer out of range for " + std::string(what));
  return static_cast<int>(v);
}

bool parse_bool(std::string_view text, std::string_view what) {
  text = trim(text);
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw InputError("invalid boolean for " + std::string(what) + ": '" + std::string(text) + "'");
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.emplace_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::map<std::string, std::string> read_key_values(std::istream& in) {
  std::map<std::string, std::string> kv;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view view = line;
    if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    view = trim(view);
    if (view.empty()) continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos) throw ParseError("expected key = value", lineno);
    const std::string key(trim(view.substr(0, eq)));
    const std::string value(trim(view.substr(eq + 1)));
    if (key.empty()) throw ParseError("empty key", lineno);
    if (!kv.emplace(key, value).second) throw ParseError("duplicate key '" + key + "'", lineno);
  }
  return kv;
}

std::map<std::string, std::string> read_key_values_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config " + path);
  return read_key_values(in);
}

void write_key_values(std::ostream& out, const std::map<std::string, std::string>& kv) {
  for (const auto& [k, v] : kv) out << k << " = " << v << '\n';
}

}  // namespace coil
