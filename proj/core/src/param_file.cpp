#include "simflow/param_file.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace simflow {

ParamError::ParamError(const std::string& source, int line, const std::string& message)
    : std::runtime_error(source + (line > 0 ? ":" + std::to_string(line) : std::string()) + ": " + message),
      line_(line) {}

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0;
  std::size_t b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

std::string unquote(std::string s) {
  s = trim(s);
  while (s.size() >= 2 && (s.front() == '\'' || s.front() == '"') && s.back() == s.front()) {
    s = s.substr(1, s.size() - 2);
  }
  return s;
}

std::vector<std::string> split_items(const std::string& body) {
  std::vector<std::string> out;
  std::string cur;
  char quote = 0;
  for (char c : body) {
    if (quote != 0) {
      if (c == quote) quote = 0;
      cur += c;
    } else if (c == '\'' || c == '"') {
      quote = c;
      cur += c;
    } else if (c == ',') {
      out.push_back(unquote(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(unquote(cur));
  return out;
}

ParamValue parse_value(const std::string& raw, int line) {
  ParamValue v;
  v.raw = raw;
  v.line = line;
  std::string body = raw;
  if (body.size() >= 2 && body.front() == '[' && body.back() == ']') {
    v.list = true;
    body = trim(body.substr(1, body.size() - 2));
    if (!body.empty()) v.items = split_items(body);
    return v;
  }
  v.items = split_items(body);
  v.list = v.items.size() > 1;
  return v;
}

std::optional<double> to_number(const std::string& s) {
  if (s.empty()) return std::nullopt;
  if (s == "true") return 1.0;
  if (s == "false") return 0.0;
  char* end = nullptr;
  const double d = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size()) return std::nullopt;
  return d;
}

}  // namespace

ParamFile ParamFile::parse(const std::string& text, const std::string& source) {
  ParamFile f;
  f.source_ = source;
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    // Comments start at '#' outside quotes.
    char quote = 0;
    for (std::size_t i = 0; i < line.size(); ++i) {
      const char c = line[i];
      if (quote != 0) {
        if (c == quote) quote = 0;
      } else if (c == '\'' || c == '"') {
        quote = c;
      } else if (c == '#') {
        line.resize(i);
        break;
      }
    }
    line = trim(line);
    if (!line.empty() && line.back() == ';') line = trim(line.substr(0, line.size() - 1));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParamError(source, number, "expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ParamError(source, number, "missing key");
    if (value.empty()) throw ParamError(source, number, "missing value for '" + key + "'");
    f.values_[key] = parse_value(value, number);
  }
  return f;
}

ParamFile ParamFile::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParamError(path.string(), 0, "cannot open parameter file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.string());
}

void ParamFile::set(const std::string& key, const std::string& value) { values_[key] = parse_value(trim(value), 0); }

std::optional<double> ParamFile::number(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  const auto& v = it->second;
  if (v.items.size() != 1) throw ParamError(source_, v.line, "'" + key + "' must be a single number");
  auto d = to_number(v.items[0]);
  if (!d) throw ParamError(source_, v.line, "'" + key + "' is not a number: " + v.raw);
  return d;
}

std::optional<std::int64_t> ParamFile::integer(const std::string& key) const {
  auto d = number(key);
  if (!d) return std::nullopt;
  if (*d != std::floor(*d)) throw ParamError(source_, values_.at(key).line, "'" + key + "' must be an integer");
  return static_cast<std::int64_t>(*d);
}

std::optional<std::vector<double>> ParamFile::numbers(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  std::vector<double> out;
  for (const auto& item : it->second.items) {
    auto d = to_number(item);
    if (!d) throw ParamError(source_, it->second.line, "'" + key + "' has a non-numeric entry '" + item + "'");
    out.push_back(*d);
  }
  return out;
}

std::optional<std::string> ParamFile::text(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  if (it->second.items.size() != 1) throw ParamError(source_, it->second.line, "'" + key + "' must be a single value");
  return it->second.items[0];
}

std::optional<std::vector<std::string>> ParamFile::texts(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second.items;
}

}  // namespace simflow
