#pragma once

// problem.input style run-time parameter files:
//   key = value      # comment
//   x_up = 100.0, 100.0;
//   vertex_properties = [''state''];

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace simflow {

class ParamError : public std::runtime_error {
 public:
  ParamError(const std::string& source, int line, const std::string& message);
  int line() const { return line_; }

 private:
  int line_;
};

struct ParamValue {
  std::string raw;
  std::vector<std::string> items;  // unquoted list elements; one for scalars
  bool list = false;
  int line = 0;
};

class ParamFile {
 public:
  static ParamFile parse(const std::string& text, const std::string& source = "<params>");
  static ParamFile load(const std::filesystem::path& path);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  const std::map<std::string, ParamValue>& values() const { return values_; }
  const std::string& source() const { return source_; }

  /// Typed accessors throw ParamError when the value does not convert.
  std::optional<double> number(const std::string& key) const;
  std::optional<std::int64_t> integer(const std::string& key) const;
  std::optional<std::vector<double>> numbers(const std::string& key) const;
  std::optional<std::string> text(const std::string& key) const;
  std::optional<std::vector<std::string>> texts(const std::string& key) const;

  void set(const std::string& key, const std::string& value);

 private:
  std::string source_;
  std::map<std::string, ParamValue> values_;
};

}  // namespace simflow
