#include "simflow/abm.hpp"

#include <cmath>
#include <cstdio>

namespace simflow::abm {

namespace {

std::string prefix(std::int64_t step) { return step >= 0 ? "step " + std::to_string(step) + ": " : ""; }

}  // namespace

AbmError::AbmError(const std::string& message, std::int64_t entity, std::int64_t step)
    : std::runtime_error(prefix(step) + message), entity_(entity), step_(step) {}

Properties::Properties(std::vector<std::string> n, std::size_t entities) : names(std::move(n)) {
  values.assign(names.size(), std::vector<double>(entities, 0.0));
}

int Properties::index(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return static_cast<int>(i);
  }
  return -1;
}

std::vector<double>& Properties::column(const std::string& name) {
  const int i = index(name);
  if (i < 0) throw AbmError("no property '" + name + "'");
  return values[static_cast<std::size_t>(i)];
}

const std::vector<double>& Properties::column(const std::string& name) const {
  const int i = index(name);
  if (i < 0) throw AbmError("no property '" + name + "'");
  return values[static_cast<std::size_t>(i)];
}

std::string format_value(double v) {
  char buf[40];
  if (v == std::floor(v) && std::abs(v) < 1e15) {
    std::snprintf(buf, sizeof buf, "%.0f", v);
  } else {
    std::snprintf(buf, sizeof buf, "%.17g", v);
  }
  std::string s = buf;
  return s == "-0" ? "0" : s;
}

}  // namespace simflow::abm
