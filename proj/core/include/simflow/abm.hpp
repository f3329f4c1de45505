#pragma once

// Pieces shared by the graph and spatial agent runtimes.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace simflow::abm {

class AbmError : public std::runtime_error {
 public:
  explicit AbmError(const std::string& message, std::int64_t entity = -1, std::int64_t step = -1);
  std::int64_t entity() const { return entity_; }
  std::int64_t step() const { return step_; }

 private:
  std::int64_t entity_;
  std::int64_t step_;
};

/// Column store: values[p][entity].
struct Properties {
  std::vector<std::string> names;
  std::vector<std::vector<double>> values;

  Properties() = default;
  Properties(std::vector<std::string> names, std::size_t entities);

  int index(const std::string& name) const;
  std::vector<double>& column(const std::string& name);
  const std::vector<double>& column(const std::string& name) const;
  std::size_t size() const { return values.empty() ? 0 : values.front().size(); }

  friend bool operator==(const Properties&, const Properties&) = default;
};

/// Integral values print without a decimal point, others with 17 digits.
std::string format_value(double v);

/// Key words for per-entity draws.
inline constexpr std::uint64_t kInitialRule = ~std::uint64_t{0};
inline constexpr std::uint64_t kPickTag = ~std::uint64_t{0} - 1;

}  // namespace simflow::abm
