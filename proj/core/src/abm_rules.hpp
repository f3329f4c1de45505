#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "simflow/abm.hpp"
#include "simflow/docmodel.hpp"

namespace simflow::abm {

/// Rules of a model in execution order.
inline std::vector<const doc::Rule*> ordered_rules(const std::vector<doc::Rule>& gather,
                                                   const std::vector<doc::Rule>& update,
                                                   const std::vector<std::string>& order) {
  std::vector<const doc::Rule*> out;
  for (const auto& name : order) {
    const doc::Rule* found = nullptr;
    for (const auto* list : {&gather, &update}) {
      for (const auto& r : *list) {
        if (r.name == name) found = &r;
      }
    }
    if (found == nullptr) throw AbmError("execution order names unknown rule '" + name + "'");
    out.push_back(found);
  }
  return out;
}

inline int entity_index(double v, std::size_t n, const char* what) {
  if (!(v >= 0.0) || v != std::floor(v) || v >= static_cast<double>(n)) {
    throw AbmError(std::string(what) + " index " + std::to_string(v) + " is out of range");
  }
  return static_cast<int>(v);
}

/// Declared parameter defaults with overrides applied; every model
/// parameter must end up with a value.
inline std::map<std::string, double> resolve_parameters(const std::vector<doc::Parameter>& declared,
                                                        const std::vector<std::string>& model_params,
                                                        const std::map<std::string, double>& overrides) {
  std::map<std::string, double> out;
  for (const auto& p : declared) out[p.name] = p.default_value;
  for (const auto& [k, v] : overrides) {
    if (out.count(k) == 0) throw AbmError("unknown parameter '" + k + "'");
    out[k] = v;
  }
  for (const auto& m : model_params) {
    if (out.count(m) == 0) throw AbmError("model parameter '" + m + "' has no value");
  }
  return out;
}

}  // namespace simflow::abm
