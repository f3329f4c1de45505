#include "simflow/docmodel.hpp"

#include <algorithm>
#include <fstream>

namespace simflow::doc {

std::string_view kind_name(const Document& d) {
  static constexpr std::string_view names[] = {
      "generic_pde_model", "generic_pde_problem", "discretization_policy", "discretized_problem",
      "abm_graph_model",   "abm_spatial_model",   "abm_graph_problem",     "abm_spatial_problem",
  };
  return names[d.index()];
}

const Head& head_of(const Document& d) {
  return std::visit([](const auto& x) -> const Head& { return x.head; }, d);
}

std::string format(const Diagnostic& d) {
  std::string out = d.severity == Severity::error ? "error" : "warning";
  out += ": ";
  out += d.locator.empty() ? "/" : d.locator;
  out += ": ";
  out += d.message;
  return out;
}

namespace {

std::string summarize(const std::string& source, const std::vector<Diagnostic>& diagnostics) {
  std::string out = source;
  if (!diagnostics.empty()) out += ": " + format(diagnostics.front());
  if (diagnostics.size() > 1) out += " (+" + std::to_string(diagnostics.size() - 1) + " more)";
  return out;
}

}  // namespace

DocumentError::DocumentError(std::string source, std::vector<Diagnostic> diagnostics)
    : std::runtime_error(summarize(source, diagnostics)),
      source_(std::move(source)),
      diagnostics_(std::move(diagnostics)) {}

bool has_errors(const std::vector<Diagnostic>& diags) {
  for (const auto& d : diags) {
    if (d.severity == Severity::error) return true;
  }
  return false;
}

DocumentStore::DocumentStore(std::filesystem::path root) : root_(std::move(root)) {}

void DocumentStore::add(Document doc) {
  std::string id = head_of(doc).id;
  extra_.insert_or_assign(std::move(id), std::move(doc));
}

std::optional<Document> DocumentStore::find(const std::string& id) const {
  if (auto it = extra_.find(id); it != extra_.end()) return it->second;
  if (root_.empty() || !std::filesystem::is_directory(root_)) return std::nullopt;
  // Ids are usually the file stem; try that before scanning everything.
  for (const char* sub : {"models", "problems", "policies", "discretized"}) {
    const auto candidate = root_ / sub / (id + ".json");
    if (std::filesystem::is_regular_file(candidate)) {
      try {
        Document d = load_document(candidate);
        if (head_of(d).id == id) return d;
      } catch (const DocumentError&) {
      }
    }
  }
  for (const char* sub : {"models", "problems", "policies", "discretized"}) {
    const auto dir = root_ / sub;
    if (!std::filesystem::is_directory(dir)) continue;
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
      if (entry.path().extension() == ".json") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      try {
        Document d = load_document(f);
        if (head_of(d).id == id) return d;
      } catch (const DocumentError&) {
      }
    }
  }
  return std::nullopt;
}

expr::SymbolTable pde_symbols(const std::vector<std::string>& fields,
                              const std::vector<std::string>& parameters,
                              const Coordinates& coordinates) {
  expr::SymbolTable t;
  simml::declare_builtins(t, simml::Family::generic_pde);
  for (const auto& p : parameters) t.declare(p, expr::SymbolKind::parameter);
  for (const auto& c : coordinates.spatial) t.declare(c, expr::SymbolKind::coordinate);
  if (!coordinates.time.empty()) t.declare(coordinates.time, expr::SymbolKind::coordinate);
  for (const auto& f : fields) t.declare(f, expr::SymbolKind::field);
  return t;
}

expr::SymbolTable graph_symbols(const std::vector<std::string>& properties,
                                const std::vector<std::string>& parameters) {
  expr::SymbolTable t;
  simml::declare_builtins(t, simml::Family::abm_graph);
  for (const auto& p : parameters) t.declare(p, expr::SymbolKind::parameter);
  for (const auto& p : properties) t.declare(p, expr::SymbolKind::field, expr::Usage::indexed);
  return t;
}

expr::SymbolTable spatial_symbols(const std::vector<std::string>& properties,
                                  const std::vector<std::string>& coordinates,
                                  const std::vector<std::string>& parameters) {
  expr::SymbolTable t;
  simml::declare_builtins(t, simml::Family::abm_spatial);
  for (const auto& p : parameters) t.declare(p, expr::SymbolKind::parameter);
  for (const auto& c : coordinates) t.declare(c, expr::SymbolKind::coordinate, expr::Usage::indexed);
  for (const auto& p : properties) t.declare(p, expr::SymbolKind::field, expr::Usage::indexed);
  return t;
}

std::vector<std::string> parameter_names(const std::vector<Parameter>& params) {
  std::vector<std::string> out;
  out.reserve(params.size());
  for (const auto& p : params) out.push_back(p.name);
  return out;
}

}  // namespace simflow::doc
