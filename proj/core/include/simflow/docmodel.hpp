#pragma once

// The pipeline's documents: models, problems, discretization policies and
// discretized problems, stored as JSON with a top-level "kind".

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "simflow/expr.hpp"
#include "simflow/kernel.hpp"
#include "simflow/simml.hpp"

namespace simflow::doc {

struct Head {
  std::string name;
  std::string id;
  std::string author;
  std::string version;
  std::string date;
};

/// Math as written in the document plus its parsed tree.
struct MathText {
  std::string text;
  expr::Expression ast;
};

struct TermNode;

struct Algebraic {
  MathText math;
};

struct Derivative {
  std::string axis;
  std::shared_ptr<const TermNode> inner;
};

struct Product {
  std::vector<TermNode> factors;
};

struct Sum {
  std::vector<TermNode> terms;
};

/// Recursive operator term: algebraic leaves, derivatives of terms, and
/// products/sums of terms. Depth of Derivative nesting is the operator order.
struct TermNode {
  std::variant<Algebraic, Derivative, Product, Sum> value;
};

struct Operator {
  std::string name;
  std::vector<TermNode> terms;
};

struct FieldEvolution {
  std::string field;
  std::vector<Operator> operators;
};

struct Coordinates {
  std::vector<std::string> spatial;
  std::string time;
};

struct GenericPdeModel {
  Head head;
  Coordinates coordinates;
  std::vector<std::string> fields;
  std::vector<std::string> parameters;
  std::vector<FieldEvolution> evolution;
};

enum class ParamType { integer, real };

struct Parameter {
  std::string name;
  ParamType type = ParamType::real;
  double default_value = 0.0;
};

struct AxisDomain {
  std::string axis;
  double min = 0.0;
  double max = 0.0;
};

struct Region {
  std::string name;
  std::vector<AxisDomain> domain;
  simml::Algorithm initial_condition;
};

struct BoundaryCondition {
  std::string name;
  std::string type;  // only "periodic" is executable
  std::string axis;  // "all" or a coordinate
  std::string side;  // "all", "lower", "upper"
};

struct AnalysisQuantity {
  std::string name;
  MathText expression;
};

struct GenericPdeProblem {
  Head head;
  Coordinates coordinates;
  std::vector<std::string> fields;
  std::vector<Parameter> parameters;
  std::string model;
  Region region;
  std::vector<BoundaryCondition> boundaries;
  std::vector<std::string> boundary_precedence;
  MathText finalization;
  std::vector<AnalysisQuantity> analysis;
};

struct StencilSpec {
  int order = 1;
  std::vector<int> offsets;
};

struct OperatorPolicy {
  std::string operator_name;
  std::string schema;
  int accuracy = 4;
  bool recursive = true;
  std::vector<int> direct_orders{1, 2};
  std::vector<StencilSpec> stencils;  // explicit offsets, override generated ones
};

struct TimePolicy {
  std::string schema;
  double dissipation = 0.0;
  int dissipation_order = 3;
};

struct DiscretizationPolicy {
  Head head;
  std::string problem;  // optional id
  std::vector<OperatorPolicy> operators;
  TimePolicy time;
};

struct DiscretizedProblem {
  Head head;
  std::string policy;
  GenericPdeProblem problem;
  GenericPdeModel model;
  disc::KernelProgram kernel;
  std::vector<std::string> equations;
};

enum class RuleKind { gather, update };

struct Rule {
  std::string name;
  RuleKind kind = RuleKind::update;
  std::string property;
  simml::Algorithm algorithm;
};

struct AbmGraphModel {
  Head head;
  std::vector<std::string> vertex_properties;
  std::vector<std::string> parameters;
  std::vector<Rule> gather_rules;
  std::vector<Rule> update_rules;
  std::vector<std::string> execution_order;
};

struct AbmSpatialModel {
  Head head;
  std::vector<std::string> coordinates;
  std::vector<std::string> agent_properties;
  std::vector<std::string> parameters;
  std::vector<Rule> gather_rules;
  std::vector<Rule> update_rules;
  std::vector<std::string> execution_order;
  bool include_self = true;
};

enum class Distribution { random, scale_free, circular };
enum class EvolutionStep { all, one };
enum class SnapshotPolicy { per_rule, per_step };

struct GraphSpec {
  bool from_file = false;
  std::string path;
  bool directed = true;
  Distribution distribution = Distribution::random;
  std::int64_t vertices = 0;
  std::int64_t edges = 0;
  std::int64_t attachment = 2;     // scale-free: edges per new vertex
  std::int64_t min_in_degree = 0;  // random: seed this many in-edges per vertex first
  std::uint64_t seed = 0;
};

struct AbmGraphProblem {
  Head head;
  std::vector<std::string> vertex_properties;
  std::vector<Parameter> parameters;
  std::string model;
  GraphSpec graph;
  EvolutionStep evolution_step = EvolutionStep::all;
  SnapshotPolicy snapshot = SnapshotPolicy::per_rule;
  simml::Algorithm initial_condition;
  MathText finalization;
  std::vector<std::string> output_properties;
};

struct AbmSpatialProblem {
  Head head;
  std::vector<std::string> coordinates;
  std::vector<std::string> agent_properties;
  std::vector<Parameter> parameters;
  std::string model;
  std::vector<AxisDomain> domain;
  std::int64_t agents = 0;
  double radius = 1.0;
  SnapshotPolicy snapshot = SnapshotPolicy::per_rule;
  simml::Algorithm initial_condition;
  MathText finalization;
  std::vector<std::string> output_properties;
  std::string order_parameter;  // heading property for phi_ord, optional
};

using Document = std::variant<GenericPdeModel, GenericPdeProblem, DiscretizationPolicy,
                              DiscretizedProblem, AbmGraphModel, AbmSpatialModel,
                              AbmGraphProblem, AbmSpatialProblem>;

std::string_view kind_name(const Document& d);
const Head& head_of(const Document& d);

enum class Severity { error, warning };

struct Diagnostic {
  Severity severity = Severity::error;
  std::string locator;  // JSON-pointer style path into the document
  std::string message;
};

std::string format(const Diagnostic& d);

/// Loading failed; carries every problem found, not just the first.
class DocumentError : public std::runtime_error {
 public:
  DocumentError(std::string source, std::vector<Diagnostic> diagnostics);
  const std::vector<Diagnostic>& diagnostics() const { return diagnostics_; }
  const std::string& source() const { return source_; }

 private:
  std::string source_;
  std::vector<Diagnostic> diagnostics_;
};

Document parse_document(const std::string& text, const std::string& source = "<memory>");
Document load_document(const std::filesystem::path& path);
std::string to_json_text(const Document& doc);
void save_document(const Document& doc, const std::filesystem::path& path);

/// Documents directory with `models/`, `problems/`, `policies/` and
/// `discretized/` subdirectories; references resolve by head id.
class DocumentStore {
 public:
  DocumentStore() = default;
  explicit DocumentStore(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }
  std::optional<Document> find(const std::string& id) const;

  /// Registers an in-memory document; takes precedence over files.
  void add(Document doc);

 private:
  std::filesystem::path root_;
  std::map<std::string, Document> extra_;
};

/// Structural and cross-reference checks. Empty result means valid.
std::vector<Diagnostic> validate(const Document& doc, const DocumentStore* store = nullptr);

bool has_errors(const std::vector<Diagnostic>& diags);

/// Deterministic LaTeX rendering. Refuses documents that do not validate.
std::string export_latex(const Document& doc, const DocumentStore* store = nullptr);

/// Symbol tables used to parse each kind of embedded math; exposed so the
/// runtimes parse pointwise expressions the same way.
expr::SymbolTable pde_symbols(const std::vector<std::string>& fields,
                              const std::vector<std::string>& parameters,
                              const Coordinates& coordinates);
expr::SymbolTable graph_symbols(const std::vector<std::string>& properties,
                                const std::vector<std::string>& parameters);
expr::SymbolTable spatial_symbols(const std::vector<std::string>& properties,
                                  const std::vector<std::string>& coordinates,
                                  const std::vector<std::string>& parameters);

std::vector<std::string> parameter_names(const std::vector<Parameter>& params);

}  // namespace simflow::doc
