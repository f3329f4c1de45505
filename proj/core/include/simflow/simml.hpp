#pragma once

// Algorithm language used by initial conditions and agent rules.

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "simflow/expr.hpp"

namespace simflow {
class KeyedRng;
}

namespace simflow::simml {

enum class Family { generic_pde, abm_graph, abm_spatial };
enum class Phase { init, gather, update };
enum class EdgeDirection { in, out };
enum class Locality { update_safe, gather_required };

std::string_view to_string(Family f);
std::string_view to_string(Phase p);

struct Statement;
using Algorithm = std::vector<Statement>;

/// Left-hand side of an assignment: a local, a bare field, or `name(index)`.
struct Target {
  std::string name;
  expr::SymbolKind kind;
  expr::Expression index;  // empty for bare targets
};

struct Assign {
  std::string text;
  Target target;
  expr::Expression value;
};

struct IfThenElse {
  std::string condition_text;
  expr::Expression condition;
  Algorithm then_branch;
  std::optional<Algorithm> else_branch;
};

struct While {
  std::string condition_text;
  expr::Expression condition;
  Algorithm body;
};

struct IterateOverEdges {
  EdgeDirection direction;
  Algorithm body;
};

struct IterateOverInteractions {
  Algorithm body;
};

enum class SweepKind { cells, vertices, agents };

/// Global sweep: the body runs once per entity with the current-entity
/// handle rebound. Bodies may only assign locals.
struct Sweep {
  SweepKind kind;
  Algorithm body;
};

/// A recognised tag from an unsupported family. Kept so documents load and
/// validation can report it; executing it is an error.
struct Unsupported {
  std::string tag;
  std::string raw;
};

struct Statement {
  std::variant<Assign, IfThenElse, While, IterateOverEdges, IterateOverInteractions, Sweep,
               Unsupported>
      value;
};

/// Tags recognised but not implemented (flux, sources, boundary, ...).
bool is_unsupported_tag(std::string_view tag);

/// Parses `lhs = rhs`. Undeclared bare targets become locals and are added
/// to `symbols` so later statements may read them.
Assign parse_assignment(std::string_view text, expr::SymbolTable& symbols);

/// Adds the reserved `$...` names (and `pi`) legal for a family.
void declare_builtins(expr::SymbolTable& symbols, Family family);

/// Handle names that denote "the entity this algorithm runs for".
bool is_current_handle(std::string_view name);

Locality check_locality(const Algorithm& a);

/// Statically scans an algorithm for the structural problems validation
/// reports: unsupported tags, family-illegal loops, writes to non-current
/// entities, neighbour access outside gather. Returns human messages.
std::vector<std::string> lint(const Algorithm& a, Family family, Phase phase);

class AlgorithmError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Name-to-slot mapping supplied by a runtime. Slots index into whatever
/// storage the runtime's Context exposes through expr::Machine.
class Layout {
 public:
  virtual ~Layout() = default;
  virtual int resolve(const std::string& name, expr::SymbolKind kind, bool indexed) const = 0;
};

/// Execution context for one entity. Runtimes implement this for vertices,
/// agents and grid cells.
class Context : public Layout, public expr::Machine {
 public:
  virtual Family family() const = 0;
  virtual Phase phase() const = 0;
  /// Write to `slot` for `entity` (nullopt = current entity).
  virtual void store(int slot, std::optional<double> entity, double value) = 0;
  virtual void for_each_edge(EdgeDirection direction, const std::function<void()>& body);
  virtual void for_each_interaction(const std::function<void()>& body);
  virtual void for_each_entity(SweepKind kind, const std::function<void()>& body);
};

struct ProgramOptions {
  std::uint64_t max_while_iterations = 1'000'000;
};

/// An algorithm with every symbol resolved against a Layout. Build once per
/// rule and run for each entity.
class Program {
 public:
  Program() = default;
  Program(const Algorithm& algorithm, const Layout& layout, ProgramOptions options = {});

  void run(Context& ctx) const;
  std::size_t local_count() const;

  struct Impl;

 private:
  std::shared_ptr<const Impl> impl_;
};

/// Compiles and runs in one go. Runtimes that execute the same algorithm
/// many times should hold a Program instead.
void run_algorithm(const Algorithm& algorithm, Context& ctx, ProgramOptions options = {});

}  // namespace simflow::simml
