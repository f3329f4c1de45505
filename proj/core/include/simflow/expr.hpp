#pragma once

// Expression trees for all math embedded in simulation documents: parsing
// from infix text, canonical printing, tree-walk evaluation, and a compact
// compiled form for inner loops.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace simflow {
class KeyedRng;
}

namespace simflow::expr {

enum class SymbolKind { field, parameter, coordinate, builtin, local };

std::string_view to_string(SymbolKind kind);

enum class UnaryOp { neg };

enum class BinaryOp {
  add, sub, mul, div, pow,
  ge, gt, le, lt, eq, ne,
  logical_and, logical_or,
};

enum class Function { sin, cos, exp, sqrt, abs, atan2, floor, mod };

std::string_view to_string(BinaryOp op);
std::string_view to_string(Function fn);
int arity(Function fn);
std::optional<Function> find_function(std::string_view name);

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Number {
  double value;
};

struct Symbol {
  std::string name;
  SymbolKind kind;
};

struct Unary {
  UnaryOp op;
  NodePtr operand;
};

struct Binary {
  BinaryOp op;
  NodePtr lhs;
  NodePtr rhs;
};

struct Call {
  Function fn;
  std::vector<NodePtr> args;
};

/// `name(arg)` where name is a property, coordinate or indexable builtin,
/// e.g. `acc($cv)` or `state($es($ce))`.
struct Indexed {
  std::string name;
  SymbolKind kind;
  NodePtr arg;
};

struct Node {
  std::variant<Number, Symbol, Unary, Binary, Call, Indexed> value;
};

NodePtr make_number(double v);
NodePtr make_symbol(std::string name, SymbolKind kind);
NodePtr make_unary(UnaryOp op, NodePtr operand);
NodePtr make_binary(BinaryOp op, NodePtr lhs, NodePtr rhs);
NodePtr make_call(Function fn, std::vector<NodePtr> args);
NodePtr make_indexed(std::string name, SymbolKind kind, NodePtr arg);

bool structurally_equal(const Node& a, const Node& b);

/// Immutable handle on an expression tree. Copies share the tree.
class Expression {
 public:
  Expression() = default;
  explicit Expression(NodePtr root) : root_(std::move(root)) {}

  bool empty() const { return root_ == nullptr; }
  const Node& root() const { return *root_; }
  const NodePtr& node() const { return root_; }

  friend bool operator==(const Expression& a, const Expression& b) {
    if (a.empty() || b.empty()) return a.empty() == b.empty();
    return structurally_equal(*a.root_, *b.root_);
  }

 private:
  NodePtr root_;
};

/// How a declared name may appear in text.
enum class Usage { bare, indexed, either };

struct SymbolInfo {
  SymbolKind kind;
  Usage usage = Usage::bare;
};

/// Names legal in an expression. Lookups never fall back to a default:
/// anything not declared is an unknown-symbol error.
class SymbolTable {
 public:
  void declare(std::string name, SymbolKind kind, Usage usage = Usage::bare);
  std::optional<SymbolInfo> lookup(std::string_view name) const;
  bool contains(std::string_view name) const { return lookup(name).has_value(); }
  const std::map<std::string, SymbolInfo, std::less<>>& entries() const { return entries_; }

 private:
  std::map<std::string, SymbolInfo, std::less<>> entries_;
};

class ParseError : public std::runtime_error {
 public:
  enum class Kind { syntax, unknown_symbol, arity };

  ParseError(Kind kind, std::size_t position, const std::string& message);

  Kind kind() const { return kind_; }
  std::size_t position() const { return position_; }

 private:
  Kind kind_;
  std::size_t position_;
};

/// Parses infix text. Precedence from tightest: `^` (right-assoc), unary
/// minus, `* /`, `+ -`, comparisons, `and`, `or`. A single `=` is read as
/// equality; assignment is split off by the statement layer.
Expression parse_expression(std::string_view text, const SymbolTable& symbols);

/// Fully parenthesized infix; parse(print(e)) == e.
std::string print(const Expression& e);
std::string print(const Node& n);

/// Shortest round-trip decimal form used by the printer.
std::string format_number(double v);

std::set<std::pair<std::string, SymbolKind>> free_symbols(const Expression& e);

class EvalError : public std::runtime_error {
 public:
  EvalError(const std::string& message, std::string subexpression);
  const std::string& subexpression() const { return subexpression_; }

 private:
  std::string subexpression_;
};

/// Bindings for tree-walk evaluation. Unbound symbols are an error.
class EvalEnvironment {
 public:
  /// Called for names without a direct binding. `arg` is set for indexed
  /// forms. Returning nullopt makes the symbol unbound.
  using Resolver = std::function<std::optional<double>(std::string_view name,
                                                       std::optional<double> arg)>;

  void bind(std::string name, double value);
  void unbind(std::string_view name);
  std::optional<double> lookup(std::string_view name) const;
  void set_resolver(Resolver resolver) { resolver_ = std::move(resolver); }
  const Resolver& resolver() const { return resolver_; }
  void set_rng(KeyedRng* rng) { rng_ = rng; }
  KeyedRng* rng() const { return rng_; }

 private:
  std::map<std::string, double, std::less<>> bindings_;
  Resolver resolver_;
  KeyedRng* rng_ = nullptr;
};

double evaluate(const Expression& e, EvalEnvironment& env);

/// Shared arithmetic so the tree walker and the compiled form agree bitwise.
double apply_binary(BinaryOp op, double lhs, double rhs, const Node& where);
double apply_function(Function fn, std::span<const double> args, const Node& where);

/// Source of symbol values for compiled expressions.
class Machine {
 public:
  virtual ~Machine() = default;
  virtual double load(int slot) = 0;
  virtual double load_indexed(int slot, double arg) = 0;
};

/// Maps a symbol to a machine slot at compile time; throws on failure.
using SlotResolver = std::function<int(const std::string& name, SymbolKind kind, bool indexed)>;

/// Flat stack-machine form of an Expression. Same results as evaluate().
class Compiled {
 public:
  Compiled() = default;
  Compiled(const Expression& e, const SlotResolver& resolve);

  double run(Machine& m) const;
  const Expression& source() const { return source_; }

 private:
  enum class Op : std::uint8_t {
    constant, load, load_indexed, neg, binary, call,
    jump_if_false, jump_if_true, to_bool,
  };
  struct Instr {
    Op op;
    std::uint8_t sub = 0;  // BinaryOp / Function
    std::int32_t arg = 0;  // slot, jump target
    double value = 0.0;
    const Node* node = nullptr;
  };

  void emit(const Node& n, const SlotResolver& resolve, int depth);

  Expression source_;
  std::vector<Instr> code_;
  int max_depth_ = 0;
};

}  // namespace simflow::expr
