#include "simflow/simml.hpp"

#include <algorithm>
#include <cctype>
#include <set>

namespace simflow::simml {

std::string_view to_string(Family f) {
  switch (f) {
    case Family::generic_pde: return "generic_pde";
    case Family::abm_graph: return "abm_graph";
    case Family::abm_spatial: return "abm_spatial";
  }
  return "?";
}

std::string_view to_string(Phase p) {
  switch (p) {
    case Phase::init: return "init";
    case Phase::gather: return "gather";
    case Phase::update: return "update";
  }
  return "?";
}

bool is_unsupported_tag(std::string_view tag) {
  static constexpr std::string_view kTags[] = {
      "flux", "sources", "boundary", "increment_coordinate", "decrement_coordinate",
      "current_cell",
  };
  return std::find(std::begin(kTags), std::end(kTags), tag) != std::end(kTags);
}

bool is_current_handle(std::string_view name) { return name == "$cv" || name == "$ca"; }

void declare_builtins(expr::SymbolTable& symbols, Family family) {
  using expr::SymbolKind;
  using expr::Usage;
  symbols.declare("pi", SymbolKind::builtin);
  symbols.declare("$in", SymbolKind::builtin);
  symbols.declare("$rnd_uniform", SymbolKind::builtin);
  symbols.declare("$rnd_int_1", SymbolKind::builtin);
  switch (family) {
    case Family::abm_graph:
      symbols.declare("$cv", SymbolKind::builtin);
      symbols.declare("$ce", SymbolKind::builtin);
      symbols.declare("$es", SymbolKind::builtin, Usage::indexed);
      symbols.declare("$et", SymbolKind::builtin, Usage::indexed);
      symbols.declare("$lnoe_in", SymbolKind::builtin, Usage::indexed);
      symbols.declare("$lnoe_out", SymbolKind::builtin, Usage::indexed);
      symbols.declare("$gnov", SymbolKind::builtin);
      symbols.declare("$gnoe", SymbolKind::builtin);
      break;
    case Family::abm_spatial:
      symbols.declare("$ca", SymbolKind::builtin);
      symbols.declare("$na", SymbolKind::builtin);
      symbols.declare("$gnoa", SymbolKind::builtin);
      symbols.declare("$x_low", SymbolKind::builtin, Usage::indexed);
      symbols.declare("$x_up", SymbolKind::builtin, Usage::indexed);
      break;
    case Family::generic_pde:
      break;
  }
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool is_identifier(std::string_view s) {
  if (s.empty()) return false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto c = static_cast<unsigned char>(s[i]);
    const bool ok = std::isalpha(c) || c == '_' || c == '$' || c >= 0x80 || (i > 0 && std::isdigit(c));
    if (!ok) return false;
  }
  return true;
}

std::size_t find_assignment(std::string_view text) {
  int depth = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c == '(') ++depth;
    else if (c == ')') --depth;
    else if (c == '=' && depth == 0) {
      const char prev = i > 0 ? text[i - 1] : '\0';
      const char next = i + 1 < text.size() ? text[i + 1] : '\0';
      if (prev == '<' || prev == '>' || prev == '!' || prev == '=' || next == '=') continue;
      return i;
    }
  }
  return std::string_view::npos;
}

}  // namespace

Assign parse_assignment(std::string_view text, expr::SymbolTable& symbols) {
  using expr::SymbolKind;
  const std::size_t eq = find_assignment(text);
  if (eq == std::string_view::npos) {
    throw AlgorithmError("not an assignment: '" + std::string(text) + "'");
  }
  const std::string_view lhs = trim(text.substr(0, eq));
  const std::string_view rhs = text.substr(eq + 1);

  Assign out;
  out.text = std::string(text);
  out.value = expr::parse_expression(rhs, symbols);

  if (is_identifier(lhs)) {
    const std::string name(lhs);
    const auto info = symbols.lookup(name);
    if (!info) {
      symbols.declare(name, SymbolKind::local);
      out.target = Target{name, SymbolKind::local, {}};
      return out;
    }
    switch (info->kind) {
      case SymbolKind::local:
      case SymbolKind::field:
      case SymbolKind::coordinate:
        if (info->usage == expr::Usage::indexed) {
          throw AlgorithmError("'" + name + "' requires an index when assigned");
        }
        out.target = Target{name, info->kind, {}};
        return out;
      default:
        throw AlgorithmError("cannot assign to " + std::string(expr::to_string(info->kind)) +
                             " '" + name + "'");
    }
  }

  const expr::Expression target = expr::parse_expression(lhs, symbols);
  const auto* indexed = std::get_if<expr::Indexed>(&target.root().value);
  if (indexed == nullptr ||
      (indexed->kind != SymbolKind::field && indexed->kind != SymbolKind::coordinate)) {
    throw AlgorithmError("invalid assignment target '" + std::string(lhs) + "'");
  }
  out.target = Target{indexed->name, indexed->kind, expr::Expression(indexed->arg)};
  return out;
}

// ---------------------------------------------------------------------------
// Static analysis

namespace {

bool is_neighbor_builtin(std::string_view name) {
  return name == "$es" || name == "$et" || name == "$na" || name == "$ce";
}

/// True when any subexpression needs data from entities other than the
/// current one.
bool reads_neighbors(const expr::Node& n) {
  return std::visit(
      [](const auto& x) -> bool {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, expr::Symbol>) {
          return is_neighbor_builtin(x.name);
        } else if constexpr (std::is_same_v<T, expr::Unary>) {
          return reads_neighbors(*x.operand);
        } else if constexpr (std::is_same_v<T, expr::Binary>) {
          return reads_neighbors(*x.lhs) || reads_neighbors(*x.rhs);
        } else if constexpr (std::is_same_v<T, expr::Call>) {
          return std::any_of(x.args.begin(), x.args.end(),
                             [](const expr::NodePtr& a) { return reads_neighbors(*a); });
        } else if constexpr (std::is_same_v<T, expr::Indexed>) {
          if (is_neighbor_builtin(x.name)) return true;
          if (x.kind == expr::SymbolKind::field || x.kind == expr::SymbolKind::coordinate) {
            const auto* sym = std::get_if<expr::Symbol>(&x.arg->value);
            if (sym == nullptr || !is_current_handle(sym->name)) return true;
          }
          return reads_neighbors(*x.arg);
        } else {
          return false;
        }
      },
      n.value);
}

bool mentions(const expr::Expression& e, std::string_view name) {
  if (e.empty()) return false;
  for (const auto& [sym, kind] : expr::free_symbols(e)) {
    if (sym == name) return true;
  }
  return false;
}

bool block_needs_gather(const Algorithm& a);

bool statement_needs_gather(const Statement& s) {
  return std::visit(
      [](const auto& x) -> bool {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, Assign>) {
          return reads_neighbors(x.value.root()) ||
                 (!x.target.index.empty() && reads_neighbors(x.target.index.root()));
        } else if constexpr (std::is_same_v<T, IfThenElse>) {
          return reads_neighbors(x.condition.root()) || block_needs_gather(x.then_branch) ||
                 (x.else_branch && block_needs_gather(*x.else_branch));
        } else if constexpr (std::is_same_v<T, While>) {
          return reads_neighbors(x.condition.root()) || block_needs_gather(x.body);
        } else if constexpr (std::is_same_v<T, Unsupported>) {
          return false;
        } else {
          // edge, interaction and global sweeps all read other entities
          return true;
        }
      },
      s.value);
}

bool block_needs_gather(const Algorithm& a) {
  return std::any_of(a.begin(), a.end(), statement_needs_gather);
}

struct LintState {
  Family family;
  Phase phase;
  int edge_depth = 0;
  int interaction_depth = 0;
  int sweep_depth = 0;
  std::set<std::string> messages;
  std::vector<std::string> ordered;

  void report(std::string msg) {
    if (messages.insert(msg).second) ordered.push_back(std::move(msg));
  }
};

void lint_expression(const expr::Expression& e, LintState& st) {
  if (e.empty()) return;
  if (st.phase != Phase::gather && reads_neighbors(e.root())) {
    st.report(st.phase == Phase::update ? "neighbor context in update rule"
                                        : "neighbor context in initial condition");
  }
  if (st.edge_depth == 0 && (mentions(e, "$ce"))) {
    st.report("$ce used outside iterate_over_edges");
  }
  if (st.interaction_depth == 0 && mentions(e, "$na")) {
    st.report("$na used outside iterate_over_interactions");
  }
}

void lint_block(const Algorithm& a, LintState& st);

void lint_statement(const Statement& s, LintState& st) {
  std::visit(
      [&](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, Assign>) {
          lint_expression(x.value, st);
          lint_expression(x.target.index, st);
          if (x.target.kind != expr::SymbolKind::local) {
            if (st.sweep_depth > 0) {
              st.report("property write inside a global sweep (only locals may be assigned)");
            }
            if (!x.target.index.empty()) {
              const auto* sym = std::get_if<expr::Symbol>(&x.target.index.root().value);
              if (sym == nullptr || !is_current_handle(sym->name)) {
                st.report("write to non-current entity in '" + x.text + "'");
              }
            }
            if (x.target.kind == expr::SymbolKind::coordinate && st.family != Family::abm_spatial) {
              st.report("coordinates are read-only in " + std::string(to_string(st.family)));
            }
          }
        } else if constexpr (std::is_same_v<T, IfThenElse>) {
          lint_expression(x.condition, st);
          lint_block(x.then_branch, st);
          if (x.else_branch) lint_block(*x.else_branch, st);
        } else if constexpr (std::is_same_v<T, While>) {
          lint_expression(x.condition, st);
          lint_block(x.body, st);
        } else if constexpr (std::is_same_v<T, IterateOverEdges>) {
          if (st.family != Family::abm_graph) {
            st.report("iterate_over_edges is only legal in graph models");
          } else if (st.phase != Phase::gather) {
            st.report(st.phase == Phase::update ? "neighbor context in update rule"
                                                : "neighbor context in initial condition");
          }
          ++st.edge_depth;
          lint_block(x.body, st);
          --st.edge_depth;
        } else if constexpr (std::is_same_v<T, IterateOverInteractions>) {
          if (st.family != Family::abm_spatial) {
            st.report("iterate_over_interactions is only legal in spatial agent models");
          } else if (st.phase != Phase::gather) {
            st.report(st.phase == Phase::update ? "neighbor context in update rule"
                                                : "neighbor context in initial condition");
          }
          ++st.interaction_depth;
          lint_block(x.body, st);
          --st.interaction_depth;
        } else if constexpr (std::is_same_v<T, Sweep>) {
          if (x.kind == SweepKind::cells) {
            st.report("iterate_over_cells is not supported (cellular automata are out of scope)");
          } else if (x.kind == SweepKind::vertices && st.family != Family::abm_graph) {
            st.report("iterate_over_vertices is only legal in graph models");
          } else if (x.kind == SweepKind::agents && st.family != Family::abm_spatial) {
            st.report("iterate_over_agents is only legal in spatial agent models");
          } else if (st.phase == Phase::update) {
            st.report("neighbor context in update rule");
          }
          ++st.sweep_depth;
          lint_block(x.body, st);
          --st.sweep_depth;
        } else {
          st.report("unsupported tag '" + x.tag + "'");
        }
      },
      s.value);
}

void lint_block(const Algorithm& a, LintState& st) {
  for (const auto& s : a) lint_statement(s, st);
}

}  // namespace

Locality check_locality(const Algorithm& a) {
  return block_needs_gather(a) ? Locality::gather_required : Locality::update_safe;
}

std::vector<std::string> lint(const Algorithm& a, Family family, Phase phase) {
  LintState st;
  st.family = family;
  st.phase = phase;
  lint_block(a, st);
  return st.ordered;
}

// ---------------------------------------------------------------------------
// Execution

void Context::for_each_edge(EdgeDirection, const std::function<void()>&) {
  throw AlgorithmError("iterate_over_edges is not available in " + std::string(to_string(family())));
}

void Context::for_each_interaction(const std::function<void()>&) {
  throw AlgorithmError("iterate_over_interactions is not available in " +
                       std::string(to_string(family())));
}

void Context::for_each_entity(SweepKind, const std::function<void()>&) {
  throw AlgorithmError("global sweeps are not available in " + std::string(to_string(family())));
}

namespace {

constexpr int kLocalBase = 1 << 24;

struct PNode;
using Block = std::vector<PNode>;

struct PAssign {
  std::string text;
  bool local = false;
  int slot = 0;
  bool has_index = false;
  expr::Compiled index;
  expr::Compiled value;
};

struct PIf {
  expr::Compiled condition;
  Block then_branch;
  Block else_branch;
  std::vector<int> keep;  // locals definitely assigned on both paths
};

struct PWhile {
  expr::Compiled condition;
  Block body;
};

struct PEdges {
  EdgeDirection direction;
  Block body;
};

struct PInteractions {
  Block body;
};

struct PSweep {
  SweepKind kind;
  Block body;
};

struct PUnsupported {
  std::string tag;
};

struct PNode {
  std::variant<PAssign, PIf, PWhile, PEdges, PInteractions, PSweep, PUnsupported> value;
};

}  // namespace

struct Program::Impl {
  Block body;
  std::vector<std::string> locals;
  ProgramOptions options;
};

namespace {

class Compiler {
 public:
  Compiler(const Layout& layout, std::vector<std::string>& locals) : layout_(layout), locals_(locals) {}

  Block block(const Algorithm& a) {
    Block out;
    out.reserve(a.size());
    for (const auto& s : a) out.push_back(statement(s));
    return out;
  }

  /// Locals assigned on every path through `a`.
  std::set<int> definitely_assigned(const Algorithm& a) {
    std::set<int> out;
    for (const auto& s : a) {
      if (const auto* as = std::get_if<Assign>(&s.value)) {
        if (as->target.kind == expr::SymbolKind::local) out.insert(local_index(as->target.name));
      } else if (const auto* i = std::get_if<IfThenElse>(&s.value)) {
        if (i->else_branch) {
          const auto a1 = definitely_assigned(i->then_branch);
          const auto a2 = definitely_assigned(*i->else_branch);
          std::set_intersection(a1.begin(), a1.end(), a2.begin(), a2.end(),
                                std::inserter(out, out.end()));
        }
      }
    }
    return out;
  }

 private:
  int local_index(const std::string& name) {
    auto it = std::find(locals_.begin(), locals_.end(), name);
    if (it != locals_.end()) return static_cast<int>(it - locals_.begin());
    locals_.push_back(name);
    return static_cast<int>(locals_.size() - 1);
  }

  expr::Compiled compile(const expr::Expression& e) {
    return expr::Compiled(e, [this](const std::string& name, expr::SymbolKind kind, bool indexed) {
      if (kind == expr::SymbolKind::local) return kLocalBase + local_index(name);
      return layout_.resolve(name, kind, indexed);
    });
  }

  PNode statement(const Statement& s) {
    return std::visit(
        [this](const auto& x) -> PNode {
          using T = std::decay_t<decltype(x)>;
          if constexpr (std::is_same_v<T, Assign>) {
            PAssign p;
            p.text = x.text;
            p.value = compile(x.value);
            if (x.target.kind == expr::SymbolKind::local) {
              p.local = true;
              p.slot = local_index(x.target.name);
            } else {
              p.slot = layout_.resolve(x.target.name, x.target.kind, !x.target.index.empty());
              if (!x.target.index.empty()) {
                p.has_index = true;
                p.index = compile(x.target.index);
              }
            }
            return PNode{std::move(p)};
          } else if constexpr (std::is_same_v<T, IfThenElse>) {
            PIf p;
            p.condition = compile(x.condition);
            p.then_branch = block(x.then_branch);
            if (x.else_branch) p.else_branch = block(*x.else_branch);
            IfThenElse copy_for_da = x;
            Algorithm wrapper;
            wrapper.push_back(Statement{std::move(copy_for_da)});
            const auto keep = definitely_assigned(wrapper);
            p.keep.assign(keep.begin(), keep.end());
            return PNode{std::move(p)};
          } else if constexpr (std::is_same_v<T, While>) {
            return PNode{PWhile{compile(x.condition), block(x.body)}};
          } else if constexpr (std::is_same_v<T, IterateOverEdges>) {
            return PNode{PEdges{x.direction, block(x.body)}};
          } else if constexpr (std::is_same_v<T, IterateOverInteractions>) {
            return PNode{PInteractions{block(x.body)}};
          } else if constexpr (std::is_same_v<T, Sweep>) {
            return PNode{PSweep{x.kind, block(x.body)}};
          } else {
            return PNode{PUnsupported{x.tag}};
          }
        },
        s.value);
  }

  const Layout& layout_;
  std::vector<std::string>& locals_;
};

class Frame final : public expr::Machine {
 public:
  Frame(Context& ctx, const Program::Impl& impl)
      : ctx_(ctx), impl_(impl), values_(impl.locals.size(), 0.0), bound_(impl.locals.size(), 0) {}

  double load(int slot) override {
    if (slot >= kLocalBase) {
      const auto i = static_cast<std::size_t>(slot - kLocalBase);
      if (!bound_[i]) {
        throw expr::EvalError("unbound local '" + impl_.locals[i] + "'", impl_.locals[i]);
      }
      return values_[i];
    }
    return ctx_.load(slot);
  }

  double load_indexed(int slot, double arg) override { return ctx_.load_indexed(slot, arg); }

  void run_block(const Block& b) {
    for (const auto& n : b) run_node(n);
  }

 private:
  void run_node(const PNode& n) {
    std::visit(
        [this](const auto& x) {
          using T = std::decay_t<decltype(x)>;
          if constexpr (std::is_same_v<T, PAssign>) {
            const double v = x.value.run(*this);
            if (x.local) {
              values_[static_cast<std::size_t>(x.slot)] = v;
              bound_[static_cast<std::size_t>(x.slot)] = 1;
            } else {
              if (sweep_depth_ > 0) {
                throw AlgorithmError("property write inside a global sweep: '" + x.text + "'");
              }
              std::optional<double> entity;
              if (x.has_index) entity = x.index.run(*this);
              ctx_.store(x.slot, entity, v);
            }
          } else if constexpr (std::is_same_v<T, PIf>) {
            const auto before = bound_;
            if (x.condition.run(*this) != 0.0) {
              run_block(x.then_branch);
            } else {
              run_block(x.else_branch);
            }
            for (std::size_t i = 0; i < bound_.size(); ++i) {
              if (!before[i] && bound_[i] &&
                  std::find(x.keep.begin(), x.keep.end(), static_cast<int>(i)) == x.keep.end()) {
                bound_[i] = 0;
              }
            }
          } else if constexpr (std::is_same_v<T, PWhile>) {
            const auto before = bound_;
            std::uint64_t iterations = 0;
            while (x.condition.run(*this) != 0.0) {
              if (++iterations > impl_.options.max_while_iterations) {
                throw AlgorithmError("while loop exceeded " +
                                     std::to_string(impl_.options.max_while_iterations) +
                                     " iterations");
              }
              run_block(x.body);
            }
            forget_new(before);
          } else if constexpr (std::is_same_v<T, PEdges>) {
            const auto before = bound_;
            ctx_.for_each_edge(x.direction, [&] { run_block(x.body); });
            forget_new(before);
          } else if constexpr (std::is_same_v<T, PInteractions>) {
            const auto before = bound_;
            ctx_.for_each_interaction([&] { run_block(x.body); });
            forget_new(before);
          } else if constexpr (std::is_same_v<T, PSweep>) {
            const auto before = bound_;
            ++sweep_depth_;
            ctx_.for_each_entity(x.kind, [&] { run_block(x.body); });
            --sweep_depth_;
            forget_new(before);
          } else {
            throw AlgorithmError("unsupported tag '" + x.tag + "'");
          }
        },
        n.value);
  }

  void forget_new(const std::vector<char>& before) {
    for (std::size_t i = 0; i < bound_.size(); ++i) {
      if (!before[i]) bound_[i] = 0;
    }
  }

  Context& ctx_;
  const Program::Impl& impl_;
  std::vector<double> values_;
  std::vector<char> bound_;
  int sweep_depth_ = 0;
};

}  // namespace

Program::Program(const Algorithm& algorithm, const Layout& layout, ProgramOptions options) {
  auto impl = std::make_shared<Impl>();
  impl->options = options;
  Compiler compiler(layout, impl->locals);
  impl->body = compiler.block(algorithm);
  impl_ = std::move(impl);
}

std::size_t Program::local_count() const { return impl_ ? impl_->locals.size() : 0; }

void Program::run(Context& ctx) const {
  if (!impl_) return;
  Frame frame(ctx, *impl_);
  frame.run_block(impl_->body);
}

void run_algorithm(const Algorithm& algorithm, Context& ctx, ProgramOptions options) {
  Program(algorithm, ctx, options).run(ctx);
}

}  // namespace simflow::simml
