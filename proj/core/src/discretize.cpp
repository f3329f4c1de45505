#include <algorithm>
#include <map>

#include "simflow/discretize.hpp"

namespace simflow::disc {

namespace {

std::string node_key(const KernelNode& n) {
  std::string key;
  switch (n.kind) {
    case NodeKind::pointwise: return "p:" + expr::print(n.expression);
    case NodeKind::stencil: key = "s" + std::to_string(n.stencil); break;
    case NodeKind::sum: key = "+"; break;
    case NodeKind::product: key = "*"; break;
  }
  for (int i : n.inputs) key += ":" + std::to_string(i);
  return key;
}

int add_node(KernelProgram& p, KernelNode n) {
  const std::string key = node_key(n);
  for (std::size_t i = 0; i < p.nodes.size(); ++i) {
    if (node_key(p.nodes[i]) == key) return static_cast<int>(i);
  }
  p.nodes.push_back(std::move(n));
  return static_cast<int>(p.nodes.size()) - 1;
}

int add_stencil(KernelProgram& p, Stencil s) {
  for (std::size_t i = 0; i < p.stencils.size(); ++i) {
    const auto& t = p.stencils[i];
    if (t.axis == s.axis && t.order == s.order && t.offsets == s.offsets) return static_cast<int>(i);
  }
  p.stencils.push_back(std::move(s));
  return static_cast<int>(p.stencils.size()) - 1;
}

int combine(KernelProgram& p, NodeKind kind, std::vector<int> inputs) {
  if (inputs.size() == 1) return inputs.front();
  KernelNode n;
  n.kind = kind;
  n.inputs = std::move(inputs);
  return add_node(p, std::move(n));
}

class Lowerer {
 public:
  Lowerer(const doc::OperatorPolicy& policy, KernelProgram& program) : policy_(policy), program_(program) {}

  int term(const doc::TermNode& t) {
    return std::visit(
        [&](const auto& x) -> int {
          using T = std::decay_t<decltype(x)>;
          if constexpr (std::is_same_v<T, doc::Algebraic>) {
            KernelNode n;
            n.kind = NodeKind::pointwise;
            n.expression = x.math.ast;
            return add_node(program_, std::move(n));
          } else if constexpr (std::is_same_v<T, doc::Derivative>) {
            int depth = 1;
            const doc::TermNode* inner = x.inner.get();
            while (const auto* d = std::get_if<doc::Derivative>(&inner->value)) {
              if (d->axis != x.axis) break;
              ++depth;
              inner = d->inner.get();
            }
            if (!program_.axes.empty() &&
                std::find(program_.axes.begin(), program_.axes.end(), x.axis) == program_.axes.end()) {
              throw LoweringError("derivative along '" + x.axis + "', which is not a spatial axis of the problem");
            }
            return chain(depth, x.axis, term(*inner));
          } else if constexpr (std::is_same_v<T, doc::Product>) {
            std::vector<int> in;
            for (const auto& f : x.factors) in.push_back(term(f));
            return combine(program_, NodeKind::product, std::move(in));
          } else {
            std::vector<int> in;
            for (const auto& f : x.terms) in.push_back(term(f));
            if (in.empty()) return zero();
            return combine(program_, NodeKind::sum, std::move(in));
          }
        },
        t.value);
  }

  int zero() {
    KernelNode n;
    n.kind = NodeKind::pointwise;
    n.expression = expr::Expression(expr::make_number(0.0));
    return add_node(program_, std::move(n));
  }

 private:
  std::optional<Stencil> direct(int order, const std::string& axis) const {
    for (const auto& s : policy_.stencils) {
      if (s.order == order) return make_stencil(order, axis, s.offsets);
    }
    const auto& d = policy_.direct_orders;
    if (std::find(d.begin(), d.end(), order) != d.end()) return centered_stencil(order, axis, policy_.accuracy);
    return std::nullopt;
  }

  /// d^depth/d axis^depth applied to node `input`.
  int chain(int depth, const std::string& axis, int input) {
    if (auto s = direct(depth, axis)) return apply(std::move(*s), input);
    if (depth == 1) {
      throw LoweringError("policy '" + policy_.operator_name + "' provides no first-derivative stencil");
    }
    if (!policy_.recursive) {
      throw LoweringError("derivative of order " + std::to_string(depth) + " along '" + axis +
                          "' has no direct stencil and recursion is disabled");
    }
    auto first = direct(1, axis);
    if (!first) throw LoweringError("policy '" + policy_.operator_name + "' provides no first-derivative stencil");
    return apply(std::move(*first), chain(depth - 1, axis, input));
  }

  int apply(Stencil s, int input) {
    KernelNode n;
    n.kind = NodeKind::stencil;
    n.stencil = add_stencil(program_, std::move(s));
    n.inputs = {input};
    return add_node(program_, std::move(n));
  }

  const doc::OperatorPolicy& policy_;
  KernelProgram& program_;
};

const doc::OperatorPolicy& find_policy(const doc::DiscretizationPolicy& policy, const std::string& name) {
  for (const auto& o : policy.operators) {
    if (o.operator_name == name) return o;
  }
  throw LoweringError("operator '" + name + "' has no schema in the discretization policy");
}

std::string print_node(const KernelProgram& p, int i, bool nested) {
  const auto& n = p.nodes[static_cast<std::size_t>(i)];
  switch (n.kind) {
    case NodeKind::pointwise: {
      return expr::print(n.expression);
    }
    case NodeKind::stencil:
      return p.stencils[static_cast<std::size_t>(n.stencil)].label() + "(" + print_node(p, n.inputs[0], false) + ")";
    case NodeKind::sum:
    case NodeKind::product: {
      const char* sep = n.kind == NodeKind::sum ? " + " : " * ";
      std::string s;
      for (std::size_t k = 0; k < n.inputs.size(); ++k) {
        if (k) s += sep;
        s += print_node(p, n.inputs[k], true);
      }
      return nested ? "(" + s + ")" : s;
    }
  }
  return {};
}

}  // namespace

int lower_term(const doc::TermNode& term, const doc::OperatorPolicy& policy, KernelProgram& program) {
  return Lowerer(policy, program).term(term);
}

std::vector<int> KernelProgram::node_reach() const {
  std::vector<int> reach(nodes.size(), -1);
  for (int r : rhs) reach[static_cast<std::size_t>(r)] = 0;
  for (std::size_t k = nodes.size(); k-- > 0;) {
    if (reach[k] < 0) continue;
    const auto& n = nodes[k];
    const int extra = n.kind == NodeKind::stencil ? stencils[static_cast<std::size_t>(n.stencil)].radius() : 0;
    for (int in : n.inputs) {
      auto& r = reach[static_cast<std::size_t>(in)];
      r = std::max(r, reach[k] + extra);
    }
  }
  return reach;
}

int KernelProgram::dag_radius() const {
  int r = 0;
  for (int x : node_reach()) r = std::max(r, x);
  return r;
}

std::string KernelProgram::equation(std::size_t f) const {
  std::string out = fields[f] + "_" + time + " = ";
  const int root = rhs[f];
  const auto& n = nodes[static_cast<std::size_t>(root)];
  // Top-level sums print flat.
  out += print_node(*this, root, false);
  if (dissipation.enabled()) {
    const bool zero = n.kind == NodeKind::pointwise && n.expression == expr::Expression(expr::make_number(0.0));
    const std::string tag = "KO" + std::to_string(dissipation.order) + "[" + std::to_string(2 * dissipation.order + 1) +
                            "pt,sigma=" + expr::format_number(dissipation.strength) + "](" + fields[f] + ")";
    out = zero ? fields[f] + "_" + time + " = " + tag : out + " + " + tag;
  }
  return out;
}

KernelProgram build_kernel(const doc::GenericPdeProblem& problem, const doc::GenericPdeModel& model,
                           const doc::DiscretizationPolicy& policy) {
  KernelProgram p;
  p.fields = problem.fields;
  p.axes = problem.coordinates.spatial;
  p.time = problem.coordinates.time;
  if (policy.time.dissipation < 0.0) throw LoweringError("dissipation strength must be >= 0");
  p.dissipation.order = policy.time.dissipation_order;
  p.dissipation.strength = policy.time.schema == "RK3" ? 0.0 : policy.time.dissipation;
  p.integrator = TimeIntegrator::ssp_rk3();

  for (const auto& field : p.fields) {
    const doc::FieldEvolution* fe = nullptr;
    for (const auto& e : model.evolution) {
      if (e.field == field) fe = &e;
    }
    if (fe == nullptr) throw LoweringError("field '" + field + "' has no evolution equation");
    std::vector<int> parts;
    for (const auto& op : fe->operators) {
      const auto& op_policy = find_policy(policy, op.name);
      Lowerer lower(op_policy, p);
      for (const auto& t : op.terms) parts.push_back(lower.term(t));
    }
    if (parts.empty()) {
      KernelNode zero;
      zero.kind = NodeKind::pointwise;
      zero.expression = expr::Expression(expr::make_number(0.0));
      p.rhs.push_back(add_node(p, std::move(zero)));
    } else {
      p.rhs.push_back(combine(p, NodeKind::sum, std::move(parts)));
    }
  }
  p.halo = std::max(p.dag_radius(), p.dissipation.radius());
  return p;
}

doc::DiscretizedProblem discretize(const doc::GenericPdeProblem& problem, const doc::GenericPdeModel& model,
                                   const doc::DiscretizationPolicy& policy) {
  doc::DiscretizedProblem d;
  d.head = problem.head;
  d.head.name = problem.head.name + " (" + policy.head.name + ")";
  d.head.id = problem.head.id + "_" + policy.head.id;
  d.policy = policy.head.id;
  d.problem = problem;
  d.model = model;
  d.kernel = build_kernel(problem, model, policy);
  for (std::size_t f = 0; f < d.kernel.fields.size(); ++f) d.equations.push_back(d.kernel.equation(f));
  return d;
}

}  // namespace simflow::disc
