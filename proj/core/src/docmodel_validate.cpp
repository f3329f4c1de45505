#include <algorithm>
#include <cmath>
#include <set>

#include "simflow/docmodel.hpp"

namespace simflow::doc {

namespace {

class Checker {
 public:
  explicit Checker(const DocumentStore* store) : store_(store) {}

  std::vector<Diagnostic> out;

  void error(std::string where, std::string message) {
    out.push_back({Severity::error, where.empty() ? "/" : std::move(where), std::move(message)});
  }
  void warning(std::string where, std::string message) {
    out.push_back({Severity::warning, where.empty() ? "/" : std::move(where), std::move(message)});
  }

  void head(const Head& h) {
    if (h.name.empty()) error("/head/name", "name is empty");
    if (h.id.empty()) error("/head/id", "id is empty");
  }

  void unique(const std::vector<std::string>& names, const std::string& where, const std::string& what) {
    std::set<std::string> seen;
    for (std::size_t i = 0; i < names.size(); ++i) {
      if (names[i].empty()) error(where + "/" + std::to_string(i), what + " name is empty");
      else if (!seen.insert(names[i]).second) {
        error(where + "/" + std::to_string(i), "duplicate " + what + " '" + names[i] + "'");
      }
    }
  }

  void parameters(const std::vector<Parameter>& ps) {
    unique(parameter_names(ps), "/parameters", "parameter");
    for (std::size_t i = 0; i < ps.size(); ++i) {
      const auto& p = ps[i];
      if (p.type == ParamType::integer && p.default_value != std::floor(p.default_value)) {
        error("/parameters/" + std::to_string(i) + "/default", "INT parameter default is not integral");
      }
      if (!std::isfinite(p.default_value)) {
        error("/parameters/" + std::to_string(i) + "/default", "default is not finite");
      }
    }
  }

  void lint(const simml::Algorithm& a, simml::Family family, simml::Phase phase, const std::string& where) {
    for (auto& m : simml::lint(a, family, phase)) error(where, std::move(m));
  }

  /// Symbols the finalization condition may use: parameters, the iteration
  /// counter or time coordinate, and global constants.
  void finalization(const MathText& m, const std::set<std::string>& extra) {
    if (m.text.empty() || m.ast.empty()) {
      error("/finalization", "finalization condition is empty");
      return;
    }
    for (const auto& [name, kind] : expr::free_symbols(m.ast)) {
      if (kind == expr::SymbolKind::parameter || extra.count(name) != 0) continue;
      error("/finalization", "finalization may not reference '" + name + "'");
    }
  }

  template <typename Want>
  std::optional<Want> resolve(const std::string& id, const std::string& where, std::string_view want) {
    if (id.empty()) {
      error(where, "model reference is empty");
      return std::nullopt;
    }
    if (store_ == nullptr) {
      error(where, "cannot resolve '" + id + "': no documents directory");
      return std::nullopt;
    }
    auto doc = store_->find(id);
    if (!doc) {
      error(where, "referenced document '" + id + "' not found");
      return std::nullopt;
    }
    if (auto* w = std::get_if<Want>(&*doc)) return *w;
    error(where, "'" + id + "' is a " + std::string(kind_name(*doc)) + ", expected " + std::string(want));
    return std::nullopt;
  }

  void same_set(const std::vector<std::string>& ours, const std::vector<std::string>& theirs,
                const std::string& where, const std::string& what) {
    std::set<std::string> a(ours.begin(), ours.end());
    std::set<std::string> b(theirs.begin(), theirs.end());
    for (const auto& n : b) {
      if (a.count(n) == 0) error(where, what + " '" + n + "' declared by the model is missing");
    }
    for (const auto& n : a) {
      if (b.count(n) == 0) error(where, what + " '" + n + "' is not declared by the model");
    }
  }

  void covers_parameters(const std::vector<Parameter>& ours, const std::vector<std::string>& model) {
    const auto names = parameter_names(ours);
    std::set<std::string> have(names.begin(), names.end());
    for (const auto& p : model) {
      if (have.count(p) == 0) error("/parameters", "model parameter '" + p + "' has no value");
    }
  }

  void domain(const std::vector<AxisDomain>& d, const std::vector<std::string>& axes, const std::string& where) {
    std::set<std::string> seen;
    for (std::size_t i = 0; i < d.size(); ++i) {
      const std::string w = where + "/" + std::to_string(i);
      if (std::find(axes.begin(), axes.end(), d[i].axis) == axes.end()) {
        error(w + "/axis", "domain axis '" + d[i].axis + "' is not a spatial coordinate");
      }
      if (!seen.insert(d[i].axis).second) error(w + "/axis", "axis '" + d[i].axis + "' given twice");
      if (!(d[i].min < d[i].max)) error(w, "domain min must be less than max on axis '" + d[i].axis + "'");
    }
    for (const auto& a : axes) {
      if (seen.count(a) == 0) error(where, "no domain for axis '" + a + "'");
    }
  }

  // ---- generic PDE -------------------------------------------------------

  void term(const TermNode& t, const GenericPdeModel& m, const std::string& where) {
    std::visit(
        [&](const auto& x) {
          using T = std::decay_t<decltype(x)>;
          if constexpr (std::is_same_v<T, Algebraic>) {
            if (x.math.ast.empty()) {
              error(where, "empty expression");
              return;
            }
            for (const auto& [name, kind] : expr::free_symbols(x.math.ast)) {
              if (kind == expr::SymbolKind::builtin && name != "pi") {
                error(where, "'" + name + "' is not available in model equations");
              }
              if (kind == expr::SymbolKind::coordinate && name == m.coordinates.time) {
                warning(where, "explicit time dependence in '" + x.math.text + "'");
              }
            }
          } else if constexpr (std::is_same_v<T, Derivative>) {
            const auto& axes = m.coordinates.spatial;
            if (std::find(axes.begin(), axes.end(), x.axis) == axes.end()) {
              error(where + "/axis", "derivative axis '" + x.axis + "' is not a declared spatial coordinate");
            }
            if (x.inner) term(*x.inner, m, where + "/term");
          } else if constexpr (std::is_same_v<T, Product>) {
            if (x.factors.empty()) error(where, "empty product");
            for (std::size_t i = 0; i < x.factors.size(); ++i) {
              term(x.factors[i], m, where + "/product/" + std::to_string(i));
            }
          } else {
            if (x.terms.empty()) error(where, "empty sum");
            for (std::size_t i = 0; i < x.terms.size(); ++i) {
              term(x.terms[i], m, where + "/sum/" + std::to_string(i));
            }
          }
        },
        t.value);
  }

  void coordinates(const Coordinates& c) {
    if (c.spatial.empty()) error("/coordinates/spatial", "at least one spatial coordinate is required");
    if (c.time.empty()) error("/coordinates/time", "time coordinate is missing");
    auto all = c.spatial;
    all.push_back(c.time);
    unique(all, "/coordinates/spatial", "coordinate");
  }

  void check(const GenericPdeModel& m) {
    head(m.head);
    coordinates(m.coordinates);
    if (m.fields.empty()) error("/fields", "at least one field is required");
    unique(m.fields, "/fields", "field");
    unique(m.parameters, "/parameters", "parameter");
    std::map<std::string, int> evolved;
    for (std::size_t i = 0; i < m.evolution.size(); ++i) {
      const std::string w = "/evolution/" + std::to_string(i);
      const auto& fe = m.evolution[i];
      if (std::find(m.fields.begin(), m.fields.end(), fe.field) == m.fields.end()) {
        error(w + "/field", "evolution for undeclared field '" + fe.field + "'");
      }
      if (++evolved[fe.field] == 2) error(w + "/field", "field '" + fe.field + "' has more than one evolution entry");
      std::set<std::string> op_names;
      for (std::size_t k = 0; k < fe.operators.size(); ++k) {
        const std::string wo = w + "/operators/" + std::to_string(k);
        if (fe.operators[k].name.empty()) error(wo + "/name", "operator name is empty");
        for (std::size_t t = 0; t < fe.operators[k].terms.size(); ++t) {
          term(fe.operators[k].terms[t], m, wo + "/terms/" + std::to_string(t));
        }
      }
    }
    for (const auto& f : m.fields) {
      if (evolved.count(f) == 0) error("/evolution", "field '" + f + "' has no evolution entry");
    }
  }

  static void assigned(const simml::Algorithm& a, std::set<std::string>& out) {
    for (const auto& s : a) {
      if (const auto* as = std::get_if<simml::Assign>(&s.value)) {
        if (as->target.kind == expr::SymbolKind::field) out.insert(as->target.name);
      } else if (const auto* branch = std::get_if<simml::IfThenElse>(&s.value)) {
        if (!branch->else_branch) continue;
        std::set<std::string> t = out;
        std::set<std::string> e = out;
        assigned(branch->then_branch, t);
        assigned(*branch->else_branch, e);
        for (const auto& n : t) {
          if (e.count(n) != 0) out.insert(n);
        }
      }
    }
  }

  void check(const GenericPdeProblem& p) {
    head(p.head);
    coordinates(p.coordinates);
    if (p.fields.empty()) error("/fields", "at least one field is required");
    unique(p.fields, "/fields", "field");
    parameters(p.parameters);
    if (auto m = resolve<GenericPdeModel>(p.model, "/model", "generic_pde_model")) {
      same_set(p.fields, m->fields, "/fields", "field");
      same_set(p.coordinates.spatial, m->coordinates.spatial, "/coordinates/spatial", "coordinate");
      if (p.coordinates.time != m->coordinates.time) {
        error("/coordinates/time", "time coordinate differs from the model's '" + m->coordinates.time + "'");
      }
      covers_parameters(p.parameters, m->parameters);
    }
    domain(p.region.domain, p.coordinates.spatial, "/region/domain");
    lint(p.region.initial_condition, simml::Family::generic_pde, simml::Phase::init, "/region/initial_condition");
    std::set<std::string> set;
    assigned(p.region.initial_condition, set);
    for (const auto& f : p.fields) {
      if (set.count(f) == 0) error("/region/initial_condition", "initial condition does not assign field '" + f + "'");
    }

    if (p.boundaries.empty()) error("/boundaries", "no boundary conditions");
    std::set<std::string> bc_names;
    std::map<std::string, std::set<std::string>> covered;
    for (std::size_t i = 0; i < p.boundaries.size(); ++i) {
      const auto& b = p.boundaries[i];
      const std::string w = "/boundaries/" + std::to_string(i);
      if (!bc_names.insert(b.name).second) error(w + "/name", "duplicate boundary '" + b.name + "'");
      if (b.type != "periodic") error(w + "/type", "boundary type '" + b.type + "' is not supported; only periodic");
      const auto& axes = p.coordinates.spatial;
      if (b.axis != "all" && std::find(axes.begin(), axes.end(), b.axis) == axes.end()) {
        error(w + "/axis", "boundary axis '" + b.axis + "' is not a spatial coordinate");
      }
      if (b.side != "all" && b.side != "lower" && b.side != "upper") {
        error(w + "/side", "side must be all, lower or upper");
      }
      for (const auto& a : axes) {
        if (b.axis != "all" && b.axis != a) continue;
        if (b.side == "all" || b.side == "lower") covered[a].insert("lower");
        if (b.side == "all" || b.side == "upper") covered[a].insert("upper");
      }
    }
    for (const auto& a : p.coordinates.spatial) {
      if (covered[a].size() == 1) error("/boundaries", "periodic boundary on axis '" + a + "' covers only one side");
      else if (covered[a].empty()) error("/boundaries", "axis '" + a + "' has no boundary condition");
    }
    std::set<std::string> ranked;
    for (std::size_t i = 0; i < p.boundary_precedence.size(); ++i) {
      const auto& n = p.boundary_precedence[i];
      if (bc_names.count(n) == 0) {
        error("/boundary_precedence/" + std::to_string(i), "unknown boundary '" + n + "'");
      }
      if (!ranked.insert(n).second) error("/boundary_precedence/" + std::to_string(i), "'" + n + "' listed twice");
    }
    for (const auto& n : bc_names) {
      if (ranked.count(n) == 0) error("/boundary_precedence", "boundary '" + n + "' missing from precedence");
    }
    finalization(p.finalization, {p.coordinates.time, "pi"});
    for (std::size_t i = 0; i < p.analysis.size(); ++i) {
      if (p.analysis[i].name.empty()) error("/analysis/" + std::to_string(i) + "/name", "analysis name is empty");
    }
  }

  void check(const DiscretizationPolicy& p) {
    head(p.head);
    if (p.operators.empty()) error("/operators", "no operator schemas");
    std::set<std::string> names;
    for (std::size_t i = 0; i < p.operators.size(); ++i) {
      const auto& o = p.operators[i];
      const std::string w = "/operators/" + std::to_string(i);
      if (!names.insert(o.operator_name).second) {
        error(w + "/operator", "operator '" + o.operator_name + "' mapped twice");
      }
      if (o.schema.empty()) error(w + "/schema", "schema is empty");
      if (o.accuracy < 2 || o.accuracy % 2 != 0) error(w + "/parameters/accuracy", "accuracy must be an even number >= 2");
      for (int m : o.direct_orders) {
        if (m < 1) error(w + "/parameters/direct_orders", "direct orders must be positive");
      }
      if (std::find(o.direct_orders.begin(), o.direct_orders.end(), 1) == o.direct_orders.end()) {
        error(w + "/parameters/direct_orders", "a first-derivative stencil is required");
      }
      for (std::size_t k = 0; k < o.stencils.size(); ++k) {
        const auto& s = o.stencils[k];
        const std::string ws = w + "/stencils/" + std::to_string(k);
        std::set<int> distinct(s.offsets.begin(), s.offsets.end());
        if (distinct.size() != s.offsets.size()) error(ws + "/offsets", "offsets must be distinct");
        if (s.order < 1) error(ws + "/order", "order must be positive");
        if (static_cast<int>(s.offsets.size()) <= s.order) error(ws + "/offsets", "need more points than the order");
      }
    }
    if (p.time.schema != "RK3" && p.time.schema != "RK3 with dissipation") {
      error("/time_integration/schema", "unknown time schema '" + p.time.schema + "'");
    }
    if (p.time.dissipation < 0.0 || !std::isfinite(p.time.dissipation)) {
      error("/time_integration/dissipation", "dissipation strength must be >= 0");
    }
    if (p.time.dissipation_order < 1) error("/time_integration/dissipation_order", "order must be >= 1");
    if (!p.problem.empty() && store_ != nullptr && !store_->find(p.problem)) {
      error("/problem", "referenced document '" + p.problem + "' not found");
    }
  }

  void check(const DiscretizedProblem& d) {
    head(d.head);
    {
      Checker inner(nullptr);
      inner.check(d.model);
      nest(inner, "/model");
    }
    {
      DocumentStore local;
      local.add(d.model);
      Checker inner(&local);
      inner.check(d.problem);
      nest(inner, "/problem");
    }
    const auto& k = d.kernel;
    if (k.fields != d.problem.fields) error("/kernel/fields", "kernel fields differ from the problem's");
    if (k.axes != d.problem.coordinates.spatial) error("/kernel/axes", "kernel axes differ from the problem's");
    if (k.rhs.size() != k.fields.size()) error("/kernel/rhs", "one right-hand side per field is required");
    if (k.halo < k.dag_radius() || k.halo < k.dissipation.radius()) {
      error("/kernel/halo", "halo is smaller than the widest stencil reach");
    }
    for (std::size_t i = 0; i < k.stencils.size(); ++i) {
      const auto& s = k.stencils[i];
      if (std::find(k.axes.begin(), k.axes.end(), s.axis) == k.axes.end()) {
        error("/kernel/stencils/" + std::to_string(i) + "/axis", "unknown axis '" + s.axis + "'");
      }
    }
    if (d.equations.size() != k.fields.size()) error("/equations", "one printed equation per field is required");
  }

  void nest(const Checker& inner, const std::string& prefix) {
    for (const auto& d : inner.out) {
      out.push_back({d.severity, prefix + (d.locator == "/" ? "" : d.locator), d.message});
    }
  }

  // ---- agent based -------------------------------------------------------

  void rules(const std::vector<Rule>& gather, const std::vector<Rule>& update,
             const std::vector<std::string>& order, const std::vector<std::string>& properties,
             simml::Family family) {
    if (gather.empty() && update.empty()) error("/rules", "at least one rule is required");
    std::set<std::string> names;
    auto each = [&](const std::vector<Rule>& rs, const char* key, simml::Phase phase) {
      for (std::size_t i = 0; i < rs.size(); ++i) {
        const std::string w = std::string("/rules/") + key + "/" + std::to_string(i);
        if (!names.insert(rs[i].name).second) error(w + "/name", "duplicate rule '" + rs[i].name + "'");
        if (std::find(properties.begin(), properties.end(), rs[i].property) == properties.end()) {
          error(w + "/property", "rule writes undeclared property '" + rs[i].property + "'");
        }
        lint(rs[i].algorithm, family, phase, w + "/algorithm");
      }
    };
    each(gather, "gather", simml::Phase::gather);
    each(update, "update", simml::Phase::update);
    if (order.empty()) error("/execution_order", "execution order is empty");
    for (std::size_t i = 0; i < order.size(); ++i) {
      if (names.count(order[i]) == 0) {
        error("/execution_order/" + std::to_string(i), "unknown rule '" + order[i] + "'");
      }
    }
  }

  void check(const AbmGraphModel& m) {
    head(m.head);
    if (m.vertex_properties.empty()) error("/vertex_properties", "at least one vertex property is required");
    unique(m.vertex_properties, "/vertex_properties", "property");
    unique(m.parameters, "/parameters", "parameter");
    rules(m.gather_rules, m.update_rules, m.execution_order, m.vertex_properties, simml::Family::abm_graph);
  }

  void check(const AbmSpatialModel& m) {
    head(m.head);
    if (m.coordinates.empty()) error("/coordinates", "at least one coordinate is required");
    unique(m.coordinates, "/coordinates", "coordinate");
    if (m.agent_properties.empty()) error("/agent_properties", "at least one agent property is required");
    unique(m.agent_properties, "/agent_properties", "property");
    unique(m.parameters, "/parameters", "parameter");
    auto writable = m.agent_properties;
    writable.insert(writable.end(), m.coordinates.begin(), m.coordinates.end());
    rules(m.gather_rules, m.update_rules, m.execution_order, writable, simml::Family::abm_spatial);
  }

  void check(const AbmGraphProblem& p) {
    head(p.head);
    unique(p.vertex_properties, "/vertex_properties", "property");
    parameters(p.parameters);
    if (auto m = resolve<AbmGraphModel>(p.model, "/model", "abm_graph_model")) {
      same_set(p.vertex_properties, m->vertex_properties, "/vertex_properties", "property");
      covers_parameters(p.parameters, m->parameters);
    }
    const auto& g = p.graph;
    if (g.from_file) {
      if (g.path.empty()) error("/graph/path", "graph file path is empty");
    } else {
      const std::int64_t v = g.vertices;
      if (v < 1) error("/graph/vertices", "vertex count must be positive");
      switch (g.distribution) {
        case Distribution::random: {
          const std::int64_t cap = g.directed ? v * (v - 1) : v * (v - 1) / 2;
          if (g.edges < 0 || g.edges > cap) error("/graph/edges", "edge count is infeasible for " + std::to_string(v) + " vertices");
          if (g.min_in_degree < 0 || (v > 0 && g.min_in_degree > v - 1)) {
            error("/graph/min_in_degree", "min_in_degree must lie in [0, vertices-1]");
          } else if (g.min_in_degree * v > g.edges * (g.directed ? 1 : 2)) {
            error("/graph/min_in_degree", "too few edges to give every vertex the minimum in-degree");
          }
          break;
        }
        case Distribution::scale_free:
          if (g.attachment < 1 || g.attachment >= v) error("/graph/attachment", "attachment must lie in [1, vertices-1]");
          break;
        case Distribution::circular:
          if (v < 2) error("/graph/vertices", "a ring needs at least two vertices");
          break;
      }
    }
    auto props = p.vertex_properties;
    lint(p.initial_condition, simml::Family::abm_graph, simml::Phase::init, "/initial_condition");
    finalization(p.finalization, {"$in", "$gnov", "$gnoe", "pi"});
    for (std::size_t i = 0; i < p.output_properties.size(); ++i) {
      if (std::find(props.begin(), props.end(), p.output_properties[i]) == props.end()) {
        error("/output_properties/" + std::to_string(i), "unknown property '" + p.output_properties[i] + "'");
      }
    }
  }

  void check(const AbmSpatialProblem& p) {
    head(p.head);
    unique(p.coordinates, "/coordinates", "coordinate");
    unique(p.agent_properties, "/agent_properties", "property");
    parameters(p.parameters);
    if (auto m = resolve<AbmSpatialModel>(p.model, "/model", "abm_spatial_model")) {
      same_set(p.agent_properties, m->agent_properties, "/agent_properties", "property");
      same_set(p.coordinates, m->coordinates, "/coordinates", "coordinate");
      covers_parameters(p.parameters, m->parameters);
    }
    domain(p.domain, p.coordinates, "/domain");
    if (p.agents < 1) error("/agents", "agent count must be positive");
    if (!(p.radius > 0.0)) error("/radius", "interaction radius must be positive");
    lint(p.initial_condition, simml::Family::abm_spatial, simml::Phase::init, "/initial_condition");
    finalization(p.finalization, {"$in", "$gnoa", "pi"});
    for (std::size_t i = 0; i < p.output_properties.size(); ++i) {
      const auto& n = p.output_properties[i];
      if (std::find(p.agent_properties.begin(), p.agent_properties.end(), n) == p.agent_properties.end()) {
        error("/output_properties/" + std::to_string(i), "unknown property '" + n + "'");
      }
    }
    if (!p.order_parameter.empty() &&
        std::find(p.agent_properties.begin(), p.agent_properties.end(), p.order_parameter) == p.agent_properties.end()) {
      error("/order_parameter", "unknown property '" + p.order_parameter + "'");
    }
  }

 private:
  const DocumentStore* store_;
};

}  // namespace

std::vector<Diagnostic> validate(const Document& doc, const DocumentStore* store) {
  Checker c(store);
  std::visit([&](const auto& d) { c.check(d); }, doc);
  return std::move(c.out);
}

}  // namespace simflow::doc
