// JSON <-> typed documents.

#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

#include "json.hpp"
#include "simflow/docmodel.hpp"

namespace simflow::doc {

using nlohmann::json;

namespace {

/// Reads a JSON tree into typed structs, collecting every problem with its
/// locator instead of stopping at the first.
class Reader {
 public:
  std::vector<Diagnostic> diagnostics;

  // Any key of a visited object that was never asked for is a typo or a stray.
  void report_unknown_keys() {
    for (const auto& r : read_) {
      for (const auto& [key, value] : r.object->items()) {
        if (!r.keys.count(key)) error(r.where + "/" + key, "unknown element '" + key + "'");
      }
    }
  }

  void error(const std::string& where, std::string message) {
    diagnostics.push_back({Severity::error, where.empty() ? "/" : where, std::move(message)});
  }

  const json* field(const json& j, const std::string& key, const std::string& where, bool required = true) {
    if (!j.is_object()) {
      error(where, "expected an object");
      return nullptr;
    }
    auto [slot, fresh] = visited_.try_emplace(&j, read_.size());
    if (fresh) read_.push_back({&j, where, {}});
    read_[slot->second].keys.insert(key);
    auto it = j.find(key);
    if (it == j.end()) {
      if (required) error(where + "/" + key, "missing required element '" + key + "'");
      return nullptr;
    }
    return &*it;
  }

  std::string string(const json& j, const std::string& key, const std::string& where,
                     bool required = true, std::string fallback = {}) {
    const json* v = field(j, key, where, required);
    if (v == nullptr) return fallback;
    if (!v->is_string()) {
      error(where + "/" + key, "expected a string");
      return fallback;
    }
    return v->get<std::string>();
  }

  double number(const json& j, const std::string& key, const std::string& where, bool required = true,
                double fallback = 0.0) {
    const json* v = field(j, key, where, required);
    if (v == nullptr) return fallback;
    if (!v->is_number()) {
      error(where + "/" + key, "expected a number");
      return fallback;
    }
    return v->get<double>();
  }

  std::int64_t integer(const json& j, const std::string& key, const std::string& where,
                       bool required = true, std::int64_t fallback = 0) {
    const json* v = field(j, key, where, required);
    if (v == nullptr) return fallback;
    if (!v->is_number_integer()) {
      error(where + "/" + key, "expected an integer");
      return fallback;
    }
    return v->get<std::int64_t>();
  }

  bool boolean(const json& j, const std::string& key, const std::string& where, bool required,
               bool fallback) {
    const json* v = field(j, key, where, required);
    if (v == nullptr) return fallback;
    if (!v->is_boolean()) {
      error(where + "/" + key, "expected true or false");
      return fallback;
    }
    return v->get<bool>();
  }

  std::vector<std::string> strings(const json& j, const std::string& key, const std::string& where,
                                   bool required = true) {
    std::vector<std::string> out;
    const json* v = field(j, key, where, required);
    if (v == nullptr) return out;
    if (!v->is_array()) {
      error(where + "/" + key, "expected a list of strings");
      return out;
    }
    for (std::size_t i = 0; i < v->size(); ++i) {
      if (!(*v)[i].is_string()) {
        error(where + "/" + key + "/" + std::to_string(i), "expected a string");
        continue;
      }
      out.push_back((*v)[i].get<std::string>());
    }
    return out;
  }

  std::vector<int> ints(const json& j, const std::string& key, const std::string& where,
                        bool required = true) {
    std::vector<int> out;
    const json* v = field(j, key, where, required);
    if (v == nullptr) return out;
    if (!v->is_array()) {
      error(where + "/" + key, "expected a list of integers");
      return out;
    }
    for (std::size_t i = 0; i < v->size(); ++i) {
      if (!(*v)[i].is_number_integer()) {
        error(where + "/" + key + "/" + std::to_string(i), "expected an integer");
        continue;
      }
      out.push_back((*v)[i].get<int>());
    }
    return out;
  }

  const json* array(const json& j, const std::string& key, const std::string& where, bool required = true) {
    const json* v = field(j, key, where, required);
    if (v == nullptr) return nullptr;
    if (!v->is_array()) {
      error(where + "/" + key, "expected a list");
      return nullptr;
    }
    return v;
  }

  MathText math(const std::string& text, const expr::SymbolTable& symbols, const std::string& where) {
    MathText m{text, {}};
    try {
      m.ast = expr::parse_expression(text, symbols);
    } catch (const expr::ParseError& e) {
      error(where, e.what());
    }
    return m;
  }

  Head head(const json& j) {
    Head h;
    const json* hj = field(j, "head", "");
    if (hj == nullptr) return h;
    h.name = string(*hj, "name", "/head");
    h.id = string(*hj, "id", "/head");
    h.author = string(*hj, "author", "/head", false);
    h.version = string(*hj, "version", "/head", false);
    h.date = string(*hj, "date", "/head", false);
    return h;
  }

  // ---- algorithms --------------------------------------------------------

  simml::Algorithm algorithm(const json& j, expr::SymbolTable& symbols, const std::string& where) {
    simml::Algorithm out;
    if (!j.is_array()) {
      error(where, "expected a list of statements");
      return out;
    }
    for (std::size_t i = 0; i < j.size(); ++i) {
      if (auto s = statement(j[i], symbols, where + "/" + std::to_string(i))) {
        out.push_back(std::move(*s));
      }
    }
    return out;
  }

  std::optional<simml::Statement> statement(const json& j, expr::SymbolTable& symbols,
                                            const std::string& where) {
    using namespace simml;
    if (j.is_string()) {
      try {
        return Statement{parse_assignment(j.get<std::string>(), symbols)};
      } catch (const std::exception& e) {
        error(where, e.what());
        return std::nullopt;
      }
    }
    if (!j.is_object()) {
      error(where, "expected a statement");
      return std::nullopt;
    }
    if (j.contains("if")) {
      IfThenElse s;
      s.condition_text = string(j, "if", where);
      s.condition = math(s.condition_text, symbols, where + "/if").ast;
      if (const json* t = field(j, "then", where)) s.then_branch = algorithm(*t, symbols, where + "/then");
      if (const json* e = field(j, "else", where, false)) {
        s.else_branch = algorithm(*e, symbols, where + "/else");
      }
      return Statement{std::move(s)};
    }
    if (j.contains("while")) {
      While s;
      s.condition_text = string(j, "while", where);
      s.condition = math(s.condition_text, symbols, where + "/while").ast;
      if (const json* b = field(j, "do", where)) s.body = algorithm(*b, symbols, where + "/do");
      return Statement{std::move(s)};
    }
    if (j.contains("iterate_over_edges")) {
      IterateOverEdges s;
      const std::string dir = string(j, "iterate_over_edges", where);
      if (dir == "in") s.direction = EdgeDirection::in;
      else if (dir == "out") s.direction = EdgeDirection::out;
      else error(where + "/iterate_over_edges", "edge direction must be 'in' or 'out'");
      if (const json* b = field(j, "do", where)) s.body = algorithm(*b, symbols, where + "/do");
      return Statement{std::move(s)};
    }
    if (j.contains("iterate_over_interactions")) {
      IterateOverInteractions s;
      s.body = algorithm(*field(j, "iterate_over_interactions", where), symbols, where + "/iterate_over_interactions");
      return Statement{std::move(s)};
    }
    for (auto [key, kind] : {std::pair{"iterate_over_cells", SweepKind::cells},
                             std::pair{"iterate_over_vertices", SweepKind::vertices},
                             std::pair{"iterate_over_agents", SweepKind::agents}}) {
      if (j.contains(key)) {
        Sweep s{kind, algorithm(*field(j, key, where), symbols, where + "/" + key)};
        return Statement{std::move(s)};
      }
    }
    if (j.size() == 1 && is_unsupported_tag(j.begin().key())) {
      return Statement{Unsupported{j.begin().key(), j.dump()}};
    }
    error(where, "unknown statement " + j.dump());
    return std::nullopt;
  }

  // ---- generic PDE -------------------------------------------------------

  Coordinates coordinates(const json& j) {
    Coordinates c;
    if (const json* cj = field(j, "coordinates", "")) {
      c.spatial = strings(*cj, "spatial", "/coordinates");
      c.time = string(*cj, "time", "/coordinates");
    }
    return c;
  }

  TermNode term(const json& j, const expr::SymbolTable& symbols, const std::string& where) {
    if (j.is_object() && j.contains("math")) {
      const std::string text = string(j, "math", where);
      return TermNode{Algebraic{math(text, symbols, where + "/math")}};
    }
    if (j.is_object() && j.contains("derivative")) {
      const json& d = *field(j, "derivative", where);
      const std::string w = where + "/derivative";
      Derivative out;
      out.axis = string(d, "axis", w);
      if (const json* inner = field(d, "term", w)) {
        out.inner = std::make_shared<const TermNode>(term(*inner, symbols, w + "/term"));
      } else {
        out.inner = std::make_shared<const TermNode>(TermNode{Sum{}});
      }
      return TermNode{std::move(out)};
    }
    if (j.is_object() && (j.contains("product") || j.contains("sum"))) {
      const bool is_product = j.contains("product");
      const std::string key = is_product ? "product" : "sum";
      std::vector<TermNode> parts;
      if (const json* a = array(j, key, where)) {
        for (std::size_t i = 0; i < a->size(); ++i) {
          parts.push_back(term((*a)[i], symbols, where + "/" + key + "/" + std::to_string(i)));
        }
      }
      if (is_product) return TermNode{Product{std::move(parts)}};
      return TermNode{Sum{std::move(parts)}};
    }
    error(where, "expected a term: one of math, derivative, product, sum");
    return TermNode{Sum{}};
  }

  GenericPdeModel pde_model(const json& j) {
    GenericPdeModel m;
    m.head = head(j);
    m.coordinates = coordinates(j);
    m.fields = strings(j, "fields", "");
    m.parameters = strings(j, "parameters", "", false);
    const auto symbols = pde_symbols(m.fields, m.parameters, m.coordinates);
    if (const json* ev = array(j, "evolution", "")) {
      for (std::size_t i = 0; i < ev->size(); ++i) {
        const std::string w = "/evolution/" + std::to_string(i);
        const json& e = (*ev)[i];
        FieldEvolution fe;
        fe.field = string(e, "field", w);
        if (const json* ops = array(e, "operators", w)) {
          for (std::size_t k = 0; k < ops->size(); ++k) {
            const std::string wo = w + "/operators/" + std::to_string(k);
            Operator op;
            op.name = string((*ops)[k], "name", wo);
            if (const json* terms = array((*ops)[k], "terms", wo)) {
              for (std::size_t t = 0; t < terms->size(); ++t) {
                op.terms.push_back(term((*terms)[t], symbols, wo + "/terms/" + std::to_string(t)));
              }
            }
            fe.operators.push_back(std::move(op));
          }
        }
        m.evolution.push_back(std::move(fe));
      }
    }
    return m;
  }

  std::vector<Parameter> parameters(const json& j) {
    std::vector<Parameter> out;
    const json* ps = array(j, "parameters", "", false);
    if (ps == nullptr) return out;
    for (std::size_t i = 0; i < ps->size(); ++i) {
      const std::string w = "/parameters/" + std::to_string(i);
      const json& pj = (*ps)[i];
      Parameter p;
      p.name = string(pj, "name", w);
      const std::string type = string(pj, "type", w);
      if (type == "INT") {
        p.type = ParamType::integer;
        p.default_value = static_cast<double>(integer(pj, "default", w));
      } else if (type == "REAL") {
        p.type = ParamType::real;
        p.default_value = number(pj, "default", w);
      } else {
        error(w + "/type", "parameter type must be INT or REAL");
      }
      out.push_back(std::move(p));
    }
    return out;
  }

  std::vector<AxisDomain> domain(const json& j, const std::string& where) {
    std::vector<AxisDomain> out;
    const json* d = array(j, "domain", where);
    if (d == nullptr) return out;
    for (std::size_t i = 0; i < d->size(); ++i) {
      const std::string w = where + "/domain/" + std::to_string(i);
      AxisDomain a;
      a.axis = string((*d)[i], "axis", w);
      a.min = number((*d)[i], "min", w);
      a.max = number((*d)[i], "max", w);
      out.push_back(std::move(a));
    }
    return out;
  }

  GenericPdeProblem pde_problem(const json& j) {
    GenericPdeProblem p;
    p.head = head(j);
    p.coordinates = coordinates(j);
    p.fields = strings(j, "fields", "");
    p.parameters = parameters(j);
    p.model = string(j, "model", "");
    const auto base = pde_symbols(p.fields, parameter_names(p.parameters), p.coordinates);
    if (const json* r = field(j, "region", "")) {
      p.region.name = string(*r, "name", "/region");
      p.region.domain = domain(*r, "/region");
      if (const json* ic = field(*r, "initial_condition", "/region")) {
        auto symbols = base;
        p.region.initial_condition = algorithm(*ic, symbols, "/region/initial_condition");
      }
    }
    if (const json* bs = array(j, "boundaries", "")) {
      for (std::size_t i = 0; i < bs->size(); ++i) {
        const std::string w = "/boundaries/" + std::to_string(i);
        BoundaryCondition b;
        b.name = string((*bs)[i], "name", w);
        b.type = string((*bs)[i], "type", w);
        b.axis = string((*bs)[i], "axis", w, false, "all");
        b.side = string((*bs)[i], "side", w, false, "all");
        p.boundaries.push_back(std::move(b));
      }
    }
    p.boundary_precedence = strings(j, "boundary_precedence", "");
    p.finalization = math(string(j, "finalization", ""), base, "/finalization");
    if (const json* as = array(j, "analysis", "", false)) {
      for (std::size_t i = 0; i < as->size(); ++i) {
        const std::string w = "/analysis/" + std::to_string(i);
        AnalysisQuantity q;
        q.name = string((*as)[i], "name", w);
        q.expression = math(string((*as)[i], "expression", w), base, w + "/expression");
        p.analysis.push_back(std::move(q));
      }
    }
    return p;
  }

  DiscretizationPolicy policy(const json& j) {
    DiscretizationPolicy p;
    p.head = head(j);
    p.problem = string(j, "problem", "", false);
    if (const json* ops = array(j, "operators", "")) {
      for (std::size_t i = 0; i < ops->size(); ++i) {
        const std::string w = "/operators/" + std::to_string(i);
        const json& oj = (*ops)[i];
        OperatorPolicy o;
        o.operator_name = string(oj, "operator", w);
        o.schema = string(oj, "schema", w);
        if (const json* params = field(oj, "parameters", w, false)) {
          const std::string wp = w + "/parameters";
          o.accuracy = static_cast<int>(integer(*params, "accuracy", wp, false, 4));
          o.recursive = boolean(*params, "recursive", wp, false, true);
          if (params->contains("direct_orders")) o.direct_orders = ints(*params, "direct_orders", wp);
        }
        if (const json* st = array(oj, "stencils", w, false)) {
          for (std::size_t k = 0; k < st->size(); ++k) {
            const std::string ws = w + "/stencils/" + std::to_string(k);
            StencilSpec s;
            s.order = static_cast<int>(integer((*st)[k], "order", ws));
            s.offsets = ints((*st)[k], "offsets", ws);
            o.stencils.push_back(std::move(s));
          }
        }
        p.operators.push_back(std::move(o));
      }
    }
    if (const json* t = field(j, "time_integration", "")) {
      p.time.schema = string(*t, "schema", "/time_integration");
      p.time.dissipation = number(*t, "dissipation", "/time_integration", false, 0.0);
      p.time.dissipation_order =
          static_cast<int>(integer(*t, "dissipation_order", "/time_integration", false, 3));
    }
    return p;
  }

  disc::KernelProgram kernel(const json& j, const expr::SymbolTable& symbols) {
    using namespace disc;
    const std::string w = "/kernel";
    KernelProgram k;
    k.fields = strings(j, "fields", w);
    k.axes = strings(j, "axes", w);
    k.time = string(j, "time", w);
    k.halo = static_cast<int>(integer(j, "halo", w));
    if (const json* d = field(j, "dissipation", w)) {
      k.dissipation.order = static_cast<int>(integer(*d, "order", w + "/dissipation"));
      k.dissipation.strength = number(*d, "strength", w + "/dissipation");
    }
    if (const json* ti = field(j, "integrator", w)) {
      k.integrator.scheme = string(*ti, "scheme", w + "/integrator");
      k.integrator.stages.clear();
      if (const json* st = array(*ti, "stages", w + "/integrator")) {
        for (std::size_t i = 0; i < st->size(); ++i) {
          const std::string ws = w + "/integrator/stages/" + std::to_string(i);
          const std::string base = string((*st)[i], "base", ws);
          const std::string prev = string((*st)[i], "prev", ws);
          try {
            k.integrator.stages.push_back({Rational(base), Rational(prev)});
          } catch (const std::exception& e) {
            error(ws, std::string("bad stage coefficient: ") + e.what());
          }
        }
      }
    }
    if (const json* st = array(j, "stencils", w)) {
      for (std::size_t i = 0; i < st->size(); ++i) {
        const std::string ws = w + "/stencils/" + std::to_string(i);
        Stencil s;
        s.axis = string((*st)[i], "axis", ws);
        s.order = static_cast<int>(integer((*st)[i], "order", ws));
        s.offsets = ints((*st)[i], "offsets", ws);
        for (const auto& text : strings((*st)[i], "weights", ws)) {
          try {
            s.weights.emplace_back(text);
          } catch (const std::exception&) {
            error(ws + "/weights", "bad rational '" + text + "'");
          }
        }
        for (const auto& r : s.weights) s.values.push_back(static_cast<double>(r));
        if (s.weights.size() != s.offsets.size()) error(ws, "weights and offsets differ in length");
        k.stencils.push_back(std::move(s));
      }
    }
    if (const json* ns = array(j, "nodes", w)) {
      for (std::size_t i = 0; i < ns->size(); ++i) {
        const std::string wn = w + "/nodes/" + std::to_string(i);
        const json& nj = (*ns)[i];
        KernelNode n;
        const std::string kind = string(nj, "kind", wn);
        if (kind == "pointwise") {
          n.kind = NodeKind::pointwise;
          n.expression = math(string(nj, "expression", wn), symbols, wn + "/expression").ast;
        } else if (kind == "stencil") {
          n.kind = NodeKind::stencil;
          n.stencil = static_cast<int>(integer(nj, "stencil", wn));
          n.inputs = ints(nj, "inputs", wn);
        } else if (kind == "sum" || kind == "product") {
          n.kind = kind == "sum" ? NodeKind::sum : NodeKind::product;
          n.inputs = ints(nj, "inputs", wn);
        } else {
          error(wn + "/kind", "unknown node kind '" + kind + "'");
        }
        for (int in : n.inputs) {
          if (in < 0 || static_cast<std::size_t>(in) >= i) {
            error(wn + "/inputs", "input must reference an earlier node");
          }
        }
        if (n.kind == NodeKind::stencil &&
            (n.stencil < 0 || static_cast<std::size_t>(n.stencil) >= k.stencils.size())) {
          error(wn + "/stencil", "stencil index out of range");
        }
        k.nodes.push_back(std::move(n));
      }
    }
    k.rhs = ints(j, "rhs", w);
    for (int r : k.rhs) {
      if (r < 0 || static_cast<std::size_t>(r) >= k.nodes.size()) error(w + "/rhs", "rhs node out of range");
    }
    return k;
  }

  DiscretizedProblem discretized(const json& j) {
    DiscretizedProblem d;
    d.head = head(j);
    d.policy = string(j, "policy", "", false);
    if (const json* p = field(j, "problem", "")) d.problem = nested<GenericPdeProblem>(*p, "/problem");
    if (const json* m = field(j, "model", "")) d.model = nested<GenericPdeModel>(*m, "/model");
    const auto symbols = pde_symbols(d.problem.fields, parameter_names(d.problem.parameters),
                                     d.problem.coordinates);
    if (const json* k = field(j, "kernel", "")) d.kernel = kernel(*k, symbols);
    d.equations = strings(j, "equations", "");
    return d;
  }

  template <typename T>
  T nested(const json& j, const std::string& where) {
    Reader inner;
    T out;
    if constexpr (std::is_same_v<T, GenericPdeProblem>) out = inner.pde_problem(j);
    else out = inner.pde_model(j);
    for (auto& d : inner.diagnostics) {
      diagnostics.push_back({d.severity, where + (d.locator == "/" ? "" : d.locator), d.message});
    }
    return out;
  }

  // ---- agent based -------------------------------------------------------

  std::vector<Rule> rules(const json& j, const std::string& key, RuleKind kind,
                          const expr::SymbolTable& base, const std::string& where) {
    std::vector<Rule> out;
    const json* rs = array(j, key, where, false);
    if (rs == nullptr) return out;
    for (std::size_t i = 0; i < rs->size(); ++i) {
      const std::string w = where + "/" + key + "/" + std::to_string(i);
      Rule r;
      r.kind = kind;
      r.name = string((*rs)[i], "name", w);
      r.property = string((*rs)[i], "property", w);
      if (const json* a = field((*rs)[i], "algorithm", w)) {
        auto symbols = base;
        r.algorithm = algorithm(*a, symbols, w + "/algorithm");
      }
      out.push_back(std::move(r));
    }
    return out;
  }

  AbmGraphModel graph_model(const json& j) {
    AbmGraphModel m;
    m.head = head(j);
    m.vertex_properties = strings(j, "vertex_properties", "");
    m.parameters = strings(j, "parameters", "", false);
    const auto base = graph_symbols(m.vertex_properties, m.parameters);
    if (const json* r = field(j, "rules", "")) {
      m.gather_rules = rules(*r, "gather", RuleKind::gather, base, "/rules");
      m.update_rules = rules(*r, "update", RuleKind::update, base, "/rules");
    }
    m.execution_order = strings(j, "execution_order", "");
    return m;
  }

  AbmSpatialModel spatial_model(const json& j) {
    AbmSpatialModel m;
    m.head = head(j);
    m.coordinates = strings(j, "coordinates", "");
    m.agent_properties = strings(j, "agent_properties", "");
    m.parameters = strings(j, "parameters", "", false);
    m.include_self = boolean(j, "include_self", "", false, true);
    const auto base = spatial_symbols(m.agent_properties, m.coordinates, m.parameters);
    if (const json* r = field(j, "rules", "")) {
      m.gather_rules = rules(*r, "gather", RuleKind::gather, base, "/rules");
      m.update_rules = rules(*r, "update", RuleKind::update, base, "/rules");
    }
    m.execution_order = strings(j, "execution_order", "");
    return m;
  }

  SnapshotPolicy snapshot(const json& j) {
    const std::string s = string(j, "snapshot", "", false, "per_rule");
    if (s == "per_rule") return SnapshotPolicy::per_rule;
    if (s == "per_step") return SnapshotPolicy::per_step;
    error("/snapshot", "snapshot must be 'per_rule' or 'per_step'");
    return SnapshotPolicy::per_rule;
  }

  GraphSpec graph_spec(const json& j) {
    GraphSpec g;
    const std::string w = "/graph";
    const std::string source = string(j, "source", w, false, "generated");
    g.directed = boolean(j, "directed", w, false, true);
    if (source == "file") {
      g.from_file = true;
      g.path = string(j, "path", w);
      return g;
    }
    if (source != "generated") error(w + "/source", "graph source must be 'generated' or 'file'");
    const std::string dist = string(j, "distribution", w);
    if (dist == "random") g.distribution = Distribution::random;
    else if (dist == "scale_free") g.distribution = Distribution::scale_free;
    else if (dist == "circular") g.distribution = Distribution::circular;
    else error(w + "/distribution", "distribution must be random, scale_free or circular");
    g.vertices = integer(j, "vertices", w);
    g.edges = integer(j, "edges", w, g.distribution == Distribution::random, 0);
    g.attachment = integer(j, "attachment", w, false, 2);
    g.min_in_degree = integer(j, "min_in_degree", w, false, 0);
    return g;
  }

  AbmGraphProblem graph_problem(const json& j) {
    AbmGraphProblem p;
    p.head = head(j);
    p.vertex_properties = strings(j, "vertex_properties", "");
    p.parameters = parameters(j);
    p.model = string(j, "model", "");
    if (const json* g = field(j, "graph", "")) p.graph = graph_spec(*g);
    const std::string step = string(j, "evolution_step", "", false, "all");
    if (step == "all") p.evolution_step = EvolutionStep::all;
    else if (step == "one") p.evolution_step = EvolutionStep::one;
    else error("/evolution_step", "evolution_step must be 'all' or 'one'");
    p.snapshot = snapshot(j);
    const auto base = graph_symbols(p.vertex_properties, parameter_names(p.parameters));
    if (const json* ic = field(j, "initial_condition", "", false)) {
      auto symbols = base;
      p.initial_condition = algorithm(*ic, symbols, "/initial_condition");
    }
    p.finalization = math(string(j, "finalization", ""), base, "/finalization");
    p.output_properties = strings(j, "output_properties", "", false);
    return p;
  }

  AbmSpatialProblem spatial_problem(const json& j) {
    AbmSpatialProblem p;
    p.head = head(j);
    p.coordinates = strings(j, "coordinates", "");
    p.agent_properties = strings(j, "agent_properties", "");
    p.parameters = parameters(j);
    p.model = string(j, "model", "");
    p.domain = domain(j, "");
    p.agents = integer(j, "agents", "");
    p.radius = number(j, "radius", "");
    p.snapshot = snapshot(j);
    const auto base = spatial_symbols(p.agent_properties, p.coordinates, parameter_names(p.parameters));
    if (const json* ic = field(j, "initial_condition", "", false)) {
      auto symbols = base;
      p.initial_condition = algorithm(*ic, symbols, "/initial_condition");
    }
    p.finalization = math(string(j, "finalization", ""), base, "/finalization");
    p.output_properties = strings(j, "output_properties", "", false);
    p.order_parameter = string(j, "order_parameter", "", false);
    return p;
  }

  std::optional<Document> document(const json& j) {
    if (!j.is_object()) {
      error("", "document must be a JSON object");
      return std::nullopt;
    }
    const std::string kind = string(j, "kind", "");
    if (kind == "generic_pde_model") return pde_model(j);
    if (kind == "generic_pde_problem") return pde_problem(j);
    if (kind == "discretization_policy") return policy(j);
    if (kind == "discretized_problem") return discretized(j);
    if (kind == "abm_graph_model") return graph_model(j);
    if (kind == "abm_spatial_model") return spatial_model(j);
    if (kind == "abm_graph_problem") return graph_problem(j);
    if (kind == "abm_spatial_problem") return spatial_problem(j);
    if (!kind.empty()) error("/kind", "unknown document kind '" + kind + "'");
    return std::nullopt;
  }

 private:
  struct Visited {
    const json* object;
    std::string where;
    std::set<std::string> keys;
  };
  std::unordered_map<const json*, std::size_t> visited_;
  std::vector<Visited> read_;
};

// ---- writing -------------------------------------------------------------

json write_head(const Head& h) {
  return json{{"name", h.name}, {"id", h.id}, {"author", h.author}, {"version", h.version}, {"date", h.date}};
}

json write_algorithm(const simml::Algorithm& a);

json write_statement(const simml::Statement& s) {
  using namespace simml;
  return std::visit(
      [](const auto& x) -> json {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, Assign>) {
          return x.text;
        } else if constexpr (std::is_same_v<T, IfThenElse>) {
          json j{{"if", x.condition_text}, {"then", write_algorithm(x.then_branch)}};
          if (x.else_branch) j["else"] = write_algorithm(*x.else_branch);
          return j;
        } else if constexpr (std::is_same_v<T, While>) {
          return json{{"while", x.condition_text}, {"do", write_algorithm(x.body)}};
        } else if constexpr (std::is_same_v<T, IterateOverEdges>) {
          return json{{"iterate_over_edges", x.direction == EdgeDirection::in ? "in" : "out"},
                      {"do", write_algorithm(x.body)}};
        } else if constexpr (std::is_same_v<T, IterateOverInteractions>) {
          return json{{"iterate_over_interactions", write_algorithm(x.body)}};
        } else if constexpr (std::is_same_v<T, Sweep>) {
          const char* key = x.kind == SweepKind::cells      ? "iterate_over_cells"
                            : x.kind == SweepKind::vertices ? "iterate_over_vertices"
                                                            : "iterate_over_agents";
          return json{{key, write_algorithm(x.body)}};
        } else {
          return json::parse(x.raw);
        }
      },
      s.value);
}

json write_algorithm(const simml::Algorithm& a) {
  json out = json::array();
  for (const auto& s : a) out.push_back(write_statement(s));
  return out;
}

json write_term(const TermNode& t) {
  return std::visit(
      [](const auto& x) -> json {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, Algebraic>) {
          return json{{"math", x.math.text}};
        } else if constexpr (std::is_same_v<T, Derivative>) {
          return json{{"derivative", json{{"axis", x.axis}, {"term", write_term(*x.inner)}}}};
        } else if constexpr (std::is_same_v<T, Product>) {
          json a = json::array();
          for (const auto& f : x.factors) a.push_back(write_term(f));
          return json{{"product", a}};
        } else {
          json a = json::array();
          for (const auto& f : x.terms) a.push_back(write_term(f));
          return json{{"sum", a}};
        }
      },
      t.value);
}

json write_coordinates(const Coordinates& c) { return json{{"spatial", c.spatial}, {"time", c.time}}; }

json write_parameters(const std::vector<Parameter>& ps) {
  json out = json::array();
  for (const auto& p : ps) {
    json j{{"name", p.name}, {"type", p.type == ParamType::integer ? "INT" : "REAL"}};
    if (p.type == ParamType::integer) j["default"] = static_cast<std::int64_t>(p.default_value);
    else j["default"] = p.default_value;
    out.push_back(std::move(j));
  }
  return out;
}

json write_domain(const std::vector<AxisDomain>& d) {
  json out = json::array();
  for (const auto& a : d) out.push_back(json{{"axis", a.axis}, {"min", a.min}, {"max", a.max}});
  return out;
}

json write_rules(const std::vector<Rule>& rs) {
  json out = json::array();
  for (const auto& r : rs) {
    out.push_back(json{{"name", r.name}, {"property", r.property}, {"algorithm", write_algorithm(r.algorithm)}});
  }
  return out;
}

const char* snapshot_name(SnapshotPolicy s) { return s == SnapshotPolicy::per_rule ? "per_rule" : "per_step"; }

json write_rational(const disc::Rational& r) { return r.str(); }

json write_kernel(const disc::KernelProgram& k) {
  using namespace disc;
  json stencils = json::array();
  for (const auto& s : k.stencils) {
    json weights = json::array();
    for (const auto& w : s.weights) weights.push_back(write_rational(w));
    stencils.push_back(json{{"axis", s.axis}, {"order", s.order}, {"offsets", s.offsets}, {"weights", weights}});
  }
  json nodes = json::array();
  for (const auto& n : k.nodes) {
    switch (n.kind) {
      case NodeKind::pointwise:
        nodes.push_back(json{{"kind", "pointwise"}, {"expression", expr::print(n.expression)}});
        break;
      case NodeKind::stencil:
        nodes.push_back(json{{"kind", "stencil"}, {"stencil", n.stencil}, {"inputs", n.inputs}});
        break;
      case NodeKind::sum:
      case NodeKind::product:
        nodes.push_back(json{{"kind", n.kind == NodeKind::sum ? "sum" : "product"}, {"inputs", n.inputs}});
        break;
    }
  }
  json stages = json::array();
  for (const auto& s : k.integrator.stages) {
    stages.push_back(json{{"base", write_rational(s.base)}, {"prev", write_rational(s.prev)}});
  }
  return json{{"fields", k.fields},
              {"axes", k.axes},
              {"time", k.time},
              {"halo", k.halo},
              {"dissipation", json{{"order", k.dissipation.order}, {"strength", k.dissipation.strength}}},
              {"integrator", json{{"scheme", k.integrator.scheme}, {"stages", stages}}},
              {"stencils", stencils},
              {"nodes", nodes},
              {"rhs", k.rhs}};
}

json write_doc(const Document& doc);

json write(const GenericPdeModel& m) {
  json ev = json::array();
  for (const auto& fe : m.evolution) {
    json ops = json::array();
    for (const auto& op : fe.operators) {
      json terms = json::array();
      for (const auto& t : op.terms) terms.push_back(write_term(t));
      ops.push_back(json{{"name", op.name}, {"terms", terms}});
    }
    ev.push_back(json{{"field", fe.field}, {"operators", ops}});
  }
  return json{{"kind", "generic_pde_model"},
              {"head", write_head(m.head)},
              {"coordinates", write_coordinates(m.coordinates)},
              {"fields", m.fields},
              {"parameters", m.parameters},
              {"evolution", ev}};
}

json write(const GenericPdeProblem& p) {
  json bcs = json::array();
  for (const auto& b : p.boundaries) {
    bcs.push_back(json{{"name", b.name}, {"type", b.type}, {"axis", b.axis}, {"side", b.side}});
  }
  json j{{"kind", "generic_pde_problem"},
         {"head", write_head(p.head)},
         {"coordinates", write_coordinates(p.coordinates)},
         {"fields", p.fields},
         {"parameters", write_parameters(p.parameters)},
         {"model", p.model},
         {"region", json{{"name", p.region.name},
                         {"domain", write_domain(p.region.domain)},
                         {"initial_condition", write_algorithm(p.region.initial_condition)}}},
         {"boundaries", bcs},
         {"boundary_precedence", p.boundary_precedence},
         {"finalization", p.finalization.text}};
  if (!p.analysis.empty()) {
    json as = json::array();
    for (const auto& a : p.analysis) as.push_back(json{{"name", a.name}, {"expression", a.expression.text}});
    j["analysis"] = as;
  }
  return j;
}

json write(const DiscretizationPolicy& p) {
  json ops = json::array();
  for (const auto& o : p.operators) {
    json j{{"operator", o.operator_name},
           {"schema", o.schema},
           {"parameters", json{{"accuracy", o.accuracy}, {"recursive", o.recursive}, {"direct_orders", o.direct_orders}}}};
    if (!o.stencils.empty()) {
      json st = json::array();
      for (const auto& s : o.stencils) st.push_back(json{{"order", s.order}, {"offsets", s.offsets}});
      j["stencils"] = st;
    }
    ops.push_back(std::move(j));
  }
  json j{{"kind", "discretization_policy"},
         {"head", write_head(p.head)},
         {"operators", ops},
         {"time_integration", json{{"schema", p.time.schema},
                                   {"dissipation", p.time.dissipation},
                                   {"dissipation_order", p.time.dissipation_order}}}};
  if (!p.problem.empty()) j["problem"] = p.problem;
  return j;
}

json write(const DiscretizedProblem& d) {
  json j{{"kind", "discretized_problem"},
         {"head", write_head(d.head)},
         {"problem", write(d.problem)},
         {"model", write(d.model)},
         {"kernel", write_kernel(d.kernel)},
         {"equations", d.equations}};
  if (!d.policy.empty()) j["policy"] = d.policy;
  return j;
}

json write(const AbmGraphModel& m) {
  return json{{"kind", "abm_graph_model"},
              {"head", write_head(m.head)},
              {"vertex_properties", m.vertex_properties},
              {"parameters", m.parameters},
              {"rules", json{{"gather", write_rules(m.gather_rules)}, {"update", write_rules(m.update_rules)}}},
              {"execution_order", m.execution_order}};
}

json write(const AbmSpatialModel& m) {
  return json{{"kind", "abm_spatial_model"},
              {"head", write_head(m.head)},
              {"coordinates", m.coordinates},
              {"agent_properties", m.agent_properties},
              {"parameters", m.parameters},
              {"include_self", m.include_self},
              {"rules", json{{"gather", write_rules(m.gather_rules)}, {"update", write_rules(m.update_rules)}}},
              {"execution_order", m.execution_order}};
}

json write(const AbmGraphProblem& p) {
  json g;
  if (p.graph.from_file) {
    g = json{{"source", "file"}, {"path", p.graph.path}, {"directed", p.graph.directed}};
  } else {
    const char* dist = p.graph.distribution == Distribution::random       ? "random"
                       : p.graph.distribution == Distribution::scale_free ? "scale_free"
                                                                          : "circular";
    g = json{{"source", "generated"},
             {"directed", p.graph.directed},
             {"distribution", dist},
             {"vertices", p.graph.vertices},
             {"edges", p.graph.edges},
             {"attachment", p.graph.attachment},
             {"min_in_degree", p.graph.min_in_degree}};
  }
  return json{{"kind", "abm_graph_problem"},
              {"head", write_head(p.head)},
              {"vertex_properties", p.vertex_properties},
              {"parameters", write_parameters(p.parameters)},
              {"model", p.model},
              {"graph", g},
              {"evolution_step", p.evolution_step == EvolutionStep::all ? "all" : "one"},
              {"snapshot", snapshot_name(p.snapshot)},
              {"initial_condition", write_algorithm(p.initial_condition)},
              {"finalization", p.finalization.text},
              {"output_properties", p.output_properties}};
}

json write(const AbmSpatialProblem& p) {
  json j{{"kind", "abm_spatial_problem"},
         {"head", write_head(p.head)},
         {"coordinates", p.coordinates},
         {"agent_properties", p.agent_properties},
         {"parameters", write_parameters(p.parameters)},
         {"model", p.model},
         {"domain", write_domain(p.domain)},
         {"agents", p.agents},
         {"radius", p.radius},
         {"snapshot", snapshot_name(p.snapshot)},
         {"initial_condition", write_algorithm(p.initial_condition)},
         {"finalization", p.finalization.text},
         {"output_properties", p.output_properties}};
  if (!p.order_parameter.empty()) j["order_parameter"] = p.order_parameter;
  return j;
}

json write_doc(const Document& doc) {
  return std::visit([](const auto& d) { return write(d); }, doc);
}

std::size_t line_of(const std::string& text, std::size_t byte) {
  std::size_t line = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') ++line;
  }
  return line;
}

}  // namespace

Document parse_document(const std::string& text, const std::string& source) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    const std::size_t line = line_of(text, e.byte == 0 ? 0 : e.byte - 1);
    throw DocumentError(source, {{Severity::error, "line " + std::to_string(line),
                                  std::string("format error: ") + e.what()}});
  }
  Reader reader;
  auto doc = reader.document(j);
  reader.report_unknown_keys();
  if (!reader.diagnostics.empty() || !doc) {
    if (reader.diagnostics.empty()) reader.error("", "unreadable document");
    throw DocumentError(source, std::move(reader.diagnostics));
  }
  return std::move(*doc);
}

Document load_document(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw DocumentError(path.string(), {{Severity::error, "", "cannot open file"}});
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_document(ss.str(), path.string());
}

std::string to_json_text(const Document& doc) { return write_doc(doc).dump(2) + "\n"; }

void save_document(const Document& doc, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << to_json_text(doc);
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace simflow::doc
