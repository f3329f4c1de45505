#include "simflow/abm_graph.hpp"

#include <algorithm>
#include <fstream>
#include <numbers>
#include <sstream>
#include <unordered_set>

#include "abm_rules.hpp"
#include "json.hpp"
#include "simflow/parallel.hpp"
#include "simflow/rng.hpp"
#include "simflow/simml.hpp"

namespace simflow::graph {

Graph::Graph(int vertices, bool directed) : vertices_(vertices), directed_(directed) {
  if (vertices < 0) throw AbmError("negative vertex count");
  in_.resize(static_cast<std::size_t>(vertices));
  out_.resize(static_cast<std::size_t>(vertices));
}

void Graph::add_edge(int source, int target) {
  if (source < 0 || source >= vertices_ || target < 0 || target >= vertices_) {
    throw AbmError("edge " + std::to_string(source) + " -> " + std::to_string(target) + " is out of range for " +
                   std::to_string(vertices_) + " vertices");
  }
  auto push = [this](int s, int t) {
    const int id = static_cast<int>(arcs_.size());
    arcs_.push_back({s, t});
    out_[static_cast<std::size_t>(s)].push_back(id);
    in_[static_cast<std::size_t>(t)].push_back(id);
  };
  push(source, target);
  if (!directed_) push(target, source);
}

// ---------------------------------------------------------------------------
// Generators

namespace {

std::uint64_t pair_key(int s, int t, bool directed) {
  if (!directed && s > t) std::swap(s, t);
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(s)) << 32) | static_cast<std::uint32_t>(t);
}

/// Adds `count` uniformly chosen absent, non-loop pairs.
void add_random_pairs(Graph& g, std::int64_t count, std::unordered_set<std::uint64_t>& present, KeyedRng& rng) {
  const auto v = static_cast<std::uint64_t>(g.vertices());
  const std::uint64_t total = g.directed() ? v * (v - 1) : v * (v - 1) / 2;
  const auto want = static_cast<std::uint64_t>(count);
  if (want == 0) return;
  if (v < 2 || present.size() + want > total) {
    throw AbmError("cannot place " + std::to_string(count) + " more edges among " + std::to_string(v) + " vertices");
  }
  const std::uint64_t absent = total - present.size();
  if (absent <= 4 * want) {
    // Dense: enumerate what is left and pick a subset (Floyd's algorithm).
    std::vector<std::pair<int, int>> pool;
    pool.reserve(absent);
    for (int s = 0; s < g.vertices(); ++s) {
      for (int t = g.directed() ? 0 : s + 1; t < g.vertices(); ++t) {
        if (s != t && present.count(pair_key(s, t, g.directed())) == 0) pool.emplace_back(s, t);
      }
    }
    std::unordered_set<std::uint64_t> chosen;
    for (std::uint64_t j = absent - want; j < absent; ++j) {
      std::uint64_t pick = rng.below(j + 1);
      if (!chosen.insert(pick).second) {
        pick = j;
        chosen.insert(j);
      }
      const auto [s, t] = pool[pick];
      present.insert(pair_key(s, t, g.directed()));
      g.add_edge(s, t);
    }
    return;
  }
  std::uint64_t placed = 0;
  while (placed < want) {
    const int s = static_cast<int>(rng.below(v));
    const int t = static_cast<int>(rng.below(v));
    if (s == t || !present.insert(pair_key(s, t, g.directed())).second) continue;
    g.add_edge(s, t);
    ++placed;
  }
}

Graph random_graph(const doc::GraphSpec& spec, KeyedRng& rng) {
  const auto v = spec.vertices;
  Graph g(static_cast<int>(v), spec.directed);
  std::unordered_set<std::uint64_t> present;
  std::int64_t used = 0;
  if (spec.min_in_degree > 0) {
    if (spec.min_in_degree > v - 1) throw AbmError("min_in_degree exceeds vertices - 1");
    std::vector<int> degree(static_cast<std::size_t>(v), 0);
    for (int t = 0; t < v; ++t) {
      while (degree[static_cast<std::size_t>(t)] < spec.min_in_degree) {
        const int s = static_cast<int>(rng.below(static_cast<std::uint64_t>(v)));
        if (s == t || !present.insert(pair_key(s, t, spec.directed)).second) continue;
        g.add_edge(s, t);
        ++degree[static_cast<std::size_t>(t)];
        if (!spec.directed) ++degree[static_cast<std::size_t>(s)];
        ++used;
      }
    }
    if (used > spec.edges) {
      throw AbmError("min_in_degree needs " + std::to_string(used) + " edges but only " + std::to_string(spec.edges) +
                     " were requested");
    }
  }
  add_random_pairs(g, spec.edges - used, present, rng);
  return g;
}

Graph scale_free_graph(const doc::GraphSpec& spec, KeyedRng& rng) {
  const int v = static_cast<int>(spec.vertices);
  const int m = static_cast<int>(spec.attachment);
  if (m < 1 || m >= v) throw AbmError("scale-free attachment must be in [1, vertices - 1]");
  Graph g(v, spec.directed);
  std::vector<int> ends;  // each vertex once per incident edge
  for (int i = 1; i <= m; ++i) {
    for (int j = 0; j < i; ++j) {
      g.add_edge(i, j);
      ends.push_back(i);
      ends.push_back(j);
    }
  }
  std::vector<int> targets;
  for (int n = m + 1; n < v; ++n) {
    targets.clear();
    while (static_cast<int>(targets.size()) < m) {
      const int t = ends[static_cast<std::size_t>(rng.below(ends.size()))];
      if (std::find(targets.begin(), targets.end(), t) == targets.end()) targets.push_back(t);
    }
    for (int t : targets) {
      g.add_edge(n, t);
      ends.push_back(n);
      ends.push_back(t);
    }
  }
  return g;
}

Graph ring_graph(const doc::GraphSpec& spec) {
  const int v = static_cast<int>(spec.vertices);
  if (v < 2) throw AbmError("a circular graph needs at least 2 vertices");
  Graph g(v, spec.directed);
  const int count = (!spec.directed && v == 2) ? 1 : v;
  for (int i = 0; i < count; ++i) g.add_edge(i, (i + 1) % v);
  return g;
}

}  // namespace

Graph generate_graph(const doc::GraphSpec& spec, std::uint64_t seed) {
  if (spec.from_file) throw AbmError("graph comes from a file; use load_graph");
  if (spec.vertices < 1 || spec.vertices > (1 << 30)) throw AbmError("vertex count must be positive");
  KeyedRng rng({seed, 0x67726170ULL});
  switch (spec.distribution) {
    case doc::Distribution::random: return random_graph(spec, rng);
    case doc::Distribution::scale_free: return scale_free_graph(spec, rng);
    case doc::Distribution::circular: return ring_graph(spec);
  }
  throw AbmError("unknown distribution");
}

// ---------------------------------------------------------------------------
// Edge lists

Graph parse_edge_list(const std::string& text, bool directed, const std::string& source) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  std::optional<long long> declared;
  std::vector<std::pair<long long, long long>> edges;
  long long largest = -1;
  auto fail = [&](const std::string& msg) { throw AbmError(source + ":" + std::to_string(lineno) + ": " + msg); };
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string first;
    if (!(ls >> first)) continue;
    if (first == "vertices") {
      long long n = 0;
      if (declared || !edges.empty()) fail("'vertices' header must come first");
      if (!(ls >> n) || n < 0) fail("bad vertex count");
      declared = n;
    } else {
      long long s = 0;
      long long t = 0;
      std::size_t used = 0;
      try {
        s = std::stoll(first, &used);
      } catch (const std::exception&) {
        fail("expected 'src dst'");
      }
      if (used != first.size() || !(ls >> t)) fail("expected 'src dst'");
      if (s < 0 || t < 0) fail("negative vertex index");
      edges.emplace_back(s, t);
      largest = std::max({largest, s, t});
    }
    std::string extra;
    if (ls >> extra) fail("unexpected '" + extra + "'");
  }
  const long long v = declared ? *declared : largest + 1;
  if (largest >= v) throw AbmError(source + ": vertex index " + std::to_string(largest) + " is out of range for " + std::to_string(v) + " vertices");
  Graph g(static_cast<int>(v), directed);
  for (const auto& [s, t] : edges) g.add_edge(static_cast<int>(s), static_cast<int>(t));
  return g;
}

Graph load_graph(const std::filesystem::path& path, bool directed) {
  std::ifstream in(path);
  if (!in) throw AbmError("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_edge_list(ss.str(), directed, path.string());
}

std::string edge_list(const Graph& g) {
  std::string out = "vertices " + std::to_string(g.vertices()) + "\n";
  const std::size_t step = g.directed() ? 1 : 2;
  for (std::size_t i = 0; i < g.arcs().size(); i += step) {
    out += std::to_string(g.arcs()[i].source) + " " + std::to_string(g.arcs()[i].target) + "\n";
  }
  return out;
}

void save_graph(const Graph& g, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << edge_list(g);
  if (!out) throw AbmError("cannot write " + path.string());
}

std::string dot(const Graph& g, const std::vector<std::string>& labels) {
  std::vector<const std::vector<double>*> cols;
  for (const auto& l : labels) cols.push_back(&g.properties.column(l));
  std::string out = g.directed() ? "digraph {\n" : "graph {\n";
  for (int v = 0; v < g.vertices(); ++v) {
    out += "  " + std::to_string(v);
    if (!labels.empty()) {
      out += " [label=\"";
      for (std::size_t i = 0; i < labels.size(); ++i) {
        if (i > 0) out += "\\n";
        out += labels[i] + "=" + abm::format_value((*cols[i])[static_cast<std::size_t>(v)]);
      }
      out += "\"]";
    }
    out += ";\n";
  }
  const std::size_t step = g.directed() ? 1 : 2;
  const char* arrow = g.directed() ? " -> " : " -- ";
  for (std::size_t i = 0; i < g.arcs().size(); i += step) {
    out += "  " + std::to_string(g.arcs()[i].source) + arrow + std::to_string(g.arcs()[i].target) + ";\n";
  }
  out += "}\n";
  return out;
}

void write_dot(const Graph& g, const std::vector<std::string>& labels, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << dot(g, labels);
  if (!out) throw AbmError("cannot write " + path.string());
}

// ---------------------------------------------------------------------------
// Rule execution

namespace {

constexpr int kParamBase = 1000;
enum Builtin : int {
  kPi = 2000, kIn, kRandUniform, kRandBit, kCv, kCe, kGnov, kGnoe,
  kEs = 2010, kEt, kInDegree, kOutDegree,
};

class GraphLayout final : public simml::Layout {
 public:
  GraphLayout(const Properties& props, const std::map<std::string, double>& params) : props_(props) {
    for (const auto& [k, v] : params) params_.push_back(k);
  }

  int resolve(const std::string& name, expr::SymbolKind kind, bool indexed) const override {
    using expr::SymbolKind;
    if (kind == SymbolKind::field) {
      const int p = props_.index(name);
      if (p < 0) throw AbmError("undeclared vertex property '" + name + "'");
      if (!indexed) throw AbmError("vertex property '" + name + "' needs a vertex index");
      return p;
    }
    if (kind == SymbolKind::parameter) {
      auto it = std::find(params_.begin(), params_.end(), name);
      if (it == params_.end()) throw AbmError("parameter '" + name + "' has no value");
      return kParamBase + static_cast<int>(it - params_.begin());
    }
    static const std::map<std::string, int> plain{
        {"pi", kPi}, {"$in", kIn}, {"$rnd_uniform", kRandUniform}, {"$rnd_int_1", kRandBit},
        {"$cv", kCv}, {"$ce", kCe}, {"$gnov", kGnov}, {"$gnoe", kGnoe}};
    static const std::map<std::string, int> with_index{
        {"$es", kEs}, {"$et", kEt}, {"$lnoe_in", kInDegree}, {"$lnoe_out", kOutDegree}};
    const auto& table = indexed ? with_index : plain;
    if (auto it = table.find(name); it != table.end() && kind == SymbolKind::builtin) return it->second;
    throw AbmError("'" + name + "' is not available on graphs");
  }

 private:
  const Properties& props_;
  std::vector<std::string> params_;
};

}  // namespace

struct GraphEngine::Impl {
  struct CompiledRule {
    doc::RuleKind kind;
    std::string name;
    simml::Program program;
  };

  Graph& graph;
  std::vector<double> params;
  std::uint64_t seed;
  doc::SnapshotPolicy snapshot_policy;
  GraphLayout layout;
  std::vector<CompiledRule> rules;
  Properties snapshot;
  WorkerPool pool;
  std::int64_t in = 0;

  Impl(const doc::AbmGraphModel& model, Graph& g, const std::map<std::string, double>& p, std::uint64_t s, int workers,
       doc::SnapshotPolicy policy)
      : graph(g), seed(s), snapshot_policy(policy), layout(g.properties, p), pool(workers) {
    for (const auto& [k, v] : p) params.push_back(v);
    for (const auto* r : abm::ordered_rules(model.gather_rules, model.update_rules, model.execution_order)) {
      try {
        rules.push_back({r->kind, r->name, simml::Program(r->algorithm, layout)});
      } catch (const std::exception& e) {
        throw AbmError("rule '" + r->name + "': " + e.what());
      }
    }
  }

  class Ctx final : public simml::Context {
   public:
    Ctx(Impl& impl, simml::Phase phase) : impl_(impl), phase_(phase) {}

    simml::Family family() const override { return simml::Family::abm_graph; }
    simml::Phase phase() const override { return phase_; }
    int resolve(const std::string& name, expr::SymbolKind kind, bool indexed) const override {
      return impl_.layout.resolve(name, kind, indexed);
    }

    void reset(int v, std::initializer_list<std::uint64_t> key) {
      cv_ = v;
      ce_ = -1;
      rng_ = KeyedRng(key);
    }

    double load(int slot) override {
      if (slot >= kParamBase && slot < kPi) return impl_.params[static_cast<std::size_t>(slot - kParamBase)];
      switch (slot) {
        case kPi: return std::numbers::pi;
        case kIn: return static_cast<double>(impl_.in);
        case kRandUniform: return rng_.uniform();
        case kRandBit: return static_cast<double>(rng_.below(2));
        case kCv: return cv_;
        case kCe:
          if (ce_ < 0) throw AbmError("$ce used outside an edge loop");
          return ce_;
        case kGnov: return impl_.graph.vertices();
        case kGnoe: return static_cast<double>(impl_.graph.edge_count());
        default: throw AbmError("bad slot");
      }
    }

    double load_indexed(int slot, double arg) override {
      const Graph& g = impl_.graph;
      if (slot < kParamBase) {
        const int v = abm::entity_index(arg, static_cast<std::size_t>(g.vertices()), "vertex");
        const auto& src = v == cv_ ? g.properties : impl_.snapshot;
        return src.values[static_cast<std::size_t>(slot)][static_cast<std::size_t>(v)];
      }
      if (slot == kEs || slot == kEt) {
        const auto& a = g.arcs()[static_cast<std::size_t>(abm::entity_index(arg, g.arcs().size(), "edge"))];
        return slot == kEs ? a.source : a.target;
      }
      const int v = abm::entity_index(arg, static_cast<std::size_t>(g.vertices()), "vertex");
      return slot == kInDegree ? g.in_degree(v) : g.out_degree(v);
    }

    void store(int slot, std::optional<double> entity, double value) override {
      if (slot >= kParamBase) throw AbmError("only vertex properties can be assigned");
      if (entity && abm::entity_index(*entity, static_cast<std::size_t>(impl_.graph.vertices()), "vertex") != cv_) {
        throw AbmError("rules may only write the current vertex");
      }
      impl_.graph.properties.values[static_cast<std::size_t>(slot)][static_cast<std::size_t>(cv_)] = value;
    }

    void for_each_edge(simml::EdgeDirection direction, const std::function<void()>& body) override {
      const auto& list = direction == simml::EdgeDirection::in ? impl_.graph.in_arcs(cv_) : impl_.graph.out_arcs(cv_);
      const int saved = ce_;
      for (int e : list) {
        ce_ = e;
        body();
      }
      ce_ = saved;
    }

   private:
    Impl& impl_;
    simml::Phase phase_;
    int cv_ = 0;
    int ce_ = -1;
    KeyedRng rng_;
  };

  void run_one(Ctx& ctx, const simml::Program& program, int v, const std::string& rule) {
    try {
      program.run(ctx);
    } catch (const AbmError& e) {
      throw AbmError("vertex " + std::to_string(v) + ": rule '" + rule + "': " + e.what(), v, in);
    } catch (const std::exception& e) {
      throw AbmError("vertex " + std::to_string(v) + ": rule '" + rule + "': " + e.what(), v, in);
    }
  }

  void run_rule(std::size_t ri, int only) {
    const auto& r = rules[ri];
    const simml::Phase phase = r.kind == doc::RuleKind::gather ? simml::Phase::gather : simml::Phase::update;
    if (snapshot_policy == doc::SnapshotPolicy::per_rule) snapshot = graph.properties;
    if (only >= 0) {
      Ctx ctx(*this, phase);
      ctx.reset(only, {seed, static_cast<std::uint64_t>(in), ri, static_cast<std::uint64_t>(only)});
      run_one(ctx, r.program, only, r.name);
      return;
    }
    pool.for_range(static_cast<std::size_t>(graph.vertices()), [&](std::size_t begin, std::size_t end) {
      Ctx ctx(*this, phase);
      for (std::size_t v = begin; v < end; ++v) {
        ctx.reset(static_cast<int>(v), {seed, static_cast<std::uint64_t>(in), ri, v});
        run_one(ctx, r.program, static_cast<int>(v), r.name);
      }
    });
  }
};

GraphEngine::GraphEngine(const doc::AbmGraphModel& model, Graph& graph, std::map<std::string, double> params,
                         std::uint64_t seed, int workers, doc::SnapshotPolicy snapshot) {
  if (graph.properties.names.empty()) {
    graph.properties = Properties(model.vertex_properties, static_cast<std::size_t>(graph.vertices()));
  }
  if (graph.properties.size() != static_cast<std::size_t>(graph.vertices())) {
    throw AbmError("property columns do not match the vertex count");
  }
  impl_ = std::make_unique<Impl>(model, graph, params, seed, workers, snapshot);
}

GraphEngine::~GraphEngine() = default;

void GraphEngine::initialize(const simml::Algorithm& initial_condition) {
  Impl& m = *impl_;
  const simml::Program program(initial_condition, m.layout);
  m.snapshot = m.graph.properties;
  m.in = 0;
  m.pool.for_range(static_cast<std::size_t>(m.graph.vertices()), [&](std::size_t begin, std::size_t end) {
    Impl::Ctx ctx(m, simml::Phase::init);
    for (std::size_t v = begin; v < end; ++v) {
      ctx.reset(static_cast<int>(v), {m.seed, abm::kInitialRule, v});
      m.run_one(ctx, program, static_cast<int>(v), "initial condition");
    }
  });
}

void GraphEngine::step(std::int64_t in, Mode mode) {
  Impl& m = *impl_;
  m.in = in;
  if (m.graph.vertices() == 0) return;
  if (m.snapshot_policy == doc::SnapshotPolicy::per_step) m.snapshot = m.graph.properties;
  int only = -1;
  if (mode == Mode::one) {
    KeyedRng pick({m.seed, abm::kPickTag, static_cast<std::uint64_t>(in)});
    only = static_cast<int>(pick.below(static_cast<std::uint64_t>(m.graph.vertices())));
  }
  for (std::size_t ri = 0; ri < m.rules.size(); ++ri) m.run_rule(ri, only);
}

void step_graph(Graph& graph, const doc::AbmGraphModel& model, const std::map<std::string, double>& params,
                Mode mode, std::int64_t in, std::uint64_t seed, int workers) {
  GraphEngine engine(model, graph, params, seed, workers);
  engine.step(in, mode);
}

// ---------------------------------------------------------------------------
// Problems

GraphRunConfig configure(const doc::AbmGraphProblem& problem, const ParamFile& params) {
  GraphRunConfig c;
  for (const auto& [key, value] : params.values()) {
    if (key == "number_of_vertices") c.vertices = *params.integer(key);
    else if (key == "number_of_edges") c.edges = *params.integer(key);
    else if (key == "seed") c.seed = static_cast<std::uint64_t>(*params.integer(key));
    else if (key == "workers") c.workers = static_cast<int>(*params.integer(key));
    else if (key == "output_dir" || key == "outputDir") c.output_dir = *params.text(key);
    else if (key == "output_interval") c.output_interval = *params.integer(key);
    else if (key == "max_steps") c.max_steps = *params.integer(key);
    else if (key == "vertex_properties") c.labels = *params.texts(key);
    else {
      const auto it = std::find_if(problem.parameters.begin(), problem.parameters.end(),
                                   [&](const doc::Parameter& p) { return p.name == key; });
      if (it == problem.parameters.end()) throw ParamError(params.source(), value.line, "unknown key '" + key + "'");
      c.parameters[key] = it->type == doc::ParamType::integer ? static_cast<double>(*params.integer(key))
                                                              : *params.number(key);
    }
  }
  return c;
}

std::string to_json(const GraphReport& r) {
  nlohmann::json j;
  j["steps"] = r.steps;
  j["vertices"] = r.vertices;
  j["edges"] = r.edges;
  nlohmann::json outs = nlohmann::json::array();
  for (const auto& p : r.outputs) outs.push_back(p.string());
  j["outputs"] = outs;
  j["means"] = r.means;
  return j.dump(2);
}

GraphReport run_graph_problem(const doc::AbmGraphProblem& problem, const doc::AbmGraphModel& model,
                              const GraphRunConfig& config, Graph* final_state) {
  if (config.output_interval < 1) throw AbmError("output_interval must be positive");
  const auto params = abm::resolve_parameters(problem.parameters, model.parameters, config.parameters);
  Graph g;
  if (problem.graph.from_file) {
    std::filesystem::path path = problem.graph.path;
    if (path.is_relative() && !config.base_dir.empty()) path = config.base_dir / path;
    g = load_graph(path, problem.graph.directed);
  } else {
    doc::GraphSpec spec = problem.graph;
    if (config.vertices) spec.vertices = *config.vertices;
    if (config.edges) spec.edges = *config.edges;
    g = generate_graph(spec, config.seed);
  }
  const auto labels = config.labels.empty() ? problem.output_properties : config.labels;
  for (const auto& l : labels) {
    if (std::find(model.vertex_properties.begin(), model.vertex_properties.end(), l) == model.vertex_properties.end()) {
      throw AbmError("output property '" + l + "' is not a vertex property");
    }
  }
  GraphEngine engine(model, g, params, config.seed, config.workers, problem.snapshot);
  engine.initialize(problem.initial_condition);

  GraphLayout layout(g.properties, params);
  std::vector<double> pvals;
  for (const auto& [k, v] : params) pvals.push_back(v);
  const expr::Compiled finalization(problem.finalization.ast,
                                    [&](const std::string& n, expr::SymbolKind k, bool indexed) {
                                      const int slot = layout.resolve(n, k, indexed);
                                      if (slot < kParamBase || slot >= kEs || slot == kRandUniform ||
                                          slot == kRandBit || slot == kCv || slot == kCe) {
                                        throw AbmError("'" + n + "' may not appear in the finalization condition");
                                      }
                                      return slot;
                                    });
  struct Final final : expr::Machine {
    const std::vector<double>& p;
    const Graph& g;
    std::int64_t in = 0;
    Final(const std::vector<double>& pv, const Graph& gr) : p(pv), g(gr) {}
    double load(int slot) override {
      if (slot < kPi) return p[static_cast<std::size_t>(slot - kParamBase)];
      if (slot == kPi) return std::numbers::pi;
      if (slot == kIn) return static_cast<double>(in);
      if (slot == kGnov) return g.vertices();
      return static_cast<double>(g.edge_count());
    }
    double load_indexed(int, double) override { throw AbmError("indexed access in finalization"); }
  } fin(pvals, g);

  GraphReport report;
  report.vertices = g.vertices();
  report.edges = g.edge_count();
  const Mode mode = problem.evolution_step == doc::EvolutionStep::one ? Mode::one : Mode::all;
  std::int64_t in = 0;
  std::int64_t written = -1;
  auto dump = [&] {
    if (config.output_dir.empty() || written == in) return;
    const auto path = config.output_dir / ("graph_" + std::to_string(in) + ".dot");
    write_dot(g, labels, path);
    report.outputs.push_back(path);
    written = in;
  };
  for (;;) {
    fin.in = in;
    if (finalization.run(fin) != 0.0) break;
    if (in >= config.max_steps) throw AbmError("finalization not reached within max_steps", -1, in);
    engine.step(in, mode);
    ++in;
    if (in % config.output_interval == 0) dump();
  }
  if (in > 0) dump();
  report.steps = in;
  for (std::size_t p = 0; p < g.properties.names.size(); ++p) {
    double sum = 0.0;
    for (double v : g.properties.values[p]) sum += v;
    report.means[g.properties.names[p]] = g.vertices() > 0 ? sum / g.vertices() : 0.0;
  }
  if (final_state != nullptr) *final_state = std::move(g);
  return report;
}

}  // namespace simflow::graph
