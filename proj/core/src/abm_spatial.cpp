#include "simflow/abm_spatial.hpp"

#include <algorithm>
#include <cmath>
#include <array>
#include <cstdio>
#include <fstream>
#include <numbers>

#include "abm_rules.hpp"
#include "json.hpp"
#include "simflow/parallel.hpp"
#include "simflow/rng.hpp"
#include "simflow/simml.hpp"

namespace simflow::spatial {

AgentSet::AgentSet(std::size_t count, std::vector<std::string> coordinates, std::vector<double> lo,
                   std::vector<double> hi, double radius, const std::vector<std::string>& properties)
    : count_(count), lo_(std::move(lo)), hi_(std::move(hi)), radius_(radius) {
  if (coordinates.empty() || coordinates.size() > 3) throw AbmError("agents need 1 to 3 coordinates");
  if (lo_.size() != coordinates.size() || hi_.size() != coordinates.size()) {
    throw AbmError("domain bounds do not match the coordinates");
  }
  for (std::size_t a = 0; a < lo_.size(); ++a) {
    if (!(lo_[a] < hi_[a])) throw AbmError("domain min must be less than max");
  }
  if (!(radius > 0.0)) throw AbmError("interaction radius must be positive");
  std::vector<std::string> names = coordinates;
  for (const auto& p : properties) {
    if (std::find(names.begin(), names.end(), p) != names.end()) throw AbmError("duplicate agent column '" + p + "'");
    names.push_back(p);
  }
  data = Properties(names, count);
  for (std::size_t a = 0; a < lo_.size(); ++a) std::fill(data.values[a].begin(), data.values[a].end(), lo_[a]);
}

double AgentSet::wrap(int axis, double x) const {
  const double l = extent(axis);
  double w = std::fmod(x - lo(axis), l);
  if (w < 0.0) w += l;
  if (w >= l) w -= l;
  const double out = lo(axis) + w;
  return out >= hi(axis) ? lo(axis) : out;
}

void AgentSet::set_position(int axis, std::size_t i, double x) {
  data.values[static_cast<std::size_t>(axis)][i] = wrap(axis, x);
}

double AgentSet::distance2(std::size_t i, std::size_t j) const {
  double s = 0.0;
  for (int a = 0; a < dims(); ++a) {
    const double l = extent(a);
    double d = position(a, j) - position(a, i);
    d -= l * std::round(d / l);
    s += d * d;
  }
  return s;
}

// ---------------------------------------------------------------------------
// Neighbour search

void CellList::build(const AgentSet& agents) {
  const int d = agents.dims();
  bins_.assign(3, 1);
  side_.assign(3, 1.0);
  degenerate_ = false;
  for (int a = 0; a < d; ++a) {
    const auto s = static_cast<std::size_t>(a);
    const double n = std::floor(agents.extent(a) / (agents.radius() * (1.0 + 1e-9)));
    if (n < 3.0) {
      degenerate_ = true;
      break;
    }
    bins_[s] = static_cast<int>(std::min(n, 1.0e6));
    side_[s] = agents.extent(a) / bins_[s];
  }
  members_.clear();
  home_.clear();
  if (degenerate_) return;
  members_.resize(static_cast<std::size_t>(bins_[0]) * bins_[1] * bins_[2]);
  home_.resize(agents.size());
  for (std::size_t i = 0; i < agents.size(); ++i) {
    std::size_t cell = 0;
    for (int a = d - 1; a >= 0; --a) {
      const auto s = static_cast<std::size_t>(a);
      int b = static_cast<int>(std::floor((agents.position(a, i) - agents.lo(a)) / side_[s]));
      b = std::clamp(b, 0, bins_[s] - 1);
      cell = cell * static_cast<std::size_t>(bins_[s]) + static_cast<std::size_t>(b);
    }
    home_[i] = cell;
    members_[cell].push_back(i);
  }
}

std::vector<std::size_t> CellList::neighbors(const AgentSet& agents, std::size_t i) const {
  if (degenerate_) return brute_force_neighbors(agents, i);
  const double r2 = agents.radius() * agents.radius();
  const int d = agents.dims();
  std::array<int, 3> b{0, 0, 0};
  std::size_t cell = home_[i];
  for (int a = 0; a < d; ++a) {
    const auto s = static_cast<std::size_t>(a);
    b[s] = static_cast<int>(cell % static_cast<std::size_t>(bins_[s]));
    cell /= static_cast<std::size_t>(bins_[s]);
  }
  std::vector<std::size_t> out;
  const int span2 = d > 2 ? 1 : 0;
  const int span1 = d > 1 ? 1 : 0;
  for (int dz = -span2; dz <= span2; ++dz) {
    for (int dy = -span1; dy <= span1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        const int delta[3] = {dx, dy, dz};
        std::size_t c = 0;
        for (int a = d - 1; a >= 0; --a) {
          const auto s = static_cast<std::size_t>(a);
          const int k = ((b[s] + delta[a]) % bins_[s] + bins_[s]) % bins_[s];
          c = c * static_cast<std::size_t>(bins_[s]) + static_cast<std::size_t>(k);
        }
        for (std::size_t j : members_[c]) {
          if (agents.distance2(i, j) <= r2) out.push_back(j);
        }
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::size_t> find_neighbors(const AgentSet& agents, const CellList& cells, std::size_t i) {
  return cells.neighbors(agents, i);
}

std::vector<std::size_t> brute_force_neighbors(const AgentSet& agents, std::size_t i) {
  const double r2 = agents.radius() * agents.radius();
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < agents.size(); ++j) {
    if (agents.distance2(i, j) <= r2) out.push_back(j);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Hand-coded flocking

namespace {

// glibc sincos may round differently from cos and sin
[[gnu::noinline]] double unfused_cos(double x) { return std::cos(x); }
[[gnu::noinline]] double unfused_sin(double x) { return std::sin(x); }

}  // namespace

void flocking_gather(AgentSet& agents, const std::vector<std::vector<std::size_t>>& neighbors, std::size_t i) {
  const auto& theta = agents.data.column("theta");
  double c = 0.0;
  double s = 0.0;
  double n = 0.0;
  for (std::size_t j : neighbors[i]) {
    c = c + unfused_cos(theta[j]);
    s = s + unfused_sin(theta[j]);
    n = n + 1.0;
  }
  agents.data.column("sumcos")[i] = c;
  agents.data.column("sumsin")[i] = s;
  agents.data.column("n")[i] = n;
}

void flocking_update(AgentSet& agents, std::size_t i, double eta, double v0, double dt, double xi) {
  const double n = agents.data.column("n")[i];
  const double cx = agents.data.column("sumcos")[i] + eta * n * unfused_cos(xi);
  const double sy = agents.data.column("sumsin")[i] + eta * n * unfused_sin(xi);
  auto& theta = agents.data.column("theta");
  if (cx != 0.0 || sy != 0.0) theta[i] = std::atan2(sy, cx);
  agents.set_position(0, i, agents.position(0, i) + v0 * dt * unfused_cos(theta[i]));
  if (agents.dims() > 1) agents.set_position(1, i, agents.position(1, i) + v0 * dt * unfused_sin(theta[i]));
}

double order_parameter(const AgentSet& agents, const std::string& heading) {
  if (agents.size() == 0) return 0.0;
  const auto& theta = agents.data.column(heading);
  double c = 0.0;
  double s = 0.0;
  for (double t : theta) {
    c += std::cos(t);
    s += std::sin(t);
  }
  return std::hypot(c, s) / static_cast<double>(agents.size());
}

// ---------------------------------------------------------------------------
// Rule execution

namespace {

constexpr int kParamBase = 1000;
enum Builtin : int { kPi = 2000, kIn, kRandUniform, kRandBit, kCa, kNa, kGnoa, kXLow = 2010, kXUp };

class SpatialLayout final : public simml::Layout {
 public:
  SpatialLayout(const AgentSet& agents, const std::map<std::string, double>& params) : agents_(agents) {
    for (const auto& [k, v] : params) params_.push_back(k);
  }

  int resolve(const std::string& name, expr::SymbolKind kind, bool indexed) const override {
    using expr::SymbolKind;
    if (kind == SymbolKind::field || kind == SymbolKind::coordinate) {
      const int p = agents_.data.index(name);
      if (p < 0 || (kind == SymbolKind::coordinate) != (p < agents_.dims())) {
        throw AbmError("undeclared agent property '" + name + "'");
      }
      if (!indexed) throw AbmError("agent property '" + name + "' needs an agent index");
      return p;
    }
    if (kind == SymbolKind::parameter) {
      auto it = std::find(params_.begin(), params_.end(), name);
      if (it == params_.end()) throw AbmError("parameter '" + name + "' has no value");
      return kParamBase + static_cast<int>(it - params_.begin());
    }
    static const std::map<std::string, int> plain{{"pi", kPi},       {"$in", kIn}, {"$rnd_uniform", kRandUniform},
                                                  {"$rnd_int_1", kRandBit}, {"$ca", kCa}, {"$na", kNa},
                                                  {"$gnoa", kGnoa}};
    static const std::map<std::string, int> with_index{{"$x_low", kXLow}, {"$x_up", kXUp}};
    const auto& table = indexed ? with_index : plain;
    if (auto it = table.find(name); it != table.end() && kind == SymbolKind::builtin) return it->second;
    throw AbmError("'" + name + "' is not available for spatial agents");
  }

 private:
  const AgentSet& agents_;
  std::vector<std::string> params_;
};

}  // namespace

struct SpatialEngine::Impl {
  struct CompiledRule {
    doc::RuleKind kind;
    std::string name;
    simml::Program program;
  };

  AgentSet& agents;
  std::vector<double> params;
  std::uint64_t seed;
  doc::SnapshotPolicy snapshot_policy;
  bool include_self;
  SpatialLayout layout;
  std::vector<CompiledRule> rules;
  Properties snapshot;
  CellList cells;
  std::vector<std::vector<std::size_t>> neighbors;
  WorkerPool pool;
  std::int64_t in = 0;

  Impl(const doc::AbmSpatialModel& model, AgentSet& a, const std::map<std::string, double>& p, std::uint64_t s,
       int workers, doc::SnapshotPolicy policy)
      : agents(a), seed(s), snapshot_policy(policy), include_self(model.include_self), layout(a, p), pool(workers) {
    for (const auto& [k, v] : p) params.push_back(v);
    for (const auto* r : abm::ordered_rules(model.gather_rules, model.update_rules, model.execution_order)) {
      try {
        rules.push_back({r->kind, r->name, simml::Program(r->algorithm, layout)});
      } catch (const std::exception& e) {
        throw AbmError("rule '" + r->name + "': " + e.what());
      }
    }
  }

  void rebuild_neighbors() {
    cells.build(agents);
    neighbors.resize(agents.size());
    pool.for_range(agents.size(), [&](std::size_t begin, std::size_t end) {
      for (std::size_t i = begin; i < end; ++i) {
        auto list = cells.neighbors(agents, i);
        if (!include_self) list.erase(std::remove(list.begin(), list.end(), i), list.end());
        neighbors[i] = std::move(list);
      }
    });
  }

  class Ctx final : public simml::Context {
   public:
    Ctx(Impl& impl, simml::Phase phase) : impl_(impl), phase_(phase) {}

    simml::Family family() const override { return simml::Family::abm_spatial; }
    simml::Phase phase() const override { return phase_; }
    int resolve(const std::string& name, expr::SymbolKind kind, bool indexed) const override {
      return impl_.layout.resolve(name, kind, indexed);
    }

    void reset(std::size_t a, std::initializer_list<std::uint64_t> key) {
      ca_ = a;
      na_ = -1;
      rng_ = KeyedRng(key);
    }

    double load(int slot) override {
      if (slot >= kParamBase && slot < kPi) return impl_.params[static_cast<std::size_t>(slot - kParamBase)];
      switch (slot) {
        case kPi: return std::numbers::pi;
        case kIn: return static_cast<double>(impl_.in);
        case kRandUniform: return rng_.uniform();
        case kRandBit: return static_cast<double>(rng_.below(2));
        case kCa: return static_cast<double>(ca_);
        case kNa:
          if (na_ < 0) throw AbmError("$na used outside an interaction loop");
          return static_cast<double>(na_);
        case kGnoa: return static_cast<double>(impl_.agents.size());
        default: throw AbmError("bad slot");
      }
    }

    double load_indexed(int slot, double arg) override {
      if (slot < kParamBase) {
        const auto j = static_cast<std::size_t>(abm::entity_index(arg, impl_.agents.size(), "agent"));
        const auto& src = j == ca_ ? impl_.agents.data : impl_.snapshot;
        return src.values[static_cast<std::size_t>(slot)][j];
      }
      const int axis = abm::entity_index(arg, static_cast<std::size_t>(impl_.agents.dims()), "axis");
      return slot == kXLow ? impl_.agents.lo(axis) : impl_.agents.hi(axis);
    }

    void store(int slot, std::optional<double> entity, double value) override {
      if (slot >= kParamBase) throw AbmError("only agent properties can be assigned");
      if (entity && static_cast<std::size_t>(abm::entity_index(*entity, impl_.agents.size(), "agent")) != ca_) {
        throw AbmError("rules may only write the current agent");
      }
      if (slot < impl_.agents.dims()) {
        impl_.agents.set_position(slot, ca_, value);
      } else {
        impl_.agents.data.values[static_cast<std::size_t>(slot)][ca_] = value;
      }
    }

    void for_each_interaction(const std::function<void()>& body) override {
      if (impl_.neighbors.size() != impl_.agents.size()) throw AbmError("interactions are only available in gather rules");
      const auto saved = na_;
      for (std::size_t j : impl_.neighbors[ca_]) {
        na_ = static_cast<std::int64_t>(j);
        body();
      }
      na_ = saved;
    }

   private:
    Impl& impl_;
    simml::Phase phase_;
    std::size_t ca_ = 0;
    std::int64_t na_ = -1;
    KeyedRng rng_;
  };

  void run_all(const simml::Program& program, simml::Phase phase, std::uint64_t rule_key, const std::string& name) {
    pool.for_range(agents.size(), [&](std::size_t begin, std::size_t end) {
      Ctx ctx(*this, phase);
      for (std::size_t a = begin; a < end; ++a) {
        if (rule_key == abm::kInitialRule) {
          ctx.reset(a, {seed, abm::kInitialRule, a});
        } else {
          ctx.reset(a, {seed, static_cast<std::uint64_t>(in), rule_key, a});
        }
        try {
          program.run(ctx);
        } catch (const std::exception& e) {
          throw AbmError("agent " + std::to_string(a) + ": rule '" + name + "': " + e.what(), static_cast<std::int64_t>(a), in);
        }
      }
    });
  }
};

SpatialEngine::SpatialEngine(const doc::AbmSpatialModel& model, AgentSet& agents, std::map<std::string, double> params,
                             std::uint64_t seed, int workers, doc::SnapshotPolicy snapshot)
    : impl_(std::make_unique<Impl>(model, agents, params, seed, workers, snapshot)) {}

SpatialEngine::~SpatialEngine() = default;

bool SpatialEngine::degenerate() const {
  CellList probe;
  probe.build(impl_->agents);
  return probe.degenerate();
}

void SpatialEngine::initialize(const simml::Algorithm& initial_condition) {
  Impl& m = *impl_;
  const simml::Program program(initial_condition, m.layout);
  m.snapshot = m.agents.data;
  m.in = 0;
  m.neighbors.clear();
  m.run_all(program, simml::Phase::init, abm::kInitialRule, "initial condition");
}

void SpatialEngine::step(std::int64_t in) {
  Impl& m = *impl_;
  m.in = in;
  if (m.snapshot_policy == doc::SnapshotPolicy::per_step) m.snapshot = m.agents.data;
  for (std::size_t ri = 0; ri < m.rules.size(); ++ri) {
    const auto& r = m.rules[ri];
    if (m.snapshot_policy == doc::SnapshotPolicy::per_rule) m.snapshot = m.agents.data;
    const bool gather = r.kind == doc::RuleKind::gather;
    if (gather) {
      m.rebuild_neighbors();
    } else {
      m.neighbors.clear();
    }
    m.run_all(r.program, gather ? simml::Phase::gather : simml::Phase::update, ri, r.name);
  }
  m.neighbors.clear();
}

// ---------------------------------------------------------------------------
// Problems

SpatialRunConfig configure(const doc::AbmSpatialProblem& problem, const ParamFile& params) {
  SpatialRunConfig c;
  const std::size_t dims = problem.coordinates.size();
  auto per_axis = [&](const std::string& key) {
    auto v = *params.numbers(key);
    if (v.size() == 1) v.assign(dims, v[0]);
    if (v.size() != dims) throw ParamError(params.source(), params.values().at(key).line, "'" + key + "' needs one value per axis");
    return v;
  };
  for (const auto& [key, value] : params.values()) {
    if (key == "n_agents") c.agents = *params.integer(key);
    else if (key == "radius") c.radius = *params.number(key);
    else if (key == "x_low") c.lo = per_axis(key);
    else if (key == "x_up") c.hi = per_axis(key);
    else if (key == "seed") c.seed = static_cast<std::uint64_t>(*params.integer(key));
    else if (key == "workers") c.workers = static_cast<int>(*params.integer(key));
    else if (key == "output_dir" || key == "outputDir") c.output_dir = *params.text(key);
    else if (key == "output_interval") c.output_interval = *params.integer(key);
    else if (key == "max_steps") c.max_steps = *params.integer(key);
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

std::string to_json(const SpatialReport& r) {
  nlohmann::json j;
  j["steps"] = r.steps;
  j["agents"] = r.agents;
  j["order"] = r.order;
  nlohmann::json outs = nlohmann::json::array();
  for (const auto& p : r.outputs) outs.push_back(p.string());
  j["outputs"] = outs;
  j["warnings"] = r.warnings;
  return j.dump(2);
}

namespace {

std::string g17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

SpatialReport run_spatial_problem(const doc::AbmSpatialProblem& problem, const doc::AbmSpatialModel& model,
                                  const SpatialRunConfig& config, AgentSet* final_state) {
  if (config.output_interval < 1) throw AbmError("output_interval must be positive");
  const auto params = abm::resolve_parameters(problem.parameters, model.parameters, config.parameters);
  const std::size_t dims = problem.coordinates.size();
  std::vector<double> lo(dims);
  std::vector<double> hi(dims);
  for (std::size_t a = 0; a < dims; ++a) {
    auto it = std::find_if(problem.domain.begin(), problem.domain.end(),
                           [&](const doc::AxisDomain& d) { return d.axis == problem.coordinates[a]; });
    if (it == problem.domain.end()) throw AbmError("no domain for coordinate '" + problem.coordinates[a] + "'");
    lo[a] = it->min;
    hi[a] = it->max;
  }
  if (config.lo) lo = *config.lo;
  if (config.hi) hi = *config.hi;
  const std::int64_t count = config.agents.value_or(problem.agents);
  if (count < 0) throw AbmError("agent count must be non-negative");
  AgentSet agents(static_cast<std::size_t>(count), problem.coordinates, lo, hi, config.radius.value_or(problem.radius),
                  model.agent_properties);
  SpatialEngine engine(model, agents, params, config.seed, config.workers, problem.snapshot);

  SpatialReport report;
  report.agents = agents.size();
  if (engine.degenerate()) {
    report.warnings.push_back("interaction radius is at least a third of the domain; using a full neighbour scan");
  }
  engine.initialize(problem.initial_condition);

  std::vector<std::string> columns = problem.output_properties;
  if (columns.empty() && !problem.order_parameter.empty()) columns.push_back(problem.order_parameter);
  for (const auto& c : columns) {
    if (agents.data.index(c) < static_cast<int>(dims)) throw AbmError("output property '" + c + "' is not an agent property");
  }

  SpatialLayout layout(agents, params);
  std::vector<double> pvals;
  for (const auto& [k, v] : params) pvals.push_back(v);
  const expr::Compiled finalization(problem.finalization.ast,
                                    [&](const std::string& n, expr::SymbolKind k, bool indexed) {
                                      const int slot = layout.resolve(n, k, indexed);
                                      if (slot < kParamBase || slot >= kXLow || slot == kRandUniform ||
                                          slot == kRandBit || slot == kCa || slot == kNa) {
                                        throw AbmError("'" + n + "' may not appear in the finalization condition");
                                      }
                                      return slot;
                                    });
  struct Final final : expr::Machine {
    const std::vector<double>& p;
    double agents;
    std::int64_t in = 0;
    Final(const std::vector<double>& pv, double n) : p(pv), agents(n) {}
    double load(int slot) override {
      if (slot < kPi) return p[static_cast<std::size_t>(slot - kParamBase)];
      if (slot == kPi) return std::numbers::pi;
      if (slot == kIn) return static_cast<double>(in);
      return agents;
    }
    double load_indexed(int, double) override { throw AbmError("indexed access in finalization"); }
  } fin(pvals, static_cast<double>(agents.size()));

  std::ofstream order_csv;
  if (!config.output_dir.empty()) {
    std::filesystem::create_directories(config.output_dir);
    if (!problem.order_parameter.empty()) {
      const auto path = config.output_dir / "order.csv";
      order_csv.open(path, std::ios::binary);
      if (!order_csv) throw AbmError("cannot write " + path.string());
      order_csv << "step,order\n";
      report.outputs.push_back(path);
    }
  }
  std::int64_t in = 0;
  auto record_order = [&] {
    if (problem.order_parameter.empty()) return;
    const double phi = order_parameter(agents, problem.order_parameter);
    report.order.push_back(phi);
    if (order_csv.is_open()) order_csv << in << ',' << g17(phi) << '\n';
  };
  std::int64_t written = -1;
  auto dump = [&] {
    if (config.output_dir.empty() || written == in) return;
    const auto path = config.output_dir / ("agents_" + std::to_string(in) + ".csv");
    std::ofstream out(path, std::ios::binary);
    out << "id";
    for (const auto& c : problem.coordinates) out << ',' << c;
    for (const auto& c : columns) out << ',' << c;
    out << '\n';
    for (std::size_t i = 0; i < agents.size(); ++i) {
      out << i;
      for (std::size_t a = 0; a < dims; ++a) out << ',' << g17(agents.position(static_cast<int>(a), i));
      for (const auto& c : columns) out << ',' << g17(agents.data.column(c)[i]);
      out << '\n';
    }
    if (!out) throw AbmError("cannot write " + path.string());
    report.outputs.push_back(path);
    written = in;
  };

  record_order();
  for (;;) {
    fin.in = in;
    if (finalization.run(fin) != 0.0) break;
    if (in >= config.max_steps) throw AbmError("finalization not reached within max_steps", -1, in);
    engine.step(in);
    ++in;
    record_order();
    if (in % config.output_interval == 0) dump();
  }
  if (in > 0) dump();
  report.steps = in;
  if (final_state != nullptr) *final_state = std::move(agents);
  return report;
}

}  // namespace simflow::spatial
