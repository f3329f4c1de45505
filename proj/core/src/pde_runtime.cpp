#include <algorithm>
#include <cmath>
#include <numbers>

#include "json.hpp"
#include "simflow/discretize.hpp"
#include "simflow/parallel.hpp"
#include "simflow/pde_runtime.hpp"
#include "simflow/rng.hpp"
#include "simflow/simml.hpp"

namespace simflow::pde {

namespace {

constexpr int kParamBase = 1000;
constexpr int kCoordBase = 2000;
constexpr int kTime = 2003;
constexpr int kPi = 2004;
constexpr int kIteration = 2005;
constexpr int kRandUniform = 2006;
constexpr int kRandBit = 2007;

/// Slot layout shared by initial conditions, kernels and finalization.
struct Symbols {
  std::vector<std::string> fields;
  std::vector<std::string> params;
  std::vector<std::string> axes;
  std::string time;

  int resolve(const std::string& name, expr::SymbolKind kind, bool indexed, bool fields_ok) const {
    if (indexed) throw simml::AlgorithmError("'" + name + "(...)' is not available on grids");
    auto find = [&](const std::vector<std::string>& v) -> int {
      auto it = std::find(v.begin(), v.end(), name);
      return it == v.end() ? -1 : static_cast<int>(it - v.begin());
    };
    switch (kind) {
      case expr::SymbolKind::field:
        if (int i = find(fields); i >= 0 && fields_ok) return i;
        break;
      case expr::SymbolKind::parameter:
        if (int i = find(params); i >= 0) return kParamBase + i;
        break;
      case expr::SymbolKind::coordinate:
        if (name == time) return kTime;
        if (int i = find(axes); i >= 0) return kCoordBase + i;
        break;
      case expr::SymbolKind::builtin:
        if (name == "pi") return kPi;
        if (name == "$in") return kIteration;
        if (name == "$rnd_uniform") return kRandUniform;
        if (name == "$rnd_int_1") return kRandBit;
        break;
      case expr::SymbolKind::local:
        break;
    }
    throw simml::AlgorithmError("symbol '" + name + "' is not available here");
  }
};

Symbols symbols_for(const doc::GenericPdeProblem& problem, const std::map<std::string, double>& params) {
  Symbols s;
  s.fields = problem.fields;
  for (const auto& [k, v] : params) s.params.push_back(k);
  s.axes = problem.coordinates.spatial;
  s.time = problem.coordinates.time;
  return s;
}

std::vector<double> param_values(const std::map<std::string, double>& params) {
  std::vector<double> out;
  for (const auto& [k, v] : params) out.push_back(v);
  return out;
}

class CellContext final : public simml::Context {
 public:
  CellContext(const Symbols& sym, const std::vector<double>& params) : sym_(sym), params_(params) {
    values_.resize(sym.fields.size());
    assigned_.resize(sym.fields.size());
  }

  simml::Family family() const override { return simml::Family::generic_pde; }
  simml::Phase phase() const override { return simml::Phase::init; }

  int resolve(const std::string& name, expr::SymbolKind kind, bool indexed) const override {
    return sym_.resolve(name, kind, indexed, true);
  }

  void reset(std::array<double, 3> x, std::uint64_t seed, std::uint64_t cell) {
    x_ = x;
    rng_ = KeyedRng({seed, cell});
    std::fill(assigned_.begin(), assigned_.end(), 0);
  }

  double load(int slot) override {
    if (slot < kParamBase) {
      const auto f = static_cast<std::size_t>(slot);
      if (!assigned_[f]) throw simml::AlgorithmError("field '" + sym_.fields[f] + "' read before assignment");
      return values_[f];
    }
    if (slot < kCoordBase) return params_[static_cast<std::size_t>(slot - kParamBase)];
    switch (slot) {
      case kTime: return 0.0;
      case kPi: return std::numbers::pi;
      case kIteration: return 0.0;
      case kRandUniform: return rng_.uniform();
      case kRandBit: return static_cast<double>(rng_.below(2));
      default: return x_[static_cast<std::size_t>(slot - kCoordBase)];
    }
  }

  double load_indexed(int, double) override { throw simml::AlgorithmError("indexed access on a grid"); }

  void store(int slot, std::optional<double> entity, double value) override {
    if (entity || slot < 0 || slot >= kParamBase) throw simml::AlgorithmError("only fields may be assigned here");
    values_[static_cast<std::size_t>(slot)] = value;
    assigned_[static_cast<std::size_t>(slot)] = 1;
  }

  std::vector<double> values_;
  std::vector<char> assigned_;

 private:
  const Symbols& sym_;
  const std::vector<double>& params_;
  std::array<double, 3> x_{};
  KeyedRng rng_;
};

}  // namespace

std::map<std::string, double> resolve_parameters(const doc::GenericPdeProblem& problem, const RunConfig& config) {
  std::map<std::string, double> out;
  for (const auto& p : problem.parameters) out[p.name] = p.default_value;
  for (const auto& [k, v] : config.parameters) {
    if (out.count(k) == 0) throw RunError("unknown parameter '" + k + "'");
    out[k] = v;
  }
  return out;
}

RunConfig configure(const doc::GenericPdeProblem& problem, const ParamFile& params) {
  RunConfig c;
  const std::size_t dims = problem.coordinates.spatial.size();
  auto per_axis = [&](const std::string& key) {
    auto v = *params.numbers(key);
    if (v.size() == 1) v.assign(dims, v[0]);
    if (v.size() != dims) throw ParamError(params.source(), params.values().at(key).line, "'" + key + "' needs one value per axis");
    return v;
  };
  auto ints = [&](const std::string& key) {
    std::vector<int> out;
    for (double d : per_axis(key)) {
      if (d != std::floor(d) || d < 1) throw ParamError(params.source(), params.values().at(key).line, "'" + key + "' needs positive integers");
      out.push_back(static_cast<int>(d));
    }
    return out;
  };
  for (const auto& [key, value] : params.values()) {
    if (key == "dt") c.dt = *params.number(key);
    else if (key == "cells" || key == "N") c.cells = ints(key);
    else if (key == "decomposition") c.decomposition = ints(key);
    else if (key == "workers") c.workers = static_cast<int>(*params.integer(key));
    else if (key == "output_interval") c.output_interval = *params.integer(key);
    else if (key == "output_dir" || key == "outputDir") c.output_dir = *params.text(key);
    else if (key == "max_steps") c.max_steps = *params.integer(key);
    else if (key == "dissipation" || key == "sigma") c.dissipation = *params.number(key);
    else if (key == "x_low") c.lo = per_axis(key);
    else if (key == "x_up") c.hi = per_axis(key);
    else if (key == "seed") c.seed = static_cast<std::uint64_t>(*params.integer(key));
    else {
      const std::string name = key == "tend" ? "t_end" : key;
      const auto it = std::find_if(problem.parameters.begin(), problem.parameters.end(),
                                   [&](const doc::Parameter& p) { return p.name == name; });
      if (it == problem.parameters.end()) throw ParamError(params.source(), value.line, "unknown key '" + key + "'");
      c.parameters[name] = it->type == doc::ParamType::integer ? static_cast<double>(*params.integer(key))
                                                               : *params.number(key);
    }
  }
  return c;
}

void apply_initial_conditions(Grid& grid, const doc::GenericPdeProblem& problem,
                              const std::map<std::string, double>& params, std::uint64_t seed) {
  const Symbols sym = symbols_for(problem, params);
  const std::vector<double> values = param_values(params);
  CellContext ctx(sym, values);
  const simml::Program program(problem.region.initial_condition, ctx);
  for (std::size_t p = 0; p < grid.patches().size(); ++p) {
    const Patch& P = grid.patches()[p];
    for (int k = 0; k < P.n[2]; ++k) {
      for (int j = 0; j < P.n[1]; ++j) {
        for (int i = 0; i < P.n[0]; ++i) {
          const int g[3] = {P.offset[0] + i, P.offset[1] + j, P.offset[2] + k};
          std::array<double, 3> x{};
          for (int a = 0; a < grid.dims(); ++a) x[static_cast<std::size_t>(a)] = grid.coordinate(a, g[a]);
          const auto linear = static_cast<std::uint64_t>(g[0]) +
                              static_cast<std::uint64_t>(grid.cells(0)) *
                                  (static_cast<std::uint64_t>(g[1]) +
                                   static_cast<std::uint64_t>(grid.cells(1)) * static_cast<std::uint64_t>(g[2]));
          ctx.reset(x, seed, linear);
          program.run(ctx);
          for (std::size_t f = 0; f < sym.fields.size(); ++f) {
            if (!ctx.assigned_[f]) {
              throw RunError("initial condition left field '" + sym.fields[f] + "' unassigned at cell " +
                             std::to_string(linear));
            }
            grid.field(p, f)[P.index(i, j, k)] = ctx.values_[f];
          }
        }
      }
    }
  }
  exchange_halos(grid);
}

// ---------------------------------------------------------------------------
// Right-hand side

struct RhsEvaluator::Impl {
  struct Node {
    disc::NodeKind kind;
    int reach = -1;
    int alias = -1;                 // pointwise: plain field read
    bool constant = false;
    double value = 0.0;
    expr::Compiled code;
    int axis = 0;
    std::vector<int> offsets;
    std::vector<double> weights;
    double scale = 1.0;             // dx^-order
    std::vector<int> inputs;
  };

  const Grid& grid;
  Symbols sym;
  std::vector<double> params;
  std::vector<Node> nodes;
  std::vector<int> rhs;
  std::vector<std::vector<double>> ko;  // per axis, sigma already applied
  std::vector<double> inv_dx;
  std::vector<std::vector<double>> scratch;
  WorkerPool pool;

  Impl(const disc::KernelProgram& k, const Grid& g, std::map<std::string, double> p, int workers)
      : grid(g), pool(workers) {
    sym.fields = k.fields;
    for (const auto& [name, v] : p) {
      sym.params.push_back(name);
      params.push_back(v);
    }
    sym.axes = k.axes;
    sym.time = k.time;
    if (static_cast<int>(k.axes.size()) != g.dims()) throw RunError("kernel and grid disagree on the number of axes");
    const auto reach = k.node_reach();
    const int need = std::max(k.dag_radius(), k.dissipation.radius());
    if (need > g.halo()) throw RunError("grid halo " + std::to_string(g.halo()) + " is narrower than the kernel's " + std::to_string(need));
    for (std::size_t i = 0; i < k.nodes.size(); ++i) {
      const auto& src = k.nodes[i];
      Node n;
      n.kind = src.kind;
      n.reach = reach[i];
      n.inputs = src.inputs;
      if (src.kind == disc::NodeKind::pointwise) {
        const auto& root = src.expression.root();
        if (const auto* s = std::get_if<expr::Symbol>(&root.value); s && s->kind == expr::SymbolKind::field) {
          n.alias = sym.resolve(s->name, s->kind, false, true);
        } else if (const auto* num = std::get_if<expr::Number>(&root.value)) {
          n.constant = true;
          n.value = num->value;
        } else {
          n.code = expr::Compiled(src.expression, [this](const std::string& name, expr::SymbolKind kind, bool indexed) {
            const int slot = sym.resolve(name, kind, indexed, true);
            if (slot >= kIteration) throw RunError("'" + name + "' may not appear in an evolution equation");
            return slot;
          });
        }
      } else if (src.kind == disc::NodeKind::stencil) {
        const auto& st = k.stencils[static_cast<std::size_t>(src.stencil)];
        auto it = std::find(k.axes.begin(), k.axes.end(), st.axis);
        if (it == k.axes.end()) throw RunError("stencil on unknown axis '" + st.axis + "'");
        n.axis = static_cast<int>(it - k.axes.begin());
        n.offsets = st.offsets;
        n.weights = st.values;
        double h = 1.0;
        for (int m = 0; m < st.order; ++m) h *= g.dx(n.axis);
        n.scale = 1.0 / h;
      }
      nodes.push_back(std::move(n));
    }
    rhs = k.rhs;
    for (int a = 0; a < g.dims(); ++a) {
      inv_dx.push_back(1.0 / g.dx(a));
      if (k.dissipation.enabled()) {
        ko.push_back(disc::ko_dissipation(k.dissipation.order, k.dissipation.strength, k.axes[static_cast<std::size_t>(a)]).values);
      }
    }
    scratch.resize(nodes.size());
  }

  class PointMachine final : public expr::Machine {
   public:
    PointMachine(const Impl& impl, const std::vector<const double*>& fields, double t)
        : impl_(impl), fields_(fields), t_(t) {}
    std::ptrdiff_t at = 0;
    std::array<double, 3> x{};

    double load(int slot) override {
      if (slot < kParamBase) return fields_[static_cast<std::size_t>(slot)][at];
      if (slot < kCoordBase) return impl_.params[static_cast<std::size_t>(slot - kParamBase)];
      if (slot == kTime) return t_;
      if (slot == kPi) return std::numbers::pi;
      return x[static_cast<std::size_t>(slot - kCoordBase)];
    }
    double load_indexed(int, double) override { throw RunError("indexed access in a kernel"); }

   private:
    const Impl& impl_;
    const std::vector<const double*>& fields_;
    double t_;
  };

  void evaluate(const std::vector<double>& state, std::vector<double>& out, double t) {
    const auto nf = sym.fields.size();
    for (std::size_t p = 0; p < grid.patches().size(); ++p) {
      const Patch& P = grid.patches()[p];
      std::vector<const double*> fields(nf);
      for (std::size_t f = 0; f < nf; ++f) fields[f] = state.data() + P.base + f * P.points;
      std::vector<const double*> value(nodes.size(), nullptr);
      for (std::size_t i = 0; i < nodes.size(); ++i) {
        const Node& n = nodes[i];
        if (n.reach < 0) continue;
        if (n.alias >= 0) {
          value[i] = fields[static_cast<std::size_t>(n.alias)];
          continue;
        }
        auto& buf = scratch[i];
        if (buf.size() != P.points) buf.assign(P.points, 0.0);
        double* dst = buf.data();
        value[i] = dst;
        std::array<int, 3> from{};
        std::array<int, 3> ext{};
        for (std::size_t a = 0; a < 3; ++a) {
          const int r = std::min(n.reach, P.ghost[a]);
          from[a] = -r;
          ext[a] = P.n[a] + 2 * r;
        }
        const std::size_t rows = static_cast<std::size_t>(ext[1]) * static_cast<std::size_t>(ext[2]);
        pool.for_range(rows, [&](std::size_t begin, std::size_t end) {
          PointMachine m(*this, fields, t);
          for (std::size_t row = begin; row < end; ++row) {
            const int j = from[1] + static_cast<int>(row % static_cast<std::size_t>(ext[1]));
            const int k = from[2] + static_cast<int>(row / static_cast<std::size_t>(ext[1]));
            const std::ptrdiff_t start = P.index(from[0], j, k);
            const std::ptrdiff_t stop = start + ext[0];
            switch (n.kind) {
              case disc::NodeKind::pointwise:
                if (n.constant) {
                  for (auto q = start; q < stop; ++q) dst[q] = n.value;
                } else {
                  if (grid.dims() > 1) m.x[1] = grid.coordinate(1, P.offset[1] + j);
                  if (grid.dims() > 2) m.x[2] = grid.coordinate(2, P.offset[2] + k);
                  for (auto q = start; q < stop; ++q) {
                    m.at = q;
                    m.x[0] = grid.coordinate(0, P.offset[0] + from[0] + static_cast<int>(q - start));
                    dst[q] = n.code.run(m);
                  }
                }
                break;
              case disc::NodeKind::stencil: {
                const double* in = value[static_cast<std::size_t>(n.inputs[0])];
                const std::ptrdiff_t stride = P.stride[static_cast<std::size_t>(n.axis)];
                for (auto q = start; q < stop; ++q) {
                  double s = 0.0;
                  for (std::size_t w = 0; w < n.offsets.size(); ++w) s += n.weights[w] * in[q + n.offsets[w] * stride];
                  dst[q] = s * n.scale;
                }
                break;
              }
              case disc::NodeKind::sum:
              case disc::NodeKind::product: {
                const bool sum = n.kind == disc::NodeKind::sum;
                for (auto q = start; q < stop; ++q) {
                  double acc = value[static_cast<std::size_t>(n.inputs[0])][q];
                  for (std::size_t w = 1; w < n.inputs.size(); ++w) {
                    const double v = value[static_cast<std::size_t>(n.inputs[w])][q];
                    acc = sum ? acc + v : acc * v;
                  }
                  dst[q] = acc;
                }
                break;
              }
            }
          }
        });
      }
      const std::size_t rows = static_cast<std::size_t>(P.n[1]) * static_cast<std::size_t>(P.n[2]);
      pool.for_range(rows, [&](std::size_t begin, std::size_t end) {
        for (std::size_t f = 0; f < nf; ++f) {
          const double* r = value[static_cast<std::size_t>(rhs[f])];
          const double* u = fields[f];
          double* o = out.data() + P.base + f * P.points;
          for (std::size_t row = begin; row < end; ++row) {
            const int j = static_cast<int>(row % static_cast<std::size_t>(P.n[1]));
            const int k = static_cast<int>(row / static_cast<std::size_t>(P.n[1]));
            const std::ptrdiff_t start = P.index(0, j, k);
            for (auto q = start; q < start + P.n[0]; ++q) {
              double acc = r[q];
              for (std::size_t a = 0; a < ko.size(); ++a) {
                const auto& w = ko[a];
                const std::ptrdiff_t stride = P.stride[a];
                const int half = static_cast<int>(w.size() / 2);
                double s = 0.0;
                for (std::size_t c = 0; c < w.size(); ++c) s += w[c] * u[q + (static_cast<int>(c) - half) * stride];
                acc += s * inv_dx[a];
              }
              o[q] = acc;
            }
          }
        }
      });
    }
  }
};

RhsEvaluator::RhsEvaluator(const disc::KernelProgram& kernel, const Grid& grid, std::map<std::string, double> params,
                           int workers)
    : impl_(new Impl(kernel, grid, std::move(params), workers)) {}

RhsEvaluator::~RhsEvaluator() { delete impl_; }

void RhsEvaluator::operator()(const std::vector<double>& state, std::vector<double>& out) {
  impl_->evaluate(state, out, time_);
}

// ---------------------------------------------------------------------------
// Time loop

namespace {

class ScalarMachine final : public expr::Machine {
 public:
  ScalarMachine(const std::vector<double>& params, double t) : params_(params), t_(t) {}
  double load(int slot) override {
    if (slot >= kParamBase && slot < kCoordBase) return params_[static_cast<std::size_t>(slot - kParamBase)];
    if (slot == kTime) return t_;
    if (slot == kPi) return std::numbers::pi;
    throw RunError("finalization may only use parameters and time");
  }
  double load_indexed(int, double) override { throw RunError("indexed access in finalization"); }

 private:
  const std::vector<double>& params_;
  double t_;
};

std::string output_name(const std::string& field, std::int64_t step) {
  return field + "_" + std::to_string(step) + ".vtk";
}

}  // namespace

RunReport run(const doc::GenericPdeProblem& problem, const disc::KernelProgram& kernel_in, const RunConfig& config,
              Grid* final_state) {
  if (!(config.dt > 0.0) || !std::isfinite(config.dt)) throw RunError("dt must be positive");
  if (config.output_interval < 1) throw RunError("output_interval must be positive");
  if (kernel_in.fields != problem.fields) throw RunError("kernel fields do not match the problem");
  disc::KernelProgram kernel = kernel_in;
  if (config.dissipation) {
    if (*config.dissipation < 0.0) throw RunError("dissipation strength must be >= 0");
    kernel.dissipation.strength = *config.dissipation;
  }
  const int halo = std::max({kernel.halo, kernel.dag_radius(), kernel.dissipation.radius()});

  const auto params = resolve_parameters(problem, config);
  const Symbols sym = symbols_for(problem, params);
  const std::vector<double> pvals = param_values(params);

  const std::size_t dims = problem.coordinates.spatial.size();
  std::vector<double> lo(dims);
  std::vector<double> hi(dims);
  for (std::size_t a = 0; a < dims; ++a) {
    const auto& axis = problem.coordinates.spatial[a];
    auto it = std::find_if(problem.region.domain.begin(), problem.region.domain.end(),
                           [&](const doc::AxisDomain& d) { return d.axis == axis; });
    if (it == problem.region.domain.end()) throw RunError("no domain for axis '" + axis + "'");
    lo[a] = it->min;
    hi[a] = it->max;
  }
  if (config.lo) lo = *config.lo;
  if (config.hi) hi = *config.hi;
  std::vector<int> cells = config.cells.empty() ? std::vector<int>(dims, 100) : config.cells;

  Grid grid(cells, lo, hi, halo, problem.fields, config.decomposition);
  RunReport report;
  report.halo = halo;
  report.patches = static_cast<int>(grid.patches().size());
  double min_dx = grid.dx(0);
  for (int a = 1; a < grid.dims(); ++a) min_dx = std::min(min_dx, grid.dx(a));
  if (config.dt > 0.25 * min_dx) {
    report.warnings.push_back("dt exceeds 0.25*dx; the run may be unstable");
  }

  apply_initial_conditions(grid, problem, params, config.seed);

  const expr::Compiled finalization(problem.finalization.ast, [&](const std::string& name, expr::SymbolKind kind, bool indexed) {
    const int slot = sym.resolve(name, kind, indexed, false);
    if (slot >= kCoordBase && slot != kTime && slot != kPi) throw RunError("finalization may only use parameters and time");
    return slot;
  });

  RhsEvaluator rhs(kernel, grid, params, config.workers);
  std::vector<std::size_t> all(problem.fields.size());
  for (std::size_t f = 0; f < all.size(); ++f) all[f] = f;

  std::int64_t last_output = -1;
  auto dump = [&](std::int64_t step, double t) {
    if (config.output_dir.empty() || last_output == step) return;
    for (std::size_t f = 0; f < all.size(); ++f) {
      const auto path = config.output_dir / output_name(problem.fields[f], step);
      write_vtk(grid, {f}, t, path);
      report.outputs.push_back(path);
    }
    last_output = step;
  };

  std::int64_t step = 0;
  double t = 0.0;
  dump(0, 0.0);
  // time of the state each stage evaluates: c_0 = 0, c_k = prev_k (c_{k-1} + 1)
  std::vector<double> stage_time{0.0};
  for (const auto& s : kernel.integrator.stages) {
    stage_time.push_back(static_cast<double>(s.prev) * (stage_time.back() + 1.0));
  }
  std::size_t stage_index = 0;
  disc::Rhs evaluator = [&](std::vector<double>& stage, std::vector<double>& out) {
    exchange_halos(grid, stage);
    rhs.set_time(t + stage_time[stage_index++] * config.dt);
    rhs(stage, out);
  };
  for (;;) {
    t = static_cast<double>(step) * config.dt;
    ScalarMachine m(pvals, t);
    if (finalization.run(m) != 0.0) break;
    if (step >= config.max_steps) throw RunError("finalization not reached within max_steps", step);
    stage_index = 0;
    disc::rk3_step(grid.data, evaluator, config.dt, kernel.integrator);
    ++step;
    exchange_halos(grid);
    for (std::size_t p = 0; p < grid.patches().size(); ++p) {
      const Patch& P = grid.patches()[p];
      for (std::size_t f = 0; f < all.size(); ++f) {
        const double* u = grid.field(p, f);
        for (int k = 0; k < P.n[2]; ++k) {
          for (int j = 0; j < P.n[1]; ++j) {
            for (int i = 0; i < P.n[0]; ++i) {
              if (!std::isfinite(u[P.index(i, j, k)])) {
                throw RunError("non-finite value in field '" + problem.fields[f] + "'", step);
              }
            }
          }
        }
      }
    }
    if (step % config.output_interval == 0) dump(step, static_cast<double>(step) * config.dt);
  }
  dump(step, t);

  report.steps = step;
  report.final_time = t;
  for (std::size_t f = 0; f < all.size(); ++f) {
    const auto v = grid.gather(f);
    const auto [mn, mx] = std::minmax_element(v.begin(), v.end());
    report.fields.push_back({problem.fields[f], *mn, *mx});
  }
  if (final_state != nullptr) *final_state = std::move(grid);
  return report;
}

RunReport decompose_run(const doc::GenericPdeProblem& problem, const disc::KernelProgram& kernel,
                        const RunConfig& config, Grid* final_state) {
  if (config.decomposition.empty()) throw RunError("decompose_run needs a decomposition");
  return run(problem, kernel, config, final_state);
}

std::string to_json(const RunReport& r) {
  nlohmann::json j;
  j["steps"] = r.steps;
  j["final_time"] = r.final_time;
  j["halo"] = r.halo;
  j["patches"] = r.patches;
  nlohmann::json fields = nlohmann::json::array();
  for (const auto& f : r.fields) fields.push_back({{"name", f.name}, {"min", f.min}, {"max", f.max}});
  j["fields"] = fields;
  nlohmann::json outs = nlohmann::json::array();
  for (const auto& p : r.outputs) outs.push_back(p.string());
  j["outputs"] = outs;
  j["warnings"] = r.warnings;
  return j.dump(2);
}

}  // namespace simflow::pde
