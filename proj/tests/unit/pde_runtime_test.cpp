#include <cstring>

#include <gtest/gtest.h>

#include "simflow/param_file.hpp"
#include "test_support.hpp"

using namespace simflow;
using namespace simflow::testing;

namespace {

void fill_interior(pde::Grid& g, std::size_t f, const std::function<double(int, int)>& value) {
  for (std::size_t p = 0; p < g.patches().size(); ++p) {
    const auto& P = g.patches()[p];
    double* u = g.field(p, f);
    for (int j = 0; j < P.n[1]; ++j)
      for (int i = 0; i < P.n[0]; ++i) u[P.index(i, j)] = value(P.offset[0] + i, P.offset[1] + j);
  }
}

bool bitwise_equal(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

std::map<std::string, double> wave_params() { return {{"a", 1.0}, {"b", 0.1}, {"t_end", 1.0}}; }

}  // namespace

TEST(Halo, OneDimensionalExample) {
  pde::Grid g({4}, {0.0}, {1.0}, 2, {"u"});
  const auto& P = g.patches()[0];
  double* u = g.field(0, 0);
  for (int i = 0; i < 4; ++i) u[P.index(i)] = i + 1;
  pde::exchange_halos(g);
  std::vector<double> padded;
  for (int i = -2; i < 6; ++i) padded.push_back(u[P.index(i)]);
  EXPECT_EQ(padded, (std::vector<double>{3, 4, 1, 2, 3, 4, 1, 2}));
}

TEST(Halo, CornersDoublyWrapped) {
  for (std::vector<int> dec : {std::vector<int>{}, std::vector<int>{2, 2}, std::vector<int>{3, 1}}) {
    const int nx = 6, ny = 4, h = 2;
    pde::Grid g({nx, ny}, {0.0, 0.0}, {1.0, 1.0}, h, {"u", "v"}, dec);
    auto value = [](int f) { return [f](int i, int j) { return 1000.0 * f + 10.0 * i + j; }; };
    fill_interior(g, 0, value(0));
    fill_interior(g, 1, value(1));
    pde::exchange_halos(g);
    for (std::size_t p = 0; p < g.patches().size(); ++p) {
      const auto& P = g.patches()[p];
      for (std::size_t f = 0; f < 2; ++f) {
        const double* u = g.field(p, f);
        for (int j = -h; j < P.n[1] + h; ++j)
          for (int i = -h; i < P.n[0] + h; ++i) {
            const int gi = ((P.offset[0] + i) % nx + nx) % nx;
            const int gj = ((P.offset[1] + j) % ny + ny) % ny;
            ASSERT_EQ(u[P.index(i, j)], value(static_cast<int>(f))(gi, gj)) << "patch " << p << " " << i << "," << j;
          }
      }
    }
  }
}

TEST(Halo, ConstantField) {
  pde::Grid g({5, 5}, {0.0, 0.0}, {1.0, 1.0}, 3, {"u"});
  fill_interior(g, 0, [](int, int) { return 4.25; });
  pde::exchange_halos(g);
  const auto& P = g.patches()[0];
  for (int j = -3; j < 8; ++j)
    for (int i = -3; i < 8; ++i) EXPECT_EQ(g.field(0, 0)[P.index(i, j)], 4.25);
}

TEST(Halo, WiderThanInteriorRejected) {
  EXPECT_THROW(pde::Grid({2}, {0.0}, {1.0}, 3, {"u"}), std::exception);
  EXPECT_THROW(pde::Grid({8, 8}, {0.0, 0.0}, {1.0, 1.0}, 3, {"u"}, {4, 1}), std::exception);
  EXPECT_THROW(pde::Grid({7, 8}, {0.0, 0.0}, {1.0, 1.0}, 1, {"u"}, {2, 1}), std::exception);
}

TEST(InitialConditions, WaveGaussian) {
  Wave w;
  pde::Grid g({100, 100}, {-0.5, -0.5}, {0.5, 0.5}, 3, w.problem.fields);
  pde::apply_initial_conditions(g, w.problem, wave_params());
  const double dx = 0.01;
  for (int j = 0; j < 100; ++j)
    for (int i = 0; i < 100; ++i) ASSERT_EQ(g.at(1, i, j), 0.0);
  // cell nearest the origin: centre at (i + 1/2) dx - 1/2
  const int i = 49, j = 50;
  const double x = -0.5 + (i + 0.5) * dx, y = -0.5 + (j + 0.5) * dx;
  EXPECT_EQ(g.coordinate(0, i), x);
  EXPECT_DOUBLE_EQ(g.at(0, i, j), std::exp(-(x * x + y * y) / 0.1));
}

TEST(InitialConditions, ConstantFillsGhosts) {
  auto j = load_json(kDocs / "problems/wave_problem.json");
  j["region"]["initial_condition"] = nlohmann::json::array({"K = 0.5", "phi = 0.5"});
  auto problem = std::get<doc::GenericPdeProblem>(doc::parse_document(j.dump()));
  pde::Grid g({4, 4}, {-0.5, -0.5}, {0.5, 0.5}, 2, problem.fields);
  pde::apply_initial_conditions(g, problem, wave_params());
  for (double v : g.data) EXPECT_EQ(v, 0.5);
}

TEST(InitialConditions, UnassignedFieldFaults) {
  auto j = load_json(kDocs / "problems/wave_problem.json");
  j["region"]["initial_condition"] =
      nlohmann::json::array({"phi = 1", nlohmann::json{{"if", "x > 0"}, {"then", {"K = 1"}}}});
  auto problem = std::get<doc::GenericPdeProblem>(doc::parse_document(j.dump()));
  pde::Grid g({4, 4}, {-0.5, -0.5}, {0.5, 0.5}, 0, problem.fields);
  EXPECT_THROW(pde::apply_initial_conditions(g, problem, wave_params()), pde::RunError);
}

TEST(Run, ReferenceConfigurationStepCount) {
  Wave w;
  pde::RunConfig c;
  c.dt = 0.005;
  c.cells = {40, 40};
  auto r = pde::run(w.problem, w.kernel(), c);
  EXPECT_EQ(r.steps, 200);
  EXPECT_DOUBLE_EQ(r.final_time, 1.0);
}

TEST(Run, ZeroEndTimeDumpsInitialState) {
  Wave w;
  auto dir = scratch_dir("t0");
  pde::RunConfig c;
  c.dt = 0.005;
  c.cells = {8, 8};
  c.parameters["t_end"] = 0.0;
  c.output_dir = dir;
  auto r = pde::run(w.problem, w.kernel(), c);
  EXPECT_EQ(r.steps, 0);
  ASSERT_EQ(r.outputs.size(), 2u);
  EXPECT_TRUE(fs::exists(dir / "phi_0.vtk"));
  EXPECT_TRUE(fs::exists(dir / "K_0.vtk"));
  fs::remove_all(dir);
}

TEST(Run, OutputCadence) {
  Wave w;
  auto dir = scratch_dir("cadence");
  pde::RunConfig c;
  c.dt = 0.005;
  c.cells = {8, 8};
  c.parameters["t_end"] = 0.25;  // 50 steps
  c.output_interval = 20;
  c.output_dir = dir;
  auto r = pde::run(w.problem, w.kernel(), c);
  EXPECT_EQ(r.steps, 50);
  for (int s : {0, 20, 40, 50}) EXPECT_TRUE(fs::exists(dir / ("phi_" + std::to_string(s) + ".vtk"))) << s;
  EXPECT_EQ(r.outputs.size(), 8u);
  fs::remove_all(dir);
}

TEST(Run, PlaneWaveAccuracy) {
  auto w = plane_wave_1d();
  pde::RunConfig c;
  c.dt = 0.001;
  c.cells = {100};
  c.parameters["t_end"] = 0.5;
  pde::Grid g = empty_grid();
  auto r = pde::run(w.problem, w.kernel(), c, &g);
  EXPECT_EQ(r.steps, 500);
  EXPECT_LT(plane_wave_l2(g, r.final_time), 1e-4);
}

TEST(Run, NonFiniteAbortsWithStep) {
  Wave w;
  pde::RunConfig c;
  c.dt = 0.2;
  c.cells = {20, 20};
  c.parameters["t_end"] = 1e6;
  try {
    pde::run(w.problem, w.kernel(), c);
    FAIL();
  } catch (const pde::RunError& e) {
    EXPECT_GT(e.step(), 0);
    EXPECT_NE(std::string(e.what()).find("non-finite"), std::string::npos);
  }
}

TEST(Run, MaxStepsGuard) {
  Wave w;
  pde::RunConfig c;
  c.dt = 0.005;
  c.cells = {8, 8};
  c.max_steps = 5;
  EXPECT_THROW(pde::run(w.problem, w.kernel(), c), pde::RunError);
}

TEST(Run, CflWarning) {
  Wave w;
  pde::RunConfig c;
  c.cells = {10, 10};
  c.parameters["t_end"] = 0.05;
  c.dt = 0.01;
  EXPECT_TRUE(pde::run(w.problem, w.kernel(), c).warnings.empty());
  c.dt = 0.05;
  EXPECT_FALSE(pde::run(w.problem, w.kernel(), c).warnings.empty());
}

TEST(Run, HaloMismatchRejected) {
  Wave w;
  auto k = w.kernel();
  pde::Grid g({10, 10}, {-0.5, -0.5}, {0.5, 0.5}, 2, w.problem.fields);
  EXPECT_THROW(pde::RhsEvaluator(k, g, wave_params()), pde::RunError);
}

TEST(Configure, ParameterFileKeys) {
  Wave w;
  auto params = ParamFile::parse(
      "tend = 0.5\n dt = 0.0025;\ncells = 50, 40\ndecomposition = [2, 2]\nworkers = 3\n"
      "output_interval = 7\nsigma = 0.05\na = 2\n");
  auto c = pde::configure(w.problem, params);
  EXPECT_EQ(c.dt, 0.0025);
  EXPECT_EQ(c.cells, (std::vector<int>{50, 40}));
  EXPECT_EQ(c.decomposition, (std::vector<int>{2, 2}));
  EXPECT_EQ(c.workers, 3);
  EXPECT_EQ(c.output_interval, 7);
  ASSERT_TRUE(c.dissipation);
  EXPECT_EQ(*c.dissipation, 0.05);
  auto resolved = pde::resolve_parameters(w.problem, c);
  EXPECT_EQ(resolved.at("t_end"), 0.5);
  EXPECT_EQ(resolved.at("a"), 2.0);
  EXPECT_EQ(resolved.at("b"), 0.1);
  EXPECT_THROW(pde::configure(w.problem, ParamFile::parse("bogus = 1\n")), std::exception);
}

TEST(Vtk, FormatArithmetic) {
  auto dir = scratch_dir("vtk");
  pde::Grid g({2, 2}, {0.0, 0.0}, {1.0, 1.0}, 0, {"u"});
  pde::write_vtk(g, {0}, 0.0, dir / "u.vtk");
  auto text = slurp(dir / "u.vtk");
  EXPECT_NE(text.find("DIMENSIONS 3 3 1"), std::string::npos);
  EXPECT_NE(text.find("CELL_DATA 4"), std::string::npos);
  auto f = read_vtk(dir / "u.vtk");
  EXPECT_EQ(f.scalars.at("u"), (std::vector<double>{0, 0, 0, 0}));
  fs::remove_all(dir);
}

TEST(Vtk, RoundTripBitwise) {
  auto dir = scratch_dir("vtkrt");
  pde::Grid g({7, 5}, {-0.5, -0.5}, {0.5, 0.5}, 1, {"u", "w"});
  fill_interior(g, 0, [](int i, int j) { return std::sin(i * 0.37 + j) / 3.0; });
  fill_interior(g, 1, [](int i, int j) { return 1e-300 * i - 7.1e13 * j + 0.1; });
  pde::write_vtk(g, {0, 1}, 0.25, dir / "g.vtk");
  auto f = read_vtk(dir / "g.vtk");
  EXPECT_EQ(f.dimensions, (std::vector<int>{8, 6, 1}));
  EXPECT_TRUE(bitwise_equal(f.scalars.at("u"), g.gather(0)));
  EXPECT_TRUE(bitwise_equal(f.scalars.at("w"), g.gather(1)));
  fs::remove_all(dir);
}

TEST(Decomposition, HaloSufficiencyForRhs) {
  Wave w;
  auto k = w.kernel();
  pde::Grid whole({24, 24}, {-0.5, -0.5}, {0.5, 0.5}, k.halo, w.problem.fields);
  pde::Grid split({24, 24}, {-0.5, -0.5}, {0.5, 0.5}, k.halo, w.problem.fields, {3, 2});
  pde::apply_initial_conditions(whole, w.problem, wave_params());
  pde::apply_initial_conditions(split, w.problem, wave_params());
  std::vector<double> a(whole.data.size()), b(split.data.size());
  pde::RhsEvaluator(k, whole, wave_params())(whole.data, a);
  pde::RhsEvaluator(k, split, wave_params())(split.data, b);
  // compare interior cells via a gather-like walk
  auto interior = [](const pde::Grid& g, const std::vector<double>& v, std::size_t f) {
    std::vector<double> out(static_cast<std::size_t>(g.cells(0) * g.cells(1)));
    for (std::size_t p = 0; p < g.patches().size(); ++p) {
      const auto& P = g.patches()[p];
      const double* base = v.data() + P.base + f * P.points;
      for (int j = 0; j < P.n[1]; ++j)
        for (int i = 0; i < P.n[0]; ++i)
          out[static_cast<std::size_t>((P.offset[1] + j) * g.cells(0) + P.offset[0] + i)] = base[P.index(i, j)];
    }
    return out;
  };
  for (std::size_t f = 0; f < 2; ++f) EXPECT_TRUE(bitwise_equal(interior(whole, a, f), interior(split, b, f)));
}

TEST(Decomposition, SingleAndSplitRunsAgree) {
  Wave w;
  auto k = w.kernel();
  pde::RunConfig c;
  c.dt = 0.005;
  c.cells = {40, 40};
  c.parameters["t_end"] = 0.2;
  pde::Grid serial = empty_grid(), one = empty_grid(), four = empty_grid();
  pde::run(w.problem, k, c, &serial);
  c.decomposition = {1, 1};
  pde::decompose_run(w.problem, k, c, &one);
  c.decomposition = {2, 2};
  c.workers = 4;
  auto r = pde::decompose_run(w.problem, k, c, &four);
  EXPECT_EQ(r.patches, 4);
  for (std::size_t f = 0; f < 2; ++f) {
    EXPECT_TRUE(bitwise_equal(serial.gather(f), one.gather(f)));
    EXPECT_TRUE(bitwise_equal(serial.gather(f), four.gather(f)));
  }
}

TEST(Decomposition, Indivisible) {
  Wave w;
  pde::RunConfig c;
  c.dt = 0.005;
  c.cells = {7, 8};
  c.decomposition = {2, 1};
  EXPECT_THROW(pde::decompose_run(w.problem, w.kernel(), c), pde::RunError);
  c.decomposition = {};
  EXPECT_THROW(pde::decompose_run(w.problem, w.kernel(), c), pde::RunError);
}

TEST(PdeProperty, XYSymmetryPreserved) {
  Wave w;
  pde::RunConfig c;
  c.dt = 0.005;
  c.cells = {50, 50};
  c.parameters["t_end"] = 0.5;
  pde::Grid g = empty_grid();
  pde::run(w.problem, w.kernel(), c, &g);
  double worst = 0.0;
  for (int j = 0; j < 50; ++j)
    for (int i = 0; i < 50; ++i) worst = std::max(worst, std::abs(g.at(0, i, j) - g.at(0, j, i)));
  EXPECT_LT(worst, 1e-12);
}

TEST(PdeProperty, TranslationCommutesWithStepping) {
  Wave w;
  auto k = w.kernel();
  const int n = 32;
  auto init = [&](pde::Grid& g, int shift) {
    pde::Grid ref({n, n}, {-0.5, -0.5}, {0.5, 0.5}, k.halo, w.problem.fields);
    pde::apply_initial_conditions(ref, w.problem, {{"a", 1.0}, {"b", 0.02}, {"t_end", 1.0}});
    for (std::size_t f = 0; f < 2; ++f)
      fill_interior(g, f, [&](int i, int j) { return ref.at(f, ((i - shift) % n + n) % n, j); });
    pde::exchange_halos(g);
  };
  auto evolve = [&](int shift) {
    pde::Grid g({n, n}, {-0.5, -0.5}, {0.5, 0.5}, k.halo, w.problem.fields);
    init(g, shift);
    advance(g, k, wave_params(), 0.005, 30);
    return g;
  };
  auto base = evolve(0);
  // a whole domain length is no shift at all
  auto full = evolve(n);
  EXPECT_TRUE(bitwise_equal(base.data, full.data));
  auto moved = evolve(5);
  for (std::size_t f = 0; f < 2; ++f)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) ASSERT_EQ(moved.at(f, (i + 5) % n, j), base.at(f, i, j));
}

TEST(PdeProperty, EnergyDriftWithoutDissipation) {
  Wave w;
  w.policy.time.dissipation = 0.0;
  auto k = w.kernel();
  const int n = 100;
  pde::Grid g({n, n}, {-0.5, -0.5}, {0.5, 0.5}, k.halo, w.problem.fields);
  pde::apply_initial_conditions(g, w.problem, wave_params());
  auto d1 = disc::centered_stencil(1, "x", 4);
  auto energy = [&] {
    const auto& P = g.patches()[0];
    const double* phi = g.field(0, 0);
    const double* kk = g.field(0, 1);
    const double dx = g.dx(0);
    double e = 0.0;
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        double gx = 0.0, gy = 0.0;
        for (int s = 0; s < d1.points(); ++s) {
          gx += d1.values[s] * phi[P.index(i + d1.offsets[s], j)];
          gy += d1.values[s] * phi[P.index(i, j + d1.offsets[s])];
        }
        gx /= dx;
        gy /= dx;
        const double kv = kk[P.index(i, j)];
        e += (kv * kv + gx * gx + gy * gy) * dx * dx;
      }
    return e;
  };
  const double e0 = energy();
  double worst = 0.0;
  // dt = dx/4; RK3's own damping of resolved modes shrinks like dt^3
  for (int block = 0; block < 10; ++block) {
    advance(g, k, wave_params(), 0.0025, 40, 4);
    worst = std::max(worst, std::abs(energy() - e0) / e0);
  }
  EXPECT_LT(worst, 1e-3);
}

TEST(PdeProperty, WorkerCountDoesNotChangeResults) {
  Wave w;
  auto k = w.kernel();
  pde::RunConfig c;
  c.dt = 0.005;
  c.cells = {30, 30};
  c.parameters["t_end"] = 0.1;
  pde::Grid a = empty_grid(), b = empty_grid();
  c.workers = 1;
  pde::run(w.problem, k, c, &a);
  c.workers = 5;
  pde::run(w.problem, k, c, &b);
  EXPECT_TRUE(bitwise_equal(a.data, b.data));
}
