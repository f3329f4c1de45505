#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "simflow/abm_spatial.hpp"
#include "simflow/rng.hpp"
#include "test_support.hpp"

using namespace simflow;
using namespace simflow::testing;

namespace {

doc::AbmSpatialModel flocking() { return load_as<doc::AbmSpatialModel>("models/flocking.json"); }
doc::AbmSpatialProblem flocking_problem() { return load_as<doc::AbmSpatialProblem>("problems/flocking_problem.json"); }

spatial::AgentSet box(std::size_t n, double side, double radius, int dims = 2) {
  std::vector<std::string> coords{"x", "y", "z"};
  coords.resize(static_cast<std::size_t>(dims));
  return spatial::AgentSet(n, coords, std::vector<double>(static_cast<std::size_t>(dims), 0.0),
                           std::vector<double>(static_cast<std::size_t>(dims), side), radius,
                           {"theta", "sumcos", "sumsin", "n"});
}

void scatter(spatial::AgentSet& a, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  for (int d = 0; d < a.dims(); ++d) {
    std::uniform_real_distribution<double> u(a.lo(d), a.hi(d));
    for (std::size_t i = 0; i < a.size(); ++i) a.set_position(d, i, u(gen));
  }
  std::uniform_real_distribution<double> h(0.0, 2 * std::numbers::pi);
  for (auto& t : a.data.column("theta")) t = h(gen);
}

// Independent periodic distance check written from scratch.
std::vector<std::size_t> oracle_neighbors(const spatial::AgentSet& a, std::size_t i) {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < a.size(); ++j) {
    double d2 = 0.0;
    for (int d = 0; d < a.dims(); ++d) {
      const double l = a.extent(d);
      double dx = std::abs(a.position(d, i) - a.position(d, j));
      dx = std::min(dx, l - dx);
      d2 += dx * dx;
    }
    if (d2 <= a.radius() * a.radius()) out.push_back(j);
  }
  return out;
}

std::map<std::string, double> params(double eta, double v0 = 0.5, double dt = 1.0) {
  return {{"eta", eta}, {"v0", v0}, {"dt", dt}, {"time_steps", 10}};
}

}  // namespace

TEST(Neighbors, MatchBruteForce) {
  std::mt19937_64 gen(2024);
  for (int config = 0; config < 100; ++config) {
    const double radius = std::uniform_real_distribution<double>(0.2, 3.0)(gen);
    const int dims = config % 3 == 0 ? 3 : 2;
    auto a = box(500, dims == 3 ? 10.0 : 20.0, radius, dims);
    scatter(a, gen());
    spatial::CellList cells(a);
    for (std::size_t i = 0; i < a.size(); ++i) {
      auto got = spatial::find_neighbors(a, cells, i);
      ASSERT_EQ(got, oracle_neighbors(a, i)) << "config " << config << " agent " << i;
      ASSERT_EQ(got, spatial::brute_force_neighbors(a, i));
    }
  }
}

TEST(Neighbors, SingleAgentSeesItself) {
  auto a = box(1, 10.0, 1.0);
  a.set_position(0, 0, 3.0);
  spatial::CellList cells(a);
  EXPECT_EQ(spatial::find_neighbors(a, cells, 0), (std::vector<std::size_t>{0}));
}

TEST(Neighbors, ExactRadiusIsIncluded) {
  auto a = box(3, 16.0, 1.0);
  // 0 and 1 exactly one apart; 2 just outside; 0 and 2 across the wrap
  a.set_position(0, 0, 0.5);
  a.set_position(0, 1, 1.5);
  a.set_position(0, 2, 14.25);
  spatial::CellList cells(a);
  EXPECT_EQ(spatial::find_neighbors(a, cells, 0), (std::vector<std::size_t>{0, 1}));
  a.set_position(0, 2, 15.5);
  cells.build(a);
  EXPECT_EQ(spatial::find_neighbors(a, cells, 0), (std::vector<std::size_t>{0, 1, 2}));
}

TEST(Neighbors, DegenerateBinsFallBack) {
  auto a = box(50, 4.0, 1.5);
  scatter(a, 3);
  spatial::CellList cells(a);
  EXPECT_TRUE(cells.degenerate());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(spatial::find_neighbors(a, cells, i), oracle_neighbors(a, i));
}

TEST(Flocking, GatherExample) {
  auto a = box(3, 10.0, 1.0);
  a.data.column("theta") = {0.0, std::numbers::pi / 2, std::numbers::pi};
  std::vector<std::vector<std::size_t>> nbrs{{0, 1}, {0, 1, 2}, {1, 2}};
  spatial::flocking_gather(a, nbrs, 1);
  EXPECT_NEAR(a.data.column("sumcos")[1], 0.0, 1e-15);
  EXPECT_NEAR(a.data.column("sumsin")[1], 1.0, 1e-15);
  EXPECT_EQ(a.data.column("n")[1], 3.0);
}

TEST(Flocking, UpdateExample) {
  auto a = box(1, 10.0, 1.0);
  a.set_position(0, 0, 5.0);
  a.set_position(1, 0, 9.9);
  a.data.column("sumcos")[0] = 0.0;
  a.data.column("sumsin")[0] = 2.0;
  a.data.column("n")[0] = 2.0;
  // no noise: heading straight up, wraps through the top edge
  spatial::flocking_update(a, 0, 0.0, 0.5, 1.0, 1.234);
  EXPECT_DOUBLE_EQ(a.data.column("theta")[0], std::numbers::pi / 2);
  EXPECT_NEAR(a.position(0, 0), 5.0, 1e-15);
  EXPECT_NEAR(a.position(1, 0), 0.4, 1e-12);
}

TEST(Flocking, ZeroSumKeepsHeading) {
  auto a = box(1, 10.0, 1.0);
  a.data.column("theta")[0] = 0.7;
  spatial::flocking_update(a, 0, 0.0, 0.5, 1.0, 0.0);
  EXPECT_EQ(a.data.column("theta")[0], 0.7);
}

TEST(Flocking, DocumentRulesMatchNativeBitwise) {
  const std::uint64_t seed = 17;
  auto doc_agents = box(400, 20.0, 1.0);
  scatter(doc_agents, 5);
  auto native = doc_agents;
  spatial::SpatialEngine engine(flocking(), doc_agents, params(0.3), seed);

  for (std::int64_t in = 0; in < 5; ++in) {
    engine.step(in);

    spatial::CellList cells(native);
    std::vector<std::vector<std::size_t>> nbrs(native.size());
    for (std::size_t i = 0; i < native.size(); ++i) nbrs[i] = spatial::find_neighbors(native, cells, i);
    for (std::size_t i = 0; i < native.size(); ++i) spatial::flocking_gather(native, nbrs, i);
    for (std::size_t i = 0; i < native.size(); ++i) {
      // rule 1 of the execution order, same key as the engine
      KeyedRng rng({seed, static_cast<std::uint64_t>(in), 1, i});
      const double xi = 2 * std::numbers::pi * rng.uniform();
      spatial::flocking_update(native, i, 0.3, 0.5, 1.0, xi);
    }
    for (std::size_t c = 0; c < native.data.names.size(); ++c)
      for (std::size_t i = 0; i < native.size(); ++i)
        ASSERT_EQ(doc_agents.data.values[c][i], native.data.values[c][i])
            << native.data.names[c] << " agent " << i << " step " << in;
  }
}

TEST(SpatialProperty, ParallelEquivalence) {
  auto run = [](int workers) {
    auto a = box(1000, 30.0, 1.0);
    spatial::SpatialEngine e(flocking(), a, params(0.2), 9, workers);
    e.initialize(flocking_problem().initial_condition);
    for (int in = 0; in < 10; ++in) e.step(in);
    return a.data;
  };
  auto serial = run(1);
  EXPECT_EQ(run(2), serial);
  EXPECT_EQ(run(4), serial);
}

TEST(SpatialProperty, PositionsStayInDomain) {
  auto a = box(500, 10.0, 1.0);
  spatial::SpatialEngine e(flocking(), a, params(0.5, 3.7, 1.0), 4);
  e.initialize(flocking_problem().initial_condition);
  for (int in = 0; in < 50; ++in) {
    e.step(in);
    for (int d = 0; d < 2; ++d)
      for (std::size_t i = 0; i < a.size(); ++i) {
        ASSERT_GE(a.position(d, i), 0.0);
        ASSERT_LT(a.position(d, i), 10.0);
      }
  }
}

TEST(SpatialProperty, AlignedWithoutNoiseStaysOrdered) {
  auto a = box(300, 20.0, 1.0);
  scatter(a, 8);
  a.data.column("theta").assign(300, 1.1);
  spatial::SpatialEngine e(flocking(), a, params(0.0), 2);
  for (int in = 0; in < 20; ++in) e.step(in);
  EXPECT_NEAR(spatial::order_parameter(a, "theta"), 1.0, 1e-12);
}

TEST(SpatialProperty, OrderParameterBounds) {
  auto a = box(4, 10.0, 1.0);
  a.data.column("theta") = {0.0, std::numbers::pi / 2, std::numbers::pi, 3 * std::numbers::pi / 2};
  EXPECT_NEAR(spatial::order_parameter(a, "theta"), 0.0, 1e-15);
  a.data.column("theta").assign(4, 2.0);
  EXPECT_NEAR(spatial::order_parameter(a, "theta"), 1.0, 1e-15);
}

TEST(SpatialRun, ReportAndDeterminism) {
  spatial::SpatialRunConfig c;
  c.parameters = params(0.1);
  c.agents = 256;
  c.lo = std::vector<double>{0.0, 0.0};
  c.hi = std::vector<double>{16.0, 16.0};
  c.seed = 5;
  spatial::AgentSet first = box(1, 1.0, 0.1), second = box(1, 1.0, 0.1);
  auto r1 = spatial::run_spatial_problem(flocking_problem(), flocking(), c, &first);
  c.workers = 3;
  auto r2 = spatial::run_spatial_problem(flocking_problem(), flocking(), c, &second);
  EXPECT_EQ(r1.steps, 10);
  EXPECT_EQ(r1.agents, 256u);
  EXPECT_EQ(r1.order.size(), 11u);
  EXPECT_TRUE(r1.warnings.empty());
  EXPECT_EQ(r1.order, r2.order);
  EXPECT_EQ(first.data, second.data);
}

TEST(SpatialRun, DegenerateRadiusWarns) {
  spatial::SpatialRunConfig c;
  c.parameters = params(0.1);
  c.parameters["time_steps"] = 2;
  c.agents = 30;
  c.radius = 2.0;
  c.lo = std::vector<double>{0.0, 0.0};
  c.hi = std::vector<double>{5.0, 5.0};
  auto r = spatial::run_spatial_problem(flocking_problem(), flocking(), c);
  ASSERT_EQ(r.warnings.size(), 1u);
  EXPECT_NE(r.warnings[0].find("full neighbour scan"), std::string::npos);
}

TEST(SpatialRun, ConfigureKeys) {
  auto c = spatial::configure(flocking_problem(), ParamFile::load(kDocs / "params/flocking.input"));
  EXPECT_EQ(*c.agents, 1024);
  EXPECT_EQ(*c.radius, 1.0);
  EXPECT_EQ(*c.hi, (std::vector<double>{100.0, 100.0}));
  EXPECT_EQ(c.parameters.at("eta"), 0.1);
  EXPECT_EQ(c.seed, 1u);
  EXPECT_THROW(spatial::configure(flocking_problem(), ParamFile::parse("x_up = 1, 2, 3\n")), ParamError);
}
