#include <cctype>
#include <set>

#include <gtest/gtest.h>

#include "simflow/abm_graph.hpp"
#include "test_support.hpp"

using namespace simflow;
using namespace simflow::testing;
using nlohmann::json;

namespace {

doc::GraphSpec spec(doc::Distribution d, std::int64_t v, std::int64_t e = 0, bool directed = true) {
  doc::GraphSpec s;
  s.distribution = d;
  s.vertices = v;
  s.edges = e;
  s.directed = directed;
  return s;
}

doc::AbmGraphModel voter() { return load_as<doc::AbmGraphModel>("models/voter.json"); }
doc::AbmGraphProblem voter_problem() { return load_as<doc::AbmGraphProblem>("problems/voter_problem.json"); }

graph::Graph ring(int n) { return graph::generate_graph(spec(doc::Distribution::circular, n), 0); }

// Model with properties s, a: "Inc" adds one to s, "Read" copies the in-neighbour's s.
doc::AbmGraphModel inc_then_read() {
  json m = {{"kind", "abm_graph_model"},
            {"head", {{"name", "probe"}, {"id", "probe"}, {"author", "t"}, {"version", "1"}, {"date", "d"}}},
            {"vertex_properties", {"s", "a"}},
            {"parameters", json::array()},
            {"rules",
             {{"update", {{{"name", "Inc"}, {"property", "s"}, {"algorithm", {"s($cv) = s($cv) + 1"}}}}},
              {"gather",
               {{{"name", "Read"},
                 {"property", "a"},
                 {"algorithm", {{{"iterate_over_edges", "in"}, {"do", {"a($cv) = s($es($ce))"}}}}}}}}}},
            {"execution_order", {"Inc", "Read"}}};
  return std::get<doc::AbmGraphModel>(doc::parse_document(m.dump()));
}

// Minimal DOT grammar check: graph/digraph, braces, node and edge statements
// with optional attribute lists. Returns node and edge counts.
struct DotSummary {
  bool directed = false;
  std::set<std::string> nodes;
  std::size_t edges = 0;
};

class DotParser {
 public:
  explicit DotParser(const std::string& text) : s_(text) {}

  DotSummary parse() {
    DotSummary out;
    auto kw = ident();
    if (kw == "digraph") out.directed = true;
    else if (kw != "graph") fail("expected graph or digraph");
    skip();
    if (peek() != '{') ident();  // optional name
    expect('{');
    for (;;) {
      skip();
      if (peek() == '}') break;
      std::string first = id();
      skip();
      std::vector<std::string> chain{first};
      while (peek() == '-') {
        ++i_;
        const char op = get();
        if ((out.directed && op != '>') || (!out.directed && op != '-')) fail("wrong edge operator");
        chain.push_back(id());
        skip();
      }
      if (peek() == '[') attrs();
      skip();
      if (peek() == ';') ++i_;
      if (chain.size() == 1) out.nodes.insert(first);
      else out.edges += chain.size() - 1;
    }
    expect('}');
    skip();
    if (i_ != s_.size()) fail("trailing content");
    return out;
  }

 private:
  void fail(const std::string& m) { throw std::runtime_error("dot: " + m + " at " + std::to_string(i_)); }
  void skip() {
    while (i_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[i_]))) ++i_;
  }
  char peek() { return i_ < s_.size() ? s_[i_] : '\0'; }
  char get() { return i_ < s_.size() ? s_[i_++] : '\0'; }
  void expect(char c) {
    skip();
    if (get() != c) fail(std::string("expected ") + c);
  }
  std::string ident() {
    skip();
    std::string r;
    while (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_') r += get();
    if (r.empty()) fail("expected identifier");
    return r;
  }
  std::string id() {
    skip();
    if (peek() != '"') return ident();
    ++i_;
    std::string r;
    for (;;) {
      char c = get();
      if (c == '\0') fail("unterminated string");
      if (c == '"') break;
      if (c == '\\') c = get();
      r += c;
    }
    return r;
  }
  void attrs() {
    expect('[');
    for (;;) {
      skip();
      if (peek() == ']') break;
      id();
      expect('=');
      id();
      skip();
      if (peek() == ',' || peek() == ';') ++i_;
    }
    expect(']');
  }

  const std::string& s_;
  std::size_t i_ = 0;
};

}  // namespace

TEST(GraphGen, Circular) {
  auto g = ring(5);
  EXPECT_EQ(g.edge_count(), 5u);
  for (int v = 0; v < 5; ++v) {
    EXPECT_EQ(g.in_degree(v), 1);
    EXPECT_EQ(g.out_degree(v), 1);
    EXPECT_EQ(g.arcs()[static_cast<std::size_t>(v)].target, (v + 1) % 5);
  }
}

TEST(GraphGen, RandomExactDistinctEdges) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto g = graph::generate_graph(spec(doc::Distribution::random, 500, 1000), seed);
    EXPECT_EQ(g.edge_count(), 1000u);
    std::set<std::pair<int, int>> seen;
    for (const auto& a : g.arcs()) {
      EXPECT_NE(a.source, a.target);
      EXPECT_TRUE(seen.insert({a.source, a.target}).second);
    }
  }
}

TEST(GraphGen, RandomIsUniformOverPairs) {
  // V=4 directed has 12 pairs; each of 3 edges lands on a given pair with p = 1/4
  const int trials = 6000;
  std::map<std::pair<int, int>, int> count;
  for (int s = 0; s < trials; ++s) {
    auto g = graph::generate_graph(spec(doc::Distribution::random, 4, 3), static_cast<std::uint64_t>(s));
    for (const auto& a : g.arcs()) ++count[{a.source, a.target}];
  }
  ASSERT_EQ(count.size(), 12u);
  const double expect = trials * 3.0 / 12.0;
  double chi2 = 0.0;
  for (const auto& [pair, c] : count) chi2 += (c - expect) * (c - expect) / expect;
  // 11 degrees of freedom; 31.3 is the 0.1% tail
  EXPECT_LT(chi2, 31.3);
}

TEST(GraphGen, DenseRandomAndInfeasible) {
  auto full = graph::generate_graph(spec(doc::Distribution::random, 6, 30), 3);
  EXPECT_EQ(full.edge_count(), 30u);
  EXPECT_THROW(graph::generate_graph(spec(doc::Distribution::random, 6, 31), 3), graph::AbmError);
  auto und = graph::generate_graph(spec(doc::Distribution::random, 6, 15, false), 3);
  EXPECT_EQ(und.edge_count(), 15u);
  EXPECT_THROW(graph::generate_graph(spec(doc::Distribution::random, 6, 16, false), 3), graph::AbmError);
}

TEST(GraphGen, MinInDegreeGuarantee) {
  auto s = spec(doc::Distribution::random, 500, 1000);
  s.min_in_degree = 1;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    auto g = graph::generate_graph(s, seed);
    EXPECT_EQ(g.edge_count(), 1000u);
    for (int v = 0; v < 500; ++v) ASSERT_GE(g.in_degree(v), 1);
  }
  s.edges = 400;
  EXPECT_THROW(graph::generate_graph(s, 1), graph::AbmError);
}

TEST(GraphGen, ScaleFreeHeavyTail) {
  auto s = spec(doc::Distribution::scale_free, 1000, 0, false);
  s.attachment = 2;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    auto g = graph::generate_graph(s, seed);
    EXPECT_EQ(g.edge_count(), 3u + 997u * 2u);
    std::vector<int> degree(1000, 0);
    for (std::size_t i = 0; i < g.arcs().size(); i += 2) {
      ++degree[static_cast<std::size_t>(g.arcs()[i].source)];
      ++degree[static_cast<std::size_t>(g.arcs()[i].target)];
    }
    double mean = 0.0;
    for (int d : degree) mean += d;
    mean /= 1000.0;
    EXPECT_GT(*std::max_element(degree.begin(), degree.end()), 3.0 * mean) << seed;
  }
}

TEST(GraphGen, DeterministicPerSeed) {
  auto a = graph::generate_graph(spec(doc::Distribution::random, 100, 300), 9);
  auto b = graph::generate_graph(spec(doc::Distribution::random, 100, 300), 9);
  auto c = graph::generate_graph(spec(doc::Distribution::random, 100, 300), 10);
  EXPECT_EQ(graph::edge_list(a), graph::edge_list(b));
  EXPECT_NE(graph::edge_list(a), graph::edge_list(c));
}

TEST(EdgeList, Parse) {
  auto g = graph::parse_edge_list("0 1\n1 0\n");
  EXPECT_EQ(g.vertices(), 2);
  EXPECT_EQ(g.edge_count(), 2u);
  auto iso = graph::parse_edge_list("vertices 3\n");
  EXPECT_EQ(iso.vertices(), 3);
  EXPECT_EQ(iso.edge_count(), 0u);
  EXPECT_THROW(graph::parse_edge_list("vertices 2\n0 5\n"), graph::AbmError);
  EXPECT_THROW(graph::parse_edge_list("0 x\n"), graph::AbmError);
  EXPECT_THROW(graph::parse_edge_list("0 1 2\n"), graph::AbmError);
}

TEST(EdgeList, RoundTripKeepsOrder) {
  auto dir = scratch_dir("edges");
  auto g = graph::generate_graph(spec(doc::Distribution::random, 50, 200), 4);
  graph::save_graph(g, dir / "g.edges");
  auto back = graph::load_graph(dir / "g.edges");
  ASSERT_EQ(back.arcs().size(), g.arcs().size());
  for (std::size_t i = 0; i < g.arcs().size(); ++i) {
    EXPECT_EQ(back.arcs()[i].source, g.arcs()[i].source);
    EXPECT_EQ(back.arcs()[i].target, g.arcs()[i].target);
  }
  EXPECT_EQ(graph::edge_list(back), graph::edge_list(g));
  fs::remove_all(dir);
}

TEST(GraphStep, RingGather) {
  auto g = ring(3);
  auto model = voter();
  // only the gather, so acc keeps what it collects
  model.update_rules.clear();
  model.execution_order = {"Acc gather 1"};
  g.properties = graph::Properties({"state", "acc"}, 3);
  g.properties.column("state") = {1, 0, 1};
  graph::step_graph(g, model, {}, graph::Mode::all, 0, 1);
  EXPECT_EQ(g.properties.column("acc"), (std::vector<double>{1, 1, 0}));
}

TEST(GraphStep, AllOnesIsInvariant) {
  auto p = voter_problem();
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    auto g = graph::generate_graph(p.graph, seed);
    g.properties = graph::Properties({"state", "acc"}, 500);
    g.properties.column("state").assign(500, 1.0);
    graph::GraphEngine engine(voter(), g, {}, seed);
    for (int in = 0; in < 10; ++in) engine.step(in);
    for (double s : g.properties.column("state")) ASSERT_EQ(s, 1.0);
  }
}

TEST(GraphStep, ZeroInDegreeFaultsWithVertex) {
  // vertex 2 has no incoming edge
  auto g = graph::parse_edge_list("vertices 3\n0 1\n1 0\n2 0\n");
  try {
    graph::step_graph(g, voter(), {}, graph::Mode::all, 0, 1);
    FAIL();
  } catch (const graph::AbmError& e) {
    EXPECT_EQ(e.entity(), 2);
    EXPECT_NE(std::string(e.what()).find("vertex 2"), std::string::npos);
  }
}

TEST(GraphStep, SnapshotPolicies) {
  auto model = inc_then_read();
  auto run = [&](doc::SnapshotPolicy policy) {
    auto g = ring(3);
    g.properties = graph::Properties({"s", "a"}, 3);
    g.properties.column("s") = {0, 10, 20};
    graph::GraphEngine e(model, g, {}, 0, 1, policy);
    e.step(0);
    return g.properties.column("a");
  };
  // in-neighbour of v is v-1
  EXPECT_EQ(run(doc::SnapshotPolicy::per_rule), (std::vector<double>{21, 1, 11}));
  EXPECT_EQ(run(doc::SnapshotPolicy::per_step), (std::vector<double>{20, 0, 10}));
}

TEST(GraphStep, ModeOneTouchesOneVertex) {
  auto model = inc_then_read();
  model.gather_rules.clear();
  model.execution_order = {"Inc"};
  auto g = ring(50);
  graph::GraphEngine e(model, g, {}, 7);
  std::set<int> touched;
  for (int in = 0; in < 20; ++in) {
    auto before = g.properties.column("s");
    e.step(in, graph::Mode::one);
    int changed = 0;
    for (int v = 0; v < 50; ++v)
      if (g.properties.column("s")[static_cast<std::size_t>(v)] != before[static_cast<std::size_t>(v)]) {
        ++changed;
        touched.insert(v);
      }
    EXPECT_EQ(changed, 1);
  }
  EXPECT_GT(touched.size(), 5u);
}

TEST(GraphProperty, ParallelEquivalence) {
  auto p = voter_problem();
  auto run = [&](int workers) {
    auto g = graph::generate_graph(p.graph, 3);
    graph::GraphEngine e(voter(), g, {}, 3, workers);
    e.initialize(p.initial_condition);
    for (int in = 0; in < 10; ++in) e.step(in);
    return g.properties;
  };
  auto serial = run(1);
  EXPECT_EQ(run(2), serial);
  EXPECT_EQ(run(4), serial);
  EXPECT_EQ(serial.names, (std::vector<std::string>{"state", "acc"}));
  EXPECT_EQ(serial.size(), 500u);
}

TEST(GraphRun, StepsAndFiles) {
  auto dir = scratch_dir("voter");
  graph::GraphRunConfig c;
  c.parameters["time_steps"] = 10;
  c.seed = 1;
  c.output_dir = dir;
  auto r = graph::run_graph_problem(voter_problem(), voter(), c);
  EXPECT_EQ(r.steps, 10);
  EXPECT_EQ(r.outputs.size(), 10u);
  for (int s = 1; s <= 10; ++s) EXPECT_TRUE(fs::exists(dir / ("graph_" + std::to_string(s) + ".dot")));

  auto summary = DotParser(slurp(dir / "graph_10.dot")).parse();
  EXPECT_TRUE(summary.directed);
  EXPECT_EQ(summary.nodes.size(), 500u);
  EXPECT_EQ(summary.edges, 1000u);
  fs::remove_all(dir);
}

TEST(GraphRun, ImmediateFinalization) {
  auto p = voter_problem();
  p.finalization.ast = expr::parse_expression("$in >= 0", doc::graph_symbols(p.vertex_properties, {"time_steps"}));
  graph::GraphRunConfig c;
  auto r = graph::run_graph_problem(p, voter(), c);
  EXPECT_EQ(r.steps, 0);
}

TEST(GraphRun, FixedSeedIsBitwiseRepeatable) {
  auto a = scratch_dir("va"), b = scratch_dir("vb");
  graph::GraphRunConfig c;
  c.parameters["time_steps"] = 10;
  c.seed = 42;
  c.output_dir = a;
  graph::run_graph_problem(voter_problem(), voter(), c);
  c.output_dir = b;
  c.workers = 3;
  graph::run_graph_problem(voter_problem(), voter(), c);
  for (int s = 1; s <= 10; ++s) {
    auto name = "graph_" + std::to_string(s) + ".dot";
    EXPECT_EQ(slurp(a / name), slurp(b / name));
  }
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(GraphRun, ConfigureFromParameterFile) {
  auto pf = ParamFile::parse(
      "number_of_vertices = 500;\nnumber_of_edges = 1000;\ntime_steps = 10;\nvertex_properties = [''state''];\n"
      "seed = 3\n");
  auto c = graph::configure(voter_problem(), pf);
  EXPECT_EQ(*c.vertices, 500);
  EXPECT_EQ(*c.edges, 1000);
  EXPECT_EQ(c.parameters.at("time_steps"), 10.0);
  EXPECT_EQ(c.labels, (std::vector<std::string>{"state"}));
  EXPECT_EQ(c.seed, 3u);
  EXPECT_THROW(graph::configure(voter_problem(), ParamFile::parse("nope = 1\n")), ParamError);
}

TEST(Dot, Format) {
  graph::Graph g(2, true);
  g.add_edge(0, 1);
  g.properties = graph::Properties({"state"}, 2);
  g.properties.column("state") = {1, 0.5};
  EXPECT_EQ(graph::dot(g, {"state"}), "digraph {\n  0 [label=\"state=1\"];\n  1 [label=\"state=0.5\"];\n  0 -> 1;\n}\n");

  graph::Graph u(2, false);
  u.add_edge(0, 1);
  u.properties = graph::Properties({"state", "acc"}, 2);
  auto text = graph::dot(u, {"state", "acc"});
  EXPECT_EQ(text.rfind("graph {", 0), 0u);
  EXPECT_NE(text.find("  0 -- 1;"), std::string::npos);
  EXPECT_NE(text.find("label=\"state=0\\nacc=0\""), std::string::npos);
  auto summary = DotParser(text).parse();
  EXPECT_FALSE(summary.directed);
  EXPECT_EQ(summary.edges, 1u);
}
