#pragma once

// Agents on the vertices of a graph.

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "simflow/abm.hpp"
#include "simflow/docmodel.hpp"
#include "simflow/param_file.hpp"

namespace simflow::graph {

using abm::AbmError;
using abm::Properties;

struct Arc {
  int source = 0;
  int target = 0;
};

/// Undirected edges are stored as two consecutive arcs (u->v, v->u), so
/// "in" iteration visits every neighbour once either way.
class Graph {
 public:
  explicit Graph(int vertices = 0, bool directed = true);

  int vertices() const { return vertices_; }
  bool directed() const { return directed_; }
  const std::vector<Arc>& arcs() const { return arcs_; }
  std::size_t edge_count() const { return directed_ ? arcs_.size() : arcs_.size() / 2; }

  void add_edge(int source, int target);

  const std::vector<int>& in_arcs(int v) const { return in_[static_cast<std::size_t>(v)]; }
  const std::vector<int>& out_arcs(int v) const { return out_[static_cast<std::size_t>(v)]; }
  int in_degree(int v) const { return static_cast<int>(in_arcs(v).size()); }
  int out_degree(int v) const { return static_cast<int>(out_arcs(v).size()); }

  Properties properties;

 private:
  int vertices_;
  bool directed_;
  std::vector<Arc> arcs_;
  std::vector<std::vector<int>> in_;
  std::vector<std::vector<int>> out_;
};

/// Deterministic for a given (spec, seed). Throws AbmError when the edge
/// count cannot be met.
Graph generate_graph(const doc::GraphSpec& spec, std::uint64_t seed);

/// Edge list: optional `vertices <V>` header, then `src dst` per line.
/// Without a header the vertex count is one past the largest index.
Graph load_graph(const std::filesystem::path& path, bool directed = true);
Graph parse_edge_list(const std::string& text, bool directed = true, const std::string& source = "<edges>");
std::string edge_list(const Graph& g);
void save_graph(const Graph& g, const std::filesystem::path& path);

enum class Mode { all, one };

/// Rules of a model compiled against a graph and parameter values.
class GraphEngine {
 public:
  GraphEngine(const doc::AbmGraphModel& model, Graph& graph, std::map<std::string, double> params,
              std::uint64_t seed = 0, int workers = 1, doc::SnapshotPolicy snapshot = doc::SnapshotPolicy::per_rule);
  ~GraphEngine();
  GraphEngine(const GraphEngine&) = delete;
  GraphEngine& operator=(const GraphEngine&) = delete;

  /// Runs the algorithm once per vertex (phase init).
  void initialize(const simml::Algorithm& initial_condition);
  /// One evolution step with $in = in.
  void step(std::int64_t in, Mode mode = Mode::all);

  struct Impl;

 private:
  std::unique_ptr<Impl> impl_;
};

/// One step of `model` on `graph`; compiles the rules each call.
void step_graph(Graph& graph, const doc::AbmGraphModel& model, const std::map<std::string, double>& params,
                Mode mode, std::int64_t in, std::uint64_t seed, int workers = 1);

/// DOT text; labels carry the listed properties.
std::string dot(const Graph& g, const std::vector<std::string>& labels);
void write_dot(const Graph& g, const std::vector<std::string>& labels, const std::filesystem::path& path);

struct GraphRunConfig {
  std::map<std::string, double> parameters;
  std::uint64_t seed = 0;
  int workers = 1;
  std::filesystem::path output_dir;  // empty = no files
  std::int64_t output_interval = 1;
  std::int64_t max_steps = 10'000'000;
  std::optional<std::int64_t> vertices;
  std::optional<std::int64_t> edges;
  std::vector<std::string> labels;   // empty = problem's output_properties
  std::filesystem::path base_dir;    // resolves relative graph file paths
};

/// problem.input keys: number_of_vertices, number_of_edges, seed, workers,
/// output_dir, output_interval, max_steps, vertex_properties, plus problem
/// parameters such as time_steps.
GraphRunConfig configure(const doc::AbmGraphProblem& problem, const ParamFile& params);

struct GraphReport {
  std::int64_t steps = 0;
  int vertices = 0;
  std::size_t edges = 0;
  std::vector<std::filesystem::path> outputs;
  std::map<std::string, double> means;
};

std::string to_json(const GraphReport& report);

GraphReport run_graph_problem(const doc::AbmGraphProblem& problem, const doc::AbmGraphModel& model,
                              const GraphRunConfig& config, Graph* final_state = nullptr);

}  // namespace simflow::graph
