#pragma once

// Agents moving in a periodic box with radius-based interactions.

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

namespace simflow::spatial {

using abm::AbmError;
using abm::Properties;

/// Positions are stored as the first dims() property columns.
class AgentSet {
 public:
  AgentSet(std::size_t count, std::vector<std::string> coordinates, std::vector<double> lo, std::vector<double> hi,
           double radius, const std::vector<std::string>& properties);

  std::size_t size() const { return count_; }
  int dims() const { return static_cast<int>(lo_.size()); }
  double radius() const { return radius_; }
  double lo(int axis) const { return lo_[static_cast<std::size_t>(axis)]; }
  double hi(int axis) const { return hi_[static_cast<std::size_t>(axis)]; }
  double extent(int axis) const { return hi(axis) - lo(axis); }

  double position(int axis, std::size_t i) const { return data.values[static_cast<std::size_t>(axis)][i]; }
  void set_position(int axis, std::size_t i, double x);

  /// Maps x into [lo, hi).
  double wrap(int axis, double x) const;
  /// Minimum-image squared distance.
  double distance2(std::size_t i, std::size_t j) const;

  Properties data;

 private:
  std::size_t count_;
  std::vector<double> lo_;
  std::vector<double> hi_;
  double radius_;
};

/// Uniform bins of side >= radius. With fewer than three bins on some axis
/// the 3^d neighbourhood would repeat bins, so the list degrades to a full
/// scan and reports it through degenerate().
class CellList {
 public:
  CellList() = default;
  explicit CellList(const AgentSet& agents) { build(agents); }

  void build(const AgentSet& agents);
  bool degenerate() const { return degenerate_; }

  /// All j (including i) within the closed interaction ball, ascending.
  std::vector<std::size_t> neighbors(const AgentSet& agents, std::size_t i) const;

 private:
  bool degenerate_ = false;
  std::vector<int> bins_;
  std::vector<double> side_;
  std::vector<std::vector<std::size_t>> members_;
  std::vector<std::size_t> home_;
};

std::vector<std::size_t> find_neighbors(const AgentSet& agents, const CellList& cells, std::size_t i);
/// O(N) scan with the same metric; the reference for find_neighbors.
std::vector<std::size_t> brute_force_neighbors(const AgentSet& agents, std::size_t i);

/// Hand-coded flocking rules over columns theta, sumcos, sumsin, n; used as
/// an oracle for the document-driven runtime.
void flocking_gather(AgentSet& agents, const std::vector<std::vector<std::size_t>>& neighbors, std::size_t i);
void flocking_update(AgentSet& agents, std::size_t i, double eta, double v0, double dt, double xi);

/// |sum of unit heading vectors| / N.
double order_parameter(const AgentSet& agents, const std::string& heading);

class SpatialEngine {
 public:
  SpatialEngine(const doc::AbmSpatialModel& model, AgentSet& agents, std::map<std::string, double> params,
                std::uint64_t seed = 0, int workers = 1, doc::SnapshotPolicy snapshot = doc::SnapshotPolicy::per_rule);
  ~SpatialEngine();
  SpatialEngine(const SpatialEngine&) = delete;
  SpatialEngine& operator=(const SpatialEngine&) = delete;

  void initialize(const simml::Algorithm& initial_condition);
  void step(std::int64_t in);
  bool degenerate() const;

  struct Impl;

 private:
  std::unique_ptr<Impl> impl_;
};

struct SpatialRunConfig {
  std::map<std::string, double> parameters;
  std::uint64_t seed = 0;
  int workers = 1;
  std::filesystem::path output_dir;
  std::int64_t output_interval = 1;
  std::int64_t max_steps = 10'000'000;
  std::optional<std::int64_t> agents;
  std::optional<double> radius;
  std::optional<std::vector<double>> lo;
  std::optional<std::vector<double>> hi;
};

/// problem.input keys: n_agents, radius, x_low, x_up, seed, workers,
/// output_dir, output_interval, max_steps, plus problem parameters
/// (time_steps, dt, v0, eta, ...).
SpatialRunConfig configure(const doc::AbmSpatialProblem& problem, const ParamFile& params);

struct SpatialReport {
  std::int64_t steps = 0;
  std::size_t agents = 0;
  std::vector<double> order;  // per step, starting with the initial state
  std::vector<std::filesystem::path> outputs;
  std::vector<std::string> warnings;
};

std::string to_json(const SpatialReport& report);

SpatialReport run_spatial_problem(const doc::AbmSpatialProblem& problem, const doc::AbmSpatialModel& model,
                                  const SpatialRunConfig& config, AgentSet* final_state = nullptr);

}  // namespace simflow::spatial
