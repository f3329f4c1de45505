#pragma once

// Periodic structured-grid executor for kernel programs.

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "simflow/docmodel.hpp"
#include "simflow/kernel.hpp"
#include "simflow/param_file.hpp"

namespace simflow::pde {

class RunError : public std::runtime_error {
 public:
  RunError(const std::string& message, std::int64_t step = -1);
  std::int64_t step() const { return step_; }

 private:
  std::int64_t step_;
};

/// One rectangular block of cells with its own ghost layers.
struct Patch {
  std::array<int, 3> n{1, 1, 1};
  std::array<int, 3> offset{0, 0, 0};   // first interior cell, global index
  std::array<int, 3> coords{0, 0, 0};   // position in the patch lattice
  std::array<int, 3> ghost{0, 0, 0};    // halo per axis (0 on unused axes)
  std::array<std::ptrdiff_t, 3> stride{0, 0, 0};
  std::size_t points = 0;
  std::size_t base = 0;  // start of field 0 in Grid::data

  /// Storage index of local cell (i, j, k); ghosts have negative or >= n indices.
  std::ptrdiff_t index(int i, int j = 0, int k = 0) const {
    return (i + ghost[0]) * stride[0] + (j + ghost[1]) * stride[1] + (k + ghost[2]) * stride[2];
  }
};

/// Cell-centred grid over [lo, hi) per axis, split into equal patches.
/// All fields of all patches live in one flat array so the time stepper
/// can treat the whole state as a single vector.
class Grid {
 public:
  Grid(std::vector<int> cells, std::vector<double> lo, std::vector<double> hi, int halo,
       std::vector<std::string> fields, std::vector<int> decomposition = {});

  int dims() const { return dims_; }
  int cells(int axis) const { return cells_[static_cast<std::size_t>(axis)]; }
  double lo(int axis) const { return lo_[static_cast<std::size_t>(axis)]; }
  double hi(int axis) const { return hi_[static_cast<std::size_t>(axis)]; }
  double dx(int axis) const { return dx_[static_cast<std::size_t>(axis)]; }
  int halo() const { return halo_; }
  const std::vector<std::string>& fields() const { return fields_; }
  const std::vector<Patch>& patches() const { return patches_; }
  const std::array<int, 3>& lattice() const { return lattice_; }

  /// x_i = lo + (i + 1/2) dx for a global (possibly ghost) index i.
  double coordinate(int axis, int global_index) const;

  double* field(std::size_t patch, std::size_t f) { return data.data() + patches_[patch].base + f * patches_[patch].points; }
  const double* field(std::size_t patch, std::size_t f) const {
    return data.data() + patches_[patch].base + f * patches_[patch].points;
  }

  /// Interior values of field f in global x-fastest order.
  std::vector<double> gather(std::size_t f) const;
  /// Value at a global interior cell.
  double at(std::size_t f, int i, int j = 0, int k = 0) const;

  std::vector<double> data;

 private:
  int dims_;
  std::array<int, 3> cells_{1, 1, 1};
  std::array<double, 3> lo_{0, 0, 0};
  std::array<double, 3> hi_{1, 1, 1};
  std::array<double, 3> dx_{1, 1, 1};
  std::array<int, 3> lattice_{1, 1, 1};
  int halo_;
  std::vector<std::string> fields_;
  std::vector<Patch> patches_;
};

/// Fills every ghost cell from the neighbouring patch, wrapping
/// periodically. Axes are processed in order so corners come out right.
void exchange_halos(Grid& grid);
/// Same, on a state vector laid out like grid.data.
void exchange_halos(const Grid& grid, std::vector<double>& data);

struct RunConfig {
  std::map<std::string, double> parameters;  // overrides of problem defaults
  double dt = 0.0;
  std::vector<int> cells;                    // per axis; empty = 100 each
  std::vector<int> decomposition;            // patches per axis; empty = 1
  int workers = 1;
  std::int64_t output_interval = 20;
  std::filesystem::path output_dir;          // empty = no files
  std::int64_t max_steps = 10'000'000;
  std::optional<double> dissipation;         // overrides the kernel's sigma
  std::optional<std::vector<double>> lo;
  std::optional<std::vector<double>> hi;
  std::uint64_t seed = 0;
};

/// Reads run-time keys (dt, cells, decomposition, workers, output_interval,
/// output_dir, max_steps, dissipation, x_low, x_up, seed) and treats any
/// other key as a problem parameter override. `tend` is accepted for `t_end`.
RunConfig configure(const doc::GenericPdeProblem& problem, const ParamFile& params);

struct FieldSummary {
  std::string name;
  double min = 0.0;
  double max = 0.0;
};

struct RunReport {
  std::int64_t steps = 0;
  double final_time = 0.0;
  int halo = 0;
  int patches = 1;
  std::vector<FieldSummary> fields;
  std::vector<std::filesystem::path> outputs;
  std::vector<std::string> warnings;
};

std::string to_json(const RunReport& report);

/// Parameter values after overrides, keyed by name.
std::map<std::string, double> resolve_parameters(const doc::GenericPdeProblem& problem, const RunConfig& config);

/// Runs the initial-condition algorithm once per interior cell, then
/// exchanges halos.
void apply_initial_conditions(Grid& grid, const doc::GenericPdeProblem& problem,
                              const std::map<std::string, double>& params, std::uint64_t seed = 0);

/// Writes L(u) for every field into `out` (same layout as grid.data).
/// Ghost cells of `out` are left untouched.
class RhsEvaluator {
 public:
  RhsEvaluator(const disc::KernelProgram& kernel, const Grid& grid, std::map<std::string, double> params,
               int workers = 1);
  ~RhsEvaluator();
  RhsEvaluator(const RhsEvaluator&) = delete;
  RhsEvaluator& operator=(const RhsEvaluator&) = delete;

  void set_time(double t) { time_ = t; }
  /// `state` has the layout of grid.data; its ghosts must be current.
  void operator()(const std::vector<double>& state, std::vector<double>& out);

  struct Impl;

 private:
  Impl* impl_;
  double time_ = 0.0;
};

/// Runs to the finalization condition. Uses config.decomposition; an empty
/// decomposition is the serial single-patch run.
RunReport run(const doc::GenericPdeProblem& problem, const disc::KernelProgram& kernel, const RunConfig& config,
              Grid* final_state = nullptr);

/// Same as run() with decomposition required to divide the cell counts.
RunReport decompose_run(const doc::GenericPdeProblem& problem, const disc::KernelProgram& kernel,
                        const RunConfig& config, Grid* final_state = nullptr);

/// VTK legacy ASCII STRUCTURED_POINTS, one cell-data block per listed field.
void write_vtk(const Grid& grid, const std::vector<std::size_t>& fields, double t, const std::filesystem::path& path);

}  // namespace simflow::pde
