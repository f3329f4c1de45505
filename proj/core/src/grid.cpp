#include <algorithm>

#include "simflow/pde_runtime.hpp"

namespace simflow::pde {

RunError::RunError(const std::string& message, std::int64_t step)
    : std::runtime_error(step >= 0 ? "step " + std::to_string(step) + ": " + message : message), step_(step) {}

Grid::Grid(std::vector<int> cells, std::vector<double> lo, std::vector<double> hi, int halo,
           std::vector<std::string> fields, std::vector<int> decomposition)
    : dims_(static_cast<int>(cells.size())), halo_(halo), fields_(std::move(fields)) {
  if (dims_ < 1 || dims_ > 3) throw RunError("grids must have 1 to 3 axes");
  if (lo.size() != cells.size() || hi.size() != cells.size()) throw RunError("domain bounds do not match the axis count");
  if (decomposition.empty()) decomposition.assign(cells.size(), 1);
  if (decomposition.size() != cells.size()) throw RunError("decomposition does not match the axis count");
  if (halo < 0) throw RunError("negative halo");
  for (int a = 0; a < dims_; ++a) {
    const auto s = static_cast<std::size_t>(a);
    if (cells[s] < 1) throw RunError("cell counts must be positive");
    if (!(lo[s] < hi[s])) throw RunError("domain min must be less than max");
    if (decomposition[s] < 1 || cells[s] % decomposition[s] != 0) {
      throw RunError("indivisible decomposition: " + std::to_string(decomposition[s]) + " patches do not divide " +
                     std::to_string(cells[s]) + " cells on axis " + std::to_string(a));
    }
    if (halo > cells[s] / decomposition[s]) {
      throw RunError("halo of " + std::to_string(halo) + " is wider than the " +
                     std::to_string(cells[s] / decomposition[s]) + "-cell interior on axis " + std::to_string(a));
    }
    cells_[s] = cells[s];
    lo_[s] = lo[s];
    hi_[s] = hi[s];
    dx_[s] = (hi[s] - lo[s]) / cells[s];
    lattice_[s] = decomposition[s];
  }
  std::size_t base = 0;
  for (int pk = 0; pk < lattice_[2]; ++pk) {
    for (int pj = 0; pj < lattice_[1]; ++pj) {
      for (int pi = 0; pi < lattice_[0]; ++pi) {
        Patch p;
        p.coords = {pi, pj, pk};
        for (int a = 0; a < 3; ++a) {
          const auto s = static_cast<std::size_t>(a);
          p.n[s] = cells_[s] / lattice_[s];
          p.offset[s] = p.coords[s] * p.n[s];
          p.ghost[s] = a < dims_ ? halo_ : 0;
        }
        p.stride[0] = 1;
        p.stride[1] = p.n[0] + 2 * p.ghost[0];
        p.stride[2] = p.stride[1] * (p.n[1] + 2 * p.ghost[1]);
        p.points = static_cast<std::size_t>(p.stride[2] * (p.n[2] + 2 * p.ghost[2]));
        p.base = base;
        base += p.points * fields_.size();
        patches_.push_back(p);
      }
    }
  }
  data.assign(base, 0.0);
}

double Grid::coordinate(int axis, int global_index) const {
  const auto s = static_cast<std::size_t>(axis);
  return lo_[s] + (static_cast<double>(global_index) + 0.5) * dx_[s];
}

std::vector<double> Grid::gather(std::size_t f) const {
  std::vector<double> out(static_cast<std::size_t>(cells_[0]) * cells_[1] * cells_[2]);
  for (std::size_t p = 0; p < patches_.size(); ++p) {
    const auto& P = patches_[p];
    const double* src = field(p, f);
    for (int k = 0; k < P.n[2]; ++k) {
      for (int j = 0; j < P.n[1]; ++j) {
        for (int i = 0; i < P.n[0]; ++i) {
          const std::size_t g = static_cast<std::size_t>(P.offset[0] + i) +
                                static_cast<std::size_t>(cells_[0]) *
                                    (static_cast<std::size_t>(P.offset[1] + j) +
                                     static_cast<std::size_t>(cells_[1]) * static_cast<std::size_t>(P.offset[2] + k));
          out[g] = src[P.index(i, j, k)];
        }
      }
    }
  }
  return out;
}

double Grid::at(std::size_t f, int i, int j, int k) const {
  const int g[3] = {i, j, k};
  int pc[3];
  for (int a = 0; a < 3; ++a) {
    const auto s = static_cast<std::size_t>(a);
    if (g[a] < 0 || g[a] >= cells_[s]) throw RunError("cell index out of range");
    pc[a] = g[a] / (cells_[s] / lattice_[s]);
  }
  const std::size_t p = static_cast<std::size_t>(pc[0] + lattice_[0] * (pc[1] + lattice_[1] * pc[2]));
  const auto& P = patches_[p];
  return field(p, f)[P.index(i - P.offset[0], j - P.offset[1], k - P.offset[2])];
}

void exchange_halos(Grid& grid) { exchange_halos(grid, grid.data); }

void exchange_halos(const Grid& grid, std::vector<double>& data) {
  const auto& patches = grid.patches();
  const auto& lat = grid.lattice();
  auto patch_at = [&](std::array<int, 3> c) {
    return static_cast<std::size_t>(c[0] + lat[0] * (c[1] + lat[1] * c[2]));
  };
  for (int a = 0; a < grid.dims(); ++a) {
    const auto s = static_cast<std::size_t>(a);
    for (std::size_t p = 0; p < patches.size(); ++p) {
      const Patch& P = patches[p];
      const int h = P.ghost[s];
      if (h == 0) continue;
      auto lower = P.coords;
      lower[s] = (lower[s] + lat[s] - 1) % lat[s];
      auto upper = P.coords;
      upper[s] = (upper[s] + 1) % lat[s];
      const std::size_t pl = patch_at(lower);
      const std::size_t pu = patch_at(upper);
      // Ranges over the other two axes include their ghosts.
      std::array<int, 3> from{};
      std::array<int, 3> to{};
      for (std::size_t b = 0; b < 3; ++b) {
        from[b] = -P.ghost[b];
        to[b] = P.n[b] + P.ghost[b];
      }
      const int n = P.n[s];
      for (std::size_t f = 0; f < grid.fields().size(); ++f) {
        double* dst = data.data() + P.base + f * P.points;
        const double* src_lo = data.data() + patches[pl].base + f * patches[pl].points;
        const double* src_up = data.data() + patches[pu].base + f * patches[pu].points;
        std::array<int, 3> idx{};
        const std::size_t b1 = (s + 1) % 3;
        const std::size_t b2 = (s + 2) % 3;
        for (idx[b2] = from[b2]; idx[b2] < to[b2]; ++idx[b2]) {
          for (idx[b1] = from[b1]; idx[b1] < to[b1]; ++idx[b1]) {
            for (int g = 1; g <= h; ++g) {
              auto d = idx;
              auto src = idx;
              d[s] = -g;
              src[s] = n - g;
              dst[P.index(d[0], d[1], d[2])] = src_lo[P.index(src[0], src[1], src[2])];
              d[s] = n - 1 + g;
              src[s] = g - 1;
              dst[P.index(d[0], d[1], d[2])] = src_up[P.index(src[0], src[1], src[2])];
            }
          }
        }
      }
    }
  }
}

}  // namespace simflow::pde
