#include <cstdio>
#include <fstream>

#include "simflow/pde_runtime.hpp"

namespace simflow::pde {

namespace {

std::string g17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void write_vtk(const Grid& grid, const std::vector<std::size_t>& fields, double t, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RunError("cannot write " + path.string());
  std::size_t cells = 1;
  out << "# vtk DataFile Version 3.0\n"
      << "simflow t=" << g17(t) << "\n"
      << "ASCII\n"
      << "DATASET STRUCTURED_POINTS\n"
      << "DIMENSIONS";
  for (int a = 0; a < 3; ++a) {
    const bool used = a < grid.dims();
    out << ' ' << (used ? grid.cells(a) + 1 : 1);
    if (used) cells *= static_cast<std::size_t>(grid.cells(a));
  }
  out << "\nORIGIN";
  for (int a = 0; a < 3; ++a) out << ' ' << g17(a < grid.dims() ? grid.lo(a) : 0.0);
  out << "\nSPACING";
  for (int a = 0; a < 3; ++a) out << ' ' << g17(a < grid.dims() ? grid.dx(a) : 1.0);
  out << "\nCELL_DATA " << cells << "\n";
  for (std::size_t f : fields) {
    out << "SCALARS " << grid.fields()[f] << " double 1\nLOOKUP_TABLE default\n";
    for (double v : grid.gather(f)) out << g17(v) << '\n';
  }
  if (!out) throw RunError("failed writing " + path.string());
}

}  // namespace simflow::pde
