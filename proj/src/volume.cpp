#include "carm/volume.hpp"

#include <cmath>

#include "carm/error.hpp"

namespace carm {

void GridSpec::validate() const {
  if (nx == 0 || ny == 0 || nz == 0) {
    throw Error(ErrorKind::InvalidArgument, "grid dimensions must be at least 1");
  }
  if (!(spacing > 0.0) || !std::isfinite(spacing)) {
    throw Error(ErrorKind::InvalidArgument, "grid spacing must be positive");
  }
  if (!std::isfinite(origin.x) || !std::isfinite(origin.y) || !std::isfinite(origin.z)) {
    throw Error(ErrorKind::InvalidArgument, "grid origin must be finite");
  }
}

GridSpec centered_grid(std::size_t nx, std::size_t ny, std::size_t nz, double spacing) {
  GridSpec g;
  g.nx = nx;
  g.ny = ny;
  g.nz = nz;
  g.spacing = spacing;
  g.origin = {-0.5 * static_cast<double>(nx - 1) * spacing, -0.5 * static_cast<double>(ny - 1) * spacing,
              -0.5 * static_cast<double>(nz - 1) * spacing};
  g.validate();
  return g;
}

VoxelVolume::VoxelVolume(const GridSpec& grid, double fill) : grid_(grid) {
  grid_.validate();
  data_.assign(grid_.size(), fill);
}

}  // namespace carm
