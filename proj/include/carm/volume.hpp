#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "carm/geometry.hpp"

namespace carm {

/// Isotropic voxel grid. `origin` is the center of voxel (0,0,0).
/// Storage is x-major: index = (ix * ny + iy) * nz + iz, so each y-z plane
/// (a slice parallel to the central-view detector) is contiguous.
struct GridSpec {
  std::size_t nx = 1;
  std::size_t ny = 1;
  std::size_t nz = 1;
  double spacing = 1.0;
  Point3 origin;

  std::size_t size() const noexcept { return nx * ny * nz; }
  std::size_t index(std::size_t ix, std::size_t iy, std::size_t iz) const noexcept {
    return (ix * ny + iy) * nz + iz;
  }
  Point3 center(std::size_t ix, std::size_t iy, std::size_t iz) const noexcept {
    return {origin.x + static_cast<double>(ix) * spacing,
            origin.y + static_cast<double>(iy) * spacing,
            origin.z + static_cast<double>(iz) * spacing};
  }
  Point3 box_min() const noexcept {
    return {origin.x - 0.5 * spacing, origin.y - 0.5 * spacing, origin.z - 0.5 * spacing};
  }
  Point3 box_max() const noexcept {
    return {origin.x + (static_cast<double>(nx) - 0.5) * spacing,
            origin.y + (static_cast<double>(ny) - 0.5) * spacing,
            origin.z + (static_cast<double>(nz) - 0.5) * spacing};
  }

  void validate() const;

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

/// Grid whose bounding box is symmetric about the isocenter. For even sizes the
/// isocenter sits on a voxel corner, so the central detector rays (which straddle
/// u = 0) pass through voxel centers rather than along voxel faces.
GridSpec centered_grid(std::size_t nx, std::size_t ny, std::size_t nz, double spacing);

class VoxelVolume {
 public:
  VoxelVolume() = default;
  explicit VoxelVolume(const GridSpec& grid, double fill = 0.0);

  const GridSpec& grid() const noexcept { return grid_; }
  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  std::size_t size() const noexcept { return data_.size(); }

  double& at(std::size_t ix, std::size_t iy, std::size_t iz) { return data_[grid_.index(ix, iy, iz)]; }
  double at(std::size_t ix, std::size_t iy, std::size_t iz) const { return data_[grid_.index(ix, iy, iz)]; }

  double& operator[](std::size_t i) noexcept { return data_[i]; }
  double operator[](std::size_t i) const noexcept { return data_[i]; }

 private:
  GridSpec grid_;
  std::vector<double> data_;
};

}  // namespace carm
