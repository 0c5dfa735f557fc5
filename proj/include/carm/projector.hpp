#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "carm/geometry.hpp"
#include "carm/parallel.hpp"
#include "carm/stack.hpp"
#include "carm/volume.hpp"

namespace carm {

/// Flat-field log normalization A = ln(i0 / max(I, 1)), clamped to A >= 0.
ProjectionStack log_normalize(const ProjectionStack& intensity);

/// Every view index of `geom`, in acquisition order.
std::vector<std::size_t> all_views(const CArmGeometry& geom);

/// Pixel-driven backprojection result. `coverage` counts, per voxel, the
/// views whose projection of the voxel center landed on the detector.
struct PdmBackprojection {
  VoxelVolume sum;
  VoxelVolume coverage;
};

/// For each voxel and selected view, bilinearly interpolates the view at the
/// voxel's projected detector position and accumulates it. Samples outside
/// the pixel-center hull contribute nothing and are not counted.
PdmBackprojection backproject_pdm(const ProjectionStack& stack, const GridSpec& grid,
                                  std::span<const std::size_t> views, Exec exec = {});

struct RayWeight {
  std::size_t voxel;
  double length;  // mm

  friend bool operator==(const RayWeight&, const RayWeight&) = default;
};
using RayWeights = std::vector<RayWeight>;

namespace detail {

/// Siddon traversal of the segment p0 -> p1 through `grid`. Calls
/// visit(ix, iy, iz, length_mm) once per intersected voxel, in order along the
/// ray. Plane crossings closer than `merge_tol_mm` are merged, so no
/// zero-length entries are produced.
template <typename Visit>
void siddon_visit(Point3 p0, Point3 p1, const GridSpec& grid, double merge_tol_mm, Visit&& visit) {
  const double p0a[3] = {p0.x, p0.y, p0.z};
  const double dir[3] = {p1.x - p0.x, p1.y - p0.y, p1.z - p0.z};
  const Point3 lo = grid.box_min();
  const double bmin[3] = {lo.x, lo.y, lo.z};
  const std::size_t n[3] = {grid.nx, grid.ny, grid.nz};
  const double s = grid.spacing;
  const double length = std::sqrt(dir[0] * dir[0] + dir[1] * dir[1] + dir[2] * dir[2]);
  if (!(length > 0.0)) return;
  constexpr double inf = std::numeric_limits<double>::infinity();

  double a_min = 0.0;
  double a_max = 1.0;
  for (int ax = 0; ax < 3; ++ax) {
    const double bmax = bmin[ax] + static_cast<double>(n[ax]) * s;
    if (dir[ax] == 0.0) {
      if (p0a[ax] <= bmin[ax] || p0a[ax] >= bmax) return;
      continue;
    }
    const double t1 = (bmin[ax] - p0a[ax]) / dir[ax];
    const double t2 = (bmax - p0a[ax]) / dir[ax];
    a_min = std::max(a_min, std::min(t1, t2));
    a_max = std::min(a_max, std::max(t1, t2));
  }
  const double tol = merge_tol_mm / length;
  if (!(a_max - a_min > tol)) return;

  // Per axis: index of the next plane to cross and its parameter.
  long plane[3] = {0, 0, 0};
  long step[3] = {0, 0, 0};
  double next[3] = {inf, inf, inf};
  auto plane_alpha = [&](int ax, long k) {
    return (bmin[ax] + static_cast<double>(k) * s - p0a[ax]) / dir[ax];
  };
  for (int ax = 0; ax < 3; ++ax) {
    if (dir[ax] == 0.0) continue;
    step[ax] = dir[ax] > 0.0 ? 1 : -1;
    const double pos = (p0a[ax] + a_min * dir[ax] - bmin[ax]) / s;
    const long last = static_cast<long>(n[ax]);
    long k = dir[ax] > 0.0 ? static_cast<long>(std::floor(pos)) : static_cast<long>(std::ceil(pos));
    k = std::clamp(k, 0L, last);
    while (k >= 0 && k <= last && plane_alpha(ax, k) <= a_min + tol) k += step[ax];
    plane[ax] = k;
    next[ax] = (k >= 0 && k <= last) ? plane_alpha(ax, k) : inf;
  }

  double a_cur = a_min;
  while (a_max - a_cur > tol) {
    const double a_next = std::min({next[0], next[1], next[2], a_max});
    if (a_next - a_cur > tol) {
      const double mid = 0.5 * (a_cur + a_next);
      std::size_t idx[3];
      for (int ax = 0; ax < 3; ++ax) {
        const double pos = std::floor((p0a[ax] + mid * dir[ax] - bmin[ax]) / s);
        const double hi = static_cast<double>(n[ax] - 1);
        idx[ax] = static_cast<std::size_t>(pos < 0.0 ? 0.0 : (pos > hi ? hi : pos));
      }
      visit(idx[0], idx[1], idx[2], (a_next - a_cur) * length);
      a_cur = a_next;
    }
    for (int ax = 0; ax < 3; ++ax) {
      const long last = static_cast<long>(n[ax]);
      while (next[ax] <= a_cur + tol) {
        plane[ax] += step[ax];
        next[ax] = (plane[ax] >= 0 && plane[ax] <= last) ? plane_alpha(ax, plane[ax]) : inf;
      }
    }
  }
}

}  // namespace detail

/// Voxel intersection lengths of an arbitrary segment with the grid.
RayWeights siddon_trace(Point3 p0, Point3 p1, const GridSpec& grid, double merge_tol_mm);

/// One system-matrix row: the ray from the source to the center of detector
/// pixel (iu, iv) at view angle beta. Empty when the ray misses the grid.
RayWeights siddon_weights(const CArmGeometry& geom, double beta_deg, std::size_t iu,
                          std::size_t iv, const GridSpec& grid);

/// Ray-driven forward projection W x. Unselected views stay zero.
ProjectionStack forward_project_rdm(const VoxelVolume& vol, const CArmGeometry& geom,
                                    std::span<const std::size_t> views, Exec exec = {});

/// Forward-projects one view into `values` (nv * nu) and, when non-empty,
/// stores each ray's total intersection length in `ray_lengths`.
void forward_project_view(const VoxelVolume& vol, const CArmGeometry& geom, std::size_t view,
                          std::span<double> values, std::span<double> ray_lengths, Exec exec = {});

/// Ray-driven backprojection W^T y using the same weights as the forward
/// projector. `ray_values` holds nv * nu values per selected view, in the
/// order of `views`. Adds into `out`; adds the column sums of W into
/// `weight_sums` when it is non-empty. Each voxel accumulates its rays in
/// the same order for any worker count.
void backproject_rdm(const CArmGeometry& geom, std::span<const std::size_t> views,
                     std::span<const double> ray_values, const GridSpec& grid,
                     std::span<double> out, std::span<double> weight_sums, Exec exec = {});

/// Two backprojections sharing one traversal: out_a += W^T a, out_b += W^T b.
void backproject_rdm_pair(const CArmGeometry& geom, std::span<const std::size_t> views,
                          std::span<const double> values_a, std::span<const double> values_b,
                          const GridSpec& grid, std::span<double> out_a, std::span<double> out_b,
                          Exec exec = {});

}  // namespace carm
