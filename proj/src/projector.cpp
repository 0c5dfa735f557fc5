#include "carm/projector.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "carm/error.hpp"
#include "carm/simd/kernels.hpp"

namespace carm {

ProjectionStack log_normalize(const ProjectionStack& intensity) {
  if (intensity.domain() != Domain::Intensity) {
    throw Error(ErrorKind::DomainMismatch, "log_normalize expects an intensity stack");
  }
  const double i0 = *intensity.i0();
  ProjectionStack out(intensity.geometry(), Domain::LineIntegral);
  auto src = intensity.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) {
    const double a = std::log(i0 / std::max(src[i], 1.0));
    dst[i] = a > 0.0 ? a : 0.0;
  }
  return out;
}

std::vector<std::size_t> all_views(const CArmGeometry& geom) {
  std::vector<std::size_t> views(geom.n_views());
  std::iota(views.begin(), views.end(), std::size_t{0});
  return views;
}

namespace {

void check_views(const CArmGeometry& geom, std::span<const std::size_t> views) {
  for (std::size_t k : views) {
    if (k >= geom.n_views()) throw Error(ErrorKind::OutOfBounds, "view index out of range");
  }
}

}  // namespace

PdmBackprojection backproject_pdm(const ProjectionStack& stack, const GridSpec& grid,
                                  std::span<const std::size_t> views, Exec exec) {
  if (stack.domain() != Domain::LineIntegral) {
    throw Error(ErrorKind::DomainMismatch, "backproject_pdm expects a line-integral stack");
  }
  const CArmGeometry& geom = stack.geometry();
  check_views(geom, views);
  PdmBackprojection out{VoxelVolume(grid), VoxelVolume(grid)};
  const auto& kernels = simd::active_kernels();
  const double d = geom.d();
  const double pitch = geom.pitch();
  const double half_u = 0.5 * static_cast<double>(geom.nu() - 1);
  const double half_v = 0.5 * static_cast<double>(geom.nv() - 1);
  const std::size_t nz = grid.nz;
  auto sum = out.sum.data();
  auto coverage = out.coverage.data();

  // Along a z-column the projected column is fixed and the row is affine in
  // iz, because the magnification depends only on (x, y).
  parallel_for(grid.nx * grid.ny, exec, [&](std::size_t begin, std::size_t end) {
    for (std::size_t k : views) {
      const double beta = deg_to_rad(geom.angles()[k]);
      const double c = std::cos(beta);
      const double s = std::sin(beta);
      simd::BilinearLine line;
      line.view = stack.view(k).data();
      line.nu = geom.nu();
      line.nv = geom.nv();
      for (std::size_t col = begin; col < end; ++col) {
        const std::size_t ix = col / grid.ny;
        const std::size_t iy = col % grid.ny;
        const Point3 p = grid.center(ix, iy, 0);
        const double depth = d - (c * p.x - s * p.y);  // distance from the source plane
        if (!(depth > 1e-12 * d)) continue;
        const double mag = 2.0 * d / depth;
        line.col = mag * (s * p.x + c * p.y) / pitch + half_u;
        line.row0 = mag * p.z / pitch + half_v;
        line.drow = mag * grid.spacing / pitch;
        kernels.bilinear_accumulate(line, sum.data() + col * nz, coverage.data() + col * nz, nz);
      }
    }
  });
  return out;
}

RayWeights siddon_trace(Point3 p0, Point3 p1, const GridSpec& grid, double merge_tol_mm) {
  RayWeights out;
  detail::siddon_visit(p0, p1, grid, merge_tol_mm,
                       [&](std::size_t ix, std::size_t iy, std::size_t iz, double len) {
                         out.push_back({grid.index(ix, iy, iz), len});
                       });
  return out;
}

RayWeights siddon_weights(const CArmGeometry& geom, double beta_deg, std::size_t iu,
                          std::size_t iv, const GridSpec& grid) {
  grid.validate();
  if (iu >= geom.nu() || iv >= geom.nv()) {
    throw Error(ErrorKind::OutOfBounds, "detector pixel out of range");
  }
  const ViewFrame f = view_frame(geom.d(), beta_deg);
  return siddon_trace(f.source, f.detector_point(geom.pixel_center(iu, iv)), grid,
                      1e-12 * geom.sid());
}

void forward_project_view(const VoxelVolume& vol, const CArmGeometry& geom, std::size_t view,
                          std::span<double> values, std::span<double> ray_lengths, Exec exec) {
  const GridSpec& grid = vol.grid();
  const ViewFrame f = view_frame(geom.d(), geom.angles().at(view));
  const double tol = 1e-12 * geom.sid();
  const std::size_t nu = geom.nu();
  auto mu = vol.data();
  parallel_for(geom.nv(), exec, [&](std::size_t begin, std::size_t end) {
    for (std::size_t iv = begin; iv < end; ++iv) {
      for (std::size_t iu = 0; iu < nu; ++iu) {
        const Point3 pixel = f.detector_point(geom.pixel_center(iu, iv));
        double sum = 0.0;
        double len = 0.0;
        detail::siddon_visit(f.source, pixel, grid, tol,
                             [&](std::size_t ix, std::size_t iy, std::size_t iz, double w) {
                               sum += w * mu[grid.index(ix, iy, iz)];
                               len += w;
                             });
        values[iv * nu + iu] = sum;
        if (!ray_lengths.empty()) ray_lengths[iv * nu + iu] = len;
      }
    }
  });
}

ProjectionStack forward_project_rdm(const VoxelVolume& vol, const CArmGeometry& geom,
                                    std::span<const std::size_t> views, Exec exec) {
  check_views(geom, views);
  ProjectionStack out(geom, Domain::LineIntegral);
  for (std::size_t k : views) {
    forward_project_view(vol, geom, k, out.view(k), {}, exec);
  }
  return out;
}

namespace {

// z-index range [lo, hi] a segment can touch, or false when it misses the box.
bool ray_z_range(Point3 p0, Point3 p1, const GridSpec& grid, long& lo, long& hi) {
  const Point3 bmin = grid.box_min();
  const Point3 bmax = grid.box_max();
  const double a0[3] = {p0.x, p0.y, p0.z};
  const double dir[3] = {p1.x - p0.x, p1.y - p0.y, p1.z - p0.z};
  const double mn[3] = {bmin.x, bmin.y, bmin.z};
  const double mx[3] = {bmax.x, bmax.y, bmax.z};
  double t0 = 0.0;
  double t1 = 1.0;
  for (int ax = 0; ax < 3; ++ax) {
    if (dir[ax] == 0.0) {
      if (a0[ax] < mn[ax] || a0[ax] > mx[ax]) return false;
      continue;
    }
    const double u = (mn[ax] - a0[ax]) / dir[ax];
    const double v = (mx[ax] - a0[ax]) / dir[ax];
    t0 = std::max(t0, std::min(u, v));
    t1 = std::min(t1, std::max(u, v));
  }
  if (t1 < t0) return false;
  const double z0 = (a0[2] + t0 * dir[2] - mn[2]) / grid.spacing;
  const double z1 = (a0[2] + t1 * dir[2] - mn[2]) / grid.spacing;
  lo = static_cast<long>(std::floor(std::min(z0, z1))) - 1;
  hi = static_cast<long>(std::floor(std::max(z0, z1))) + 1;
  return true;
}

}  // namespace

namespace {

// Shared body of the ray-driven backprojections. `b`, `out_b` and `sums`
// may be empty.
void backproject_impl(const CArmGeometry& geom, std::span<const std::size_t> views,
                      std::span<const double> a, std::span<const double> b, const GridSpec& grid,
                      std::span<double> out_a, std::span<double> out_b, std::span<double> sums,
                      Exec exec) {
  check_views(geom, views);
  const std::size_t ppv = geom.pixels_per_view();
  const bool has_b = !b.empty();
  const bool want_sums = !sums.empty();
  if (a.size() != views.size() * ppv || out_a.size() != grid.size() ||
      (has_b && (b.size() != a.size() || out_b.size() != grid.size())) ||
      (want_sums && sums.size() != grid.size())) {
    throw Error(ErrorKind::SizeMismatch, "backprojection buffer sizes do not match");
  }
  const double tol = 1e-12 * geom.sid();
  const std::size_t nu = geom.nu();
  const unsigned slabs =
      std::max(1u, std::min<unsigned>(exec.threads, static_cast<unsigned>(grid.nz)));

  // Workers own disjoint z-slabs and each visits every ray, so every voxel
  // sums its contributions in ray order regardless of the slab layout.
  parallel_for(slabs, Exec{slabs}, [&](std::size_t sb, std::size_t se) {
    for (std::size_t slab = sb; slab < se; ++slab) {
      const long z_lo = static_cast<long>(grid.nz * slab / slabs);
      const long z_hi = static_cast<long>(grid.nz * (slab + 1) / slabs);  // exclusive
      const bool whole = z_lo == 0 && z_hi == static_cast<long>(grid.nz);
      for (std::size_t vi = 0; vi < views.size(); ++vi) {
        const ViewFrame f = view_frame(geom.d(), geom.angles()[views[vi]]);
        const double* va = a.data() + vi * ppv;
        const double* vb = has_b ? b.data() + vi * ppv : nullptr;
        for (std::size_t iv = 0; iv < geom.nv(); ++iv) {
          for (std::size_t iu = 0; iu < nu; ++iu) {
            const std::size_t r = iv * nu + iu;
            const double ya = va[r];
            const double yb = has_b ? vb[r] : 0.0;
            if (ya == 0.0 && yb == 0.0 && !want_sums) continue;
            const Point3 pixel = f.detector_point(geom.pixel_center(iu, iv));
            if (!whole) {
              long lo = 0;
              long hi = 0;
              if (!ray_z_range(f.source, pixel, grid, lo, hi) || hi < z_lo || lo >= z_hi) continue;
            }
            detail::siddon_visit(f.source, pixel, grid, tol,
                                 [&](std::size_t ix, std::size_t iy, std::size_t iz, double w) {
                                   const long z = static_cast<long>(iz);
                                   if (z < z_lo || z >= z_hi) return;
                                   const std::size_t j = grid.index(ix, iy, iz);
                                   out_a[j] += w * ya;
                                   if (has_b) out_b[j] += w * yb;
                                   if (want_sums) sums[j] += w;
                                 });
          }
        }
      }
    }
  });
}

}  // namespace

void backproject_rdm(const CArmGeometry& geom, std::span<const std::size_t> views,
                     std::span<const double> ray_values, const GridSpec& grid,
                     std::span<double> out, std::span<double> weight_sums, Exec exec) {
  backproject_impl(geom, views, ray_values, {}, grid, out, {}, weight_sums, exec);
}

void backproject_rdm_pair(const CArmGeometry& geom, std::span<const std::size_t> views,
                          std::span<const double> values_a, std::span<const double> values_b,
                          const GridSpec& grid, std::span<double> out_a, std::span<double> out_b,
                          Exec exec) {
  if (values_b.empty()) throw Error(ErrorKind::SizeMismatch, "second value set is empty");
  backproject_impl(geom, views, values_a, values_b, grid, out_a, out_b, {}, exec);
}

}  // namespace carm
