#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <random>

#include "carm/error.hpp"
#include "carm/phantom.hpp"
#include "carm/projector.hpp"

using namespace carm;

namespace {

// Length of segment p0 -> p1 inside the axis-aligned box [lo, hi], by
// parametric slab clipping.
double box_chord(Point3 p0, Point3 p1, Point3 lo, Point3 hi) {
  const double a[3] = {p0.x, p0.y, p0.z};
  const double d[3] = {p1.x - p0.x, p1.y - p0.y, p1.z - p0.z};
  const double l[3] = {lo.x, lo.y, lo.z};
  const double h[3] = {hi.x, hi.y, hi.z};
  double t0 = 0.0;
  double t1 = 1.0;
  for (int k = 0; k < 3; ++k) {
    if (d[k] == 0.0) {
      if (a[k] < l[k] || a[k] > h[k]) return 0.0;
      continue;
    }
    double ta = (l[k] - a[k]) / d[k];
    double tb = (h[k] - a[k]) / d[k];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
  }
  return t1 > t0 ? (t1 - t0) * norm(p1 - p0) : 0.0;
}

// Detector coordinates by rotating into the beta = 0 frame, where the
// source is at (d, 0, 0) and the detector is the plane x = -d.
DetectorCoord oracle_project(double d, Point3 p, double beta_deg) {
  const double b = beta_deg * 3.14159265358979323846 / 180.0;
  const double x = std::cos(b) * p.x - std::sin(b) * p.y;
  const double y = std::sin(b) * p.x + std::cos(b) * p.y;
  const double m = 2.0 * d / (d - x);
  return {m * y, m * p.z};
}

double sum_weights(const RayWeights& w) {
  double s = 0.0;
  for (const auto& e : w) s += e.length;
  return s;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

TEST_CASE("log normalization") {
  const CArmGeometry g(440.0, {0.0}, 2, 2, 0.24);
  ProjectionStack I(g, Domain::Intensity, 1e5);
  I.at(0, 0, 0) = 1e5;
  I.at(0, 0, 1) = 1e5 * std::exp(-2.0);
  I.at(0, 1, 0) = 0.0;
  I.at(0, 1, 1) = 2e5;  // brighter than the flat field
  const auto A = log_normalize(I);
  CHECK(A.domain() == Domain::LineIntegral);
  CHECK(A.at(0, 0, 0) == 0.0);
  CHECK(A.at(0, 0, 1) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(A.at(0, 1, 0) == doctest::Approx(11.5129254649702284).epsilon(1e-14));
  CHECK(A.at(0, 1, 1) == 0.0);
  CHECK_THROWS_AS(log_normalize(A), Error);
}

TEST_CASE("pixel-driven backprojection of constant and zero views") {
  const CArmGeometry g(440.0, {-10.0, 15.0}, 40, 30, 0.24);
  const GridSpec grid = centered_grid(48, 40, 36, 0.1);
  ProjectionStack st(g, Domain::LineIntegral);
  std::fill(st.view(1).begin(), st.view(1).end(), 3.25);
  const std::size_t v1[] = {1};
  const auto bp = backproject_pdm(st, grid, v1);
  std::size_t inside = 0;
  for (std::size_t ix = 0; ix < grid.nx; ++ix) {
    for (std::size_t iy = 0; iy < grid.ny; ++iy) {
      for (std::size_t iz = 0; iz < grid.nz; ++iz) {
        const auto uv = oracle_project(440.0, grid.center(ix, iy, iz), 15.0);
        const double c = g.column_of(uv.u);
        const double r = g.row_of(uv.v);
        const bool in = c >= 0.0 && c <= 39.0 && r >= 0.0 && r <= 29.0;
        inside += in;
        const double want = in ? 3.25 : 0.0;
        CHECK(std::abs(bp.sum.at(ix, iy, iz) - want) < 1e-12);
        CHECK(bp.coverage.at(ix, iy, iz) == (in ? 1.0 : 0.0));
      }
    }
  }
  CHECK(inside > 0);
  CHECK(inside < grid.nx * grid.ny * grid.nz);

  const std::size_t v0[] = {0};
  const auto zero = backproject_pdm(st, grid, v0);
  for (double x : zero.sum.data()) CHECK(x == 0.0);
}

TEST_CASE("pixel-driven backprojection of a single detector pixel") {
  const double beta = 7.0;
  const CArmGeometry g(440.0, {beta}, 32, 32, 0.24);
  const GridSpec grid = centered_grid(40, 40, 40, 0.1);
  ProjectionStack st(g, Domain::LineIntegral);
  const std::size_t iu = 18;
  const std::size_t iv = 13;
  st.at(0, iv, iu) = 1.0;
  const std::size_t v[] = {0};
  const auto bp = backproject_pdm(st, grid, v);

  // every voxel gets the bilinear weight of its projected offset from the pixel
  std::size_t nonzero = 0;
  for (std::size_t ix = 0; ix < grid.nx; ++ix) {
    for (std::size_t iy = 0; iy < grid.ny; ++iy) {
      for (std::size_t iz = 0; iz < grid.nz; ++iz) {
        const auto uv = oracle_project(440.0, grid.center(ix, iy, iz), beta);
        const double dc = std::abs(g.column_of(uv.u) - static_cast<double>(iu));
        const double dr = std::abs(g.row_of(uv.v) - static_cast<double>(iv));
        const double want = (dc < 1.0 && dr < 1.0) ? (1.0 - dc) * (1.0 - dr) : 0.0;
        CHECK(std::abs(bp.sum.at(ix, iy, iz) - want) < 1e-9);
        nonzero += bp.sum.at(ix, iy, iz) != 0.0;
      }
    }
  }

  // marching along the ray, the voxel under each sample is lit
  const Point3 s = source_position(g, beta);
  const Point3 q = detector_point(g, g.pixel_center(iu, iv), beta);
  std::size_t visited = 0;
  for (int k = 0; k <= 4000; ++k) {
    const Point3 p = s + (k / 4000.0) * (q - s);
    const Point3 rel = p - grid.box_min();
    if (rel.x < 0 || rel.y < 0 || rel.z < 0) continue;
    const auto ix = static_cast<std::size_t>(rel.x / grid.spacing);
    const auto iy = static_cast<std::size_t>(rel.y / grid.spacing);
    const auto iz = static_cast<std::size_t>(rel.z / grid.spacing);
    if (ix >= grid.nx || iy >= grid.ny || iz >= grid.nz) continue;
    ++visited;
    CHECK(bp.sum.at(ix, iy, iz) > 0.0);
  }
  CHECK(visited > 0);
  CHECK(nonzero >= 40);
}

TEST_CASE("pixel-driven backprojection is linear") {
  const CArmGeometry g(440.0, view_angles(3, 40.0), 24, 20, 0.24);
  const GridSpec grid = centered_grid(20, 24, 16, 0.12);
  ProjectionStack a(g, Domain::LineIntegral);
  ProjectionStack b(g, Domain::LineIntegral);
  ProjectionStack c(g, Domain::LineIntegral);
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  for (std::size_t i = 0; i < a.data().size(); ++i) {
    a.data()[i] = uni(gen);
    b.data()[i] = uni(gen);
    c.data()[i] = 2.0 * a.data()[i] - 0.5 * b.data()[i];
  }
  const auto views = all_views(g);
  const auto pa = backproject_pdm(a, grid, views);
  const auto pb = backproject_pdm(b, grid, views);
  const auto pc = backproject_pdm(c, grid, views);
  for (std::size_t j = 0; j < pc.sum.data().size(); ++j) {
    CHECK(std::abs(pc.sum.data()[j] - 2.0 * pa.sum.data()[j] + 0.5 * pb.sum.data()[j]) < 1e-12);
  }
}

TEST_CASE("siddon axis-aligned and diagonal rays") {
  const GridSpec grid{7, 3, 3, 0.5, {0.0, 0.0, 0.0}};
  // along x through voxel row (iy, iz) = (1, 2), off the voxel faces
  const auto w = siddon_trace({-3.0, 0.53, 1.07}, {9.0, 0.53, 1.07}, grid, 1e-9);
  REQUIRE(w.size() == 7);
  for (std::size_t k = 0; k < 7; ++k) {
    CHECK(w[k].voxel == (k * 3 + 1) * 3 + 2);
    CHECK(w[k].length == doctest::Approx(0.5).epsilon(1e-12));
  }
  CHECK(sum_weights(w) == doctest::Approx(3.5).epsilon(1e-12));

  CHECK(siddon_trace({-3.0, 5.0, 0.5}, {9.0, 5.0, 0.5}, grid, 1e-9).empty());
  CHECK(siddon_trace({-3.0, 0.5, 0.5}, {-1.0, 0.5, 0.5}, grid, 1e-9).empty());

  // 45 degrees in x-y across a single voxel, corner to corner
  const GridSpec one{1, 1, 1, 0.4, {0.0, 0.0, 0.0}};
  const Point3 p0{-0.6, -0.6, 0.1};
  const Point3 p1{0.6, 0.6, 0.1};
  const auto d = siddon_trace(p0, p1, one, 1e-9);
  REQUIRE(d.size() == 1);
  CHECK(d[0].length == doctest::Approx(0.4 * std::sqrt(2.0)).epsilon(1e-12));
  CHECK(d[0].length == doctest::Approx(box_chord(p0, p1, one.box_min(), one.box_max())).epsilon(1e-12));
}

TEST_CASE("siddon weights conserve the box chord") {
  const GridSpec grid = centered_grid(37, 29, 23, 0.17);
  std::mt19937_64 gen(17);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  for (int i = 0; i < 3000; ++i) {
    const Point3 p0{40.0 * uni(gen), 40.0 * uni(gen), 40.0 * uni(gen)};
    const Point3 p1{3.0 * uni(gen), 2.5 * uni(gen), 2.0 * uni(gen)};
    const Point3 end = p0 + 2.0 * (p1 - p0);
    const auto w = siddon_trace(p0, end, grid, 1e-12 * 880.0);
    for (const auto& e : w) CHECK(e.length > 0.0);
    CHECK(std::abs(sum_weights(w) - box_chord(p0, end, grid.box_min(), grid.box_max())) < 1e-9);
  }
  // rays through voxel corners and along faces
  const Point3 corner = grid.box_min() + Point3{0.17 * 5, 0.17 * 7, 0.17 * 3};
  const auto w = siddon_trace(corner - Point3{3, 3, 3}, corner + Point3{3, 3, 3}, grid, 1e-9);
  CHECK(std::abs(sum_weights(w) - box_chord(corner - Point3{3, 3, 3}, corner + Point3{3, 3, 3},
                                            grid.box_min(), grid.box_max())) < 1e-9);
}

TEST_CASE("C-arm rays through a uniform volume") {
  const CArmGeometry g(440.0, view_angles(4, 40.0), 20, 12, 0.24);
  const GridSpec grid = centered_grid(30, 26, 14, 0.15);
  const VoxelVolume vol(grid, 0.7);
  const auto views = all_views(g);
  const auto st = forward_project_rdm(vol, g, views);
  for (std::size_t k = 0; k < g.n_views(); ++k) {
    const double beta = g.angles()[k];
    for (std::size_t iv = 0; iv < g.nv(); ++iv) {
      for (std::size_t iu = 0; iu < g.nu(); ++iu) {
        const Point3 s = source_position(g, beta);
        const Point3 q = detector_point(g, g.pixel_center(iu, iv), beta);
        const double chord = box_chord(s, q, grid.box_min(), grid.box_max());
        CHECK(std::abs(st.at(k, iv, iu) - 0.7 * chord) < 1e-9);
        CHECK(std::abs(sum_weights(siddon_weights(g, beta, iu, iv, grid)) - chord) < 1e-9);
      }
    }
  }
  const auto zero = forward_project_rdm(VoxelVolume(grid, 0.0), g, views);
  for (double x : zero.data()) CHECK(x == 0.0);
}

TEST_CASE("ray-driven projector pair is adjoint and linear") {
  const CArmGeometry g(440.0, view_angles(5, 40.0), 24, 18, 0.24);
  const GridSpec grid = centered_grid(26, 22, 18, 0.13);
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  VoxelVolume x(grid);
  VoxelVolume x2(grid);
  for (auto& v : x.data()) v = uni(gen);
  for (auto& v : x2.data()) v = uni(gen);
  const auto views = all_views(g);
  std::vector<double> y(g.n_views() * g.pixels_per_view());
  for (auto& v : y) v = uni(gen);

  const auto wx = forward_project_rdm(x, g, views);
  std::vector<double> wty(grid.nx * grid.ny * grid.nz, 0.0);
  backproject_rdm(g, views, y, grid, wty, {});
  const double lhs = dot(wx.data(), y);
  const double rhs = dot(x.data(), wty);
  CHECK(std::abs(lhs - rhs) <= 1e-9 * std::max(std::abs(lhs), std::abs(rhs)));

  VoxelVolume combo(grid);
  for (std::size_t j = 0; j < combo.data().size(); ++j) combo.data()[j] = 3.0 * x.data()[j] + x2.data()[j];
  const auto w2 = forward_project_rdm(x2, g, views);
  const auto wc = forward_project_rdm(combo, g, views);
  for (std::size_t i = 0; i < wc.data().size(); ++i) {
    CHECK(std::abs(wc.data()[i] - 3.0 * wx.data()[i] - w2.data()[i]) < 1e-12);
  }

  // the pair variant matches two single backprojections
  std::vector<double> y2(y.size());
  for (auto& v : y2) v = uni(gen);
  std::vector<double> a(wty.size(), 0.0);
  std::vector<double> b(wty.size(), 0.0);
  std::vector<double> b_single(wty.size(), 0.0);
  backproject_rdm_pair(g, views, y, y2, grid, a, b);
  backproject_rdm(g, views, y2, grid, b_single, {});
  CHECK(std::memcmp(a.data(), wty.data(), a.size() * sizeof(double)) == 0);
  CHECK(std::memcmp(b.data(), b_single.data(), b.size() * sizeof(double)) == 0);

  // column sums of W equal the backprojection of ones
  std::vector<double> ones(y.size(), 1.0);
  std::vector<double> bp_ones(wty.size(), 0.0);
  std::vector<double> sums(wty.size(), 0.0);
  std::vector<double> scratch(wty.size(), 0.0);
  backproject_rdm(g, views, ones, grid, bp_ones, {});
  backproject_rdm(g, views, y, grid, scratch, sums);
  for (std::size_t j = 0; j < sums.size(); ++j) CHECK(std::abs(sums[j] - bp_ones[j]) < 1e-12);
}

TEST_CASE("projector results do not depend on the worker count") {
  const CArmGeometry g(440.0, view_angles(4, 40.0), 30, 20, 0.24);
  const GridSpec grid = centered_grid(28, 24, 20, 0.12);
  std::mt19937_64 gen(9);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  VoxelVolume x(grid);
  for (auto& v : x.data()) v = uni(gen);
  const auto views = all_views(g);
  const auto f1 = forward_project_rdm(x, g, views, Exec{1});
  const auto f3 = forward_project_rdm(x, g, views, Exec{3});
  CHECK(std::memcmp(f1.data().data(), f3.data().data(), f1.data().size() * sizeof(double)) == 0);

  std::vector<double> b1(x.data().size(), 0.0);
  std::vector<double> b3(x.data().size(), 0.0);
  backproject_rdm(g, views, f1.data(), grid, b1, {}, Exec{1});
  backproject_rdm(g, views, f1.data(), grid, b3, {}, Exec{3});
  for (std::size_t j = 0; j < b1.size(); ++j) {
    CHECK(std::abs(b1[j] - b3[j]) <= 1e-10 * std::max(1.0, std::abs(b1[j])));
  }

  const auto p1 = backproject_pdm(f1, grid, views, Exec{1});
  const auto p3 = backproject_pdm(f1, grid, views, Exec{3});
  CHECK(std::memcmp(p1.sum.data().data(), p3.sum.data().data(), p1.sum.data().size() * sizeof(double)) == 0);
}

namespace {

double sphere_rms(double spacing) {
  const CArmGeometry g(440.0, view_angles(5, 40.0), 32, 32, 0.24);
  const auto ph = sphere_phantom(1.0, 0.02);
  const auto n = static_cast<std::size_t>(std::lround(3.0 / spacing));
  const auto vox = voxelize(ph, centered_grid(n, n, n, spacing));
  const auto rdm = forward_project_rdm(vox, g, all_views(g));
  const auto ana = forward_project_analytic(ph, g);
  double err = 0.0;
  double ref = 0.0;
  for (std::size_t i = 0; i < ana.data().size(); ++i) {
    if (ana.data()[i] <= 0.0) continue;
    const double e = rdm.data()[i] - ana.data()[i];
    err += e * e;
    ref += ana.data()[i] * ana.data()[i];
  }
  return std::sqrt(err / ref);
}

}  // namespace

// The staircase error of a point-sampled sphere shrinks with the voxel size;
// a fine grid lands well inside 3%.
TEST_CASE("ray-driven projection of a voxelized sphere converges to the analytic one") {
  const double coarse = sphere_rms(0.25);
  const double mid = sphere_rms(0.125);
  const double fine = sphere_rms(0.05);
  CAPTURE(coarse);
  CAPTURE(mid);
  CAPTURE(fine);
  CHECK(mid < coarse);
  CHECK(fine < mid);
  CHECK(fine < 0.03);
}
