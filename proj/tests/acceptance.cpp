// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "carm/config.hpp"
#include "carm/geometry.hpp"
#include "carm/metrics.hpp"
#include "carm/phantom.hpp"
#include "carm/projector.hpp"
#include "carm/recon.hpp"
#include "carm/scenario.hpp"

using namespace carm;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;

void report(int id, bool ok, const std::string& what) {
  std::printf("%s %d: %s\n", ok ? "PASS" : "FAIL", id, what.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// Slab clipping of the segment p0->p1 against the grid's bounding box.
double box_chord(Point3 p0, Point3 p1, const GridSpec& g) {
  const double lo[3] = {g.origin.x - 0.5 * g.spacing, g.origin.y - 0.5 * g.spacing,
                        g.origin.z - 0.5 * g.spacing};
  const double n[3] = {static_cast<double>(g.nx), static_cast<double>(g.ny),
                       static_cast<double>(g.nz)};
  const double a[3] = {p0.x, p0.y, p0.z};
  const double d[3] = {p1.x - p0.x, p1.y - p0.y, p1.z - p0.z};
  double t0 = 0.0;
  double t1 = 1.0;
  for (int k = 0; k < 3; ++k) {
    const double hi = lo[k] + n[k] * g.spacing;
    if (d[k] == 0.0) {
      if (a[k] < lo[k] || a[k] > hi) return 0.0;
      continue;
    }
    double ta = (lo[k] - a[k]) / d[k];
    double tb = (hi - a[k]) / d[k];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
  }
  return t1 > t0 ? (t1 - t0) * norm(p1 - p0) : 0.0;
}

void geometry_suite() {
  const auto t0 = Clock::now();
  const CArmGeometry g(440.0, view_angles(25, 40.0), 256, 256, 0.24);
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> beta_dist(-180.0, 180.0);
  std::uniform_real_distribution<double> pos(-30.0, 30.0);
  std::uniform_real_distribution<double> det(-40.0, 40.0);
  double circle = 0.0;
  double antipodal = 0.0;
  double sid = 0.0;
  double central = 0.0;
  double round_trip = 0.0;
  double collinear = 0.0;
  std::vector<double> betas = g.angles();
  for (int i = 0; i < 2000; ++i) betas.push_back(beta_dist(gen));
  for (double beta : betas) {
    const Point3 s = source_position(g, beta);
    const Point3 c = detector_point(g, {0.0, 0.0}, beta);
    circle = std::max(circle, std::abs(norm(s) - g.d()) / g.d());
    antipodal = std::max(antipodal, norm(c + s));
    sid = std::max(sid, std::abs(norm(c - s) - g.sid()) / g.sid());
    central = std::max(central, norm(cross(s, c - s)) / norm(c - s));

    const DetectorCoord uv{det(gen), det(gen)};
    const DetectorCoord back = project_to_detector(g, detector_point(g, uv, beta), beta);
    round_trip = std::max({round_trip, std::abs(back.u - uv.u), std::abs(back.v - uv.v)});

    const Point3 p{pos(gen), pos(gen), pos(gen)};
    const Point3 q = detector_point(g, project_to_detector(g, p, beta), beta);
    collinear = std::max(collinear, norm(cross(p - s, q - s)) / (norm(p - s) * norm(q - s)));
  }
  const double t = seconds_since(t0);
  const bool ok = circle < 1e-12 && antipodal < 1e-12 * g.d() && sid < 1e-12 &&
                  central < 1e-9 && round_trip < 1e-9 && collinear < 1e-9 && t < 1.0;
  report(1, ok,
         fmt("geometry suite over %zu angles: circle %.1e, antipodal %.1e mm, SID %.1e, "
             "central ray %.1e mm, round trip %.1e mm, collinearity %.1e; %.3f s",
             betas.size(), circle, antipodal, sid, central, round_trip, collinear, t));
}

void siddon_conservation() {
  const auto t0 = Clock::now();
  const GridSpec grid = centered_grid(128, 128, 128, 0.12);
  const double half = 64 * 0.12;
  std::mt19937_64 gen(2);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  double worst = 0.0;
  std::size_t hits = 0;
  for (int i = 0; i < 10000; ++i) {
    // aim through a point near the box so that most rays cross it
    const Point3 p0{uni(gen) * 3 * half, uni(gen) * 3 * half, uni(gen) * 3 * half};
    const Point3 aim{uni(gen) * 1.2 * half, uni(gen) * 1.2 * half, uni(gen) * 1.2 * half};
    const Point3 b = p0 + 2.0 * (aim - p0);
    const auto w = siddon_trace(p0, b, grid, 1e-12 * 880.0);
    double sum = 0.0;
    for (const auto& e : w) sum += e.length;
    const double chord = box_chord(p0, b, grid);
    if (chord > 0.0) ++hits;
    worst = std::max(worst, std::abs(sum - chord));
  }
  const double t = seconds_since(t0);
  report(2, worst < 1e-9 && t < 10.0,
         fmt("Siddon weight sums vs box chord over 10000 rays (%zu crossing): max error "
             "%.2e mm; %.2f s",
             hits, worst, t));
}

void projector_cross_validation() {
  const CArmGeometry g(440.0, view_angles(25, 40.0), 256, 256, 0.24);
  const auto ph = sphere_phantom(1.0, 0.01);
  const auto ana = forward_project_analytic(ph, g);
  auto rms_for = [&](bool supersample) {
    const auto vox = voxelize(ph, centered_grid(12, 12, 12, 0.25), supersample);
    const auto rdm = forward_project_rdm(vox, g, all_views(g));
    double err = 0.0;
    double ref = 0.0;
    for (std::size_t i = 0; i < ana.data().size(); ++i) {
      if (ana.data()[i] <= 0.0) continue;
      const double e = rdm.data()[i] - ana.data()[i];
      err += e * e;
      ref += ana.data()[i] * ana.data()[i];
    }
    return std::sqrt(err / ref);
  };
  const double point = rms_for(false);
  const double super = rms_for(true);
  report(3, point < 0.03,
         fmt("RDM vs analytic projection of a voxelized 1 mm sphere at 0.25 mm voxels: "
             "relative RMS %.4f (supersampled %.4f), limit 0.03",
             point, super));
}

void paper_simulation() {
  const auto cfg = load_config(CARM_SOURCE_DIR "/configs/paper_sim.ini");
  RunOptions opts;
  opts.out_dir = "acceptance_out/paper_sim";
  std::filesystem::remove_all(opts.out_dir);
  const auto t0 = Clock::now();
  const RunReport r = run_scenario(cfg, opts);
  const double t = seconds_since(t0);

  bool ok4 = t < 300.0;
  std::string detail;
  for (const auto& [alg, s] : r.summaries) {
    const bool fwhm_ok = s.fwhm_mm && *s.fwhm_mm >= 1.4 && *s.fwhm_mm <= 3.0;
    const bool peak_ok = s.peak_offset_voxels <= 1.0;
    ok4 = ok4 && fwhm_ok && peak_ok;
    detail += fmt("\n    %-4s FWHM %.3f mm%s, in-plane peak offset %.2f voxels%s", alg.c_str(),
                  s.fwhm_mm.value_or(-1.0), fwhm_ok ? "" : " (out of range)",
                  s.peak_offset_voxels, peak_ok ? "" : " (> 1)");
  }
  ok4 = ok4 && r.summaries.size() == 4;
  report(4, ok4, fmt("paper_sim, 4 algorithms, runtime %.1f s (limit 300)", t) + detail);

  const auto& bp = r.summaries.at("bp");
  const auto& fbp = r.summaries.at("fbp");
  const bool fbp_under = fbp.annulus_min < fbp.background - 0.02 * fbp.peak_contrast;
  const bool bp_flat = bp.annulus_min >= bp.background - 0.005 * bp.peak_contrast;
  report(5, fbp_under && bp_flat,
         fmt("edge undershoot in the 1-3 mm annulus: FBP %.3f%% of contrast (needs < -2%%), "
             "BP %.3f%% (needs >= -0.5%%)",
             100.0 * (fbp.annulus_min - fbp.background) / fbp.peak_contrast,
             100.0 * (bp.annulus_min - bp.background) / bp.peak_contrast));

  bool ok6 = bp.mean_far_asf.has_value();
  std::string asf_detail = fmt("BP %.4f", bp.mean_far_asf.value_or(NAN));
  for (const char* alg : {"fbp", "sart", "mlem"}) {
    const auto& s = r.summaries.at(alg);
    ok6 = ok6 && s.mean_far_asf && *bp.mean_far_asf > *s.mean_far_asf;
    asf_detail += fmt(", %s %.4f", alg, s.mean_far_asf.value_or(NAN));
  }
  report(6, ok6, "mean ASF over |offset| >= 5 mm: " + asf_detail);
}

struct SmallScene {
  CArmGeometry geom{440.0, view_angles(11, 40.0), 40, 32, 0.24};
  GridSpec grid = centered_grid(30, 36, 28, 0.12);
  EllipsoidPhantom phantom{{Ellipsoid{{0.1, -0.2, 0.0}, 1.1, 0.9, 0.8, 0.02},
                            Ellipsoid{{-0.3, 0.4, 0.2}, 0.4, 0.4, 0.4, 0.05}}};
};

double residual_norm(const ProjectionStack& measured, const VoxelVolume& vol) {
  const auto& g = measured.geometry();
  const auto p = forward_project_rdm(vol, g, all_views(g));
  double s = 0.0;
  for (std::size_t i = 0; i < p.data().size(); ++i) {
    const double r = measured.data()[i] - p.data()[i];
    s += r * r;
  }
  return std::sqrt(s);
}

double log_likelihood(const ProjectionStack& counts, const VoxelVolume& vol) {
  const auto& g = counts.geometry();
  const auto l = forward_project_rdm(vol, g, all_views(g));
  const double i0 = *counts.i0();
  double s = 0.0;
  for (std::size_t i = 0; i < l.data().size(); ++i) {
    const double yhat = i0 * std::exp(-l.data()[i]);
    s += counts.data()[i] * std::log(yhat) - yhat;
  }
  return s;
}

void sart_monotone() {
  const SmallScene s;
  const auto truth = voxelize(s.phantom, s.grid);
  const auto A = forward_project_rdm(truth, s.geom, all_views(s.geom));
  SartConfig cfg;
  cfg.iterations = 10;
  cfg.lambda0 = 0.5;
  cfg.decay = 1.0;
  std::vector<double> norms{residual_norm(A, VoxelVolume(s.grid))};
  sart_reconstruct(A, s.grid, cfg, std::nullopt, {},
                   [&](std::size_t, const VoxelVolume& v) { norms.push_back(residual_norm(A, v)); });
  double worst = -INFINITY;
  for (std::size_t t = 1; t < norms.size(); ++t) {
    worst = std::max(worst, (norms[t] - norms[t - 1]) / norms[t - 1]);
  }
  report(7, norms.size() == 11 && worst <= 1e-9,
         fmt("SART residual over 10 iterations: %.4g -> %.4g, largest relative step %.3e",
             norms.front(), norms.back(), worst));
}

void mlem_ascent_and_fixed_point() {
  const SmallScene s;
  const auto l = forward_project_analytic(s.phantom, s.geom);
  const auto O = to_intensity(l, 5e3, 11);
  MlemConfig cfg;
  cfg.iterations = 10;
  std::vector<double> ll{log_likelihood(O, VoxelVolume(s.grid, cfg.initial))};
  mlem_reconstruct(O, s.grid, cfg, std::nullopt, {},
                   [&](std::size_t, const VoxelVolume& v) { ll.push_back(log_likelihood(O, v)); });
  double worst = -INFINITY;
  for (std::size_t t = 1; t < ll.size(); ++t) {
    worst = std::max(worst, (ll[t - 1] - ll[t]) / std::abs(ll[t - 1]));
  }

  VoxelVolume start = voxelize(s.phantom, s.grid);
  for (auto& x : start.data()) x += 0.001;
  const auto consistent = to_intensity(forward_project_rdm(start, s.geom, all_views(s.geom)), 5e4);
  cfg.iterations = 3;
  const auto v = mlem_reconstruct(consistent, s.grid, cfg, start);
  double drift = 0.0;
  for (std::size_t j = 0; j < v.size(); ++j) {
    drift = std::max(drift, std::abs(v.data()[j] - start.data()[j]) / start.data()[j]);
  }
  report(8, worst <= 1e-9 && drift <= 1e-12,
         fmt("MLEM log-likelihood %.6g -> %.6g (largest relative decrease %.2e); "
             "fixed-point drift %.2e",
             ll.front(), ll.back(), worst, drift));
}

void determinism() {
  const auto cfg = load_config(CARM_SOURCE_DIR "/tests/data/tiny.ini");
  std::string digests[2];
  const unsigned threads[2] = {1, 3};
  for (int k = 0; k < 2; ++k) {
    RunOptions opts;
    opts.out_dir = fmt("acceptance_out/tiny_t%u", threads[k]);
    opts.threads = threads[k];
    std::filesystem::remove_all(opts.out_dir);
    digests[k] = run_scenario(cfg, opts).manifest_digest;
  }
  report(9, !digests[0].empty() && digests[0] == digests[1],
         fmt("noisy `all` runs at 1 and 3 threads: manifest digests %.16s... / %.16s...",
             digests[0].c_str(), digests[1].c_str()));
}

// First local minimum of the magnitude, refined within its bin: near a simple
// zero |M| is a V, so the two neighbours fix the crossing point.
double first_zero(const Spectrum& s) {
  const auto& m = s.magnitude;
  std::size_t k = 1;
  while (k + 1 < m.size() && m[k + 1] < m[k]) ++k;
  const double step = s.frequency[1] - s.frequency[0];
  if (k + 1 >= m.size()) return s.frequency[k];
  const double shift = m[k - 1] > m[k + 1] ? m[k] / (m[k - 1] - m[k]) : -m[k] / (m[k + 1] - m[k]);
  return s.frequency[k] + shift * step;
}

void mtf_properties() {
  const double spacing = 0.12;
  auto profile = [&](auto f) {
    Profile1D p;
    p.spacing = spacing;
    p.values.resize(128);
    p.center_index = 64;
    for (std::size_t i = 0; i < p.values.size(); ++i) p.values[i] = f(i);
    return p;
  };
  const auto impulse = mtf(profile([](std::size_t i) { return i == 64 ? 1.0 : 0.0; }));
  double flat = 0.0;
  for (double m : impulse.magnitude) flat = std::max(flat, std::abs(m - 1.0));

  bool dc = impulse.magnitude[0] == 1.0;
  double zero_err = 0.0;
  for (std::size_t width : {6u, 9u, 12u, 17u, 25u}) {
    const auto s = mtf(profile([&](std::size_t i) { return i >= 40 && i < 40 + width ? 1.0 : 0.0; }));
    dc = dc && s.magnitude[0] == 1.0;
    const double expect = 1.0 / (static_cast<double>(width) * spacing);
    zero_err = std::max(zero_err, std::abs(first_zero(s) - expect) / expect);
  }
  report(10, dc && flat < 1e-12 && zero_err < 0.02,
         fmt("MTF: DC = 1 %s, impulse flatness %.1e, top-hat first zero error %.2f%%",
             dc ? "yes" : "no", flat, 100.0 * zero_err));
}

}  // namespace

int main() {
  const std::pair<int, void (*)()> criteria[] = {
      {1, geometry_suite}, {2, siddon_conservation}, {3, projector_cross_validation},
      {4, paper_simulation}, {7, sart_monotone}, {8, mlem_ascent_and_fixed_point},
      {9, determinism}, {10, mtf_properties}};
  for (const auto& [id, run] : criteria) {
    try {
      run();
    } catch (const std::exception& e) {
      report(id, false, std::string("threw: ") + e.what());
      if (id == 4) {
        report(5, false, "no paper_sim run");
        report(6, false, "no paper_sim run");
      }
    }
  }
  std::printf("%d criterion check(s) failed\n", failures);
  return failures == 0 ? 0 : 1;
}
