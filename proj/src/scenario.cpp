#include "carm/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "carm/error.hpp"
#include "carm/io.hpp"
#include "carm/phantom.hpp"
#include "carm/projector.hpp"
#include "carm/recon.hpp"
#include "json.hpp"

namespace carm {

namespace fs = std::filesystem;
using nlohmann::json;

inline constexpr const char* kToolVersion = "carmtomo 1.0.0";

std::string canonical_config(const ScenarioConfig& c) {
  std::ostringstream o;
  o << std::setprecision(17);
  o << "name=" << c.name << "\nseed=" << c.seed << "\nd_mm=" << c.d_mm
    << "\nn_views=" << c.n_views << "\nspan_deg=" << c.span_deg << "\nnu=" << c.nu
    << "\nnv=" << c.nv << "\npitch_mm=" << c.pitch_mm << "\npreset=" << static_cast<int>(c.preset)
    << "\nradius_mm=" << c.sphere_radius_mm << "\nmu=" << c.sphere_mu << "\ncenter="
    << c.sphere_center.x << ',' << c.sphere_center.y << ',' << c.sphere_center.z
    << "\nphantom_file=" << c.phantom_file.string() << "\ni0=" << c.i0 << "\nnoise=" << c.noise
    << "\ngrid=" << c.nx << 'x' << c.ny << 'x' << c.nz << '@' << c.spacing_mm
    << "\ngrid_center=" << c.grid_center.x << ',' << c.grid_center.y << ',' << c.grid_center.z;
  if (c.preset == PhantomPreset::File) o << "\nphantom=" << format_phantom(c.phantom());
  for (const auto& a : c.algorithms()) o << "\nrecon=" << a;
  o << "\nfbp=" << static_cast<int>(c.fbp.window) << ',' << c.fbp.cutoff << ','
    << c.fbp.cosine_weight << "\nsart=" << c.sart.iterations << ',' << c.sart.lambda0 << ','
    << c.sart.decay << ',' << c.sart.nonneg << "\nmlem=" << c.mlem.iterations << ','
    << c.mlem.initial << ',' << c.mlem.floor << "\nmetrics=" << c.feature_half << ','
    << c.background_offset_mm << ',' << c.background_half;
  if (c.object_center) {
    o << "\ntarget=" << c.object_center->x << ',' << c.object_center->y << ','
      << c.object_center->z;
  }
  if (c.window_lo) o << "\nwindow_lo=" << *c.window_lo;
  if (c.window_hi) o << "\nwindow_hi=" << *c.window_hi;
  o << '\n';
  return o.str();
}

TargetIndex locate_target(const ScenarioConfig& cfg) {
  const GridSpec g = cfg.grid();
  const Point3 t = cfg.target();
  auto index = [&](double coord, double origin, std::size_t n, const char* axis) {
    const double i = std::round((coord - origin) / g.spacing);
    if (i < 0.0 || i >= static_cast<double>(n)) {
      throw Error(ErrorKind::ConfigError,
                  std::string("metrics target lies outside the grid along ") + axis);
    }
    return static_cast<std::size_t>(i);
  };
  return {index(t.x, g.origin.x, g.nx, "x"), index(t.y, g.origin.y, g.ny, "y"),
          index(t.z, g.origin.z, g.nz, "z")};
}

namespace {

struct Rois {
  PlaneRoi feature;
  PlaneRoi background;
};

Rois make_rois(const GridSpec& g, const TargetIndex& t, const ScenarioConfig& cfg) {
  Rois r;
  r.feature = {t.iy, t.iz, cfg.feature_half};
  const auto shift = static_cast<long>(std::lround(cfg.background_offset_mm / g.spacing));
  long by = static_cast<long>(t.iy) + shift;
  const long half = static_cast<long>(cfg.background_half);
  if (by + half >= static_cast<long>(g.ny)) by = static_cast<long>(t.iy) - shift;
  r.background = {static_cast<std::size_t>(std::max(by, 0L)), t.iz, cfg.background_half};
  return r;
}

}  // namespace

AlgorithmSummary summarize(const VoxelVolume& vol, const TargetIndex& target,
                           const ScenarioConfig& cfg) {
  const GridSpec& g = vol.grid();
  AlgorithmSummary s;
  const Profile1D profile = line_profile(vol, target.plane, target.iz, target.iy);
  s.background = profile_background(profile);
  const double peak = *std::max_element(profile.values.begin(), profile.values.end());
  s.peak_contrast = peak - s.background;
  try {
    s.fwhm_mm = fwhm(profile);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::NoPeak) throw;
  }
  s.annulus_min = s.background;
  bool any = false;
  for (std::size_t iy = 0; iy < g.ny; ++iy) {
    const double r = std::abs(static_cast<double>(iy) - static_cast<double>(target.iy)) * g.spacing;
    if (r >= 1.0 - 1e-9 && r <= 3.0 + 1e-9) {
      s.annulus_min = any ? std::min(s.annulus_min, profile.values[iy]) : profile.values[iy];
      any = true;
    }
  }

  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t iy = 0; iy < g.ny; ++iy) {
    for (std::size_t iz = 0; iz < g.nz; ++iz) {
      if (vol.at(target.plane, iy, iz) > best) {
        best = vol.at(target.plane, iy, iz);
        s.peak_iy = iy;
        s.peak_iz = iz;
      }
    }
  }
  // Offsets are measured from the continuous target position, which need not
  // coincide with a voxel center.
  const Point3 t = cfg.target();
  const double tx = (t.x - g.origin.x) / g.spacing;
  const double ty = (t.y - g.origin.y) / g.spacing;
  const double tz = (t.z - g.origin.z) / g.spacing;
  auto dist = [&](double dx, double dy, double dz) { return std::sqrt(dx * dx + dy * dy + dz * dz); };
  s.peak_offset_voxels = dist(0.0, static_cast<double>(s.peak_iy) - ty,
                              static_cast<double>(s.peak_iz) - tz);
  const auto data = vol.data();
  const std::size_t arg = std::max_element(data.begin(), data.end()) - data.begin();
  const std::size_t ax = arg / (g.ny * g.nz);
  const std::size_t ay = (arg / g.nz) % g.ny;
  const std::size_t az = arg % g.nz;
  s.argmax_offset_voxels = dist(static_cast<double>(ax) - tx, static_cast<double>(ay) - ty,
                                static_cast<double>(az) - tz);

  try {
    const Rois rois = make_rois(g, target, cfg);
    const AsfCurve curve = asf(vol, target.plane, rois.feature, rois.background);
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < curve.values.size(); ++i) {
      if (std::abs(curve.plane_offsets[i]) >= 5.0 - 1e-9) {
        sum += curve.values[i];
        ++n;
      }
    }
    if (n > 0) s.mean_far_asf = sum / static_cast<double>(n);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::DegenerateContrast && e.kind() != ErrorKind::OutOfBounds) throw;
  }
  return s;
}

namespace {

template <typename Fn>
void stage(Stage which, Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::ConfigError) throw;
    throw Error(e.kind(), std::string("stage ") + to_string(which) + ": " + e.what());
  } catch (const std::exception& e) {
    throw Error(ErrorKind::IoError, std::string("stage ") + to_string(which) + ": " + e.what());
  }
}

void write_metrics(const std::string& alg, const VoxelVolume& vol, const TargetIndex& target,
                   const ScenarioConfig& cfg, const fs::path& dir, json& summary,
                   AlgorithmSummary& out) {
  const Profile1D profile = line_profile(vol, target.plane, target.iz, target.iy);
  write_profile_csv(profile, dir / (alg + "_profile.csv"));
  json entry;
  try {
    write_mtf_csv(mtf(profile), dir / (alg + "_mtf.csv"));
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::ZeroSignal) throw;
    entry["mtf_error"] = e.what();
  }
  try {
    const Rois rois = make_rois(vol.grid(), target, cfg);
    write_asf_csv(asf(vol, target.plane, rois.feature, rois.background), dir / (alg + "_asf.csv"));
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::DegenerateContrast && e.kind() != ErrorKind::OutOfBounds) throw;
    entry["asf_error"] = e.what();
  }
  out = summarize(vol, target, cfg);
  entry["fwhm_mm"] = out.fwhm_mm ? json(*out.fwhm_mm) : json(nullptr);
  entry["peak_iy"] = out.peak_iy;
  entry["peak_iz"] = out.peak_iz;
  entry["peak_offset_voxels"] = out.peak_offset_voxels;
  entry["argmax_offset_voxels"] = out.argmax_offset_voxels;
  entry["background"] = out.background;
  entry["peak_contrast"] = out.peak_contrast;
  entry["annulus_min"] = out.annulus_min;
  entry["mean_far_asf"] = out.mean_far_asf ? json(*out.mean_far_asf) : json(nullptr);
  summary[alg] = entry;
}

void export_slice(const VoxelVolume& vol, std::size_t plane, const ScenarioConfig& cfg,
                  const fs::path& path) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  const GridSpec& g = vol.grid();
  for (std::size_t iy = 0; iy < g.ny; ++iy) {
    for (std::size_t iz = 0; iz < g.nz; ++iz) {
      lo = std::min(lo, vol.at(plane, iy, iz));
      hi = std::max(hi, vol.at(plane, iy, iz));
    }
  }
  if (cfg.window_lo) lo = *cfg.window_lo;
  if (cfg.window_hi) hi = *cfg.window_hi;
  if (!(lo < hi)) hi = lo + 1.0;
  export_slice_pgm(vol, plane, lo, hi, path);
}

}  // namespace

RunReport run_scenario(ScenarioConfig cfg, const RunOptions& opts) {
  if (opts.seed) cfg.seed = *opts.seed;
  if (opts.views) {
    if (*opts.views == 0) throw Error(ErrorKind::ConfigError, "--views must be at least 1");
    cfg.n_views = *opts.views;
  }
  if (!opts.algorithms.empty()) {
    cfg.run_bp = cfg.run_fbp = cfg.run_sart = cfg.run_mlem = false;
    for (const auto& a : opts.algorithms) {
      if (a == "bp") cfg.run_bp = true;
      else if (a == "fbp") cfg.run_fbp = true;
      else if (a == "sart") cfg.run_sart = true;
      else if (a == "mlem") cfg.run_mlem = true;
      else throw Error(ErrorKind::ConfigError, "unknown algorithm '" + a + "'");
    }
  }
  const Stage which = opts.stage.value_or(cfg.stage);
  const Exec exec{std::max(1u, opts.threads)};
  const CArmGeometry geom = [&] {
    try {
      return cfg.geometry();
    } catch (const Error& e) {
      throw Error(ErrorKind::ConfigError, e.what());
    }
  }();
  const GridSpec grid = cfg.grid();
  const fs::path out = opts.out_dir;
  const fs::path stacks = out / "stacks";
  const fs::path volumes = out / "volumes";
  const fs::path metrics_dir = out / "metrics";
  const fs::path slices = out / "slices";
  for (const auto& d : {stacks, volumes, metrics_dir, slices}) fs::create_directories(d);

  RunReport report;
  report.out_dir = out;
  const bool all = which == Stage::All;

  if (all || which == Stage::Simulate) {
    stage(Stage::Simulate, [&] {
      const EllipsoidPhantom ph = cfg.phantom();
      const ProjectionStack line = forward_project_analytic(ph, geom, exec);
      write_stack(line, stacks / "line_integral");
      const std::optional<std::uint64_t> seed =
          cfg.noise ? std::optional<std::uint64_t>(cfg.seed) : std::nullopt;
      write_stack(to_intensity(line, cfg.i0, seed, exec), stacks / "counts");
      write_volume(voxelize(ph, grid), volumes / "truth");
    });
  }

  if (all || which == Stage::Project) {
    stage(Stage::Project, [&] {
      const VoxelVolume vol = opts.volume_input ? read_volume(*opts.volume_input)
                                                : voxelize(cfg.phantom(), grid);
      write_stack(forward_project_rdm(vol, geom, all_views(geom), exec),
                  stacks / "rdm_line_integral");
    });
  }

  if (all || which == Stage::Reconstruct) {
    stage(Stage::Reconstruct, [&] {
      const ProjectionStack counts = read_stack(stacks / "counts");
      if (!(counts.geometry() == geom)) {
        throw Error(ErrorKind::SizeMismatch, "stored stack geometry differs from the config");
      }
      const ProjectionStack line = log_normalize(counts);
      if (cfg.run_bp) write_volume(bp_reconstruct(line, grid, exec), volumes / "bp");
      if (cfg.run_fbp) write_volume(fbp_reconstruct(counts, grid, cfg.fbp, exec), volumes / "fbp");
      if (cfg.run_sart) {
        write_volume(sart_reconstruct(line, grid, cfg.sart, std::nullopt, exec), volumes / "sart");
      }
      if (cfg.run_mlem) {
        write_volume(mlem_reconstruct(counts, grid, cfg.mlem, std::nullopt, exec),
                     volumes / "mlem");
      }
    });
  }

  const TargetIndex target = locate_target(cfg);
  report.target = target;

  if (all || which == Stage::Metrics) {
    stage(Stage::Metrics, [&] {
      json summary;
      summary["target"] = {target.plane, target.iy, target.iz};
      for (const auto& alg : cfg.algorithms()) {
        write_metrics(alg, read_volume(volumes / alg), target, cfg, metrics_dir,
                      summary["algorithms"], report.summaries[alg]);
      }
      std::ofstream f(metrics_dir / "summary.json");
      f << std::setprecision(12) << summary.dump(2) << '\n';
      if (!f) throw Error(ErrorKind::IoError, "cannot write metrics summary");
    });
  }

  if (all || which == Stage::Export) {
    stage(Stage::Export, [&] {
      if (fs::exists(sidecar_path(volumes / "truth"))) {
        export_slice(read_volume(volumes / "truth"), target.plane, cfg, slices / "truth.pgm");
      }
      for (const auto& alg : cfg.algorithms()) {
        export_slice(read_volume(volumes / alg), target.plane, cfg, slices / (alg + ".pgm"));
      }
    });
  }

  if (all) {
    stage(Stage::All, [&] {
      json manifest;
      manifest["tool"] = kToolVersion;
      manifest["file_version"] = kFileVersion;
      manifest["scenario"] = cfg.name;
      manifest["seed"] = cfg.seed;
      manifest["config_sha256"] = sha256_hex(canonical_config(cfg));
      std::vector<fs::path> files;
      for (const auto& d : {stacks, volumes, metrics_dir, slices}) {
        for (const auto& entry : fs::directory_iterator(d)) {
          if (entry.is_regular_file()) files.push_back(fs::relative(entry.path(), out));
        }
      }
      std::sort(files.begin(), files.end());
      json hashes = json::object();
      std::string listing;
      for (const auto& f : files) {
        const std::string h = sha256_file(out / f);
        hashes[f.generic_string()] = h;
        listing += f.generic_string() + ' ' + h + '\n';
      }
      manifest["files"] = hashes;
      report.manifest_digest = sha256_hex(listing);
      manifest["payload_digest"] = report.manifest_digest;
      std::ofstream m(out / "manifest.json");
      m << manifest.dump(2) << '\n';
      if (!m) throw Error(ErrorKind::IoError, "cannot write manifest");
    });
  }
  return report;
}

}  // namespace carm
