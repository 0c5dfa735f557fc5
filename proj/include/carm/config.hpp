#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "carm/geometry.hpp"
#include "carm/phantom.hpp"
#include "carm/recon.hpp"
#include "carm/volume.hpp"

namespace carm {

enum class Stage { Simulate, Project, Reconstruct, Metrics, Export, All };

const char* to_string(Stage stage) noexcept;
Stage parse_stage(std::string_view name);

enum class PhantomPreset { Sphere, Kidney, File };

/// Scenario file contents. The file is INI-style text:
///
///   [scenario]     name, stage, seed
///   [geometry]     d_mm, n_views, span_deg, nu, nv, pitch_mm
///   [phantom]      preset (sphere | kidney | file), radius_mm, mu, center_mm, file
///   [acquisition]  i0, noise
///   [grid]         nx, ny, nz, spacing_mm, center_mm
///   [recon.bp]     (no keys)
///   [recon.fbp]    window (ramp_only | ramp_hann), cutoff, cosine_weight
///   [recon.sart]   iterations, lambda0, decay, nonneg
///   [recon.mlem]   iterations, initial, floor
///   [metrics]      object_center_mm, feature_half, background_offset_mm,
///                  background_half, window_lo, window_hi
///
/// A [recon.*] section enables that algorithm. Unknown sections or keys,
/// duplicates, and malformed values are ConfigError with the line number.
struct ScenarioConfig {
  std::string name = "scenario";
  Stage stage = Stage::All;
  std::uint64_t seed = 1;

  double d_mm = 440.0;
  std::size_t n_views = 25;
  double span_deg = 40.0;
  std::size_t nu = 256;
  std::size_t nv = 256;
  double pitch_mm = 0.24;

  PhantomPreset preset = PhantomPreset::Sphere;
  double sphere_radius_mm = 1.0;
  double sphere_mu = 0.01;
  Point3 sphere_center;
  std::filesystem::path phantom_file;

  double i0 = 1e5;
  bool noise = false;

  std::size_t nx = 128;
  std::size_t ny = 128;
  std::size_t nz = 64;
  double spacing_mm = 0.12;
  Point3 grid_center;  // box center; the isocenter by default

  bool run_bp = false;
  bool run_fbp = false;
  bool run_sart = false;
  bool run_mlem = false;
  FbpConfig fbp;
  SartConfig sart;
  MlemConfig mlem;

  std::optional<Point3> object_center;
  std::size_t feature_half = 1;
  double background_offset_mm = 5.0;
  std::size_t background_half = 4;
  std::optional<double> window_lo;
  std::optional<double> window_hi;

  CArmGeometry geometry() const;
  GridSpec grid() const;
  EllipsoidPhantom phantom() const;
  /// Metrics target: configured center, else the sphere center or the first
  /// embedded stone.
  Point3 target() const;
  std::vector<std::string> algorithms() const;
};

/// Parses scenario text. Relative phantom file paths resolve against `base_dir`.
ScenarioConfig parse_config(std::string_view text, const std::filesystem::path& base_dir = {});
ScenarioConfig load_config(const std::filesystem::path& path);

}  // namespace carm
