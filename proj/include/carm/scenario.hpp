#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "carm/config.hpp"
#include "carm/metrics.hpp"
#include "carm/parallel.hpp"
#include "carm/volume.hpp"

namespace carm {

struct RunOptions {
  std::optional<Stage> stage;              // overrides the config's stage
  std::optional<std::uint64_t> seed;       // overrides [scenario] seed
  std::optional<std::size_t> views;        // overrides [geometry] n_views
  std::vector<std::string> algorithms;     // overrides the [recon.*] selection
  std::optional<std::filesystem::path> volume_input;  // `project` source volume
  std::filesystem::path out_dir = "out";
  unsigned threads = 1;
};

/// Where the metrics were taken: voxel indices of the target on the grid.
struct TargetIndex {
  std::size_t plane = 0;  // x
  std::size_t iy = 0;
  std::size_t iz = 0;
};

struct AlgorithmSummary {
  std::optional<double> fwhm_mm;
  std::size_t peak_iy = 0;              // in-plane argmax on the focus plane
  std::size_t peak_iz = 0;
  double peak_offset_voxels = 0.0;      // distance of that argmax from the target
  double argmax_offset_voxels = 0.0;    // same for the 3D argmax
  double background = 0.0;              // profile background
  double peak_contrast = 0.0;           // profile max - background
  double annulus_min = 0.0;             // profile min over 1..3 mm from the target
  std::optional<double> mean_far_asf;   // mean ASF over |offset| >= 5 mm
};

struct RunReport {
  std::filesystem::path out_dir;
  TargetIndex target;
  std::map<std::string, AlgorithmSummary> summaries;
  std::string manifest_digest;  // empty unless the `all` stage wrote a manifest
};

/// Canonical text form of a config (after overrides); hashed into the manifest.
std::string canonical_config(const ScenarioConfig& cfg);

TargetIndex locate_target(const ScenarioConfig& cfg);
AlgorithmSummary summarize(const VoxelVolume& vol, const TargetIndex& target,
                           const ScenarioConfig& cfg);

/// Runs the requested pipeline stage(s), reading and writing artifacts under
/// `opts.out_dir`:
///   stacks/line_integral, stacks/counts, stacks/rdm_line_integral,
///   volumes/truth, volumes/<alg>, metrics/<alg>_{profile,mtf,asf}.csv,
///   metrics/summary.json, slices/<name>.pgm, manifest.json.
/// Failures are rethrown as Error with the stage name prefixed.
RunReport run_scenario(ScenarioConfig cfg, const RunOptions& opts);

}  // namespace carm
