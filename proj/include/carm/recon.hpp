#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

#include "carm/parallel.hpp"
#include "carm/stack.hpp"
#include "carm/volume.hpp"

namespace carm {

enum class FilterWindow { RampOnly, RampHann };

struct FbpConfig {
  FilterWindow window = FilterWindow::RampHann;
  double cutoff = 1.0;          // fraction of Nyquist, in (0, 1]
  bool cosine_weight = false;   // SID / sqrt(SID^2 + u^2 + v^2) pre-weight

  void validate() const;
};

struct SartConfig {
  std::size_t iterations = 10;
  double lambda0 = 1.0;
  double decay = 0.8;  // lambda_t = lambda0 * decay^t
  bool nonneg = true;

  void validate() const;
};

struct MlemConfig {
  std::size_t iterations = 20;
  std::optional<double> i0;  // incident counts; defaults to the stack's i0
  double floor = 0.0;
  double initial = 0.001;    // uniform starting mu, mm^-1

  void validate() const;
};

/// Called after every completed iteration with its 0-based index.
using IterationObserver = std::function<void(std::size_t, const VoxelVolume&)>;

/// Unfiltered backprojection: per voxel, the mean of the interpolated view
/// values over the views in which the voxel is visible.
VoxelVolume bp_reconstruct(const ProjectionStack& stack, const GridSpec& grid, Exec exec = {});

/// Frequency response over the full padded FFT length (next power of two
/// >= 2 nu). Bin k has frequency min(k, n-k)/n cycles per sample; the
/// response is |f| below cutoff * Nyquist (times a Hann taper for
/// RampHann) and zero above it.
std::vector<double> build_filter(std::size_t nu, const FbpConfig& cfg);

/// Filters every detector row with `build_filter` (edge-replicated padding)
/// and returns the filtered line-integral stack.
ProjectionStack filter_projections(const ProjectionStack& line_integrals, const FbpConfig& cfg,
                                   Exec exec = {});

/// Log-normalizes intensity input, ramp-filters rows along u, then
/// backprojects and averages like bp_reconstruct.
VoxelVolume fbp_reconstruct(const ProjectionStack& stack, const GridSpec& grid,
                            const FbpConfig& cfg = {}, Exec exec = {});

/// View-by-view SART. Each view update adds lambda_t times the
/// ray-length-normalized residual, backprojected with the ray weights and
/// divided by the per-voxel weight sum of that view.
VoxelVolume sart_reconstruct(const ProjectionStack& stack, const GridSpec& grid,
                             const SartConfig& cfg = {},
                             const std::optional<VoxelVolume>& initial = std::nullopt,
                             Exec exec = {}, const IterationObserver& observer = {});

/// Convex transmission ML-EM on detected counts:
///   mu_j += mu_j * sum_i w_ij (yhat_i - O_i) / sum_i w_ij l_i yhat_i
/// with l_i = sum_j w_ij mu_j and yhat_i = I_i exp(-l_i).
VoxelVolume mlem_reconstruct(const ProjectionStack& stack, const GridSpec& grid,
                             const MlemConfig& cfg = {},
                             const std::optional<VoxelVolume>& initial = std::nullopt,
                             Exec exec = {}, const IterationObserver& observer = {});

}  // namespace carm
