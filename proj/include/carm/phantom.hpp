#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "carm/geometry.hpp"
#include "carm/parallel.hpp"
#include "carm/stack.hpp"
#include "carm/volume.hpp"

namespace carm {

/// Axis-aligned ellipsoid. `mu` (mm^-1) is added to whatever else covers
/// the same point, so nested ellipsoids build up piecewise-constant objects.
struct Ellipsoid {
  Point3 center;
  double a = 1.0;
  double b = 1.0;
  double c = 1.0;
  double mu = 0.0;

  bool contains(Point3 p) const noexcept;
};

struct EllipsoidPhantom {
  std::vector<Ellipsoid> ellipsoids;

  /// Throws InvalidArgument on an empty list, non-positive semi-axes,
  /// non-finite mu, or negative net attenuation at any ellipsoid center.
  void validate() const;
  double mu_at(Point3 p) const noexcept;
};

EllipsoidPhantom sphere_phantom(double radius_mm, double mu, Point3 center = {});

/// Soft-tissue ellipsoid with two dense spheres, placed toward the detector.
EllipsoidPhantom kidney_phantom();

/// Length (mm) of the segment p0 -> p1 inside `e`; 0 when it misses.
double chord_length(const Ellipsoid& e, Point3 p0, Point3 p1) noexcept;

/// Exact line integrals along the ray from the source to every pixel center.
ProjectionStack forward_project_analytic(const EllipsoidPhantom& ph, const CArmGeometry& geom,
                                         Exec exec = {});

/// Beer-Lambert conversion I = i0 * exp(-A). With a seed, each pixel is a
/// Poisson draw from its own counter-based stream keyed on
/// (seed, view, row, column), so the result does not depend on scheduling.
ProjectionStack to_intensity(const ProjectionStack& line_integrals, double i0,
                             std::optional<std::uint64_t> seed = std::nullopt, Exec exec = {});

/// Net mu sampled at voxel centers, or averaged over the 8 points at
/// (+-s/4, +-s/4, +-s/4) around each center when `supersample` is set.
VoxelVolume voxelize(const EllipsoidPhantom& ph, const GridSpec& grid, bool supersample = false);

// Phantom description text: one ellipsoid per line as whitespace-separated
// key=value pairs with keys cx cy cz a b c mu; '#' starts a comment.
EllipsoidPhantom parse_phantom(std::string_view text);
EllipsoidPhantom read_phantom_file(const std::filesystem::path& path);
std::string format_phantom(const EllipsoidPhantom& ph);

}  // namespace carm
