#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace carm {

struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  friend Point3 operator+(Point3 a, Point3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend Point3 operator-(Point3 a, Point3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend Point3 operator*(double s, Point3 a) { return {s * a.x, s * a.y, s * a.z}; }
  friend bool operator==(const Point3&, const Point3&) = default;
};

inline double dot(Point3 a, Point3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Point3 cross(Point3 a, Point3 b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(Point3 a) { return std::sqrt(dot(a, a)); }

/// Signed detector-plane coordinates in mm; (0,0) is the detector center.
/// u runs perpendicular to the rotation axis, v parallel to it.
struct DetectorCoord {
  double u = 0.0;
  double v = 0.0;
};

/// Partial-circle C-arm acquisition. Source and detector center sit at
/// distance `d` on opposite sides of the isocenter, so the SID is 2d.
/// Angles are in degrees and strictly increasing.
class CArmGeometry {
 public:
  CArmGeometry(double half_sid_mm, std::vector<double> angles_deg, std::size_t nu,
               std::size_t nv, double pitch_mm);

  double d() const noexcept { return d_; }
  double sid() const noexcept { return 2.0 * d_; }
  const std::vector<double>& angles() const noexcept { return angles_; }
  std::size_t n_views() const noexcept { return angles_.size(); }
  std::size_t nu() const noexcept { return nu_; }
  std::size_t nv() const noexcept { return nv_; }
  double pitch() const noexcept { return pitch_; }

  /// Center of detector pixel (iu, iv).
  DetectorCoord pixel_center(std::size_t iu, std::size_t iv) const noexcept {
    return {(static_cast<double>(iu) - 0.5 * static_cast<double>(nu_ - 1)) * pitch_,
            (static_cast<double>(iv) - 0.5 * static_cast<double>(nv_ - 1)) * pitch_};
  }

  // Continuous pixel index of a detector coordinate (pixel centers are integers).
  double column_of(double u) const noexcept { return u / pitch_ + 0.5 * static_cast<double>(nu_ - 1); }
  double row_of(double v) const noexcept { return v / pitch_ + 0.5 * static_cast<double>(nv_ - 1); }

  std::size_t pixels_per_view() const noexcept { return nu_ * nv_; }

  friend bool operator==(const CArmGeometry&, const CArmGeometry&) = default;

 private:
  double d_;
  std::vector<double> angles_;
  std::size_t nu_;
  std::size_t nv_;
  double pitch_;
};

/// Orthonormal frame of one view: source, detector center, in-plane detector
/// axes and the unit normal pointing from the detector toward the source.
struct ViewFrame {
  Point3 source;
  Point3 detector_center;
  Point3 e_u;
  Point3 e_v;
  Point3 normal;
  double d;

  Point3 detector_point(DetectorCoord uv) const noexcept {
    return detector_center + uv.u * e_u + uv.v * e_v;
  }
};

ViewFrame view_frame(double d, double beta_deg) noexcept;

Point3 source_position(const CArmGeometry& geom, double beta_deg);

/// World position of detector location `uv` at view angle `beta_deg`,
/// evaluated through the polar (r, alpha) form of the C-arm detector.
Point3 detector_point(const CArmGeometry& geom, DetectorCoord uv, double beta_deg);

/// Central projection of `p` from the source onto the detector plane.
/// Throws DegenerateRay when p is at the source or the ray is parallel to
/// the detector plane.
DetectorCoord project_to_detector(const CArmGeometry& geom, Point3 p, double beta_deg);

/// `n_views` evenly spaced angles centered on zero with inclusive endpoints.
std::vector<double> view_angles(std::size_t n_views, double span_deg);

double deg_to_rad(double deg) noexcept;

}  // namespace carm
