#include "carm/geometry.hpp"

#include <numbers>

#include "carm/error.hpp"

namespace carm {

double deg_to_rad(double deg) noexcept { return deg * (std::numbers::pi / 180.0); }

CArmGeometry::CArmGeometry(double half_sid_mm, std::vector<double> angles_deg, std::size_t nu,
                           std::size_t nv, double pitch_mm)
    : d_(half_sid_mm), angles_(std::move(angles_deg)), nu_(nu), nv_(nv), pitch_(pitch_mm) {
  if (!(d_ > 0.0) || !std::isfinite(d_)) {
    throw Error(ErrorKind::InvalidArgument, "half SID must be positive");
  }
  if (angles_.empty()) {
    throw Error(ErrorKind::InvalidArgument, "at least one view angle is required");
  }
  for (std::size_t k = 0; k < angles_.size(); ++k) {
    if (!std::isfinite(angles_[k])) {
      throw Error(ErrorKind::InvalidArgument, "view angles must be finite");
    }
    if (k > 0 && !(angles_[k] > angles_[k - 1])) {
      throw Error(ErrorKind::InvalidArgument, "view angles must be strictly increasing");
    }
  }
  if (angles_.back() - angles_.front() > 180.0) {
    throw Error(ErrorKind::InvalidSpan, "angular span exceeds 180 degrees");
  }
  if (nu_ < 2 || nv_ < 2) {
    throw Error(ErrorKind::InvalidArgument, "detector needs at least 2x2 pixels");
  }
  if (!(pitch_ > 0.0) || !std::isfinite(pitch_)) {
    throw Error(ErrorKind::InvalidArgument, "detector pitch must be positive");
  }
}

ViewFrame view_frame(double d, double beta_deg) noexcept {
  const double b = deg_to_rad(beta_deg);
  const double c = std::cos(b);
  const double s = std::sin(b);
  ViewFrame f;
  f.source = {d * c, -d * s, 0.0};
  f.detector_center = {-d * c, d * s, 0.0};
  f.e_u = {s, c, 0.0};
  f.e_v = {0.0, 0.0, 1.0};
  f.normal = {c, -s, 0.0};
  f.d = d;
  return f;
}

Point3 source_position(const CArmGeometry& geom, double beta_deg) {
  const double b = deg_to_rad(beta_deg);
  return {geom.d() * std::cos(b), -geom.d() * std::sin(b), 0.0};
}

Point3 detector_point(const CArmGeometry& geom, DetectorCoord uv, double beta_deg) {
  const double d = geom.d();
  const double r = std::hypot(uv.u, d);
  const double alpha = std::atan2(uv.u, d);
  const double angle = deg_to_rad(beta_deg) + alpha;
  return {-r * std::cos(angle), r * std::sin(angle), uv.v};
}

DetectorCoord project_to_detector(const CArmGeometry& geom, Point3 p, double beta_deg) {
  const ViewFrame f = view_frame(geom.d(), beta_deg);
  const Point3 dir = p - f.source;
  const double d = geom.d();
  if (norm(dir) <= 1e-12 * d) {
    throw Error(ErrorKind::DegenerateRay, "point coincides with the source");
  }
  // Detector plane: normal . X = -d. Ray: X = S + t (p - S), with normal . S = d.
  const double denom = dot(f.normal, dir);
  if (std::abs(denom) <= 1e-12 * norm(dir)) {
    throw Error(ErrorKind::DegenerateRay, "ray is parallel to the detector plane");
  }
  const double t = -2.0 * d / denom;
  const Point3 hit = f.source + t * dir;
  const Point3 rel = hit - f.detector_center;
  return {dot(rel, f.e_u), dot(rel, f.e_v)};
}

std::vector<double> view_angles(std::size_t n_views, double span_deg) {
  if (!(span_deg > 0.0) || span_deg > 180.0 || !std::isfinite(span_deg)) {
    throw Error(ErrorKind::InvalidSpan, "span must lie in (0, 180] degrees");
  }
  if (n_views == 0) {
    throw Error(ErrorKind::InvalidArgument, "n_views must be at least 1");
  }
  if (n_views == 1) {
    return {0.0};
  }
  std::vector<double> out(n_views);
  const double step = span_deg / static_cast<double>(n_views - 1);
  for (std::size_t k = 0; k < n_views; ++k) {
    out[k] = -0.5 * span_deg + static_cast<double>(k) * step;
  }
  // Pin the endpoint so the span is exact.
  out.back() = 0.5 * span_deg;
  return out;
}

}  // namespace carm
