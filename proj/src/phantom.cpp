#include "carm/phantom.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "carm/error.hpp"
#include "carm/rng.hpp"

namespace carm {

bool Ellipsoid::contains(Point3 p) const noexcept {
  const double qx = (p.x - center.x) / a;
  const double qy = (p.y - center.y) / b;
  const double qz = (p.z - center.z) / c;
  return qx * qx + qy * qy + qz * qz <= 1.0;
}

double EllipsoidPhantom::mu_at(Point3 p) const noexcept {
  double mu = 0.0;
  for (const auto& e : ellipsoids) {
    if (e.contains(p)) mu += e.mu;
  }
  return mu;
}

void EllipsoidPhantom::validate() const {
  if (ellipsoids.empty()) {
    throw Error(ErrorKind::InvalidArgument, "phantom has no ellipsoids");
  }
  for (const auto& e : ellipsoids) {
    if (!(e.a > 0.0 && e.b > 0.0 && e.c > 0.0)) {
      throw Error(ErrorKind::InvalidArgument, "ellipsoid semi-axes must be positive");
    }
    if (!std::isfinite(e.mu) || !std::isfinite(e.center.x) || !std::isfinite(e.center.y) ||
        !std::isfinite(e.center.z)) {
      throw Error(ErrorKind::InvalidArgument, "ellipsoid fields must be finite");
    }
  }
  for (const auto& e : ellipsoids) {
    if (mu_at(e.center) < 0.0) {
      throw Error(ErrorKind::InvalidArgument, "net attenuation is negative inside the phantom");
    }
  }
}

EllipsoidPhantom sphere_phantom(double radius_mm, double mu, Point3 center) {
  EllipsoidPhantom ph{{Ellipsoid{center, radius_mm, radius_mm, radius_mm, mu}}};
  ph.validate();
  return ph;
}

EllipsoidPhantom kidney_phantom() {
  // Kidney body offset 30 mm toward the central-view detector (-x). The
  // stones add to the tissue value so their net mu is 0.25 mm^-1.
  constexpr double tissue = 0.025;
  constexpr double stone = 0.25;
  EllipsoidPhantom ph{{
      Ellipsoid{{-30.0, 0.0, 0.0}, 30.0, 55.0, 30.0, tissue},
      Ellipsoid{{-25.0, -15.0, 6.0}, 3.0, 3.0, 3.0, stone - tissue},
      Ellipsoid{{-36.0, 18.0, -8.0}, 5.0, 5.0, 5.0, stone - tissue},
  }};
  ph.validate();
  return ph;
}

double chord_length(const Ellipsoid& e, Point3 p0, Point3 p1) noexcept {
  const Point3 dir = p1 - p0;
  const double len = norm(dir);
  if (len == 0.0) return 0.0;
  // Map to the unit sphere and solve |q0 + t dq|^2 = 1 for t in [0, 1].
  const Point3 q0{(p0.x - e.center.x) / e.a, (p0.y - e.center.y) / e.b, (p0.z - e.center.z) / e.c};
  const Point3 dq{dir.x / e.a, dir.y / e.b, dir.z / e.c};
  const double qa = dot(dq, dq);
  const double qb = dot(q0, dq);
  const double qc = dot(q0, q0) - 1.0;
  const double disc = qb * qb - qa * qc;
  if (disc <= 0.0) return 0.0;
  const double root = std::sqrt(disc);
  const double t0 = std::max((-qb - root) / qa, 0.0);
  const double t1 = std::min((-qb + root) / qa, 1.0);
  return t1 > t0 ? (t1 - t0) * len : 0.0;
}

ProjectionStack forward_project_analytic(const EllipsoidPhantom& ph, const CArmGeometry& geom,
                                         Exec exec) {
  ph.validate();
  ProjectionStack out(geom, Domain::LineIntegral);
  const std::size_t nv = geom.nv();
  const std::size_t nu = geom.nu();
  parallel_for(geom.n_views() * nv, exec, [&](std::size_t begin, std::size_t end) {
    for (std::size_t row = begin; row < end; ++row) {
      const std::size_t k = row / nv;
      const std::size_t iv = row % nv;
      const ViewFrame f = view_frame(geom.d(), geom.angles()[k]);
      for (std::size_t iu = 0; iu < nu; ++iu) {
        const Point3 pixel = f.detector_point(geom.pixel_center(iu, iv));
        double sum = 0.0;
        for (const auto& e : ph.ellipsoids) {
          sum += e.mu * chord_length(e, f.source, pixel);
        }
        out.at(k, iv, iu) = sum;
      }
    }
  });
  return out;
}

ProjectionStack to_intensity(const ProjectionStack& line_integrals, double i0,
                             std::optional<std::uint64_t> seed, Exec exec) {
  if (line_integrals.domain() != Domain::LineIntegral) {
    throw Error(ErrorKind::DomainMismatch, "to_intensity expects a line-integral stack");
  }
  if (!(i0 > 0.0) || !std::isfinite(i0)) {
    throw Error(ErrorKind::InvalidArgument, "i0 must be positive");
  }
  const CArmGeometry& geom = line_integrals.geometry();
  ProjectionStack out(geom, Domain::Intensity, i0);
  const std::size_t nv = geom.nv();
  const std::size_t nu = geom.nu();
  parallel_for(geom.n_views() * nv, exec, [&](std::size_t begin, std::size_t end) {
    for (std::size_t row = begin; row < end; ++row) {
      const std::size_t k = row / nv;
      const std::size_t iv = row % nv;
      for (std::size_t iu = 0; iu < nu; ++iu) {
        const double expected = i0 * std::exp(-line_integrals.at(k, iv, iu));
        if (seed) {
          CounterRng rng(*seed, k, iv, iu);
          out.at(k, iv, iu) = static_cast<double>(sample_poisson(expected, rng));
        } else {
          out.at(k, iv, iu) = expected;
        }
      }
    }
  });
  return out;
}

VoxelVolume voxelize(const EllipsoidPhantom& ph, const GridSpec& grid, bool supersample) {
  ph.validate();
  VoxelVolume vol(grid);
  const double q = 0.25 * grid.spacing;
  for (std::size_t ix = 0; ix < grid.nx; ++ix) {
    for (std::size_t iy = 0; iy < grid.ny; ++iy) {
      for (std::size_t iz = 0; iz < grid.nz; ++iz) {
        const Point3 p = grid.center(ix, iy, iz);
        if (!supersample) {
          vol.at(ix, iy, iz) = ph.mu_at(p);
          continue;
        }
        double sum = 0.0;
        for (int corner = 0; corner < 8; ++corner) {
          const Point3 offset{(corner & 1) ? q : -q, (corner & 2) ? q : -q, (corner & 4) ? q : -q};
          sum += ph.mu_at(p + offset);
        }
        vol.at(ix, iy, iz) = sum / 8.0;
      }
    }
  }
  return vol;
}

EllipsoidPhantom parse_phantom(std::string_view text) {
  static constexpr std::array<const char*, 7> kKeys{"cx", "cy", "cz", "a", "b", "c", "mu"};
  EllipsoidPhantom ph;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream tokens(line);
    std::map<std::string, double> fields;
    std::string token;
    while (tokens >> token) {
      const auto eq = token.find('=');
      const std::string where = "phantom line " + std::to_string(line_no);
      if (eq == std::string::npos) {
        throw Error(ErrorKind::ConfigError, where + ": expected key=value, got '" + token + "'");
      }
      const std::string key = token.substr(0, eq);
      if (std::find(kKeys.begin(), kKeys.end(), key) == kKeys.end()) {
        throw Error(ErrorKind::ConfigError, where + ": unknown key '" + key + "'");
      }
      if (fields.contains(key)) {
        throw Error(ErrorKind::ConfigError, where + ": duplicate key '" + key + "'");
      }
      const std::string value = token.substr(eq + 1);
      std::size_t used = 0;
      double parsed = 0.0;
      try {
        parsed = std::stod(value, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != value.size() || value.empty()) {
        throw Error(ErrorKind::ConfigError, where + ": '" + key + "' is not a number");
      }
      fields[key] = parsed;
    }
    if (fields.empty()) continue;
    for (const char* key : kKeys) {
      if (!fields.contains(key)) {
        throw Error(ErrorKind::ConfigError,
                    "phantom line " + std::to_string(line_no) + ": missing key '" + key + "'");
      }
    }
    ph.ellipsoids.push_back(Ellipsoid{{fields["cx"], fields["cy"], fields["cz"]},
                                      fields["a"],
                                      fields["b"],
                                      fields["c"],
                                      fields["mu"]});
  }
  try {
    ph.validate();
  } catch (const Error& e) {
    throw Error(ErrorKind::ConfigError, std::string("phantom: ") + e.what());
  }
  return ph;
}

EllipsoidPhantom read_phantom_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open phantom file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_phantom(buffer.str());
}

std::string format_phantom(const EllipsoidPhantom& ph) {
  std::ostringstream out;
  out << std::setprecision(17);
  for (const auto& e : ph.ellipsoids) {
    out << "cx=" << e.center.x << " cy=" << e.center.y << " cz=" << e.center.z << " a=" << e.a
        << " b=" << e.b << " c=" << e.c << " mu=" << e.mu << '\n';
  }
  return out.str();
}

}  // namespace carm
