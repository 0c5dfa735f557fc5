#include "carm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>

#include "carm/error.hpp"
#include "carm/fft.hpp"

namespace carm {

namespace {

double median(std::vector<double> v) {
  const std::size_t n = v.size();
  std::nth_element(v.begin(), v.begin() + n / 2, v.end());
  const double hi = v[n / 2];
  if (n % 2 == 1) return hi;
  const double lo = *std::max_element(v.begin(), v.begin() + n / 2);
  return 0.5 * (lo + hi);
}

void check_profile(const Profile1D& p, std::size_t min_len) {
  if (p.values.size() < min_len) {
    throw Error(ErrorKind::InvalidArgument,
                "profile needs at least " + std::to_string(min_len) + " samples");
  }
  if (!(p.spacing > 0.0)) throw Error(ErrorKind::InvalidArgument, "profile spacing must be > 0");
}

}  // namespace

Profile1D line_profile(const VoxelVolume& vol, std::size_t plane, std::size_t iz,
                       std::size_t center_iy) {
  const GridSpec& g = vol.grid();
  if (plane >= g.nx || iz >= g.nz || center_iy >= g.ny) {
    throw Error(ErrorKind::OutOfBounds, "profile indices outside the volume");
  }
  Profile1D p;
  p.spacing = g.spacing;
  p.center_index = center_iy;
  p.values.resize(g.ny);
  for (std::size_t iy = 0; iy < g.ny; ++iy) p.values[iy] = vol.at(plane, iy, iz);
  return p;
}

double profile_background(const Profile1D& p) {
  check_profile(p, 3);
  const std::size_t n = p.values.size();
  const std::size_t edge = std::max<std::size_t>(1, n / 10);
  std::vector<double> outer(p.values.begin(), p.values.begin() + edge);
  outer.insert(outer.end(), p.values.end() - edge, p.values.end());
  return median(std::move(outer));
}

double fwhm(const Profile1D& p) {
  const double bg = profile_background(p);
  const auto& v = p.values;
  const std::size_t peak = std::max_element(v.begin(), v.end()) - v.begin();
  if (!(v[peak] > bg)) throw Error(ErrorKind::NoPeak, "profile maximum is not above background");
  const double half = bg + 0.5 * (v[peak] - bg);

  double left = 0.0;
  std::size_t i = peak;
  while (i > 0 && v[i - 1] >= half) --i;
  if (i == 0) {
    left = 0.0;
  } else {
    left = static_cast<double>(i - 1) + (half - v[i - 1]) / (v[i] - v[i - 1]);
  }
  double right = static_cast<double>(v.size() - 1);
  std::size_t j = peak;
  while (j + 1 < v.size() && v[j + 1] >= half) ++j;
  if (j + 1 < v.size()) {
    right = static_cast<double>(j) + (v[j] - half) / (v[j] - v[j + 1]);
  }
  return (right - left) * p.spacing;
}

Spectrum mtf(const Profile1D& p) {
  check_profile(p, 8);
  const double bg = profile_background(p);
  const std::size_t n = p.values.size();
  const std::size_t padded = 4 * n;
  const RealFft fft(padded);
  RealFft::Buffers buf = fft.make_buffers();
  bool any = false;
  for (std::size_t i = 0; i < padded; ++i) {
    buf.real[i] = i < n ? p.values[i] - bg : 0.0;
    if (i < n && buf.real[i] != 0.0) any = true;
  }
  if (!any) throw Error(ErrorKind::ZeroSignal, "profile equals its background everywhere");
  fft.forward(buf);
  double peak = 0.0;
  for (std::size_t k = 0; k < fft.bins(); ++k) peak = std::max(peak, std::abs(buf.spectrum[k]));
  const double dc = std::abs(buf.spectrum[0]);
  if (!(dc > 1e-12 * peak)) {
    throw Error(ErrorKind::ZeroSignal, "profile has no DC response to normalize by");
  }
  Spectrum s;
  s.frequency.resize(fft.bins());
  s.magnitude.resize(fft.bins());
  for (std::size_t k = 0; k < fft.bins(); ++k) {
    s.frequency[k] = static_cast<double>(k) / (static_cast<double>(padded) * p.spacing);
    s.magnitude[k] = std::abs(buf.spectrum[k]) / dc;
  }
  s.magnitude[0] = 1.0;
  return s;
}

AsfCurve asf(const VoxelVolume& vol, std::size_t focus_plane, const PlaneRoi& feature,
             const PlaneRoi& background) {
  const GridSpec& g = vol.grid();
  auto check_roi = [&](const PlaneRoi& roi) {
    if (roi.center_y < roi.half || roi.center_z < roi.half || roi.center_y + roi.half >= g.ny ||
        roi.center_z + roi.half >= g.nz) {
      throw Error(ErrorKind::OutOfBounds, "ROI extends outside the slice");
    }
  };
  if (focus_plane >= g.nx) throw Error(ErrorKind::OutOfBounds, "focus plane outside the volume");
  check_roi(feature);
  check_roi(background);

  auto roi_values = [&](std::size_t ix, const PlaneRoi& roi) {
    std::vector<double> out;
    for (std::size_t iy = roi.center_y - roi.half; iy <= roi.center_y + roi.half; ++iy) {
      for (std::size_t iz = roi.center_z - roi.half; iz <= roi.center_z + roi.half; ++iz) {
        out.push_back(vol.at(ix, iy, iz));
      }
    }
    return out;
  };
  auto contrast = [&](std::size_t ix) {
    const auto f = roi_values(ix, feature);
    double mean = 0.0;
    for (double x : f) mean += x;
    mean /= static_cast<double>(f.size());
    return mean - median(roi_values(ix, background));
  };

  const double focus = contrast(focus_plane);
  double scale = 0.0;
  for (double x : vol.data()) scale = std::max(scale, std::abs(x));
  if (!(std::abs(focus) >= 1e-12 * std::max(scale, 1e-300))) {
    throw Error(ErrorKind::DegenerateContrast, "focus-plane contrast is zero");
  }
  AsfCurve out;
  for (std::size_t ix = 0; ix < g.nx; ++ix) {
    out.plane_offsets.push_back((static_cast<double>(ix) - static_cast<double>(focus_plane)) *
                                g.spacing);
    out.values.push_back(ix == focus_plane ? 1.0 : contrast(ix) / focus);
  }
  return out;
}

namespace {

void write_csv(const std::filesystem::path& path, const char* header,
               const std::vector<double>& x, const std::vector<double>& y) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  out << header << '\n' << std::setprecision(10);
  for (std::size_t i = 0; i < x.size(); ++i) out << x[i] << ',' << y[i] << '\n';
  if (!out) throw Error(ErrorKind::IoError, "write failed for " + path.string());
}

}  // namespace

void write_profile_csv(const Profile1D& p, const std::filesystem::path& path) {
  std::vector<double> pos(p.values.size());
  for (std::size_t i = 0; i < pos.size(); ++i) {
    pos[i] = (static_cast<double>(i) - static_cast<double>(p.center_index)) * p.spacing;
  }
  write_csv(path, "position_mm,value", pos, p.values);
}

void write_mtf_csv(const Spectrum& s, const std::filesystem::path& path) {
  write_csv(path, "frequency_per_mm,mtf", s.frequency, s.magnitude);
}

void write_asf_csv(const AsfCurve& a, const std::filesystem::path& path) {
  write_csv(path, "offset_mm,asf", a.plane_offsets, a.values);
}

}  // namespace carm
