#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "carm/volume.hpp"

namespace carm {

struct Profile1D {
  std::vector<double> values;
  double spacing = 1.0;  // mm
  std::size_t center_index = 0;
};

struct Spectrum {
  std::vector<double> frequency;  // mm^-1
  std::vector<double> magnitude;  // 1 at DC
};

struct AsfCurve {
  std::vector<double> plane_offsets;  // mm, 0 at the focus plane
  std::vector<double> values;
};

/// Square region of a y-z plane: |iy - center_y| <= half and |iz - center_z| <= half.
struct PlaneRoi {
  std::size_t center_y = 0;
  std::size_t center_z = 0;
  std::size_t half = 1;
};

/// Row along y of the in-plane slice `plane` (an x index) at height `iz`.
/// `center_iy` is recorded as the profile's center index.
Profile1D line_profile(const VoxelVolume& vol, std::size_t plane, std::size_t iz,
                       std::size_t center_iy);

/// Median of the outer 20% of samples (10% from each end, at least one each).
double profile_background(const Profile1D& p);

/// Full width at half of (max - background), linearly interpolated, in mm.
double fwhm(const Profile1D& p);

/// Background-subtracted, x4 zero-padded magnitude spectrum normalized to 1
/// at DC. Frequencies run from 0 to Nyquist.
Spectrum mtf(const Profile1D& p);

/// Contrast of `feature` (mean) over `background` (median) per x-plane,
/// relative to the focus plane.
AsfCurve asf(const VoxelVolume& vol, std::size_t focus_plane, const PlaneRoi& feature,
             const PlaneRoi& background);

// CSV writers: one header line, then one row per sample.
void write_profile_csv(const Profile1D& p, const std::filesystem::path& path);
void write_mtf_csv(const Spectrum& s, const std::filesystem::path& path);
void write_asf_csv(const AsfCurve& a, const std::filesystem::path& path);

}  // namespace carm
