#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "carm/stack.hpp"
#include "carm/volume.hpp"

namespace carm {

// On-disk layout: `<base>.json` holds the metadata sidecar and `<base>.raw`
// the payload of little-endian 32-bit floats.
//
// Stack sidecar keys: version, dtype ("f32le"), n_views, nu, nv, pitch_mm,
// d_mm, angles_deg, domain ("intensity" | "line_integral"), i0 (null for
// line integrals). Payload is view-major, then v rows of nu columns.
//
// Volume sidecar keys: version, dtype, nx, ny, nz, spacing_mm, origin_mm.
// Payload is x-major: y-z planes, each y rows of nz values.
inline constexpr int kFileVersion = 1;

void write_stack(const ProjectionStack& stack, const std::filesystem::path& base);
ProjectionStack read_stack(const std::filesystem::path& base);

void write_volume(const VoxelVolume& vol, const std::filesystem::path& base);
VoxelVolume read_volume(const std::filesystem::path& base);

/// 16-bit binary PGM (P5, maxval 65535) of the y-z plane at x index `plane`.
/// Image columns follow y, rows follow z from top (+z) to bottom. Gray level
/// is floor((clamp(x, lo, hi) - lo) / (hi - lo) * 65535 + 0.5).
void export_slice_pgm(const VoxelVolume& vol, std::size_t plane, double lo, double hi,
                      const std::filesystem::path& path);

/// Gray level used by export_slice_pgm for a single value.
std::uint16_t window_level(double x, double lo, double hi) noexcept;

/// Lowercase hex SHA-256 of a byte string / of a file's contents.
std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::filesystem::path& path);

std::filesystem::path sidecar_path(const std::filesystem::path& base);
std::filesystem::path payload_path(const std::filesystem::path& base);

}  // namespace carm
