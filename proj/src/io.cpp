#include "carm/io.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <cstring>
#include <memory>
#include <span>
#include "json.hpp"
#include <sstream>

#include "carm/error.hpp"

namespace carm {

using nlohmann::json;

std::filesystem::path sidecar_path(const std::filesystem::path& base) {
  auto p = base;
  if (p.extension() == ".json" || p.extension() == ".raw") p.replace_extension();
  p += ".json";
  return p;
}

std::filesystem::path payload_path(const std::filesystem::path& base) {
  auto p = base;
  if (p.extension() == ".json" || p.extension() == ".raw") p.replace_extension();
  p += ".raw";
  return p;
}

namespace {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

std::uint32_t to_le(std::uint32_t x) {
  if constexpr (std::endian::native == std::endian::little) {
    return x;
  } else {
    return ((x & 0xffu) << 24) | ((x & 0xff00u) << 8) | ((x >> 8) & 0xff00u) | (x >> 24);
  }
}

void write_payload(std::span<const double> values, const std::filesystem::path& path) {
  std::string bytes(values.size() * 4, '\0');
  for (std::size_t i = 0; i < values.size(); ++i) {
    const std::uint32_t le = to_le(std::bit_cast<std::uint32_t>(static_cast<float>(values[i])));
    std::memcpy(bytes.data() + 4 * i, &le, 4);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::IoError, "write failed for " + path.string());
}

void read_payload(const std::filesystem::path& path, std::span<double> values) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() != values.size() * 4) {
    throw Error(ErrorKind::SizeMismatch, path.string() + ": payload has " +
                                             std::to_string(bytes.size()) + " bytes, expected " +
                                             std::to_string(values.size() * 4));
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::uint32_t le = 0;
    std::memcpy(&le, bytes.data() + 4 * i, 4);
    values[i] = static_cast<double>(std::bit_cast<float>(to_le(le)));
  }
}

void write_json(const json& j, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::IoError, path.string() + ": " + e.what());
  }
}

const json& field(const json& j, const char* key) {
  if (!j.contains(key)) throw Error(ErrorKind::MissingField, std::string("sidecar lacks '") + key + "'");
  return j.at(key);
}

template <typename T>
T get(const json& j, const char* key) {
  try {
    return field(j, key).get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorKind::MissingField, std::string("sidecar field '") + key + "' has the wrong type");
  }
}

void check_header(const json& j) {
  const int version = get<int>(j, "version");
  if (version != kFileVersion) {
    throw Error(ErrorKind::UnsupportedVersion, "sidecar version " + std::to_string(version));
  }
  if (get<std::string>(j, "dtype") != "f32le") {
    throw Error(ErrorKind::UnsupportedVersion, "only dtype f32le is supported");
  }
}

}  // namespace

void write_stack(const ProjectionStack& stack, const std::filesystem::path& base) {
  const CArmGeometry& g = stack.geometry();
  json j;
  j["version"] = kFileVersion;
  j["dtype"] = "f32le";
  j["n_views"] = g.n_views();
  j["nu"] = g.nu();
  j["nv"] = g.nv();
  j["pitch_mm"] = g.pitch();
  j["d_mm"] = g.d();
  j["angles_deg"] = g.angles();
  j["domain"] = to_string(stack.domain());
  j["i0"] = stack.i0() ? json(*stack.i0()) : json(nullptr);
  write_json(j, sidecar_path(base));
  write_payload(stack.data(), payload_path(base));
}

ProjectionStack read_stack(const std::filesystem::path& base) {
  const json j = read_json(sidecar_path(base));
  check_header(j);
  const auto n_views = get<std::size_t>(j, "n_views");
  auto angles = get<std::vector<double>>(j, "angles_deg");
  if (angles.size() != n_views) {
    throw Error(ErrorKind::SizeMismatch, "angles_deg length differs from n_views");
  }
  const std::string domain = get<std::string>(j, "domain");
  std::optional<double> i0;
  const json& i0_field = field(j, "i0");
  if (!i0_field.is_null()) i0 = get<double>(j, "i0");
  Domain dom;
  if (domain == "intensity") {
    dom = Domain::Intensity;
  } else if (domain == "line_integral") {
    dom = Domain::LineIntegral;
  } else {
    throw Error(ErrorKind::MissingField, "unknown domain '" + domain + "'");
  }
  CArmGeometry geom(get<double>(j, "d_mm"), std::move(angles), get<std::size_t>(j, "nu"),
                    get<std::size_t>(j, "nv"), get<double>(j, "pitch_mm"));
  ProjectionStack stack(std::move(geom), dom, i0);
  read_payload(payload_path(base), stack.data());
  return stack;
}

void write_volume(const VoxelVolume& vol, const std::filesystem::path& base) {
  const GridSpec& g = vol.grid();
  json j;
  j["version"] = kFileVersion;
  j["dtype"] = "f32le";
  j["nx"] = g.nx;
  j["ny"] = g.ny;
  j["nz"] = g.nz;
  j["spacing_mm"] = g.spacing;
  j["origin_mm"] = {g.origin.x, g.origin.y, g.origin.z};
  write_json(j, sidecar_path(base));
  write_payload(vol.data(), payload_path(base));
}

VoxelVolume read_volume(const std::filesystem::path& base) {
  const json j = read_json(sidecar_path(base));
  check_header(j);
  GridSpec g;
  g.nx = get<std::size_t>(j, "nx");
  g.ny = get<std::size_t>(j, "ny");
  g.nz = get<std::size_t>(j, "nz");
  g.spacing = get<double>(j, "spacing_mm");
  const auto origin = get<std::vector<double>>(j, "origin_mm");
  if (origin.size() != 3) throw Error(ErrorKind::MissingField, "origin_mm needs 3 components");
  g.origin = {origin[0], origin[1], origin[2]};
  VoxelVolume vol(g);
  read_payload(payload_path(base), vol.data());
  return vol;
}

std::uint16_t window_level(double x, double lo, double hi) noexcept {
  const double t = (std::clamp(x, lo, hi) - lo) / (hi - lo);
  return static_cast<std::uint16_t>(std::floor(t * 65535.0 + 0.5));
}

void export_slice_pgm(const VoxelVolume& vol, std::size_t plane, double lo, double hi,
                      const std::filesystem::path& path) {
  const GridSpec& g = vol.grid();
  if (plane >= g.nx) throw Error(ErrorKind::OutOfBounds, "slice index outside the volume");
  if (!(lo < hi)) throw Error(ErrorKind::InvalidArgument, "window needs lo < hi");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  out << "P5\n" << g.ny << ' ' << g.nz << "\n65535\n";
  std::string row(2 * g.ny, '\0');
  for (std::size_t r = 0; r < g.nz; ++r) {
    const std::size_t iz = g.nz - 1 - r;
    for (std::size_t iy = 0; iy < g.ny; ++iy) {
      const std::uint16_t level = window_level(vol.at(plane, iy, iz), lo, hi);
      row[2 * iy] = static_cast<char>(level >> 8);
      row[2 * iy + 1] = static_cast<char>(level & 0xff);
    }
    out.write(row.data(), static_cast<std::streamsize>(row.size()));
  }
  if (!out) throw Error(ErrorKind::IoError, "write failed for " + path.string());
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1) {
    throw Error(ErrorKind::IoError, "SHA-256 failed");
  }
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) {
    hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  }
  return hex.str();
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return sha256_hex(bytes);
}

}  // namespace carm
