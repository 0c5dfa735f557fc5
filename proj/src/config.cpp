#include "carm/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "carm/error.hpp"

namespace carm {

const char* to_string(Stage stage) noexcept {
  switch (stage) {
    case Stage::Simulate: return "simulate";
    case Stage::Project: return "project";
    case Stage::Reconstruct: return "reconstruct";
    case Stage::Metrics: return "metrics";
    case Stage::Export: return "export";
    case Stage::All: return "all";
  }
  return "unknown";
}

Stage parse_stage(std::string_view name) {
  for (Stage s : {Stage::Simulate, Stage::Project, Stage::Reconstruct, Stage::Metrics,
                  Stage::Export, Stage::All}) {
    if (name == to_string(s)) return s;
  }
  throw Error(ErrorKind::ConfigError, "unknown stage '" + std::string(name) + "'");
}

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

struct Entry {
  std::string value;
  std::size_t line;
};

// Parsed INI text. Getters remove the keys they read so leftovers can be
// reported as unknown.
class Ini {
 public:
  explicit Ini(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string raw;
    std::size_t line_no = 0;
    std::string section;
    while (std::getline(in, raw)) {
      ++line_no;
      const auto comment = raw.find_first_of("#;");
      std::string line = trim(comment == std::string::npos ? raw : raw.substr(0, comment));
      if (line.empty()) continue;
      if (line.front() == '[') {
        if (line.back() != ']') fail(line_no, "unterminated section header");
        section = trim(std::string_view(line).substr(1, line.size() - 2));
        if (section.empty()) fail(line_no, "empty section name");
        if (sections_.contains(section)) fail(line_no, "duplicate section [" + section + "]");
        sections_[section];
        section_lines_[section] = line_no;
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos) fail(line_no, "expected key = value");
      if (section.empty()) fail(line_no, "key outside of any section");
      const std::string key = trim(std::string_view(line).substr(0, eq));
      if (key.empty()) fail(line_no, "empty key");
      auto& keys = sections_[section];
      if (keys.contains(key)) fail(line_no, "duplicate key '" + key + "' in [" + section + "]");
      keys[key] = Entry{trim(std::string_view(line).substr(eq + 1)), line_no};
    }
  }

  [[noreturn]] static void fail(std::size_t line, const std::string& what) {
    throw Error(ErrorKind::ConfigError, "line " + std::to_string(line) + ": " + what);
  }

  bool has_section(const std::string& s) const { return sections_.contains(s); }

  std::optional<Entry> take(const std::string& section, const std::string& key) {
    auto sit = sections_.find(section);
    if (sit == sections_.end()) return std::nullopt;
    auto kit = sit->second.find(key);
    if (kit == sit->second.end()) return std::nullopt;
    Entry e = kit->second;
    sit->second.erase(kit);
    return e;
  }

  void read(const std::string& section, const std::string& key, double& out) {
    if (auto e = take(section, key)) out = parse_double(*e, section, key);
  }
  void read(const std::string& section, const std::string& key, std::size_t& out) {
    if (auto e = take(section, key)) out = parse_count(*e, section, key);
  }
  void read(const std::string& section, const std::string& key, bool& out) {
    if (auto e = take(section, key)) {
      if (e->value == "true" || e->value == "1" || e->value == "yes") {
        out = true;
      } else if (e->value == "false" || e->value == "0" || e->value == "no") {
        out = false;
      } else {
        fail(e->line, "[" + section + "] " + key + ": expected true or false");
      }
    }
  }
  void read(const std::string& section, const std::string& key, std::optional<double>& out) {
    if (auto e = take(section, key)) out = parse_double(*e, section, key);
  }
  void read(const std::string& section, const std::string& key, Point3& out) {
    if (auto e = take(section, key)) out = parse_point(*e, section, key);
  }
  void read(const std::string& section, const std::string& key, std::optional<Point3>& out) {
    if (auto e = take(section, key)) out = parse_point(*e, section, key);
  }

  // Any key or section nobody consumed is an error.
  void reject_leftovers(const std::set<std::string>& known_sections) const {
    for (const auto& [section, keys] : sections_) {
      if (!known_sections.contains(section)) {
        fail(section_lines_.at(section), "unknown section [" + section + "]");
      }
      if (!keys.empty()) {
        auto first = std::min_element(keys.begin(), keys.end(), [](const auto& a, const auto& b) {
          return a.second.line < b.second.line;
        });
        fail(first->second.line, "unknown key '" + first->first + "' in [" + section + "]");
      }
    }
  }

  static double parse_double(const Entry& e, const std::string& section, const std::string& key) {
    double v = 0.0;
    const char* begin = e.value.data();
    const char* end = begin + e.value.size();
    auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc() || ptr != end || e.value.empty()) {
      fail(e.line, "[" + section + "] " + key + ": expected a number, got '" + e.value + "'");
    }
    return v;
  }

  static std::uint64_t parse_count(const Entry& e, const std::string& section,
                                   const std::string& key) {
    std::uint64_t v = 0;
    const char* begin = e.value.data();
    const char* end = begin + e.value.size();
    auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc() || ptr != end || e.value.empty()) {
      fail(e.line,
           "[" + section + "] " + key + ": expected a non-negative integer, got '" + e.value + "'");
    }
    return v;
  }

  static Point3 parse_point(const Entry& e, const std::string& section, const std::string& key) {
    std::vector<double> parts;
    std::stringstream ss(e.value);
    std::string item;
    while (std::getline(ss, item, ',')) {
      parts.push_back(parse_double(Entry{trim(item), e.line}, section, key));
    }
    if (parts.size() != 3) fail(e.line, "[" + section + "] " + key + ": expected x, y, z");
    return {parts[0], parts[1], parts[2]};
  }

 private:
  std::map<std::string, std::map<std::string, Entry>> sections_;
  std::map<std::string, std::size_t> section_lines_;
};

}  // namespace

ScenarioConfig parse_config(std::string_view text, const std::filesystem::path& base_dir) {
  Ini ini(text);
  ScenarioConfig c;

  if (auto e = ini.take("scenario", "name")) c.name = e->value;
  if (auto e = ini.take("scenario", "stage")) {
    try {
      c.stage = parse_stage(e->value);
    } catch (const Error&) {
      Ini::fail(e->line, "[scenario] stage: unknown stage '" + e->value + "'");
    }
  }
  if (auto e = ini.take("scenario", "seed")) c.seed = Ini::parse_count(*e, "scenario", "seed");

  ini.read("geometry", "d_mm", c.d_mm);
  ini.read("geometry", "n_views", c.n_views);
  ini.read("geometry", "span_deg", c.span_deg);
  ini.read("geometry", "nu", c.nu);
  ini.read("geometry", "nv", c.nv);
  ini.read("geometry", "pitch_mm", c.pitch_mm);

  if (auto e = ini.take("phantom", "preset")) {
    if (e->value == "sphere") {
      c.preset = PhantomPreset::Sphere;
    } else if (e->value == "kidney") {
      c.preset = PhantomPreset::Kidney;
    } else if (e->value == "file") {
      c.preset = PhantomPreset::File;
    } else {
      Ini::fail(e->line, "[phantom] preset: expected sphere, kidney or file");
    }
  }
  ini.read("phantom", "radius_mm", c.sphere_radius_mm);
  ini.read("phantom", "mu", c.sphere_mu);
  ini.read("phantom", "center_mm", c.sphere_center);
  if (auto e = ini.take("phantom", "file")) {
    c.phantom_file = e->value;
    if (c.phantom_file.is_relative() && !base_dir.empty()) c.phantom_file = base_dir / c.phantom_file;
  }
  if (c.preset == PhantomPreset::File && c.phantom_file.empty()) {
    throw Error(ErrorKind::ConfigError, "[phantom] preset = file requires a 'file' key");
  }

  ini.read("acquisition", "i0", c.i0);
  ini.read("acquisition", "noise", c.noise);

  ini.read("grid", "nx", c.nx);
  ini.read("grid", "ny", c.ny);
  ini.read("grid", "nz", c.nz);
  ini.read("grid", "spacing_mm", c.spacing_mm);
  ini.read("grid", "center_mm", c.grid_center);

  c.run_bp = ini.has_section("recon.bp");
  c.run_fbp = ini.has_section("recon.fbp");
  c.run_sart = ini.has_section("recon.sart");
  c.run_mlem = ini.has_section("recon.mlem");
  if (auto e = ini.take("recon.fbp", "window")) {
    if (e->value == "ramp_only") {
      c.fbp.window = FilterWindow::RampOnly;
    } else if (e->value == "ramp_hann") {
      c.fbp.window = FilterWindow::RampHann;
    } else {
      Ini::fail(e->line, "[recon.fbp] window: expected ramp_only or ramp_hann");
    }
  }
  ini.read("recon.fbp", "cutoff", c.fbp.cutoff);
  ini.read("recon.fbp", "cosine_weight", c.fbp.cosine_weight);
  ini.read("recon.sart", "iterations", c.sart.iterations);
  ini.read("recon.sart", "lambda0", c.sart.lambda0);
  ini.read("recon.sart", "decay", c.sart.decay);
  ini.read("recon.sart", "nonneg", c.sart.nonneg);
  ini.read("recon.mlem", "iterations", c.mlem.iterations);
  ini.read("recon.mlem", "initial", c.mlem.initial);
  ini.read("recon.mlem", "floor", c.mlem.floor);

  ini.read("metrics", "object_center_mm", c.object_center);
  ini.read("metrics", "feature_half", c.feature_half);
  ini.read("metrics", "background_offset_mm", c.background_offset_mm);
  ini.read("metrics", "background_half", c.background_half);
  ini.read("metrics", "window_lo", c.window_lo);
  ini.read("metrics", "window_hi", c.window_hi);

  ini.reject_leftovers({"scenario", "geometry", "phantom", "acquisition", "grid", "recon.bp",
                        "recon.fbp", "recon.sart", "recon.mlem", "metrics"});

  // Semantic checks, reported as config errors.
  try {
    (void)c.geometry();
    c.grid().validate();
    if (c.run_fbp) c.fbp.validate();
    if (c.run_sart) c.sart.validate();
    if (c.run_mlem) c.mlem.validate();
    if (!(c.i0 > 0.0)) throw Error(ErrorKind::InvalidArgument, "[acquisition] i0 must be > 0");
    if (c.window_lo && c.window_hi && !(*c.window_lo < *c.window_hi)) {
      throw Error(ErrorKind::InvalidArgument, "[metrics] window_lo must be below window_hi");
    }
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::ConfigError) throw;
    throw Error(ErrorKind::ConfigError, e.what());
  }
  return c;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::ConfigError, "cannot open config " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str(), path.parent_path());
}

CArmGeometry ScenarioConfig::geometry() const {
  return CArmGeometry(d_mm, view_angles(n_views, span_deg), nu, nv, pitch_mm);
}

GridSpec ScenarioConfig::grid() const {
  GridSpec g = centered_grid(nx, ny, nz, spacing_mm);
  g.origin = g.origin + grid_center;
  return g;
}

EllipsoidPhantom ScenarioConfig::phantom() const {
  switch (preset) {
    case PhantomPreset::Sphere: return sphere_phantom(sphere_radius_mm, sphere_mu, sphere_center);
    case PhantomPreset::Kidney: return kidney_phantom();
    case PhantomPreset::File: return read_phantom_file(phantom_file);
  }
  return sphere_phantom(sphere_radius_mm, sphere_mu, sphere_center);
}

Point3 ScenarioConfig::target() const {
  if (object_center) return *object_center;
  if (preset == PhantomPreset::Sphere) return sphere_center;
  const EllipsoidPhantom ph = phantom();
  return ph.ellipsoids.size() > 1 ? ph.ellipsoids[1].center : ph.ellipsoids.front().center;
}

std::vector<std::string> ScenarioConfig::algorithms() const {
  std::vector<std::string> out;
  if (run_bp) out.emplace_back("bp");
  if (run_fbp) out.emplace_back("fbp");
  if (run_sart) out.emplace_back("sart");
  if (run_mlem) out.emplace_back("mlem");
  return out;
}

}  // namespace carm
