#include "tubekin/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <utility>

namespace tubekin {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

}  // namespace

KeyValues KeyValues::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError(path.string() + ": cannot open config file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.string());
}

KeyValues KeyValues::parse(const std::string& text, const std::string& source) {
  KeyValues kv;
  kv.source_ = source;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = source + ":" + std::to_string(line_no) + ": ";
    if (eq == std::string::npos) throw InputError(where + "expected 'key = value'");
    const std::string key = lower(trim(line.substr(0, eq)));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw InputError(where + "empty key");
    if (kv.entries_.count(key)) throw InputError(where + "duplicate key '" + key + "'");
    kv.entries_[key] = Entry{value, line_no};
  }
  return kv;
}

void KeyValues::fail(const std::string& key, const std::string& what) const {
  auto it = entries_.find(key);
  std::string where = source_;
  if (it != entries_.end() && it->second.line > 0) where += ":" + std::to_string(it->second.line);
  throw InputError(where + ": " + key + ": " + what);
}

std::optional<std::string> KeyValues::text(const std::string& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  it->second.used = true;
  return it->second.value;
}

double KeyValues::number(const std::string& key, double fallback) const {
  auto v = text(key);
  if (!v) return fallback;
  double out = 0.0;
  auto [p, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
  if (ec != std::errc() || p != v->data() + v->size()) fail(key, "expected a number, got '" + *v + "'");
  return out;
}

int KeyValues::integer(const std::string& key, int fallback) const {
  auto v = text(key);
  if (!v) return fallback;
  int out = 0;
  auto [p, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
  if (ec != std::errc() || p != v->data() + v->size()) fail(key, "expected an integer, got '" + *v + "'");
  return out;
}

bool KeyValues::boolean(const std::string& key, bool fallback) const {
  auto v = text(key);
  if (!v) return fallback;
  const std::string s = lower(*v);
  if (s == "true" || s == "yes" || s == "on" || s == "1") return true;
  if (s == "false" || s == "no" || s == "off" || s == "0") return false;
  fail(key, "expected true or false, got '" + *v + "'");
}

void KeyValues::set(const std::string& key, const std::string& value) {
  auto& e = entries_[lower(key)];
  e.value = value;
  e.line = 0;
}

void KeyValues::reject_unused() const {
  for (const auto& [key, e] : entries_)
    if (!e.used) fail(key, "unknown key");
}

ThresholdMode parse_threshold_mode(const std::string& s) {
  if (s == "gauss") return ThresholdMode::gauss;
  if (s == "p75") return ThresholdMode::p75;
  if (s == "both") return ThresholdMode::both;
  throw InputError("threshold must be gauss, p75 or both, got '" + s + "'");
}

const char* to_string(ThresholdMode mode) {
  switch (mode) {
    case ThresholdMode::gauss: return "gauss";
    case ThresholdMode::p75: return "p75";
    case ThresholdMode::both: return "both";
  }
  return "?";
}

GridSize parse_grid_size(const std::string& s) {
  GridSize g;
  const auto x = s.find_first_of("xX");
  bool ok = x != std::string::npos;
  if (ok) {
    auto a = std::from_chars(s.data(), s.data() + x, g.n);
    auto b = std::from_chars(s.data() + x + 1, s.data() + s.size(), g.m);
    ok = a.ec == std::errc() && a.ptr == s.data() + x && b.ec == std::errc() && b.ptr == s.data() + s.size();
  }
  if (!ok) throw InputError("grid must look like NxM, got '" + s + "'");
  if (g.n < 8 || g.m < 4) throw InputError("grid " + s + " too small (need n >= 8, m >= 4)");
  return g;
}

bool PipelineConfig::uses(SurfaceKind s) const { return std::find(surfaces.begin(), surfaces.end(), s) != surfaces.end(); }

std::vector<SurfaceKind> parse_surfaces(const std::string& s) {
  std::vector<SurfaceKind> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = lower(trim(item));
    SurfaceKind k;
    if (item == "outer") k = SurfaceKind::outer;
    else if (item == "inner") k = SurfaceKind::inner;
    else if (item == "lumen") k = SurfaceKind::lumen;
    else throw InputError("unknown surface '" + item + "' (outer, inner, lumen)");
    if (std::find(out.begin(), out.end(), k) == out.end()) out.push_back(k);
  }
  if (std::find(out.begin(), out.end(), SurfaceKind::outer) == out.end())
    throw InputError("surface list must include outer");
  std::sort(out.begin(), out.end());
  return out;
}

PipelineConfig pipeline_config(const KeyValues& kv) {
  PipelineConfig c;
  if (auto v = kv.text("grid")) c.grid = parse_grid_size(*v);
  c.clip = kv.boolean("clip", c.clip);
  if (auto v = kv.text("surfaces")) c.surfaces = parse_surfaces(*v);
  if (auto v = kv.text("threshold")) c.threshold = parse_threshold_mode(*v);
  c.band_fraction = kv.number("band_fraction", c.band_fraction);
  c.two_segment = kv.boolean("two_segment", c.two_segment);
  c.contour_samples = kv.integer("contour_samples", c.contour_samples);
  c.pca_modes = kv.integer("pca_modes", c.pca_modes);
  c.curvature_stencil = kv.integer("curvature_stencil", c.curvature_stencil);
  c.magnification = kv.integer("magnification", c.magnification);
  if (auto v = kv.text("strain_scale")) {
    if (*v == "global") c.strain_scale = StrainScale::global;
    else if (*v == "frame") c.strain_scale = StrainScale::frame;
    else throw InputError(kv.source() + ": strain_scale must be global or frame");
  }
  c.frame_images = kv.boolean("frame_images", c.frame_images);
  c.projection_distance = kv.number("projection_distance", c.projection_distance);
  c.geodesic.steiner_points = kv.integer("steiner_points", c.geodesic.steiner_points);

  if (c.band_fraction <= 0.0 || c.band_fraction >= 1.0) throw InputError(kv.source() + ": band_fraction must be in (0, 1)");
  if (c.contour_samples < 8) throw InputError(kv.source() + ": contour_samples must be >= 8");
  if (c.pca_modes < 1) throw InputError(kv.source() + ": pca_modes must be >= 1");
  if (c.magnification < 1 || c.magnification > 64) throw InputError(kv.source() + ": magnification must be in [1, 64]");
  if (c.curvature_stencil < 1) throw InputError(kv.source() + ": curvature_stencil must be >= 1");
  if (c.geodesic.steiner_points < 0) throw InputError(kv.source() + ": steiner_points must be >= 0");
  return c;
}

SynthConfig synth_config(const KeyValues& kv) {
  SynthConfig c;
  TubeSpec& s = c.spec;
  const std::pair<const char*, double TubeSpec::*> numbers[] = {
      {"inlet_radius", &TubeSpec::inlet_radius},
      {"outlet_radius", &TubeSpec::outlet_radius},
      {"length", &TubeSpec::length},
      {"bend_radius", &TubeSpec::bend_radius},
      {"shear_amplitude", &TubeSpec::shear_amplitude},
      {"ellipse_a", &TubeSpec::ellipse_a},
      {"ellipse_b", &TubeSpec::ellipse_b},
      {"star_amplitude", &TubeSpec::star_amplitude},
      {"wall_fraction", &TubeSpec::wall_fraction},
      {"lumen_fraction", &TubeSpec::lumen_fraction},
      {"lumen_star_amplitude", &TubeSpec::lumen_star_amplitude},
      {"wave_speed", &TubeSpec::wave_speed},
      {"depth", &TubeSpec::depth},
      {"pulse_width", &TubeSpec::pulse_width},
      {"pulse_sigma", &TubeSpec::pulse_sigma},
      {"pulse_offset", &TubeSpec::pulse_offset},
      {"reversal_begin", &TubeSpec::reversal_begin},
      {"reversal_end", &TubeSpec::reversal_end},
      {"band_position", &TubeSpec::band_position},
      {"band_factor", &TubeSpec::band_factor},
      {"band_width", &TubeSpec::band_width},
      {"volume_variation", &TubeSpec::volume_variation},
      {"period", &TubeSpec::period},
  };
  for (const auto& [key, field] : numbers) s.*field = kv.number(key, s.*field);
  const std::pair<const char*, int TubeSpec::*> integers[] = {
      {"star_lobes", &TubeSpec::star_lobes},
      {"lumen_star_lobes", &TubeSpec::lumen_star_lobes},
      {"frames", &TubeSpec::frames},
      {"circumferential", &TubeSpec::circumferential},
      {"longitudinal", &TubeSpec::longitudinal},
  };
  for (const auto& [key, field] : integers) s.*field = kv.integer(key, s.*field);

  if (auto v = kv.text("shape")) {
    if (*v == "straight") s.shape = TubeShape::straight;
    else if (*v == "torus") s.shape = TubeShape::torus;
    else if (*v == "sheared") s.shape = TubeShape::sheared;
    else throw InputError(kv.source() + ": shape must be straight, torus or sheared");
  }
  if (auto v = kv.text("section")) {
    if (*v == "circle") s.section = SectionShape::circle;
    else if (*v == "ellipse") s.section = SectionShape::ellipse;
    else if (*v == "star") s.section = SectionShape::star;
    else throw InputError(kv.source() + ": section must be circle, ellipse or star");
  }
  if (auto v = kv.text("profile")) {
    if (*v == "raised_cosine") s.profile = PulseProfile::raised_cosine;
    else if (*v == "gaussian") s.profile = PulseProfile::gaussian;
    else throw InputError(kv.source() + ": profile must be raised_cosine or gaussian");
  }
  if (auto v = kv.text("format")) c.format = parse_mesh_format(*v);
  if (auto v = kv.text("subject")) c.subject = *v;
  if (auto v = kv.text("cohort")) c.cohort = *v;
  s.validate();
  return c;
}

}  // namespace tubekin
