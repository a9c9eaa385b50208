#pragma once

#include "tubekin/geodesic.hpp"
#include "tubekin/mesh_io.hpp"
#include "tubekin/synth.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace tubekin {

/// `key = value` lines; `#` starts a comment. Keys are unique. Every value
/// lookup marks the key, and `reject_unused` reports the ones nobody read.
class KeyValues {
 public:
  static KeyValues load(const std::filesystem::path& path);
  static KeyValues parse(const std::string& text, const std::string& source = "<config>");

  bool has(const std::string& key) const { return entries_.count(key) > 0; }
  std::optional<std::string> text(const std::string& key) const;
  double number(const std::string& key, double fallback) const;
  int integer(const std::string& key, int fallback) const;
  bool boolean(const std::string& key, bool fallback) const;

  void set(const std::string& key, const std::string& value);
  void reject_unused() const;
  const std::string& source() const { return source_; }

 private:
  struct Entry {
    std::string value;
    int line = 0;
    mutable bool used = false;
  };
  [[noreturn]] void fail(const std::string& key, const std::string& what) const;

  std::string source_;
  std::map<std::string, Entry> entries_;
};

enum class ThresholdMode { gauss, p75, both };
enum class StrainScale { global, frame };

ThresholdMode parse_threshold_mode(const std::string& s);
const char* to_string(ThresholdMode mode);

struct GridSize {
  int n = 80;
  int m = 50;
};
/// "80x50"
GridSize parse_grid_size(const std::string& s);

struct PipelineConfig {
  GridSize grid;
  bool clip = true;
  std::vector<SurfaceKind> surfaces = {SurfaceKind::outer, SurfaceKind::inner, SurfaceKind::lumen};
  ThresholdMode threshold = ThresholdMode::both;
  double band_fraction = 0.75;
  bool two_segment = false;
  int contour_samples = 100;
  int pca_modes = 3;
  int curvature_stencil = 4;  // contour samples; wider than the source mesh facets
  int magnification = 4;
  StrainScale strain_scale = StrainScale::global;
  bool frame_images = true;  // per-frame curvature and strain PNGs
  double projection_distance = 0.2;  // mm
  GeodesicOptions geodesic;

  bool uses(SurfaceKind s) const;
};

/// Surface list such as "outer,lumen". Outer is always required.
std::vector<SurfaceKind> parse_surfaces(const std::string& s);

PipelineConfig pipeline_config(const KeyValues& kv);

/// Generator parameters plus the output mesh format.
struct SynthConfig {
  TubeSpec spec;
  MeshFormat format = MeshFormat::ply_binary;
  std::string subject = "synthetic";
  std::string cohort = "normal";
};

SynthConfig synth_config(const KeyValues& kv);

}  // namespace tubekin
