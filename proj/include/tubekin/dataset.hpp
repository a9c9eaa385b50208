#pragma once

#include "tubekin/config.hpp"
#include "tubekin/mesh.hpp"

#include <array>
#include <filesystem>
#include <string>
#include <vector>

namespace tubekin {

/// JSON manifest:
///   { "subject": "A", "cohort": "normal", "period": 0.4, "units": "mm",
///     "surfaces": { "outer": [...], "inner": [...], "lumen": [...] } }
/// Relative mesh paths resolve against the manifest's directory.
struct DatasetManifest {
  std::string subject;
  std::string cohort = "normal";  // normal | banded
  double period = 0.4;            // s
  std::string units = "mm";       // um | mm | cm | m
  std::array<std::vector<std::filesystem::path>, 3> files;  // by SurfaceKind
  std::filesystem::path base;

  const std::vector<std::filesystem::path>& surface(SurfaceKind s) const { return files[static_cast<int>(s)]; }
  std::vector<std::filesystem::path>& surface(SurfaceKind s) { return files[static_cast<int>(s)]; }
  std::filesystem::path resolve(const std::filesystem::path& p) const { return p.is_absolute() ? p : base / p; }
  int frames() const { return static_cast<int>(surface(SurfaceKind::outer).size()); }
};

/// Millimetres per input unit.
double unit_scale(const std::string& units);

DatasetManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);

struct Dataset {
  DatasetManifest manifest;
  std::array<std::vector<TriMesh>, 3> frames;  // empty for surfaces not loaded

  const std::vector<TriMesh>& surface(SurfaceKind s) const { return frames[static_cast<int>(s)]; }
  bool has(SurfaceKind s) const { return !surface(s).empty(); }
};

/// Loads the requested surfaces in frame order, converted to mm, with frame
/// index and time set. Every listed file must exist; requested surfaces must
/// have the same frame count.
Dataset ingest(const DatasetManifest& manifest, const std::vector<SurfaceKind>& surfaces,
               ExecPolicy policy = ExecPolicy::parallel);

/// Writes every frame of the sequence plus manifest.json into `dir`.
/// Returns the manifest path.
std::filesystem::path write_synth_dataset(const std::filesystem::path& dir, const SynthConfig& config,
                                          ExecPolicy policy = ExecPolicy::parallel);

}  // namespace tubekin
