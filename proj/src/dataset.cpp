#include "tubekin/dataset.hpp"

#include "tubekin/mesh_io.hpp"
#include "tubekin/synth.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <exception>
#include <fstream>
#include <sstream>

namespace tubekin {

namespace {

constexpr SurfaceKind kSurfaces[] = {SurfaceKind::outer, SurfaceKind::inner, SurfaceKind::lumen};

int line_of(const std::string& text, size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(byte), '\n'));
}

void check_counts(const std::array<int, 3>& counts, const std::string& where) {
  int ref = -1;
  for (SurfaceKind s : kSurfaces) {
    const int c = counts[static_cast<int>(s)];
    if (c == 0) continue;
    if (ref < 0) {
      ref = c;
    } else if (c != ref) {
      std::string msg = where + "frame count mismatch:";
      for (SurfaceKind t : kSurfaces)
        if (counts[static_cast<int>(t)] > 0)
          msg += std::string(" ") + to_string(t) + "=" + std::to_string(counts[static_cast<int>(t)]);
      throw InputError(msg);
    }
  }
}

}  // namespace

double unit_scale(const std::string& units) {
  if (units == "mm") return 1.0;
  if (units == "um" || units == "micron" || units == "\xC2\xB5m") return 1e-3;
  if (units == "cm") return 10.0;
  if (units == "m") return 1000.0;
  throw InputError("unknown length unit '" + units + "' (um, mm, cm, m)");
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError(path.string() + ": cannot open manifest");
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  const std::string where = path.string() + ": ";

  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(path.string() + ":" + std::to_string(line_of(text, e.byte == 0 ? 0 : e.byte - 1)) +
                     ": JSON parse error: " + e.what());
  }
  if (!j.is_object()) throw InputError(where + "manifest must be a JSON object");

  DatasetManifest m;
  m.base = path.parent_path();
  try {
    m.subject = j.value("subject", path.stem().string());
    m.cohort = j.value("cohort", std::string("normal"));
    m.units = j.value("units", std::string("mm"));
    if (!j.contains("period")) throw InputError(where + "missing 'period' (seconds)");
    m.period = j.at("period").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw InputError(where + "bad field type: " + e.what());
  }
  if (!(m.period > 0.0)) throw InputError(where + "period must be positive");
  if (m.cohort != "normal" && m.cohort != "banded") throw InputError(where + "cohort must be normal or banded");
  unit_scale(m.units);

  if (!j.contains("surfaces") || !j["surfaces"].is_object()) throw InputError(where + "missing 'surfaces' object");
  for (auto it = j["surfaces"].begin(); it != j["surfaces"].end(); ++it) {
    SurfaceKind kind;
    if (it.key() == "outer") kind = SurfaceKind::outer;
    else if (it.key() == "inner") kind = SurfaceKind::inner;
    else if (it.key() == "lumen") kind = SurfaceKind::lumen;
    else throw InputError(where + "unknown surface '" + it.key() + "'");
    if (!it.value().is_array()) throw InputError(where + "surfaces." + it.key() + " must be an array of paths");
    for (const auto& p : it.value()) {
      if (!p.is_string()) throw InputError(where + "surfaces." + it.key() + " must be an array of paths");
      m.surface(kind).emplace_back(p.get<std::string>());
    }
  }
  if (m.surface(SurfaceKind::outer).empty()) throw InputError(where + "no outer surface frames");
  check_counts({static_cast<int>(m.files[0].size()), static_cast<int>(m.files[1].size()),
                static_cast<int>(m.files[2].size())},
               where);
  return m;
}

void save_manifest(const std::filesystem::path& path, const DatasetManifest& manifest) {
  nlohmann::ordered_json j;
  j["subject"] = manifest.subject;
  j["cohort"] = manifest.cohort;
  j["period"] = manifest.period;
  j["units"] = manifest.units;
  nlohmann::ordered_json surfaces = nlohmann::ordered_json::object();
  for (SurfaceKind s : kSurfaces) {
    if (manifest.surface(s).empty()) continue;
    auto& list = surfaces[to_string(s)] = nlohmann::ordered_json::array();
    for (const auto& p : manifest.surface(s)) list.push_back(p.generic_string());
  }
  j["surfaces"] = surfaces;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError(path.string() + ": cannot open for writing");
  out << j.dump(2) << '\n';
}

Dataset ingest(const DatasetManifest& manifest, const std::vector<SurfaceKind>& surfaces, ExecPolicy policy) {
  Dataset data;
  data.manifest = manifest;
  const double scale = unit_scale(manifest.units);

  std::array<int, 3> counts{0, 0, 0};
  for (SurfaceKind s : surfaces) {
    if (manifest.surface(s).empty()) {
      if (s == SurfaceKind::outer) throw InputError("manifest lists no outer frames");
      continue;
    }
    counts[static_cast<int>(s)] = static_cast<int>(manifest.surface(s).size());
    for (const auto& p : manifest.surface(s)) {
      const auto full = manifest.resolve(p);
      if (!std::filesystem::exists(full)) throw InputError(full.string() + ": file not found");
    }
  }
  check_counts(counts, "");

  for (SurfaceKind s : surfaces) {
    const auto& files = manifest.surface(s);
    if (files.empty()) continue;
    const int count = static_cast<int>(files.size());
    auto& frames = data.frames[static_cast<int>(s)];
    frames.resize(files.size());
    std::vector<std::exception_ptr> errors(files.size());
#pragma omp parallel for schedule(dynamic) if (policy == ExecPolicy::parallel)
    for (int k = 0; k < count; ++k) {
      try {
        TriMesh mesh = read_mesh(manifest.resolve(files[k]));
        if (scale != 1.0)
          for (auto& v : mesh.vertices) v *= scale;
        mesh.frame_index = k;
        mesh.time = manifest.period * k / count;
        frames[k] = std::move(mesh);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
    for (const auto& e : errors)
      if (e) std::rethrow_exception(e);
  }
  return data;
}

std::filesystem::path write_synth_dataset(const std::filesystem::path& dir, const SynthConfig& config,
                                          ExecPolicy policy) {
  std::filesystem::create_directories(dir);
  const SynthSequence seq = generate_sequence(config.spec, policy);

  DatasetManifest m;
  m.subject = config.subject;
  m.cohort = config.cohort;
  m.period = config.spec.period;
  m.units = "mm";
  m.base = dir;
  const std::string ext = config.format == MeshFormat::obj ? ".obj" : ".ply";
  const int frames = config.spec.frames;
  const int digits = std::max(3, static_cast<int>(std::to_string(frames - 1).size()));

  for (SurfaceKind s : kSurfaces) {
    const auto& meshes = seq.surface(s);
    auto& files = m.surface(s);
    files.resize(meshes.size());
    for (size_t k = 0; k < meshes.size(); ++k) {
      char name[64];
      std::snprintf(name, sizeof name, "%s_%0*zu%s", to_string(s), digits, k, ext.c_str());
      files[k] = name;
    }
    const int count = static_cast<int>(meshes.size());
    std::vector<std::exception_ptr> errors(meshes.size());
#pragma omp parallel for schedule(dynamic) if (policy == ExecPolicy::parallel)
    for (int k = 0; k < count; ++k) {
      try {
        write_mesh(dir / files[k], meshes[k], config.format);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
    for (const auto& e : errors)
      if (e) std::rethrow_exception(e);
  }
  const auto path = dir / "manifest.json";
  save_manifest(path, m);
  return path;
}

}  // namespace tubekin
