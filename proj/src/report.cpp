#include "tubekin/pipeline.hpp"
#include "tubekin/mesh_io.hpp"
#include "tubekin/render.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

namespace tubekin {

namespace {

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

class Csv {
 public:
  Csv(const std::filesystem::path& path, const std::vector<std::string>& header) : out_(path, std::ios::binary) {
    if (!out_) throw InputError(path.string() + ": cannot open for writing");
    row(header);
  }
  void row(const std::vector<std::string>& cells) {
    for (size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << '\n';
  }

 private:
  std::ofstream out_;
};

// json numbers must be finite.
nlohmann::ordered_json jnum(double v) { return std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(); }

struct Writer {
  std::filesystem::path dir;
  OutputSummary summary;

  std::filesystem::path file(const std::string& name) {
    summary.files.push_back(name);
    const auto p = dir / name;
    std::filesystem::create_directories(p.parent_path());
    return p;
  }
  void png(const std::string& name, const Rendered& r) {
    summary.nan_cells += r.nan_cells;
    write_png(file(name), r.image);
  }
};

std::string frame_name(const char* prefix, int k) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "frames/%s_%03d.png", prefix, k);
  return buf;
}

ScalarGrid curvature_grid(const CurvatureImage& c) {
  ScalarGrid g{c.m, c.n, c.values};
  return g;
}

}  // namespace

Table1Row table1_row(const PhaseRatios& phase, const WaveStats& wave) {
  Table1Row r;
  r.expand_percent = 100.0 * phase.expand;
  r.contract_percent = 100.0 * phase.contract;
  r.ratio = phase.ratio;
  r.period_ms = phase.period_ms;
  r.expand_ms = phase.expand_ms;
  r.contract_ms = phase.contract_ms;
  r.speed_min = wave.min;
  r.speed_max = wave.max;
  r.speed_avg = wave.avg;
  r.speed_std = wave.std;
  r.speed_cycle = wave.cycle;
  return r;
}

std::string table1_header() {
  return "Data set & Expand & Contract & Ratio & Period (ms) & Expand (ms) & Contract (ms) & Min (mm/s) & "
         "Max (mm/s) & Avg (mm/s) & Std (mm/s) & Cycle (mm/s)";
}

std::string format_table1_row(const std::string& subject, const Table1Row& row) {
  char buf[512];
  // Ratio as printed in the table: truncated, no leading zero below one.
  char ratio[32];
  std::snprintf(ratio, sizeof ratio, "%.2f", row.ratio);
  const char* r = ratio;
  if (ratio[0] == '0' && ratio[1] == '.') ++r;
  std::snprintf(buf, sizeof buf, "%s & %.2f%% & %.2f%% & %s & %.0f & %.0f & %.0f & %.5g & %.5g & %.5g & %.5g & %.5g",
                subject.c_str(), row.expand_percent, row.contract_percent, r, std::round(row.period_ms),
                std::round(row.expand_ms), std::round(row.contract_ms), row.speed_min, row.speed_max, row.speed_avg,
                row.speed_std, row.speed_cycle);
  return buf;
}

OutputSummary write_outputs(const Analysis& a, const DatasetManifest& manifest, const PipelineConfig& config,
                            const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  Writer w{dir, {}};
  const int F = a.outer.size();
  const int m = a.area.stations;
  const int mag = config.magnification;
  const bool show_p75 = config.threshold != ThresholdMode::gauss;
  const bool show_gauss = config.threshold != ThresholdMode::p75;

  {
    Csv csv(w.file("volumes.csv"), {"cycle_index", "source_frame", "time_s", "outer_volume_mm3", "layer_volume_mm3",
                                    "clip_fraction", "clipped_layer_volume_mm3"});
    for (int k = 0; k < F; ++k) {
      const int src = a.cycle.source_index(k);
      csv.row({std::to_string(k), std::to_string(src), num(a.outer.frames[k].time), num(a.volumes[src]),
               a.layer_volumes.empty() ? "" : num(a.layer_volumes[src]), a.clip ? num(a.clip->v_c[k]) : "",
               a.clip ? num(a.clip->volumes[k]) : ""});
    }
  }
  {
    Csv csv(w.file("area.csv"), {"station", "depth_mm", "cycle_index", "time_s", "area_mm2"});
    for (int j = 0; j < m; ++j)
      for (int k = 0; k < F; ++k)
        csv.row({std::to_string(j), num(a.area.depth[j]), std::to_string(k), num(k * a.area.seconds_per_frame),
                 num(a.area.at(j, k))});
  }
  {
    Csv csv(w.file("peaks.csv"), {"station", "depth_mm", "peak_frame", "peak_time_s", "flat"});
    for (int j = 0; j < m; ++j)
      csv.row({std::to_string(j), num(a.area.depth[j]), num(a.peaks.frame[j]), num(a.peaks.time[j]),
               a.peaks.defined(j) ? "0" : "1"});
  }
  {
    Csv csv(w.file("bands.csv"), {"station", "p75_begin", "p75_end", "p75_fraction", "gauss_begin", "gauss_end",
                                  "gauss_fraction", "amplitude_mm2", "baseline_mm2", "sigma_frames", "fit_converged",
                                  "divergent"});
    for (size_t j = 0; j < a.bands.size(); ++j) {
      const ExpansionBand& b = a.bands[j];
      auto band = [](const Band& x, bool on) -> std::array<std::string, 2> {
        if (!on || !x.valid) return {"", ""};
        return {num(x.begin), num(x.end)};
      };
      const auto p = band(b.threshold, show_p75);
      const auto g = band(b.gaussian, show_gauss);
      csv.row({std::to_string(b.station), p[0], p[1], show_p75 ? num(a.expanded.threshold[j]) : "", g[0], g[1],
               show_gauss ? num(a.expanded.gaussian[j]) : "", num(b.amplitude), num(b.baseline), num(b.sigma),
               b.fit_converged ? "1" : "0", b.divergent ? "1" : "0"});
    }
  }
  {
    Csv csv(w.file("area_profile.csv"), {"surface", "station", "depth_mm", "max_area_mm2", "min_area_mm2",
                                         "p75_area_mm2", "sigma_area_mm2", "peak_time_s"});
    for (const AreaProfile& p : a.profiles)
      for (int j = 0; j < m; ++j)
        csv.row({to_string(p.surface), std::to_string(j), num(a.area.depth[j]), num(p.max_area[j]), num(p.min_area[j]),
                 show_p75 ? num(p.threshold_area[j]) : "", show_gauss ? num(p.sigma_area[j]) : "",
                 num(p.peak_time[j])});
  }
  {
    Csv csv(w.file("percent_expanded.csv"), {"station", "depth_mm", "p75_percent", "gauss_percent"});
    for (int j = 0; j < m; ++j)
      csv.row({std::to_string(j), num(a.area.depth[j]), show_p75 ? num(100.0 * a.expanded.threshold[j]) : "",
               show_gauss ? num(100.0 * a.expanded.gaussian[j]) : ""});
  }
  {
    Csv csv(w.file("gradient.csv"),
            {"station", "cycle_index", "dA_dt_mm2_per_s", "dA_dv_mm", "angle_rad", "magnitude_normalized"});
    for (int j = 0; j < m; ++j)
      for (int k = 0; k < F; ++k) {
        const size_t i = a.gradient.index(j, k);
        csv.row({std::to_string(j), std::to_string(k), num(a.gradient.dt[i]), num(a.gradient.dv[i]),
                 num(a.gradient.angle[i]), num(a.gradient.magnitude[i])});
      }
  }
  {
    Csv csv(w.file("wave_speed.csv"), {"station", "next_station", "delay_s", "speed_mm_s"});
    for (const LocalSpeed& s : a.wave.local)
      csv.row({std::to_string(s.station), std::to_string(s.station + 1), num(s.delay), num(s.speed)});
  }
  {
    Csv csv(w.file("curvature.csv"),
            {"cycle_index", "source_frame", "surface", "kind", "min_per_mm", "max_per_mm", "mean_per_mm", "flagged"});
    auto rows = [&](const std::vector<CurvatureImage>& stack, const char* surface, const char* kind) {
      for (int k = 0; k < static_cast<int>(stack.size()); ++k) {
        const auto& v = stack[k].values;
        const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
        const double mean = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
        const long flagged = std::count(stack[k].flagged.begin(), stack[k].flagged.end(), 1);
        csv.row({std::to_string(k), std::to_string(a.cycle.source_index(k)), surface, kind, num(*lo), num(*hi), num(mean),
                 std::to_string(flagged)});
      }
    };
    rows(a.radial, "outer", "radial");
    rows(a.lumen_mean, "lumen", "mean");
  }
  double strain_max = 0.0;
  {
    Csv csv(w.file("strain.csv"), {"cycle_index", "source_frame", "mean_energy", "max_energy", "flagged_cells"});
    for (int k = 0; k < static_cast<int>(a.strain.size()); ++k) {
      const StrainField& s = a.strain[k];
      double sum = 0.0, hi = 0.0;
      int used = 0, flagged = 0;
      for (size_t i = 0; i < s.energy.size(); ++i) {
        if (s.flagged[i]) {
          ++flagged;
          continue;
        }
        sum += s.energy[i];
        hi = std::max(hi, s.energy[i]);
        ++used;
      }
      strain_max = std::max(strain_max, hi);
      csv.row({std::to_string(k), std::to_string(a.cycle.source_index(k)), num(used ? sum / used : 0.0), num(hi),
               std::to_string(flagged)});
    }
  }
  {
    Csv csv(w.file("pca.csv"), {"station", "phase", "contours", "mode", "variance_mm2", "share"});
    for (const ShapeModes& s : a.modes) {
      const double total = std::accumulate(s.variances.begin(), s.variances.end(), 0.0);
      for (size_t q = 0; q < s.variances.size(); ++q)
        csv.row({std::to_string(s.station), s.phase, std::to_string(s.centroids.size()), std::to_string(q + 1),
                 num(s.variances[q]), num(total > 0.0 ? s.variances[q] / total : 0.0)});
    }
  }
  {
    Csv csv(w.file("pca_modes.csv"),
            {"station", "phase", "mode", "sample", "mean_x_mm", "mean_y_mm", "mode_x", "mode_y"});
    for (const ShapeModes& s : a.modes)
      for (size_t q = 0; q < s.modes.size(); ++q)
        for (size_t i = 0; i < s.mean.size(); ++i)
          csv.row({std::to_string(s.station), s.phase, std::to_string(q + 1), std::to_string(i), num(s.mean[i].x()),
                   num(s.mean[i].y()), num(s.modes[q][i].x()), num(s.modes[q][i].y())});
  }

  // Images. Rows are stations (inlet on top), columns cycle frames.
  ScalarGrid area{m, F, a.area.values};
  const auto [amin, amax] = std::minmax_element(area.values.begin(), area.values.end());
  w.png("area.png", render_scalar(area, ColorMap::area, *amin, *amax, mag));
  {
    Rendered r = render_scalar(area, ColorMap::area, *amin, *amax, mag);
    auto edge = [&](int j, double frame, Rgb c) {
      const int k = ((static_cast<int>(std::lround(frame)) % F) + F) % F;
      paint_cell(r.image, j, k, c, mag);
    };
    for (const ExpansionBand& b : a.bands) {
      if (show_p75 && b.threshold.valid) {
        edge(b.station, b.threshold.begin, Rgb{255, 255, 255});
        edge(b.station, b.threshold.end, Rgb{255, 255, 255});
      }
      if (show_gauss && b.gaussian.valid) {
        edge(b.station, b.gaussian.begin, Rgb{255, 0, 255});
        edge(b.station, b.gaussian.end, Rgb{255, 0, 255});
      }
      if (a.peaks.defined(b.station)) edge(b.station, a.peaks.frame[b.station], Rgb{0, 0, 0});
    }
    w.png("bands.png", r);
  }
  w.png("gradient.png", render_gradient(a.gradient, mag));

  if (config.frame_images) {
    for (int k = 0; k < static_cast<int>(a.radial_normalized.size()); ++k)
      w.png(frame_name("radial", k), render_scalar(curvature_grid(a.radial_normalized[k]), ColorMap::area, 0.0, 1.0, mag));
    for (int k = 0; k < static_cast<int>(a.lumen_mean_normalized.size()); ++k)
      w.png(frame_name("lumen_mean", k),
            render_scalar(curvature_grid(a.lumen_mean_normalized[k]), ColorMap::area, 0.0, 1.0, mag));
    for (int k = 0; k < static_cast<int>(a.strain.size()); ++k) {
      const StrainField& s = a.strain[k];
      ScalarGrid g{s.m, s.n, s.energy};
      double hi = strain_max;
      if (config.strain_scale == StrainScale::frame) {
        hi = 0.0;
        for (size_t i = 0; i < s.energy.size(); ++i)
          if (!s.flagged[i]) hi = std::max(hi, s.energy[i]);
      }
      for (size_t i = 0; i < g.values.size(); ++i)
        if (s.flagged[i]) g.values[i] = std::nan("");
      w.png(frame_name("strain", k), render_scalar(g, ColorMap::area, 0.0, hi, mag));
    }
  }

  {
    std::ofstream out(w.file("table1.txt"), std::ios::binary);
    out << table1_header() << '\n' << format_table1_row(manifest.subject, a.table1) << '\n';
  }

  nlohmann::ordered_json j;
  j["subject"] = manifest.subject;
  j["cohort"] = manifest.cohort;
  j["frames"] = F;
  j["grid"] = {{"n", a.outer.n()}, {"m", a.outer.m()}};
  nlohmann::ordered_json surfaces = nlohmann::ordered_json::array();
  if (a.outer.size()) surfaces.push_back("outer");
  if (a.inner.size()) surfaces.push_back("inner");
  if (a.lumen.size()) surfaces.push_back("lumen");
  j["surfaces"] = surfaces;
  j["threshold"] = to_string(config.threshold);
  const Table1Row& t = a.table1;
  j["table1"] = {{"expand_percent", jnum(t.expand_percent)}, {"contract_percent", jnum(t.contract_percent)},
                 {"ratio", jnum(t.ratio)},                   {"period_ms", jnum(t.period_ms)},
                 {"expand_ms", jnum(t.expand_ms)},           {"contract_ms", jnum(t.contract_ms)},
                 {"speed_min", jnum(t.speed_min)},           {"speed_max", jnum(t.speed_max)},
                 {"speed_avg", jnum(t.speed_avg)},           {"speed_std", jnum(t.speed_std)},
                 {"speed_cycle", jnum(t.speed_cycle)}};
  j["table1_row"] = format_table1_row(manifest.subject, t);
  j["cycle"] = {{"min_source_frame", a.cycle.min_index},
                {"max_source_frame", a.cycle.max_index},
                {"min_frame_refined", jnum(a.phase.min_frame)},
                {"max_frame_refined", jnum(a.phase.max_frame)},
                {"two_segment", a.cycle.two_segment}};
  j["wave"] = {{"samples", a.wave.samples}, {"excluded_pairs", a.wave.excluded}, {"flat_stations", a.peaks.flat}};
  if (a.clip) {
    const auto [lo, hi] = std::minmax_element(a.clip->volumes.begin(), a.clip->volumes.end());
    const auto vmin = std::min_element(a.clip->v_c.begin(), a.clip->v_c.end());
    j["clip"] = {{"enabled", true},
                 {"target_mm3", jnum(a.clip->target)},
                 {"reference_cycle_index", a.clip->reference_frame},
                 {"relative_spread", jnum((*hi - *lo) / a.clip->target)},
                 {"min_clip_fraction", jnum(*vmin)}};
  } else {
    j["clip"] = {{"enabled", false}};
  }
  j["contours"] = a.lagrangian_contours ? "lagrangian" : "eulerian";
  int converged = 0, divergent = 0;
  for (const auto& b : a.bands) {
    converged += b.fit_converged;
    divergent += b.divergent;
  }
  j["bands"] = {{"stations", static_cast<int>(a.bands.size())},
                {"fits_converged", converged},
                {"divergent", divergent},
                {"band_fraction", config.band_fraction}};
  j["gradient_scale"] = jnum(a.gradient.scale);
  j["render"] = {{"magnification", mag}, {"nan_cells", w.summary.nan_cells}};
  j["artifacts"] = w.summary.files;
  {
    std::ofstream out(w.file("summary.json"), std::ios::binary);
    out << j.dump(2) << '\n';
  }
  return w.summary;
}

OutputSummary write_grids(const ParameterizedDataset& grids, const Dataset& data, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  Writer w{dir, {}};
  Csv csv(w.file("quality.csv"),
          {"surface", "source_frame", "spacing_cv_row", "spacing_cv_column", "seam_hausdorff_mm", "flagged_nodes"});
  for (SurfaceKind s : {SurfaceKind::outer, SurfaceKind::inner, SurfaceKind::lumen}) {
    if (!grids.has(s)) continue;
    const auto& frames = grids.surface(s).frames;
    const std::vector<GeodesicPath>* seams = s == SurfaceKind::outer   ? &grids.outer_seams
                                             : s == SurfaceKind::lumen ? &grids.lumen_seams
                                                                       : nullptr;
    for (size_t k = 0; k < frames.size(); ++k) {
      char name[64];
      std::snprintf(name, sizeof name, "grids/%s_%03zu.ply", to_string(s), k);
      write_mesh(w.file(name), frames[k].to_trimesh(), MeshFormat::ply_binary);
      const SpacingVariation cv = spacing_variation(frames[k]);
      const std::string seam =
          seams ? num(seam_deviation(frames[k], data.surface(s)[k], (*seams)[k])) : std::string();
      csv.row({to_string(s), std::to_string(k), num(cv.row), num(cv.column), seam,
               std::to_string(frames[k].flagged_count())});
    }
  }
  return w.summary;
}

}  // namespace tubekin
