#include "tubekin/pipeline.hpp"

#include "tubekin/mesh_core.hpp"
#include "tubekin/parameterize.hpp"
#include "tubekin/sections.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>

namespace tubekin {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

class StageTimer {
 public:
  StageTimer(std::string name, const RunOptions& options)
      : name_(std::move(name)), options_(options), start_(std::chrono::steady_clock::now()) {}
  ~StageTimer() {
    if (options_.on_stage && std::uncaught_exceptions() == 0)
      options_.on_stage(name_, std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count());
  }

 private:
  std::string name_;
  const RunOptions& options_;
  std::chrono::steady_clock::time_point start_;
};

std::string frame_context(SurfaceKind s, int frame) { return std::string(to_string(s)) + " frame " + std::to_string(frame); }

[[noreturn]] void rethrow_in_stage(const std::string& stage, const std::string& context, std::exception_ptr e) {
  try {
    std::rethrow_exception(e);
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& ex) {
    throw StageError(stage, context, ex.what());
  }
}

// Runs fn(k) for every frame; the first failure by frame index is rethrown
// with its context, so serial and parallel runs report the same error.
template <class Fn>
void for_frames(int count, ExecPolicy policy, const std::string& stage, SurfaceKind surface, Fn&& fn) {
  std::vector<std::exception_ptr> errors(static_cast<size_t>(count));
#pragma omp parallel for schedule(dynamic) if (policy == ExecPolicy::parallel)
  for (int k = 0; k < count; ++k) {
    try {
      fn(k);
    } catch (...) {
      errors[k] = std::current_exception();
    }
  }
  for (int k = 0; k < count; ++k)
    if (errors[k]) rethrow_in_stage(stage, frame_context(surface, k), errors[k]);
}

template <class Fn>
auto in_stage(const std::string& stage, const std::string& context, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(stage, context, e.what());
  }
}

SurfaceSequence make_sequence(std::vector<GridMesh> frames, double period, SurfaceKind surface) {
  SurfaceSequence s;
  s.frames = std::move(frames);
  s.period = period;
  s.surface = surface;
  return s;
}

}  // namespace

ParameterizedDataset parameterize_dataset(const Dataset& data, const PipelineConfig& config, const RunOptions& options) {
  const auto& outer = data.surface(SurfaceKind::outer);
  const int F = static_cast<int>(outer.size());
  if (F == 0) throw StageError("validate", "", "no outer frames");
  const double period = data.manifest.period;
  const bool use_inner = config.uses(SurfaceKind::inner) && data.has(SurfaceKind::inner);
  const bool use_lumen = config.uses(SurfaceKind::lumen) && data.has(SurfaceKind::lumen);
  ParameterizedDataset out;

  {
    StageTimer timer("validate", options);
    for (SurfaceKind s : {SurfaceKind::outer, SurfaceKind::inner, SurfaceKind::lumen}) {
      if ((s == SurfaceKind::inner && !use_inner) || (s == SurfaceKind::lumen && !use_lumen)) continue;
      const auto& frames = data.surface(s);
      for_frames(F, options.policy, "validate", s, [&](int k) {
        const ValidationReport r = validate_topology(frames[k]);
        if (!r.passes) throw TopologyError(r.message);
      });
    }
  }

  std::vector<GeodesicPath> raw(F);
  {
    StageTimer timer("geodesics", options);
    for_frames(F, options.policy, "geodesics", SurfaceKind::outer,
               [&](int k) { raw[k] = shortest_boundary_geodesic(outer[k], {}, config.geodesic); });
  }
  {
    StageTimer timer("stabilize", options);
    out.outer_seams = in_stage("stabilize", "outer",
                               [&] { return stabilize_seam_endpoints(outer, raw, config.geodesic, options.policy); });
  }

  std::vector<GridMesh> grids(F);
  {
    StageTimer timer("flatten", options);
    for_frames(F, options.policy, "flatten", SurfaceKind::outer, [&](int k) {
      grids[k] = parameterize_frame(outer[k], out.outer_seams[k], config.grid.n, config.grid.m, SurfaceKind::outer);
      grids[k].frame_index = k;
      grids[k].time = outer[k].time;
    });
  }

  if (use_inner) {
    StageTimer timer("project", options);
    const auto& inner = data.surface(SurfaceKind::inner);
    std::vector<GridMesh> inner_grids(F);
    ProjectionOptions popt;
    popt.max_distance = config.projection_distance;
    for_frames(F, options.policy, "project", SurfaceKind::inner, [&](int k) {
      inner_grids[k] = project_to_inner(grids[k], inner[k], popt);
      inner_grids[k].frame_index = k;
      inner_grids[k].time = inner[k].time;
      if (inner_grids[k].flagged_count() > 0)
        warn(frame_context(SurfaceKind::inner, k) + ": " + std::to_string(inner_grids[k].flagged_count()) +
             " node(s) farther than " + std::to_string(popt.max_distance) + " mm from the inner surface");
    });
    out.grids[static_cast<int>(SurfaceKind::inner)] = make_sequence(std::move(inner_grids), period, SurfaceKind::inner);
  }

  if (use_lumen) {
    StageTimer timer("lumen", options);
    const auto& lumen = data.surface(SurfaceKind::lumen);
    out.lumen_seams.resize(F);
    std::vector<GridMesh> lumen_grids(F);
    for_frames(F, options.policy, "lumen", SurfaceKind::lumen, [&](int k) {
      const auto line = out.outer_seams[k].polyline(outer[k]);
      out.lumen_seams[k] = align_lumen_seam(lumen[k], line.front(), line.back(), config.geodesic);
      lumen_grids[k] =
          parameterize_frame(lumen[k], out.lumen_seams[k], config.grid.n, config.grid.m, SurfaceKind::lumen);
      lumen_grids[k].frame_index = k;
      lumen_grids[k].time = lumen[k].time;
    });
    out.grids[static_cast<int>(SurfaceKind::lumen)] = make_sequence(std::move(lumen_grids), period, SurfaceKind::lumen);
  }

  out.grids[static_cast<int>(SurfaceKind::outer)] = make_sequence(std::move(grids), period, SurfaceKind::outer);
  return out;
}

AreaProfile area_profile(SurfaceKind surface, const AreaImage& image, const PeakTimes& peaks,
                         const std::vector<ExpansionBand>& bands, double band_fraction) {
  AreaProfile p;
  p.surface = surface;
  const int m = image.stations;
  for (auto* v : {&p.max_area, &p.min_area, &p.threshold_area, &p.sigma_area, &p.peak_time}) v->assign(m, kNaN);
  for (int j = 0; j < m; ++j) {
    const std::vector<double> row = image.row(j);
    if (!std::all_of(row.begin(), row.end(), [](double a) { return std::isfinite(a); })) continue;
    const auto [lo, hi] = std::minmax_element(row.begin(), row.end());
    p.max_area[j] = *hi;
    p.min_area[j] = *lo;
    p.threshold_area[j] = band_fraction * *hi;
    if (!peaks.defined(j)) continue;
    p.peak_time[j] = peaks.time[j];
    if (bands[j].fit_converged) p.sigma_area[j] = bands[j].baseline + bands[j].amplitude * std::exp(-0.5);
  }
  return p;
}

Analysis analyze(const ParameterizedDataset& data, const Dataset& source, const PipelineConfig& config,
                 const RunOptions& options) {
  const DatasetManifest& manifest = source.manifest;
  Analysis a;
  const SurfaceSequence& outer_src = data.surface(SurfaceKind::outer);
  const int F = outer_src.size();
  const int m = outer_src.m();
  in_stage("align", "outer", [&] { outer_src.validate(); });

  {
    StageTimer timer("align", options);
    a.volumes = in_stage("align", "outer", [&] { return sequence_volumes(outer_src, options.policy); });
    a.cycle = in_stage("align", "outer", [&] { return align_cycle_by_volume(a.volumes, config.two_segment); });
    a.outer = reorder(outer_src, a.cycle);
    if (data.has(SurfaceKind::inner)) {
      a.inner = reorder(data.surface(SurfaceKind::inner), a.cycle);
      a.layer_volumes.resize(F);
      const auto& inner_src = data.surface(SurfaceKind::inner);
      for_frames(F, options.policy, "align", SurfaceKind::inner, [&](int k) {
        a.layer_volumes[k] = clipped_layer_volume(outer_src.frames[k], inner_src.frames[k], 1.0);
      });
    }
    if (data.has(SurfaceKind::lumen)) a.lumen = reorder(data.surface(SurfaceKind::lumen), a.cycle);
  }

  if (config.clip && a.inner.size() > 0) {
    StageTimer timer("clip", options);
    a.clip = in_stage("clip", "outer/inner", [&] { return clip_to_constant_volume(a.outer, a.inner, {}, options.policy); });
  } else if (config.clip) {
    warn("clipping needs the inner surface; running Eulerian only");
  }

  ContourOptions copt;
  copt.samples = config.contour_samples;
  {
    StageTimer timer("sections", options);
    a.sections.resize(F);
    for_frames(F, options.policy, "sections", SurfaceKind::outer, [&](int k) {
      const GridMesh& g = a.outer.frames[k];
      a.sections[k] = extract_sections(g, section_planes(g), copt, ExecPolicy::serial);
    });
  }

  {
    StageTimer timer("area", options);
    const double spf = a.outer.frame_spacing();
    a.area = in_stage("area", "outer", [&] { return area_image_from_sections(a.sections, station_depths(a.outer), spf); });
    a.peaks = in_stage("peaks", "outer", [&] { return peak_times(a.area, options.policy); });
    BandOptions bopt;
    bopt.threshold = config.band_fraction;
    a.bands = in_stage("bands", "outer", [&] { return expansion_bands(a.area, a.peaks, bopt, options.policy); });
    a.expanded = percent_time_expanded(a.bands, a.area.frames);
    a.gradient = in_stage("gradient", "outer", [&] { return area_gradient_image(a.area, options.policy); });
    a.wave = in_stage("wave speed", "outer", [&] { return wave_speed_stats(a.peaks.time, a.area.depth, a.area.period()); });
    a.phase = in_stage("phase", "outer", [&] { return cycle_phase_ratios(a.volumes, manifest.period); });
    a.table1 = table1_row(a.phase, a.wave);
    a.profiles.push_back(area_profile(SurfaceKind::outer, a.area, a.peaks, a.bands, config.band_fraction));
  }

  // The other walls only feed the area profiles; a missing section there is
  // a NaN station rather than an abort.
  for (const SurfaceSequence* seq : {&a.inner, &a.lumen}) {
    if (seq->size() == 0) continue;
    StageTimer timer("area profile", options);
    ContourOptions lenient = copt;
    lenient.skip_open = true;
    std::vector<std::vector<Contour>> sections(F);
    for_frames(F, options.policy, "area profile", seq->surface, [&](int k) {
      // Cut with the outer wall's planes so all walls share each cross-section.
      std::vector<SectionPlane> planes = section_planes(a.outer.frames[k]);
      for (SectionPlane& p : planes) p.defining.reset();
      sections[k] = extract_sections(seq->frames[k], planes, lenient, ExecPolicy::serial);
    });
    AreaImage image = a.area;
    for (int k = 0; k < F; ++k)
      for (int j = 0; j < m; ++j) {
        const Contour& c = sections[k][j];
        image.at(j, k) = c.points.empty() ? kNaN : contour_area(c);
      }
    AreaImage finite = image;  // NaN rows read as flat, so they get no peak
    for (int j = 0; j < finite.stations; ++j) {
      bool ok = true;
      for (int k = 0; k < F; ++k) ok = ok && std::isfinite(finite.at(j, k));
      if (!ok)
        for (int k = 0; k < F; ++k) finite.at(j, k) = 0.0;
    }
    BandOptions bopt;
    bopt.threshold = config.band_fraction;
    const PeakTimes peaks = peak_times(finite, options.policy);
    const auto bands = in_stage("area profile", to_string(seq->surface),
                                [&] { return expansion_bands(finite, peaks, bopt, options.policy); });
    a.profiles.push_back(area_profile(seq->surface, image, peaks, bands, config.band_fraction));
  }

  {
    StageTimer timer("curvature", options);
    RadialOptions ropt;
    ropt.stencil = config.curvature_stencil;
    a.radial.resize(F);
    for_frames(F, options.policy, "curvature", SurfaceKind::outer, [&](int k) {
      a.radial[k] = radial_curvature_image(a.outer.frames[k], a.sections[k], ropt);
      a.radial[k].frame_index = k;
    });
    a.radial_normalized = normalize_per_pixel(a.radial);
    if (a.lumen.size() > 0) {
      a.lumen_mean.resize(F);
      for_frames(F, options.policy, "curvature", SurfaceKind::lumen, [&](int k) {
        a.lumen_mean[k] = mean_curvature(a.lumen.frames[k], source.surface(SurfaceKind::lumen)[a.cycle.source_index(k)]);
        a.lumen_mean[k].frame_index = k;
      });
      a.lumen_mean_normalized = normalize_per_pixel(a.lumen_mean);
    }
  }

  {
    StageTimer timer("strain", options);
    a.strain = in_stage("strain", "outer", [&] { return strain_sequence(a.outer.frames, a.outer.frames.front(), options.policy); });
  }

  {
    StageTimer timer("pca", options);
    const std::vector<std::vector<Contour>>* contours = &a.sections;
    std::vector<std::vector<Contour>> clipped;
    if (a.clip) {
      a.lagrangian_contours = true;
      clipped.resize(F);
      for_frames(F, options.policy, "pca sections", SurfaceKind::outer, [&](int k) {
        const GridMesh& g = a.clip->outer.frames[k];
        clipped[k] = extract_sections(g, section_planes(g), copt, ExecPolicy::serial);
      });
      contours = &clipped;
    }
    const int max_cycle = a.cycle.cycle_index(a.cycle.max_index);
    PcaOptions popt;
    popt.max_modes = config.pca_modes;
    for (int j = 0; j < m; ++j) {
      for (const char* phase : {"expansion", "contraction"}) {
        std::vector<Contour> group;
        for (int k = 0; k < F; ++k) {
          const bool expanding = k <= max_cycle;
          if (expanding == (phase[0] == 'e')) group.push_back((*contours)[k][j]);
        }
        if (group.size() < 3) {
          warn("station " + std::to_string(j) + " " + phase + ": fewer than 3 contours, no PCA");
          continue;
        }
        ShapeModes modes = in_stage("pca", "station " + std::to_string(j) + " " + phase,
                                    [&] { return contour_pca(group, popt); });
        modes.station = j;
        modes.phase = phase;
        a.modes.push_back(std::move(modes));
      }
    }
  }
  return a;
}

OutputSummary run_pipeline(const std::filesystem::path& manifest_path, const PipelineConfig& config,
                           const std::filesystem::path& out_dir, const RunOptions& options) {
  DatasetManifest manifest = in_stage("ingest", manifest_path.string(), [&] { return load_manifest(manifest_path); });
  Dataset data;
  {
    StageTimer timer("ingest", options);
    data = in_stage("ingest", manifest_path.string(), [&] { return ingest(manifest, config.surfaces, options.policy); });
  }
  const ParameterizedDataset grids = parameterize_dataset(data, config, options);
  const Analysis analysis = analyze(grids, data, config, options);
  StageTimer timer("write", options);
  return in_stage("write", out_dir.string(), [&] { return write_outputs(analysis, manifest, config, out_dir); });
}

}  // namespace tubekin
