#pragma once

#include "tubekin/config.hpp"
#include "tubekin/dataset.hpp"
#include "tubekin/kinematics.hpp"
#include "tubekin/shape.hpp"
#include "tubekin/temporal.hpp"

#include <array>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace tubekin {

/// Any failure inside a pipeline stage, with the stage name and the frame or
/// station being processed.
class StageError : public Error {
 public:
  StageError(const std::string& stage, const std::string& context, const std::string& what)
      : Error((context.empty() ? what : context + ": " + what), stage), context_(context) {}
  const std::string& context() const { return context_; }

 private:
  std::string context_;
};

struct RunOptions {
  ExecPolicy policy = ExecPolicy::parallel;
  std::function<void(const std::string& stage, double seconds)> on_stage;  // progress, after each stage
};

struct ParameterizedDataset {
  std::array<SurfaceSequence, 3> grids;  // source frame order; empty if not used
  std::vector<GeodesicPath> outer_seams;   // stabilized
  std::vector<GeodesicPath> lumen_seams;

  const SurfaceSequence& surface(SurfaceKind s) const { return grids[static_cast<int>(s)]; }
  bool has(SurfaceKind s) const { return surface(s).size() > 0; }
};

/// validate -> geodesics -> stabilize -> flatten -> resample. Outer and lumen
/// frames are parameterized on their own seams (the lumen seam joins the
/// points nearest the outer seam ends); inner grids are projections of the
/// outer grid.
ParameterizedDataset parameterize_dataset(const Dataset& data, const PipelineConfig& config,
                                          const RunOptions& options = {});

struct Table1Row {
  double expand_percent = 0.0;
  double contract_percent = 0.0;
  double ratio = 0.0;
  double period_ms = 0.0;
  double expand_ms = 0.0;
  double contract_ms = 0.0;
  double speed_min = 0.0, speed_max = 0.0, speed_avg = 0.0, speed_std = 0.0, speed_cycle = 0.0;
};

Table1Row table1_row(const PhaseRatios& phase, const WaveStats& wave);

/// `Subject & 38.27% & 61.73% & .61 & 372 & 142 & 230 & 3.3601 & ...`:
/// percentages to two decimals, ratio truncated, ms rounded, speeds to five
/// significant digits.
std::string format_table1_row(const std::string& subject, const Table1Row& row);
std::string table1_header();

/// Per-station summary of one surface's area rows over the cycle. NaN where
/// a section is missing or the row is flat.
struct AreaProfile {
  SurfaceKind surface = SurfaceKind::outer;
  std::vector<double> max_area, min_area;
  std::vector<double> threshold_area;  // band_fraction * max
  std::vector<double> sigma_area;      // fitted curve at peak +- sigma
  std::vector<double> peak_time;       // s, cycle order
};

AreaProfile area_profile(SurfaceKind surface, const AreaImage& image, const PeakTimes& peaks,
                         const std::vector<ExpansionBand>& bands, double band_fraction);

struct Analysis {
  // Cycle order: index k is cycle position k, source frame cycle.source_index(k).
  CyclePhaseMap cycle;
  std::vector<double> volumes;  // outer enclosed volume, source order
  std::vector<double> layer_volumes;  // source order; empty without inner
  std::optional<ClipResult> clip;     // cycle order

  SurfaceSequence outer, inner, lumen;  // Eulerian, cycle order
  std::vector<std::vector<Contour>> sections;  // [k][j], outer, Eulerian
  AreaImage area;
  PeakTimes peaks;
  std::vector<ExpansionBand> bands;
  ExpandedFraction expanded;
  GradientImage gradient;
  WaveStats wave;
  PhaseRatios phase;
  Table1Row table1;
  std::vector<AreaProfile> profiles;  // outer, then inner and lumen when loaded

  std::vector<CurvatureImage> radial, radial_normalized;          // outer, per frame
  std::vector<CurvatureImage> lumen_mean, lumen_mean_normalized;  // sampled from the lumen frame meshes
  std::vector<StrainField> strain;  // outer, reference = cycle frame 0
  std::vector<ShapeModes> modes;    // per station and phase, from clipped contours when clipping
  bool lagrangian_contours = false;
};

/// Everything after parameterization: align cycle -> clip -> sections ->
/// area image and its analyses -> curvature -> strain -> contour PCA.
Analysis analyze(const ParameterizedDataset& grids, const Dataset& data, const PipelineConfig& config,
                 const RunOptions& options = {});

struct OutputSummary {
  std::vector<std::string> files;  // relative to the output directory, in write order
  int nan_cells = 0;
};

/// PNG images, CSV tables, table1.txt and summary.json.
OutputSummary write_outputs(const Analysis& analysis, const DatasetManifest& manifest, const PipelineConfig& config,
                            const std::filesystem::path& dir);

/// Grid meshes as binary PLY under grids/ plus quality.csv (spacing
/// variation, seam deviation, flagged nodes per frame).
OutputSummary write_grids(const ParameterizedDataset& grids, const Dataset& data, const std::filesystem::path& dir);

/// ingest -> parameterize_dataset -> analyze -> write_outputs.
OutputSummary run_pipeline(const std::filesystem::path& manifest_path, const PipelineConfig& config,
                           const std::filesystem::path& out_dir, const RunOptions& options = {});

}  // namespace tubekin
