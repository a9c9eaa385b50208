#pragma once

#include "tubekin/geodesic.hpp"
#include "tubekin/mesh_core.hpp"
#include "tubekin/parameterize.hpp"

#include <vector>

namespace tubekin {

/// Grid frames of one surface over a cardiac cycle.
struct SurfaceSequence {
  std::vector<GridMesh> frames;
  double period = 0.4;  // s
  SurfaceKind surface = SurfaceKind::outer;

  int size() const { return static_cast<int>(frames.size()); }
  int n() const { return frames.empty() ? 0 : frames.front().n; }
  int m() const { return frames.empty() ? 0 : frames.front().m; }
  double frame_spacing() const { return period / std::max(1, size()); }

  /// Throws InputError unless there are at least `min_frames` frames sharing
  /// one grid size at uniform time spacing.
  void validate(int min_frames = 8) const;
};

/// Replaces each seam endpoint by the boundary projection of the mean of its
/// own and its two cyclic neighbours' positions, then recomputes the geodesic.
/// One pass; every frame reads the unfiltered endpoints.
std::vector<GeodesicPath> stabilize_seam_endpoints(const std::vector<TriMesh>& frames,
                                                   const std::vector<GeodesicPath>& seams,
                                                   const GeodesicOptions& options = {},
                                                   ExecPolicy policy = ExecPolicy::parallel);

/// Filtered endpoint positions only (no geodesic), for inspection.
std::vector<std::pair<Vec3, Vec3>> filtered_seam_endpoints(const std::vector<TriMesh>& frames,
                                                           const std::vector<GeodesicPath>& seams);

/// Source frame index -> normalized cycle time in [0, 1).
struct CyclePhaseMap {
  int frames = 0;
  int min_index = 0;  // source frame placed at t = 0
  int max_index = 0;  // source frame of maximum volume
  bool two_segment = false;

  /// Position in cycle order (0 for the minimum-volume frame).
  int cycle_index(int source) const { return ((source - min_index) % frames + frames) % frames; }
  int source_index(int cycle) const { return ((cycle + min_index) % frames + frames) % frames; }
  double time(int source) const;
  /// Fraction of the cycle between minimum and maximum volume.
  double expansion_fraction() const;
};

/// Earliest index among values within 1e-9 (relative) of the extremum.
int earliest_argmin(const std::vector<double>& values);
int earliest_argmax(const std::vector<double>& values);

CyclePhaseMap align_cycle_by_volume(const std::vector<double>& volumes, bool two_segment = false);
CyclePhaseMap align_cycle_by_volume(const SurfaceSequence& outer, bool two_segment = false);

/// Frames in cycle order, with times set from the map.
SurfaceSequence reorder(const SurfaceSequence& sequence, const CyclePhaseMap& map);

/// Enclosed volume of every frame (grid closed by centroid fans).
std::vector<double> sequence_volumes(const SurfaceSequence& sequence, ExecPolicy policy = ExecPolicy::parallel);

struct ClipOptions {
  double tolerance = 1e-3;     // relative volume error accepted
  int scan_samples = 2000;     // fallback scan resolution over v_c
};

/// Clipping removes the inlet (ventricular) end: the kept domain is
/// v in [1 - v_c, 1], re-resampled to the full grid height.
struct ClipResult {
  std::vector<double> v_c;
  std::vector<double> volumes;  // layer volume of each clipped frame
  double target = 0.0;
  int reference_frame = 0;      // minimum layer volume, v_c = 1
  SurfaceSequence outer;
  SurfaceSequence inner;
};

/// Layer volume between the outer and inner grids restricted to rows with
/// v >= 1 - fraction; the cut row is interpolated.
double clipped_layer_volume(const GridMesh& outer, const GridMesh& inner, double fraction);

/// The same grid on v in [v0, v1], resampled to `m` rows.
GridMesh restrict_rows(const GridMesh& grid, double v0, double v1, int m);

ClipResult clip_to_constant_volume(const SurfaceSequence& outer, const SurfaceSequence& inner,
                                   const ClipOptions& options = {}, ExecPolicy policy = ExecPolicy::parallel);

}  // namespace tubekin
