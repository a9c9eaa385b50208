#include "tubekin/temporal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace tubekin {

namespace {

// Signed volume of a tube given by rows of n points, closed by centroid fans.
// Rows follow the grid triangulation, so outward grids give a positive value.
double rows_volume(const std::vector<const Vec3*>& rows, int n) {
  auto tri = [](const Vec3& a, const Vec3& b, const Vec3& c) { return a.dot(b.cross(c)); };
  double six = 0.0;
  for (size_t j = 0; j + 1 < rows.size(); ++j) {
    const Vec3* r0 = rows[j];
    const Vec3* r1 = rows[j + 1];
    for (int i = 0; i < n; ++i) {
      const int k = (i + 1) % n;
      six += tri(r0[i], r0[k], r1[k]);
      six += tri(r0[i], r1[k], r1[i]);
    }
  }
  auto centroid = [n](const Vec3* r) {
    Vec3 c = Vec3::Zero();
    for (int i = 0; i < n; ++i) c += r[i];
    return Vec3(c / n);
  };
  const Vec3* bottom = rows.front();
  const Vec3* top = rows.back();
  const Vec3 cb = centroid(bottom), ct = centroid(top);
  for (int i = 0; i < n; ++i) {
    const int k = (i + 1) % n;
    six += tri(cb, bottom[k], bottom[i]);
    six += tri(ct, top[i], top[k]);
  }
  return six / 6.0;
}

std::vector<Vec3> interpolated_row(const GridMesh& g, double v) {
  std::vector<Vec3> row(g.n);
  for (int i = 0; i < g.n; ++i) row[i] = g.sample(static_cast<double>(i) / g.n, v);
  return row;
}

double clipped_volume(const GridMesh& g, double fraction) {
  const double v0 = 1.0 - std::clamp(fraction, 0.0, 1.0);
  std::vector<Vec3> cut = interpolated_row(g, v0);
  std::vector<const Vec3*> rows{cut.data()};
  for (int j = 0; j < g.m; ++j) {
    const double v = static_cast<double>(j) / (g.m - 1);
    if (v > v0 + 1e-12) rows.push_back(&g.points[static_cast<size_t>(j) * g.n]);
  }
  if (rows.size() < 2) return 0.0;
  return rows_volume(rows, g.n);
}

int earliest_extremum(const std::vector<double>& values, bool minimum) {
  if (values.empty()) throw InputError("empty series", "align_cycle_by_volume");
  double best = values[0];
  for (double x : values) best = minimum ? std::min(best, x) : std::max(best, x);
  const double tol = 1e-9 * std::max(1.0, std::abs(best));
  for (size_t k = 0; k < values.size(); ++k)
    if (std::abs(values[k] - best) <= tol) return static_cast<int>(k);
  return 0;
}

}  // namespace

void SurfaceSequence::validate(int min_frames) const {
  const char* stage = "SurfaceSequence";
  if (size() < min_frames) {
    throw InputError("sequence has " + std::to_string(size()) + " frames, need at least " + std::to_string(min_frames),
                     stage);
  }
  if (!(period > 0.0)) throw InputError("period must be positive", stage);
  for (const auto& f : frames) {
    if (f.n != n() || f.m != m()) throw InputError("frames do not share one grid size", stage);
  }
  const double dt = frame_spacing();
  for (int k = 1; k < size(); ++k) {
    const double step = frames[k].time - frames[k - 1].time;
    if (std::abs(step - dt) > 1e-6 * period) {
      throw InputError("non-uniform time spacing at frame " + std::to_string(k), stage);
    }
  }
}

std::vector<std::pair<Vec3, Vec3>> filtered_seam_endpoints(const std::vector<TriMesh>& frames,
                                                           const std::vector<GeodesicPath>& seams) {
  const char* stage = "stabilize_seam_endpoints";
  const int T = static_cast<int>(frames.size());
  if (T == 0 || seams.size() != frames.size()) throw InputError("one seam per frame required", stage);
  std::vector<Vec3> start(T), end(T);
  for (int k = 0; k < T; ++k) {
    if (seams[k].points.size() < 2) throw InputError("seam of frame " + std::to_string(k) + " is empty", stage);
    start[k] = seams[k].points.front().position(frames[k]);
    end[k] = seams[k].points.back().position(frames[k]);
  }
  std::vector<std::pair<Vec3, Vec3>> out(T);
  for (int k = 0; k < T; ++k) {
    const int a = (k + T - 1) % T, b = (k + 1) % T;
    const Vec3 s = (start[a] + start[k] + start[b]) / 3.0;
    const Vec3 e = (end[a] + end[k] + end[b]) / 3.0;
    LoopLabeling labels;
    labels.inlet_hint = start[k];
    auto [inlet, outlet] = boundary_loops(frames[k], labels);
    out[k] = {closest_point_on_loop(frames[k], inlet, s).position, closest_point_on_loop(frames[k], outlet, e).position};
  }
  return out;
}

std::vector<GeodesicPath> stabilize_seam_endpoints(const std::vector<TriMesh>& frames,
                                                   const std::vector<GeodesicPath>& seams,
                                                   const GeodesicOptions& options, ExecPolicy policy) {
  const char* stage = "stabilize_seam_endpoints";
  const int T = static_cast<int>(frames.size());
  if (T == 0 || seams.size() != frames.size()) throw InputError("one seam per frame required", stage);
  std::vector<Vec3> start(T), end(T);
  for (int k = 0; k < T; ++k) {
    if (seams[k].points.size() < 2) throw InputError("seam of frame " + std::to_string(k) + " is empty", stage);
    start[k] = seams[k].points.front().position(frames[k]);
    end[k] = seams[k].points.back().position(frames[k]);
  }
  std::vector<GeodesicPath> out(T);
  std::vector<std::string> errors(T);
#pragma omp parallel for schedule(dynamic) if (policy == ExecPolicy::parallel)
  for (int k = 0; k < T; ++k) {
    try {
      const int a = (k + T - 1) % T, b = (k + 1) % T;
      LoopLabeling labels;
      labels.inlet_hint = start[k];
      auto [inlet, outlet] = boundary_loops(frames[k], labels);
      MeshTopology topo(frames[k]);
      const LoopPoint s = closest_point_on_loop(frames[k], inlet, (start[a] + start[k] + start[b]) / 3.0);
      const LoopPoint e = closest_point_on_loop(frames[k], outlet, (end[a] + end[k] + end[b]) / 3.0);
      out[k] = shortest_geodesic_between(frames[k], surface_point_on_loop(frames[k], topo, s),
                                         surface_point_on_loop(frames[k], topo, e), options);
    } catch (const std::exception& ex) {
      errors[k] = ex.what();
    }
  }
  for (int k = 0; k < T; ++k) {
    if (!errors[k].empty()) throw GeometryError("frame " + std::to_string(k) + ": " + errors[k], stage);
  }
  return out;
}

double CyclePhaseMap::time(int source) const {
  const int k = cycle_index(source);
  if (!two_segment) return static_cast<double>(k) / frames;
  const int r = cycle_index(max_index);
  if (r <= 0 || r >= frames) return static_cast<double>(k) / frames;
  if (k <= r) return 0.5 * k / r;
  return 0.5 + 0.5 * (k - r) / static_cast<double>(frames - r);
}

double CyclePhaseMap::expansion_fraction() const {
  return frames > 0 ? static_cast<double>(cycle_index(max_index)) / frames : 0.0;
}

int earliest_argmin(const std::vector<double>& values) { return earliest_extremum(values, true); }
int earliest_argmax(const std::vector<double>& values) { return earliest_extremum(values, false); }

CyclePhaseMap align_cycle_by_volume(const std::vector<double>& volumes, bool two_segment) {
  CyclePhaseMap map;
  map.frames = static_cast<int>(volumes.size());
  map.min_index = earliest_argmin(volumes);
  // The maximum is searched in cycle order so ties resolve to the earliest
  // frame after the minimum.
  std::vector<double> cyclic(volumes.size());
  for (int k = 0; k < map.frames; ++k) cyclic[k] = volumes[map.source_index(k)];
  map.max_index = map.source_index(earliest_argmax(cyclic));
  map.two_segment = two_segment;
  return map;
}

std::vector<double> sequence_volumes(const SurfaceSequence& sequence, ExecPolicy policy) {
  std::vector<double> out(sequence.size());
#pragma omp parallel for schedule(static) if (policy == ExecPolicy::parallel)
  for (int k = 0; k < sequence.size(); ++k) out[k] = clipped_volume(sequence.frames[k], 1.0);
  return out;
}

CyclePhaseMap align_cycle_by_volume(const SurfaceSequence& outer, bool two_segment) {
  outer.validate();
  return align_cycle_by_volume(sequence_volumes(outer), two_segment);
}

SurfaceSequence reorder(const SurfaceSequence& sequence, const CyclePhaseMap& map) {
  if (map.frames != sequence.size()) throw InputError("phase map does not match the sequence", "reorder");
  SurfaceSequence out;
  out.period = sequence.period;
  out.surface = sequence.surface;
  out.frames.reserve(sequence.size());
  for (int k = 0; k < sequence.size(); ++k) {
    const int src = map.source_index(k);
    GridMesh g = sequence.frames[src];
    g.time = map.time(src) * sequence.period;
    out.frames.push_back(std::move(g));
  }
  return out;
}

double clipped_layer_volume(const GridMesh& outer, const GridMesh& inner, double fraction) {
  return clipped_volume(outer, fraction) - clipped_volume(inner, fraction);
}

GridMesh restrict_rows(const GridMesh& grid, double v0, double v1, int m) {
  GridMesh out(grid.n, m);
  out.frame_index = grid.frame_index;
  out.time = grid.time;
  out.surface = grid.surface;
  for (int j = 0; j < m; ++j) {
    const double v = v0 + (v1 - v0) * j / (m - 1);
    const double y = std::clamp(v, 0.0, 1.0) * (grid.m - 1);
    const int j0 = std::min(static_cast<int>(std::floor(y)), grid.m - 2);
    for (int i = 0; i < grid.n; ++i) {
      out.at(i, j) = grid.sample(static_cast<double>(i) / grid.n, v);
      out.flagged[static_cast<size_t>(j) * grid.n + i] =
          grid.flagged[static_cast<size_t>(j0) * grid.n + i] | grid.flagged[static_cast<size_t>(j0 + 1) * grid.n + i];
    }
  }
  return out;
}

ClipResult clip_to_constant_volume(const SurfaceSequence& outer, const SurfaceSequence& inner,
                                   const ClipOptions& options, ExecPolicy policy) {
  const char* stage = "clip_to_constant_volume";
  const int T = outer.size();
  if (T == 0 || inner.size() != T) throw InputError("outer and inner sequences must have the same frame count", stage);
  for (int k = 0; k < T; ++k) {
    if (outer.frames[k].n != inner.frames[k].n || outer.frames[k].m != inner.frames[k].m) {
      throw InputError("outer and inner grids differ in size at frame " + std::to_string(k), stage);
    }
  }
  ClipResult res;
  std::vector<double> full(T);
  for (int k = 0; k < T; ++k) full[k] = clipped_layer_volume(outer.frames[k], inner.frames[k], 1.0);
  res.reference_frame = earliest_argmin(full);
  res.target = full[res.reference_frame];
  if (!(res.target > 0.0)) throw GeometryError("non-positive layer volume; surfaces not nested", stage);
  res.v_c.assign(T, 1.0);
  res.volumes.assign(T, 0.0);
  res.outer.period = outer.period;
  res.outer.surface = outer.surface;
  res.inner.period = inner.period;
  res.inner.surface = inner.surface;
  res.outer.frames.resize(T);
  res.inner.frames.resize(T);

  std::vector<std::string> errors(T);
  std::vector<char> scanned(T, 0);
#pragma omp parallel for schedule(dynamic) if (policy == ExecPolicy::parallel)
  for (int k = 0; k < T; ++k) {
    const GridMesh& o = outer.frames[k];
    const GridMesh& in = inner.frames[k];
    auto excess = [&](double f) { return clipped_layer_volume(o, in, f) - res.target; };
    double vc = 1.0;
    if (k != res.reference_frame) {
      // Monotonicity over the grid stations.
      bool monotone = true;
      double prev = -std::numeric_limits<double>::infinity();
      for (int j = o.m - 1; j >= 0; --j) {
        const double f = 1.0 - static_cast<double>(j) / (o.m - 1);
        const double x = excess(f);
        if (x < prev - 1e-12 * res.target) monotone = false;
        prev = x;
      }
      double lo = 0.0, hi = 1.0;
      if (!monotone) {
        // Largest fraction whose volume still reaches no further than the target.
        scanned[k] = 1;
        const int N = std::max(2, options.scan_samples);
        double f_hi = 1.0, x_hi = excess(1.0);
        for (int s = N - 1; s >= 0; --s) {
          const double f = static_cast<double>(s) / N;
          const double x = excess(f);
          if (x <= 0.0 && x_hi >= 0.0) {
            lo = f;
            hi = f_hi;
            break;
          }
          f_hi = f;
          x_hi = x;
        }
      }
      if (excess(hi) < 0.0 && std::abs(excess(hi)) > options.tolerance * res.target) {
        errors[k] = "target volume unreachable (v_c would exceed 1)";
        continue;
      }
      for (int it = 0; it < 100 && hi - lo > 1e-13; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (excess(mid) < 0.0) lo = mid;
        else hi = mid;
      }
      vc = 0.5 * (lo + hi);
      if (std::abs(excess(vc)) > options.tolerance * res.target) {
        errors[k] = "no clip fraction meets the volume tolerance";
        continue;
      }
    }
    res.v_c[k] = vc;
    res.outer.frames[k] = vc < 1.0 ? restrict_rows(o, 1.0 - vc, 1.0, o.m) : o;
    res.inner.frames[k] = vc < 1.0 ? restrict_rows(in, 1.0 - vc, 1.0, in.m) : in;
    res.volumes[k] = clipped_layer_volume(res.outer.frames[k], res.inner.frames[k], 1.0);
  }
  for (int k = 0; k < T; ++k) {
    if (!errors[k].empty()) throw GeometryError("frame " + std::to_string(k) + ": " + errors[k], stage);
    if (scanned[k]) warn("frame " + std::to_string(k) + ": clipped volume not monotone, used scan fallback");
  }
  return res;
}

}  // namespace tubekin
