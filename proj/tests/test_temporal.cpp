#include "tubekin/temporal.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <numbers>

using namespace tubekin;
using tubekin::test::synth_grid;

namespace {

constexpr double kPi = std::numbers::pi;

SurfaceSequence synth_sequence(const TubeSpec& s, SurfaceKind kind, int n = 80, int m = 50) {
  SurfaceSequence seq;
  seq.period = s.period;
  seq.surface = kind;
  for (int k = 0; k < s.frames; ++k) seq.frames.push_back(synth_grid(s, kind, k, n, m));
  return seq;
}

TubeSpec bent_static(int n, int m) {
  TubeSpec s = test::static_spec(0.5, 0.35, 1.5, n, m);
  s.shape = TubeShape::torus;
  s.bend_radius = 1.2;
  return s;
}

TriMesh rotated(const TriMesh& mesh, double angle) {
  TriMesh out = mesh;
  const Eigen::AngleAxisd rot(angle, Vec3::UnitZ());
  for (auto& p : out.vertices) p = rot * p;
  return out;
}

}  // namespace

TEST(SurfaceSequence, ValidatesShapeAndSpacing) {
  TubeSpec s = test::static_spec(0.5, 0.5, 1.0);
  s.frames = 8;
  SurfaceSequence seq = synth_sequence(s, SurfaceKind::outer, 16, 8);
  EXPECT_NO_THROW(seq.validate());
  SurfaceSequence few = seq;
  few.frames.resize(7);
  EXPECT_THROW(few.validate(), InputError);
  SurfaceSequence mixed = seq;
  mixed.frames[3] = GridMesh(16, 9);
  mixed.frames[3].time = seq.frames[3].time;
  EXPECT_THROW(mixed.validate(), InputError);
  SurfaceSequence uneven = seq;
  uneven.frames[5].time += 0.01;
  EXPECT_THROW(uneven.validate(), InputError);
}

TEST(SurfaceSequence, GridVolumeMatchesMeshVolume) {
  TubeSpec s;
  GridMesh g = synth_grid(s, SurfaceKind::outer, 30, 40, 20);
  const double mesh_volume = enclosed_volume(g.to_trimesh());
  SurfaceSequence seq;
  seq.frames = {g};
  EXPECT_NEAR(sequence_volumes(seq, ExecPolicy::serial)[0], mesh_volume, 1e-12 * mesh_volume);
}

TEST(StabilizeSeams, StaticSequenceIsFixedPoint) {
  TriMesh mesh = generate_surface(bent_static(32, 40), SurfaceKind::outer, 0);
  GeodesicPath seam = shortest_boundary_geodesic(mesh);
  std::vector<TriMesh> frames(8, mesh);
  std::vector<GeodesicPath> seams(8, seam);
  auto out = stabilize_seam_endpoints(frames, seams, {}, ExecPolicy::serial);
  const Vec3 a = seam.points.front().position(mesh), b = seam.points.back().position(mesh);
  for (const auto& p : out) {
    EXPECT_LT((p.points.front().position(mesh) - a).norm(), 1e-9);
    EXPECT_LT((p.points.back().position(mesh) - b).norm(), 1e-9);
    EXPECT_NEAR(p.length, seam.length, 1e-9);
  }
}

TEST(StabilizeSeams, SingleFrameJitterReducedThreefold) {
  TriMesh mesh = generate_surface(bent_static(32, 40), SurfaceKind::outer, 0);
  GeodesicPath seam = shortest_boundary_geodesic(mesh);
  const Vec3 start = seam.points.front().position(mesh);
  const Vec3 end = seam.points.back().position(mesh);
  auto [inlet, outlet] = boundary_loops(mesh, LoopLabeling{start});
  LoopPoint lp = closest_point_on_loop(mesh, inlet, start);
  // Move 0.05 mm along the boundary segment holding the start point.
  const Vec3 p0 = mesh.vertices[lp.v0], p1 = mesh.vertices[lp.v1];
  const double seg = (p1 - p0).norm();
  lp.t = lp.t + 0.05 / seg <= 1.0 ? lp.t + 0.05 / seg : lp.t - 0.05 / seg;
  ASSERT_GE(lp.t, 0.0);  // shift stays on the segment
  lp.position = (1.0 - lp.t) * p0 + lp.t * p1;
  const double injected = (lp.position - start).norm();
  ASSERT_NEAR(injected, 0.05, 1e-12);

  MeshTopology topo(mesh);
  const int T = 8, hit = 3;
  std::vector<TriMesh> frames(T, mesh);
  std::vector<GeodesicPath> seams(T, seam);
  seams[hit] = shortest_geodesic_between(mesh, surface_point_on_loop(mesh, topo, lp), seam.points.back());
  auto filtered = filtered_seam_endpoints(frames, seams);
  const double after = (filtered[hit].first - start).norm();
  // The mean of two clean copies and one displaced copy sits a third of the
  // way along the same straight segment.
  EXPECT_GE(injected / after, 3.0 * (1.0 - 1e-9));
  EXPECT_LT((filtered[hit].second - end).norm(), 1e-9);
  auto stabilized = stabilize_seam_endpoints(frames, seams);
  EXPECT_NEAR((stabilized[hit].points.front().position(mesh) - start).norm(), after, 1e-9);
}

TEST(StabilizeSeams, RotatingTubeFollowsRotation) {
  // One vertex step per frame so each frame's loop is the rotated loop.
  const int n = 36, T = 36;
  const double step = 2.0 * kPi / T;
  TriMesh base = generate_surface(bent_static(n, 30), SurfaceKind::outer, 0);
  GeodesicPath seam = shortest_boundary_geodesic(base);
  const Vec3 p = seam.points.front().position(base);
  std::vector<TriMesh> frames;
  for (int k = 0; k < T; ++k) frames.push_back(rotated(base, k * step));
  std::vector<GeodesicPath> seams(T, seam);  // face + barycentric is rotation invariant
  auto filtered = filtered_seam_endpoints(frames, seams);
  // Averaging three points spaced by `step` pulls the mean inward by this much;
  // projection back to the boundary must not move farther than that.
  const double averaging = p.head<2>().norm() * (1.0 - (1.0 + 2.0 * std::cos(step)) / 3.0);
  for (int k = 0; k < T; ++k) {
    const Vec3 expected = Eigen::AngleAxisd(k * step, Vec3::UnitZ()) * p;
    EXPECT_LE((filtered[k].first - expected).norm(), averaging) << "frame " << k;
  }
}

TEST(StabilizeSeams, SerialMatchesParallel) {
  TriMesh mesh = generate_surface(bent_static(24, 30), SurfaceKind::outer, 0);
  std::vector<TriMesh> frames;
  std::vector<GeodesicPath> seams;
  for (int k = 0; k < 8; ++k) {
    frames.push_back(rotated(mesh, 0.01 * std::sin(k)));
    seams.push_back(shortest_boundary_geodesic(frames.back()));
  }
  auto a = stabilize_seam_endpoints(frames, seams, {}, ExecPolicy::serial);
  auto b = stabilize_seam_endpoints(frames, seams, {}, ExecPolicy::parallel);
  for (int k = 0; k < 8; ++k) {
    ASSERT_EQ(a[k].points.size(), b[k].points.size());
    EXPECT_EQ(a[k].length, b[k].length);
  }
}

TEST(CycleAlign, CosineSeriesIsIdentity) {
  const int T = 195;
  std::vector<double> vol(T);
  for (int k = 0; k < T; ++k) vol[k] = 1.0 - 0.2 * std::cos(2.0 * kPi * k / T);
  CyclePhaseMap map = align_cycle_by_volume(vol);
  EXPECT_EQ(map.min_index, 0);
  for (int k = 0; k < T; ++k) {
    EXPECT_EQ(map.cycle_index(k), k);
    EXPECT_DOUBLE_EQ(map.time(k), static_cast<double>(k) / T);
  }
}

TEST(CycleAlign, RotationIsEquivariant) {
  const int T = 195;
  std::vector<double> vol(T);
  for (int k = 0; k < T; ++k) vol[k] = 1.0 - 0.2 * std::cos(2.0 * kPi * k / T);
  for (int shift : {1, 37, 100, 194}) {
    std::vector<double> rot(T);
    for (int k = 0; k < T; ++k) rot[(k + shift) % T] = vol[k];
    CyclePhaseMap map = align_cycle_by_volume(rot);
    EXPECT_EQ(map.min_index, shift);
    EXPECT_EQ(map.cycle_index(shift), 0);
    EXPECT_EQ(map.source_index(0), shift);
  }
}

TEST(CycleAlign, TiesResolveToEarliest) {
  std::vector<double> vol{3, 1, 2, 1 + 1e-12, 5, 1, 4, 2};
  EXPECT_EQ(earliest_argmin(vol), 1);
  EXPECT_EQ(earliest_argmax({1, 5, 2, 5}), 1);
  EXPECT_EQ(align_cycle_by_volume(vol).min_index, 1);
}

TEST(CycleAlign, TwoSegmentWarpPlacesMaximumAtHalf) {
  // Expansion over the first 38% of the cycle (74 of 195 frames).
  const int T = 195, r = 74;
  std::vector<double> vol(T);
  for (int k = 0; k < T; ++k) {
    vol[k] = k <= r ? 1.0 - std::cos(kPi * k / r) : 1.0 + std::cos(kPi * (k - r) / (T - r));
  }
  CyclePhaseMap map = align_cycle_by_volume(vol, true);
  EXPECT_EQ(map.max_index, r);
  EXPECT_NEAR(map.expansion_fraction(), 0.3795, 1e-4);
  EXPECT_DOUBLE_EQ(map.time(0), 0.0);
  EXPECT_DOUBLE_EQ(map.time(r), 0.5);
  EXPECT_DOUBLE_EQ(map.time(r / 2), 0.25);
  EXPECT_NEAR(map.time(r + (T - r) / 2), 0.75, 0.5 / (T - r));
  for (int k = 1; k < T; ++k) EXPECT_GT(map.time(map.source_index(k)), map.time(map.source_index(k - 1)));
  EXPECT_LT(map.time(map.source_index(T - 1)), 1.0);
}

TEST(CycleAlign, ReorderPutsMinimumFirst) {
  TubeSpec s = test::static_spec(0.5, 0.5, 1.0);
  s.frames = 8;
  SurfaceSequence seq = synth_sequence(s, SurfaceKind::outer, 12, 6);
  std::vector<double> vol{5, 4, 3, 1, 2, 6, 7, 8};
  CyclePhaseMap map = align_cycle_by_volume(vol);
  SurfaceSequence out = reorder(seq, map);
  ASSERT_EQ(out.size(), 8);
  EXPECT_EQ(out.frames[0].frame_index, 3);
  EXPECT_EQ(out.frames[5].frame_index, 0);
  for (int k = 0; k < 8; ++k) EXPECT_NEAR(out.frames[k].time, k * s.period / 8, 1e-15);
}

TEST(Clip, ConstantVolumeKeepsWholeTube) {
  TubeSpec s = test::static_spec(0.5, 0.3, 1.2);
  s.frames = 8;
  auto outer = synth_sequence(s, SurfaceKind::outer, 40, 20);
  auto inner = synth_sequence(s, SurfaceKind::inner, 40, 20);
  ClipResult clip = clip_to_constant_volume(outer, inner);
  EXPECT_EQ(clip.reference_frame, 0);
  for (double v : clip.v_c) EXPECT_NEAR(v, 1.0, 1e-9);
}

TEST(Clip, TracksGeneratorTrimCurve) {
  TubeSpec s;
  s.volume_variation = 0.2;
  s.frames = 16;
  auto outer = synth_sequence(s, SurfaceKind::outer);
  auto inner = synth_sequence(s, SurfaceKind::inner);
  ClipResult clip = clip_to_constant_volume(outer, inner);
  EXPECT_EQ(clip.reference_frame, 0);
  EXPECT_DOUBLE_EQ(clip.v_c[0], 1.0);
  double lo = clip.volumes[0], hi = clip.volumes[0];
  for (int k = 0; k < s.frames; ++k) {
    const double expected = oracle_clip_fraction(s, outer.frames[k].time);
    EXPECT_NEAR(clip.v_c[k], expected, 0.01 * expected) << "frame " << k;
    lo = std::min(lo, clip.volumes[k]);
    hi = std::max(hi, clip.volumes[k]);
    EXPECT_EQ(clip.outer.frames[k].m, 50);
  }
  EXPECT_LT((hi - lo) / lo, 0.002);
}

TEST(Clip, AxialStretchToy) {
  TubeSpec a = test::static_spec(0.5, 0.5, 1.0);
  TubeSpec b = a;
  b.length = 1.1;
  SurfaceSequence outer, inner;
  outer.frames = {synth_grid(a, SurfaceKind::outer, 0, 48, 30), synth_grid(b, SurfaceKind::outer, 0, 48, 30)};
  inner.frames = {synth_grid(a, SurfaceKind::inner, 0, 48, 30), synth_grid(b, SurfaceKind::inner, 0, 48, 30)};
  ClipResult clip = clip_to_constant_volume(outer, inner);
  EXPECT_EQ(clip.reference_frame, 0);
  EXPECT_NEAR(clip.v_c[1], 1.0 / 1.1, 1e-6);
  // The inlet end is removed: the clipped tube starts 0.1 mm up.
  EXPECT_NEAR(clip.outer.frames[1].at(0, 0).z(), 0.1, 1e-6);
  EXPECT_NEAR(clip.outer.frames[1].at(0, 29).z(), 1.1, 1e-12);
}

TEST(Clip, NonMonotoneFallsBackToScan) {
  TubeSpec thin = test::static_spec(0.5, 0.5, 1.0);
  thin.wall_fraction = 0.1;
  TubeSpec thick = thin;
  thick.wall_fraction = 0.2;
  SurfaceSequence outer, inner;
  outer.frames = {synth_grid(thin, SurfaceKind::outer, 0, 48, 41), synth_grid(thick, SurfaceKind::outer, 0, 48, 41)};
  inner.frames = {synth_grid(thin, SurfaceKind::inner, 0, 48, 41), synth_grid(thick, SurfaceKind::inner, 0, 48, 41)};
  // Push part of the thick frame's inner wall outside the outer wall.
  GridMesh& bad = inner.frames[1];
  for (int j = 24; j <= 28; ++j)
    for (int i = 0; i < bad.n; ++i) bad.at(i, j).head<2>() *= 0.55 / 0.4;
  ClipResult clip = clip_to_constant_volume(outer, inner);
  EXPECT_EQ(clip.reference_frame, 0);
  EXPECT_LT(clip.v_c[1], 1.0);
  EXPECT_NEAR(clip.volumes[1], clip.target, 1e-3 * clip.target);
}

TEST(Clip, SerialMatchesParallel) {
  TubeSpec s;
  s.volume_variation = 0.2;
  s.frames = 8;
  auto outer = synth_sequence(s, SurfaceKind::outer, 40, 20);
  auto inner = synth_sequence(s, SurfaceKind::inner, 40, 20);
  ClipResult a = clip_to_constant_volume(outer, inner, {}, ExecPolicy::serial);
  ClipResult b = clip_to_constant_volume(outer, inner, {}, ExecPolicy::parallel);
  EXPECT_EQ(a.v_c, b.v_c);
  EXPECT_EQ(a.volumes, b.volumes);
}
