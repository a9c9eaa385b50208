#include "tubekin/parameterize.hpp"
#include "tubekin/spatial.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <numbers>
#include <random>

using namespace tubekin;
using tubekin::test::cylinder;

namespace {

constexpr double kPi = std::numbers::pi;

LoopLabeling inlet_low() { return LoopLabeling{Vec3(0, 0, -1)}; }

int euler(const TriMesh& mesh) {
  MeshTopology topo(mesh);
  int used = 0;
  for (int v = 0; v < mesh.num_vertices(); ++v) used += !topo.vertex_faces(v).empty();
  return used - topo.num_edges() + mesh.num_triangles();
}

// Seam through the vertex column i = 0 of a synthetic tube mesh.
GeodesicPath column_seam(const TriMesh& mesh, int n, int rows) {
  MeshTopology topo(mesh);
  GeodesicPath path;
  for (int j = 0; j <= rows; ++j) path.points.push_back(SurfacePoint::at_vertex(mesh, topo, j * n));
  return path;
}

TubeSpec bent_taper() {
  TubeSpec s = test::static_spec(0.5, 0.3, 1.5, 48, 40);
  s.shape = TubeShape::torus;
  s.bend_radius = 1.2;
  return s;
}

}  // namespace

TEST(Cut, CylinderBecomesDisk) {
  TriMesh mesh = cylinder(0.5, 1.0, 32, 16);
  auto seam = shortest_boundary_geodesic(mesh, inlet_low());
  CutMesh cut = cut_along_geodesic(mesh, seam);
  EXPECT_EQ(euler(cut.mesh), 1);
  EXPECT_EQ(MeshTopology(cut.mesh).boundary_loops(cut.mesh).size(), 1u);
  EXPECT_GE(cut.mesh.num_triangles(), mesh.num_triangles());
  EXPECT_NEAR(cut.mesh.total_area(), mesh.total_area(), 1e-12);
}

TEST(Cut, TorusWithCrossingSeamBecomesDisk) {
  TriMesh mesh = generate_surface(bent_taper(), SurfaceKind::outer, 0);
  auto seam = shortest_boundary_geodesic(mesh);
  CutMesh cut = cut_along_geodesic(mesh, seam);
  EXPECT_EQ(euler(cut.mesh), 1);
  EXPECT_EQ(cut.seam.size(), cut.seam_twin.size());
  EXPECT_NEAR(cut.mesh.total_area(), mesh.total_area(), 1e-10);
}

TEST(Cut, DiskInputRejected) {
  TriMesh mesh = cylinder(0.5, 1.0, 16, 8);
  CutMesh cut = cut_along_geodesic(mesh, column_seam(mesh, 16, 8));
  EXPECT_THROW(cut_along_geodesic(cut.mesh, column_seam(mesh, 16, 8)), TopologyError);
}

TEST(Cut, SelfIntersectingSeamRejected) {
  TriMesh mesh = cylinder(0.5, 1.0, 16, 8);
  MeshTopology topo(mesh);
  GeodesicPath path = column_seam(mesh, 16, 8);
  path.points.insert(path.points.begin() + 5, SurfacePoint::at_vertex(mesh, topo, 2 * 16));
  EXPECT_THROW(cut_along_geodesic(mesh, path), GeometryError);
}

TEST(Flatten, DevelopableCylinderIsIsometric) {
  const int n = 32, rows = 16;
  const double L = 1.0;
  TriMesh mesh = cylinder(0.5, L, n, rows);
  FlattenedFrame flat = flatten_to_unit_square(cut_along_geodesic(mesh, column_seam(mesh, n, rows)));
  EXPECT_EQ(flat.flipped_triangles(), 0);
  const auto& cm = flat.cut.mesh;
  for (int v = 0; v < cm.num_vertices(); ++v) {
    const Vec3& p = cm.vertices[v];
    double u = std::atan2(p.y(), p.x()) / (2 * kPi);
    if (u < 0) u += 1.0;
    if (std::find(flat.cut.seam.begin(), flat.cut.seam.end(), v) != flat.cut.seam.end() ||
        std::find(flat.cut.seam_twin.begin(), flat.cut.seam_twin.end(), v) != flat.cut.seam_twin.end()) {
      EXPECT_TRUE(flat.uv[v].x() == 0.0 || flat.uv[v].x() == 1.0);
      continue;
    }
    EXPECT_NEAR(flat.uv[v].x(), u, 1e-3) << v;
    EXPECT_NEAR(flat.uv[v].y(), p.z() / L, 1e-3) << v;
  }
}

TEST(Flatten, AreaProportionalOnFrustum) {
  const int n = 48, rows = 32;
  TubeSpec s = test::static_spec(0.5, 0.4, 1.0, n, rows);
  TriMesh mesh = generate_surface(s, SurfaceKind::outer, 0);
  GridMesh g = resample_grid(flatten_to_unit_square(cut_along_geodesic(mesh, column_seam(mesh, n, rows))), 80, 50);
  // Every grid cell has parameter area 1/(80*49); its share of the surface
  // area should match.
  TriMesh cells = g.to_trimesh();
  const double total = cells.total_area();
  const int count = 80 * 49;
  double worst = 0.0;
  for (int c = 0; c < count; ++c) {
    const double share = (cells.face_area(2 * c) + cells.face_area(2 * c + 1)) / total;
    worst = std::max(worst, std::abs(share * count - 1.0));
  }
  EXPECT_LT(worst, 0.05);
}

TEST(Flatten, StableUnderInteriorJitter) {
  const int n = 64, rows = 32;
  TriMesh mesh = cylinder(0.5, 1.0, n, rows);
  const double edge = mesh.mean_edge_length();
  MeshTopology topo(mesh);
  auto a = flatten_to_unit_square(cut_along_geodesic(mesh, column_seam(mesh, n, rows)));
  for (unsigned seed : {1u, 2u, 3u}) {
    TriMesh jittered = mesh;
    std::mt19937 rng(seed);
    std::normal_distribution<double> noise(0.0, 0.1 * edge);
    for (int v = 0; v < mesh.num_vertices(); ++v) {
      if (topo.is_boundary_vertex(v) || v % n == 0) continue;  // keep seam and boundary
      jittered.vertices[v] += Vec3(noise(rng), noise(rng), noise(rng));
    }
    auto b = flatten_to_unit_square(cut_along_geodesic(jittered, column_seam(jittered, n, rows)));
    ASSERT_EQ(a.uv.size(), b.uv.size());
    double worst = 0.0;
    for (size_t v = 0; v < a.uv.size(); ++v) worst = std::max(worst, (a.uv[v] - b.uv[v]).cwiseAbs().maxCoeff());
    EXPECT_LT(worst, 0.02) << "seed " << seed;
    EXPECT_EQ(b.flipped_triangles(), 0) << "seed " << seed;
  }
}

TEST(Resample, CylinderFourByTwo) {
  const int n = 64, rows = 8;
  const double r = 0.5, L = 1.0;
  TriMesh mesh = cylinder(r, L, n, rows);
  GridMesh g = resample_grid(flatten_to_unit_square(cut_along_geodesic(mesh, column_seam(mesh, n, rows))), 4, 2);
  ASSERT_EQ(g.points.size(), 8u);
  for (int j = 0; j < 2; ++j) {
    for (int i = 0; i < 4; ++i) {
      const Vec3& p = g.at(i, j);
      const double psi = 2 * kPi * i / 4;
      EXPECT_NEAR(p.x(), r * std::cos(psi), 1e-9);
      EXPECT_NEAR(p.y(), r * std::sin(psi), 1e-9);
      EXPECT_NEAR(p.z(), L * j, 1e-9);
    }
  }
}

TEST(Resample, DefaultGridOnSurface) {
  TriMesh mesh = generate_surface(bent_taper(), SurfaceKind::outer, 0);
  GridMesh g = parameterize_frame(mesh, shortest_boundary_geodesic(mesh), 80, 50, SurfaceKind::outer);
  ASSERT_EQ(g.points.size(), 4000u);
  TriangleTree tree(mesh);
  const double tol = 1e-6 * mesh.bbox_diagonal();
  for (const auto& p : g.points) EXPECT_LT(tree.closest(p).distance, tol);
}

TEST(Resample, Idempotent) {
  TriMesh mesh = generate_surface(bent_taper(), SurfaceKind::outer, 0);
  GridMesh g = parameterize_frame(mesh, shortest_boundary_geodesic(mesh), 80, 50, SurfaceKind::outer);
  TriMesh gm = g.to_trimesh();
  GridMesh g2 = parameterize_frame(gm, shortest_boundary_geodesic(gm), 80, 50, SurfaceKind::outer);
  double worst = 0.0;
  for (size_t k = 0; k < g.points.size(); ++k) worst = std::max(worst, (g.points[k] - g2.points[k]).norm());
  EXPECT_LT(worst, 1e-3 * mesh.bbox_diagonal());
}

TEST(Resample, SeamColumnFollowsGeodesic) {
  TriMesh mesh = generate_surface(bent_taper(), SurfaceKind::outer, 0);
  auto seam = shortest_boundary_geodesic(mesh);
  GridMesh g = parameterize_frame(mesh, seam, 80, 50, SurfaceKind::outer);
  auto poly = seam.polyline(mesh);
  auto dist_to_poly = [&](const Vec3& p) {
    double best = 1e300;
    for (size_t i = 0; i + 1 < poly.size(); ++i) {
      Vec3 d = poly[i + 1] - poly[i];
      double t = std::clamp((p - poly[i]).dot(d) / d.squaredNorm(), 0.0, 1.0);
      best = std::min(best, (poly[i] + t * d - p).norm());
    }
    return best;
  };
  double h = 0.0;
  for (int j = 0; j < g.m; ++j) h = std::max(h, dist_to_poly(g.at(0, j)));
  EXPECT_LT(h, mesh.mean_edge_length());
}

TEST(Resample, ToTrimeshIsOutwardTube) {
  TriMesh mesh = generate_surface(bent_taper(), SurfaceKind::outer, 0);
  GridMesh g = parameterize_frame(mesh, shortest_boundary_geodesic(mesh), 40, 20, SurfaceKind::outer);
  auto report = validate_topology(g.to_trimesh());
  EXPECT_TRUE(report.passes) << report.message;
}

TEST(ProjectToInner, CoaxialIsRadialScaling) {
  const int n = 64, rows = 8;
  TriMesh outer = cylinder(0.5, 1.0, n, rows);
  TriMesh inner = cylinder(0.3, 1.0, 256, rows);
  GridMesh g = resample_grid(flatten_to_unit_square(cut_along_geodesic(outer, column_seam(outer, n, rows))), 40, 9);
  GridMesh p = project_to_inner(g, inner);
  EXPECT_EQ(p.flagged_count(), 0);
  for (size_t k = 0; k < g.points.size(); ++k) {
    EXPECT_NEAR(p.points[k].z(), g.points[k].z(), 1e-12);
    EXPECT_NEAR(p.points[k].head<2>().norm(), 0.3, 1e-3);
    double da = std::atan2(p.points[k].y(), p.points[k].x()) - std::atan2(g.points[k].y(), g.points[k].x());
    EXPECT_NEAR(std::remainder(da, 2 * kPi), 0.0, 0.01);
  }
}

TEST(ProjectToInner, SyntheticPairMatchesAnalyticInner) {
  TubeSpec s;
  s.frames = 4;
  s.circumferential = 64;
  s.longitudinal = 48;
  TriMesh outer = generate_surface(s, SurfaceKind::outer, 1);
  TriMesh inner = generate_surface(s, SurfaceKind::inner, 1);
  GridMesh g = parameterize_frame(outer, shortest_boundary_geodesic(outer), 80, 50, SurfaceKind::outer);
  GridMesh p = project_to_inner(g, inner);
  for (const auto& q : p.points) {
    double v = q.z() / s.length;
    double ri = oracle_radius(s, SurfaceKind::inner, v, outer.time);
    EXPECT_LT(std::abs(q.head<2>().norm() - ri), 1e-3);
  }
}

TEST(ProjectToInner, SelfProjectionIsIdentity) {
  TriMesh mesh = generate_surface(bent_taper(), SurfaceKind::outer, 0);
  GridMesh g = parameterize_frame(mesh, shortest_boundary_geodesic(mesh), 40, 20, SurfaceKind::outer);
  GridMesh p = project_to_inner(g, mesh);
  for (size_t k = 0; k < g.points.size(); ++k) EXPECT_LT((p.points[k] - g.points[k]).norm(), 1e-12);
}

TEST(ProjectToInner, FarNodesFlagged) {
  TriMesh outer = cylinder(0.5, 1.0, 32, 8);
  TriMesh inner = cylinder(0.2, 1.0, 32, 8);
  GridMesh g = resample_grid(flatten_to_unit_square(cut_along_geodesic(outer, column_seam(outer, 32, 8))), 16, 5);
  GridMesh p = project_to_inner(g, inner, ProjectionOptions{0.2});
  EXPECT_EQ(p.flagged_count(), static_cast<int>(p.points.size()));
}

TEST(LumenSeam, CoaxialFollowsNearestRuling) {
  TriMesh outer = cylinder(0.5, 1.0, 64, 16);
  TriMesh lumen = cylinder(0.2, 1.0, 64, 16);
  auto seam = shortest_boundary_geodesic(outer, inlet_low());
  auto poly = seam.polyline(outer);
  const double angle = std::atan2(poly.front().y(), poly.front().x());
  auto lseam = align_lumen_seam(lumen, poly.front(), poly.back());
  for (const auto& p : lseam.polyline(lumen)) {
    EXPECT_NEAR(std::remainder(std::atan2(p.y(), p.x()) - angle, 2 * kPi), 0.0, 2 * kPi / 64);
  }
  EXPECT_NEAR(lseam.length, 1.0, 0.005);
}

TEST(LumenSeam, StarLumenHasFinitePath) {
  TubeSpec s = test::static_spec(0.5, 0.4, 1.2, 96, 24);
  s.lumen_star_lobes = 6;
  s.lumen_star_amplitude = 0.4;
  TriMesh outer = generate_surface(s, SurfaceKind::outer, 0);
  TriMesh lumen = generate_surface(s, SurfaceKind::lumen, 0);
  auto poly = shortest_boundary_geodesic(outer).polyline(outer);
  auto a = align_lumen_seam(lumen, poly.front(), poly.back());
  auto b = align_lumen_seam(lumen, poly.front(), poly.back());
  EXPECT_TRUE(std::isfinite(a.length));
  EXPECT_GT(a.length, 1.2 - 1e-9);
  EXPECT_TRUE(a.polyline(lumen).front().isApprox(b.polyline(lumen).front()));
  EXPECT_NO_THROW(parameterize_frame(lumen, a, 40, 20, SurfaceKind::lumen));
}

TEST(LumenSeam, EquidistantEndpointsTieBreak) {
  // Outer seam endpoints on the axis are equidistant from all chord midpoints
  // of a square lumen; the chord starting at vertex 0 wins.
  TriMesh lumen = cylinder(0.2, 1.0, 4, 4);
  auto path = align_lumen_seam(lumen, Vec3(0, 0, -0.1), Vec3(0, 0, 1.1));
  const Vec3 start = path.polyline(lumen).front();
  const Vec3 expected = 0.5 * (lumen.vertices[0] + lumen.vertices[1]);
  EXPECT_TRUE(start.isApprox(expected, 1e-12));
}

TEST(Quality, HausdorffOfOffsetSegments) {
  std::vector<Vec3> a{Vec3(0, 0, 0), Vec3(1, 0, 0)};
  std::vector<Vec3> b{Vec3(0, 0.25, 0), Vec3(0.5, 0.25, 0), Vec3(1.5, 0.25, 0)};
  EXPECT_NEAR(polyline_hausdorff(a, b), std::hypot(0.5, 0.25), 1e-12);
  EXPECT_NEAR(polyline_hausdorff(a, a), 0.0, 1e-15);
}

TEST(Quality, StaticCylinderGridIsUniform) {
  TriMesh mesh = cylinder(0.5, 1.5, 64, 48);
  GeodesicPath seam = shortest_boundary_geodesic(mesh, inlet_low());
  GridMesh g = parameterize_frame(mesh, seam, 80, 50, SurfaceKind::outer);
  SpacingVariation cv = spacing_variation(g);
  EXPECT_LT(cv.row, 0.01);
  EXPECT_LT(cv.column, 0.01);
  EXPECT_LT(seam_deviation(g, mesh, seam), mesh.mean_edge_length());
}

// Default synthetic tube (2:1 taper, 40% area wave): flips and seam placement.
// Spacing uniformity on this tube is checked by the acceptance suite.
TEST(Quality, DefaultSyntheticFramesHaveNoFlips) {
  TubeSpec s;
  for (int frame : {0, 48, 97}) {
    TriMesh mesh = generate_surface(s, SurfaceKind::outer, frame);
    GeodesicPath seam = shortest_boundary_geodesic(mesh, inlet_low());
    FlattenedFrame flat = flatten_to_unit_square(cut_along_geodesic(mesh, seam));
    EXPECT_EQ(flat.flipped_triangles(), 0) << "frame " << frame;
    GridMesh g = resample_grid(flat, 80, 50);
    EXPECT_LT(seam_deviation(g, mesh, seam), mesh.mean_edge_length()) << "frame " << frame;
  }
}
