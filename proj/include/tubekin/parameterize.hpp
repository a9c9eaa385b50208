#pragma once

#include "tubekin/geodesic.hpp"
#include "tubekin/mesh.hpp"

#include <vector>

namespace tubekin {

/// Tube mesh cut open along a seam into a topological disk.
struct CutMesh {
  TriMesh mesh;
  std::vector<int> seam;            // seam vertex ids (one copy), inlet to outlet
  std::vector<int> seam_twin;       // matching ids of the duplicated copies
  std::vector<int> source_vertex;   // original vertex id, or -1 for inserted seam points
  std::vector<int> source_face;     // original face each new triangle came from
};

struct CutOptions {
  double snap_fraction = 0.05;  // edge crossings this close to a vertex snap to it
};

CutMesh cut_along_geodesic(const TriMesh& mesh, const GeodesicPath& seam, const CutOptions& options = {});

/// Disk mesh with per-vertex coordinates in the unit square.
struct FlattenedFrame {
  CutMesh cut;
  std::vector<Vec2> uv;
  std::vector<char> is_boundary;

  double signed_area(int f) const;
  int flipped_triangles() const;
};

struct FlattenOptions {
  double clamp_ratio = 10.0;        // weights below -ratio * |local mean| are clamped
  double residual_tolerance = 1e-10;
};

FlattenedFrame flatten_to_unit_square(const CutMesh& cut, const FlattenOptions& options = {});

/// n x m lattice of surface points. Node (i, j) sits at u = i/n, v = j/(m-1);
/// u wraps across the seam.
struct GridMesh {
  int n = 80;
  int m = 50;
  std::vector<Vec3> points;        // index j * n + i
  std::vector<char> flagged;       // per node; set by projection
  int frame_index = 0;
  double time = 0.0;
  SurfaceKind surface = SurfaceKind::outer;

  GridMesh() = default;
  GridMesh(int n_, int m_) : n(n_), m(m_), points(static_cast<size_t>(n_) * m_, Vec3::Zero()), flagged(points.size(), 0) {}

  const Vec3& at(int i, int j) const { return points[static_cast<size_t>(j) * n + wrap(i)]; }
  Vec3& at(int i, int j) { return points[static_cast<size_t>(j) * n + wrap(i)]; }
  int wrap(int i) const { return ((i % n) + n) % n; }

  /// Bilinear interpolation; u periodic, v clamped to [0, 1].
  Vec3 sample(double u, double v) const;
  /// Triangulated surface with the same vertex order (outward orientation).
  TriMesh to_trimesh() const;
  int flagged_count() const;
};

GridMesh resample_grid(const FlattenedFrame& flat, int n = 80, int m = 50);

struct ProjectionOptions {
  double max_distance = 0.2;  // mm; farther nodes are flagged
};

GridMesh project_to_inner(const GridMesh& outer, const TriMesh& inner, const ProjectionOptions& options = {});

/// Seam on the lumen: closest lumen boundary points to the outer seam
/// endpoints joined by a shortest geodesic.
GeodesicPath align_lumen_seam(const TriMesh& lumen, const Vec3& outer_start, const Vec3& outer_end,
                              const GeodesicOptions& options = {});

/// Worst per-row and per-column coefficient of variation of the distances
/// between adjacent grid nodes.
struct SpacingVariation {
  double row = 0.0;
  double column = 0.0;
};

SpacingVariation spacing_variation(const GridMesh& grid);

/// Symmetric Hausdorff distance between two polylines.
double polyline_hausdorff(const std::vector<Vec3>& a, const std::vector<Vec3>& b);

/// Hausdorff distance between grid column u = 0 and the seam path.
double seam_deviation(const GridMesh& grid, const TriMesh& mesh, const GeodesicPath& seam);

/// Cut, flatten and resample in one call.
GridMesh parameterize_frame(const TriMesh& mesh, const GeodesicPath& seam, int n, int m, SurfaceKind surface);

}  // namespace tubekin
