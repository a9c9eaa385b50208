#pragma once

#include "tubekin/mesh.hpp"
#include "tubekin/mesh_core.hpp"

#include <optional>
#include <vector>

namespace tubekin {

/// A location on the surface: a face plus barycentric coordinates. Points on
/// edges carry an exact zero for the opposite corner; vertices carry a one.
struct SurfacePoint {
  int face = -1;
  Vec3 bary = Vec3::Zero();

  Vec3 position(const TriMesh& mesh) const;
  std::optional<int> vertex(const TriMesh& mesh) const;

  static SurfacePoint at_vertex(const TriMesh& mesh, const MeshTopology& topo, int v);
  /// Point (1-t)*a + t*b on the edge (a, b) of `face`.
  static SurfacePoint on_edge(const TriMesh& mesh, int face, int a, int b, double t);
};

struct GeodesicPath {
  std::vector<SurfacePoint> points;
  double length = 0.0;  // mm

  std::vector<Vec3> polyline(const TriMesh& mesh) const;
};

struct GeodesicOptions {
  int steiner_points = 3;           // per edge
  double relative_tolerance = 1e-6; // straightening stops below this length change
  int max_iterations = 64;
};

/// Approximate globally shortest geodesic from any inlet point to any outlet
/// point.
GeodesicPath shortest_boundary_geodesic(const TriMesh& mesh, const BoundaryLoop& inlet, const BoundaryLoop& outlet,
                                        const GeodesicOptions& options = {});
GeodesicPath shortest_boundary_geodesic(const TriMesh& mesh, const LoopLabeling& labeling = {},
                                        const GeodesicOptions& options = {});

/// Shortest geodesic between two fixed surface points.
GeodesicPath shortest_geodesic_between(const TriMesh& mesh, const SurfacePoint& from, const SurfacePoint& to,
                                       const GeodesicOptions& options = {});

/// Converts a point on a boundary loop into a surface point on its edge.
SurfacePoint surface_point_on_loop(const TriMesh& mesh, const MeshTopology& topo, const LoopPoint& p);

/// Recomputes barycentric coordinates of `p` with respect to `face`
/// (closest point in the triangle).
Vec3 barycentric_in_face(const TriMesh& mesh, int face, const Vec3& p);

}  // namespace tubekin
