#pragma once

#include "tubekin/mesh.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace tubekin {

inline constexpr double kDegenerateArea = 1e-12;  // mm^2

struct ValidationReport {
  int boundary_loop_count = 0;
  int euler_characteristic = 0;
  std::vector<int> degenerate_triangles;
  int nonmanifold_edges = 0;
  bool consistently_oriented = true;
  bool outward = true;
  bool passes = false;
  std::string message;
};

/// Checks the tube (annulus) invariants: manifold, two boundary loops, Euler
/// characteristic 0, no degenerate triangles, consistent outward orientation.
ValidationReport validate_topology(const TriMesh& mesh);

enum class LoopLabel { inlet, outlet };

struct BoundaryLoop {
  std::vector<int> vertices;  // closed chain, follows face orientation
  LoopLabel label = LoopLabel::inlet;

  Vec3 centroid(const TriMesh& mesh) const;
  double mean_radius(const TriMesh& mesh) const;
  double perimeter(const TriMesh& mesh) const;
};

/// Overrides for inlet/outlet labeling. By default the loop with the larger
/// mean radius about its centroid is the inlet.
struct LoopLabeling {
  std::optional<Vec3> inlet_hint;  // inlet = loop whose centroid is nearest
  bool swap = false;
  double ambiguity_tolerance = 0.01;
};

std::pair<BoundaryLoop, BoundaryLoop> boundary_loops(const TriMesh& mesh, const LoopLabeling& labeling = {});

/// Closest point on a closed boundary polyline. Ties resolve to the segment
/// starting at the lowest vertex index.
struct LoopPoint {
  int v0 = -1, v1 = -1;  // segment endpoints (mesh vertex ids)
  double t = 0.0;        // position = (1-t) v0 + t v1
  Vec3 position;
};
LoopPoint closest_point_on_loop(const TriMesh& mesh, const BoundaryLoop& loop, const Vec3& query);

/// Signed enclosed volume with every boundary loop closed by a triangle fan
/// from the loop centroid. Positive for outward-oriented tubes.
double enclosed_volume(const TriMesh& mesh);

/// Volume between two nested tubes: enclosed(outer) - enclosed(inner).
double layer_volume(const TriMesh& outer, const TriMesh& inner);

/// Midpoint 1:4 subdivision; positions are not smoothed.
TriMesh subdivide(const TriMesh& mesh);

/// Collapses degenerate triangles (area <= kDegenerateArea) by merging the
/// shortest edge of each. Returns the number of collapsed triangles; throws
/// if degenerate area exceeds `max_area_fraction` of the total.
int collapse_degenerate(TriMesh& mesh, double max_area_fraction = 1e-4);

/// Removes unreferenced vertices, preserving order.
void compact(TriMesh& mesh);

}  // namespace tubekin
