#pragma once

#include "tubekin/parameterize.hpp"

#include <array>
#include <optional>
#include <vector>

namespace tubekin {

struct SectionPlane {
  int station = 0;
  Vec3 origin = Vec3::Zero();  // row centroid projected into the plane
  Vec3 normal = Vec3::UnitZ(); // unit, toward increasing v
  std::optional<std::array<Vec3, 3>> defining;  // G(0,v), G(1/3,v), G(2/3,v)

  double signed_distance(const Vec3& p) const { return normal.dot(p - origin); }
};

/// One plane per grid row through G(0, v_j), G(1/3, v_j), G(2/3, v_j).
std::vector<SectionPlane> section_planes(const GridMesh& grid);

/// Control construction: planes through the row centroids, normal to the
/// centroid polyline (central differences).
std::vector<SectionPlane> centerline_planes(const GridMesh& grid);
/// Planes through each polyline point, normal to the polyline.
std::vector<SectionPlane> centerline_planes(const std::vector<Vec3>& centerline);

struct Contour {
  int station = 0;
  int frame_index = 0;
  SurfaceKind surface = SurfaceKind::outer;
  std::vector<Vec2> points;  // in-plane coordinates, counterclockwise about the normal; points[0] is the anchor
  Vec3 origin = Vec3::Zero();
  Vec3 x_axis = Vec3::UnitX();  // from origin toward the seam anchor
  Vec3 y_axis = Vec3::UnitY();
  bool self_touching = false;

  Vec3 to_3d(const Vec2& p) const { return origin + p.x() * x_axis + p.y() * y_axis; }
  std::vector<Vec3> points_3d() const;
  double perimeter() const;
  Vec3 anchor() const { return to_3d(points.front()); }
};

struct ContourOptions {
  int samples = 100;
  double touch_tolerance = 1e-6;  // relative to the perimeter
  bool skip_open = false;          // extract_sections: leave a station empty instead of aborting
};

/// Plane/mesh intersection chained into loops; one loop is kept (the one
/// through the defining points, else the one around the origin, else the
/// nearest), anchored at the point closest to `anchor_hint`, resampled by
/// arc length.
Contour extract_contour(const TriMesh& mesh, const SectionPlane& plane, const Vec3& anchor_hint,
                        const ContourOptions& options = {});

/// Contours of one surface grid at every plane. Stations whose plane runs
/// through the grid boundary use the grid's own row projected onto the plane.
std::vector<Contour> extract_sections(const GridMesh& surface, const std::vector<SectionPlane>& planes,
                                      const ContourOptions& options = {}, ExecPolicy policy = ExecPolicy::parallel);

/// Closed polyline resampled to `count` points by arc length, starting at
/// the first input point.
std::vector<Vec2> resample_closed(const std::vector<Vec2>& polyline, int count);

/// Shoelace area (absolute value).
double contour_area(const Contour& contour);
double polygon_area(const std::vector<Vec2>& polygon);  // signed

/// True if two non-adjacent segments come closer than `tolerance`.
bool polygon_self_touching(const std::vector<Vec2>& polygon, double tolerance);

struct IntersectionViolation {
  int frame_index = 0;
  int station = 0;  // pair (station, station + 1)
  SurfaceKind surface = SurfaceKind::outer;
  int points = 0;
  double worst = 0.0;  // mm past the neighbouring plane
};

struct NonIntersectionReport {
  std::vector<IntersectionViolation> violations;
  bool ok() const { return violations.empty(); }
};

/// Contour j must lie on the non-positive side of plane j+1, contour j+1 on
/// the non-negative side of plane j. `tolerance` in mm. Pairs with an empty
/// contour are skipped.
NonIntersectionReport validate_nonintersection(const std::vector<SectionPlane>& planes,
                                               const std::vector<Contour>& contours, double tolerance = 1e-9);

}  // namespace tubekin
