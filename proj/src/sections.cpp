#include "tubekin/sections.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>

namespace tubekin {

namespace {

Vec3 row_centroid(const GridMesh& g, int j) {
  Vec3 c = Vec3::Zero();
  for (int i = 0; i < g.n; ++i) c += g.at(i, j);
  return c / g.n;
}

double segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 e = b - a;
  const double len2 = e.squaredNorm();
  const double t = len2 > 0.0 ? std::clamp((p - a).dot(e) / len2, 0.0, 1.0) : 0.0;
  return (p - (a + t * e)).norm();
}

double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

double segments_distance(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
  const double d1 = cross2(b - a, c - a), d2 = cross2(b - a, d - a);
  const double d3 = cross2(d - c, a - c), d4 = cross2(d - c, b - c);
  if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0))) return 0.0;
  return std::min({segment_distance(a, c, d), segment_distance(b, c, d), segment_distance(c, a, b),
                   segment_distance(d, a, b)});
}

// Closest point on a closed 3D polyline: segment index and parameter.
std::pair<int, double> closest_on_loop(const std::vector<Vec3>& loop, const Vec3& q, double* dist = nullptr) {
  double best = std::numeric_limits<double>::infinity();
  std::pair<int, double> out{0, 0.0};
  const int n = static_cast<int>(loop.size());
  for (int k = 0; k < n; ++k) {
    const Vec3& a = loop[k];
    const Vec3 e = loop[(k + 1) % n] - a;
    const double len2 = e.squaredNorm();
    const double t = len2 > 0.0 ? std::clamp((q - a).dot(e) / len2, 0.0, 1.0) : 0.0;
    const double d = (q - (a + t * e)).norm();
    if (d < best) {
      best = d;
      out = {k, t};
    }
  }
  if (dist) *dist = best;
  return out;
}

// Centripetal Catmull-Rom segment p1 -> p2 at t in [0, 1].
Vec2 catmull_rom(const Vec2& p0, const Vec2& p1, const Vec2& p2, const Vec2& p3, double t) {
  const double t1 = std::sqrt((p1 - p0).norm());
  const double t2 = t1 + std::sqrt((p2 - p1).norm());
  const double t3 = t2 + std::sqrt((p3 - p2).norm());
  if (t1 <= 0.0 || t2 <= t1 || t3 <= t2) return (1.0 - t) * p1 + t * p2;
  const double u = t1 + (t2 - t1) * t;
  const Vec2 a1 = ((t1 - u) * p0 + u * p1) / t1;
  const Vec2 a2 = ((t2 - u) * p1 + (u - t1) * p2) / (t2 - t1);
  const Vec2 a3 = ((t3 - u) * p2 + (u - t2) * p3) / (t3 - t2);
  const Vec2 b1 = ((t2 - u) * a1 + u * a2) / t2;
  const Vec2 b2 = ((t3 - u) * a2 + (u - t1) * a3) / (t3 - t1);
  return ((t2 - u) * b1 + (u - t1) * b2) / (t2 - t1);
}

// Closed centripetal spline through the chain vertices. Resampling the bare
// chain would put samples on chords, which skews curvature by the chord sag.
struct ClosedSpline {
  std::vector<Vec2> chain;

  // g in [0, n): edge floor(g), local parameter g - floor(g).
  Vec2 at(double g) const {
    const int n = static_cast<int>(chain.size());
    double whole = std::floor(g);
    int k = static_cast<int>(whole) % n;
    if (k < 0) k += n;
    return catmull_rom(chain[(k - 1 + n) % n], chain[k], chain[(k + 1) % n], chain[(k + 2) % n], g - whole);
  }
};

// Builds the contour from a closed loop lying in (or projected onto) the plane.
Contour finish_contour(const std::vector<Vec3>& loop, const SectionPlane& plane, const Vec3& anchor_hint,
                       const ContourOptions& options) {
  const char* stage = "extract_contour";
  if (loop.size() < 3) throw GeometryError("contour has fewer than three points", stage);
  Contour c;
  c.station = plane.station;
  c.origin = plane.origin;

  // Provisional in-plane frame, x toward the hint.
  Vec3 x = anchor_hint - plane.origin;
  x -= plane.normal * plane.normal.dot(x);
  if (x.norm() < 1e-15) x = plane.normal.unitOrthogonal();
  x.normalize();
  const Vec3 y = plane.normal.cross(x);
  std::vector<Vec2> flat;
  flat.reserve(loop.size());
  Eigen::AlignedBox2d box;
  for (const Vec3& p : loop) {
    flat.emplace_back((p - c.origin).dot(x), (p - c.origin).dot(y));
    box.extend(flat.back());
  }
  // Crossings at vertices lying on the plane come out as near-duplicates;
  // they would bend the spline's end tangents.
  const double merge = 1e-9 * box.diagonal().norm();
  std::vector<Vec2> chain;
  chain.reserve(flat.size());
  for (const Vec2& q : flat) {
    if (chain.empty() || (q - chain.back()).norm() > merge) chain.push_back(q);
  }
  while (chain.size() > 1 && (chain.back() - chain.front()).norm() <= merge) chain.pop_back();
  if (chain.size() < 3) throw GeometryError("contour has fewer than three points", stage);
  if (polygon_area(chain) < 0.0) std::reverse(chain.begin(), chain.end());
  double perim = 0.0;
  for (size_t s = 0; s < chain.size(); ++s) perim += (chain[(s + 1) % chain.size()] - chain[s]).norm();

  // Dense arc-length table over the spline parameter.
  const ClosedSpline spline{chain};
  const int n = static_cast<int>(chain.size());
  const int per_edge = std::max(16, 16 * options.samples / n);
  const int nd = n * per_edge;
  std::vector<Vec2> dense(nd);
  for (int s = 0; s < nd; ++s) dense[s] = spline.at(static_cast<double>(s) / per_edge);

  // Start the curve at the point nearest the hint.
  const Vec2 hint((anchor_hint - c.origin).dot(x), (anchor_hint - c.origin).dot(y));
  int k = 0;
  double t = 0.0, best = std::numeric_limits<double>::infinity();
  for (int s = 0; s < nd; ++s) {
    const Vec2 e = dense[(s + 1) % nd] - dense[s];
    const double len2 = e.squaredNorm();
    const double u = len2 > 0.0 ? std::clamp((hint - dense[s]).dot(e) / len2, 0.0, 1.0) : 0.0;
    const double d = (hint - (dense[s] + u * e)).norm();
    if (d < best) {
      best = d;
      k = s;
      t = u;
    }
  }
  std::vector<double> param{(k + t) / per_edge};
  std::vector<double> arc{0.0};
  Vec2 prev = spline.at(param[0]);
  for (int s = 1; s <= nd; ++s) {
    const double g = (k + s) / static_cast<double>(per_edge);
    const Vec2& p = dense[(k + s) % nd];
    param.push_back(g);
    arc.push_back(arc.back() + (p - prev).norm());
    prev = p;
  }
  // Close at the anchor itself.
  param.push_back(param[0] + n);
  arc.push_back(arc.back() + (spline.at(param[0]) - prev).norm());
  const double total = arc.back();
  std::vector<Vec2> samples;
  samples.reserve(options.samples);
  size_t seg = 0;
  for (int q = 0; q < options.samples; ++q) {
    const double target = total * q / options.samples;
    while (seg + 2 < arc.size() && arc[seg + 1] < target) ++seg;
    const double len = arc[seg + 1] - arc[seg];
    const double f = len > 0.0 ? (target - arc[seg]) / len : 0.0;
    samples.push_back(spline.at(param[seg] + f * (param[seg + 1] - param[seg])));
  }

  // Final frame: x through the anchor.
  const Vec2 anchor = samples.front();
  const double theta = anchor.norm() > 1e-15 ? std::atan2(anchor.y(), anchor.x()) : 0.0;
  const double ct = std::cos(theta), st = std::sin(theta);
  c.x_axis = ct * x + st * y;
  c.y_axis = plane.normal.cross(c.x_axis);
  for (Vec2& p : samples) p = Vec2(ct * p.x() + st * p.y(), -st * p.x() + ct * p.y());
  c.points = std::move(samples);
  c.self_touching = polygon_self_touching(c.points, options.touch_tolerance * perim);
  return c;
}

}  // namespace

std::vector<SectionPlane> section_planes(const GridMesh& grid) {
  const char* stage = "section_planes";
  if (grid.m < 2 || grid.n < 3) throw InputError("grid too small for section planes", stage);
  std::vector<SectionPlane> planes(grid.m);
  for (int j = 0; j < grid.m; ++j) {
    const double v = static_cast<double>(j) / (grid.m - 1);
    const Vec3 a = grid.at(0, j);
    const Vec3 b = grid.sample(1.0 / 3.0, v);
    const Vec3 c = grid.sample(2.0 / 3.0, v);
    Vec3 nrm = (b - a).cross(c - a);
    const double scale = std::max((b - a).squaredNorm(), (c - a).squaredNorm());
    if (!(scale > 0.0) || nrm.norm() <= 1e-12 * scale) {
      throw GeometryError("collinear defining points at station " + std::to_string(j), stage);
    }
    nrm.normalize();
    const Vec3 along = row_centroid(grid, std::min(j + 1, grid.m - 1)) - row_centroid(grid, std::max(j - 1, 0));
    if (nrm.dot(along) < 0.0) nrm = -nrm;
    SectionPlane& p = planes[j];
    p.station = j;
    p.normal = nrm;
    const Vec3 centroid = row_centroid(grid, j);
    p.origin = centroid - nrm * nrm.dot(centroid - a);
    p.defining = std::array<Vec3, 3>{a, b, c};
  }
  return planes;
}

std::vector<SectionPlane> centerline_planes(const GridMesh& grid) {
  if (grid.m < 2) throw InputError("grid too small for section planes", "centerline_planes");
  std::vector<Vec3> centers(grid.m);
  for (int j = 0; j < grid.m; ++j) centers[j] = row_centroid(grid, j);
  return centerline_planes(centers);
}

std::vector<SectionPlane> centerline_planes(const std::vector<Vec3>& centers) {
  const int m = static_cast<int>(centers.size());
  if (m < 2) throw InputError("centerline needs at least two points", "centerline_planes");
  std::vector<SectionPlane> planes(m);
  for (int j = 0; j < m; ++j) {
    const Vec3 t = centers[std::min(j + 1, m - 1)] - centers[std::max(j - 1, 0)];
    if (!(t.norm() > 0.0)) throw GeometryError("repeated centerline point at station " + std::to_string(j), "centerline_planes");
    planes[j].station = j;
    planes[j].origin = centers[j];
    planes[j].normal = t.normalized();
  }
  return planes;
}

std::vector<Vec3> Contour::points_3d() const {
  std::vector<Vec3> out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back(to_3d(p));
  return out;
}

double Contour::perimeter() const {
  double s = 0.0;
  for (size_t k = 0; k < points.size(); ++k) s += (points[(k + 1) % points.size()] - points[k]).norm();
  return s;
}

Contour extract_contour(const TriMesh& mesh, const SectionPlane& plane, const Vec3& anchor_hint,
                        const ContourOptions& options) {
  const char* stage = "extract_contour";
  const int nv = mesh.num_vertices();
  std::vector<double> d(nv);
  const double snap = 1e-12 * mesh.bbox_diagonal();
  for (int v = 0; v < nv; ++v) {
    d[v] = plane.signed_distance(mesh.vertices[v]);
    if (std::abs(d[v]) <= snap) d[v] = 0.0;
  }
  // A vertex on the plane counts as positive (symbolic perturbation).
  auto positive = [&](int v) { return d[v] >= 0.0; };
  auto key = [](int a, int b) { return std::pair<int, int>(std::min(a, b), std::max(a, b)); };

  std::map<std::pair<int, int>, Vec3> crossing;
  std::map<std::pair<int, int>, std::vector<int>> edge_segments;
  std::vector<std::array<std::pair<int, int>, 2>> segments;
  for (const auto& t : mesh.triangles) {
    std::pair<int, int> ends[2];
    int found = 0;
    for (int k = 0; k < 3; ++k) {
      const int a = t[k], b = t[(k + 1) % 3];
      if (positive(a) == positive(b)) continue;
      const auto e = key(a, b);
      if (!crossing.count(e)) {
        const double s = d[a] / (d[a] - d[b]);
        crossing[e] = mesh.vertices[a] + s * (mesh.vertices[b] - mesh.vertices[a]);
      }
      ends[found++] = e;
    }
    if (found != 2) continue;
    const int id = static_cast<int>(segments.size());
    segments.push_back({ends[0], ends[1]});
    edge_segments[ends[0]].push_back(id);
    edge_segments[ends[1]].push_back(id);
  }

  std::vector<char> used(segments.size(), 0);
  std::vector<std::vector<Vec3>> loops;
  bool open_chain = false;
  for (size_t s0 = 0; s0 < segments.size(); ++s0) {
    if (used[s0]) continue;
    used[s0] = 1;
    const auto first = segments[s0][0];
    std::vector<Vec3> loop{crossing[first]};
    auto edge = segments[s0][1];
    bool closed = false;
    while (true) {
      if (edge == first) {
        closed = true;
        break;
      }
      loop.push_back(crossing[edge]);
      int next = -1;
      for (int s : edge_segments[edge])
        if (!used[s]) next = s;
      if (next < 0) break;
      used[next] = 1;
      edge = segments[next][0] == edge ? segments[next][1] : segments[next][0];
    }
    if (closed) loops.push_back(std::move(loop));
    else open_chain = true;
  }
  if (loops.empty()) {
    throw GeometryError(open_chain ? "open intersection chain at station " + std::to_string(plane.station)
                                   : "plane misses the mesh at station " + std::to_string(plane.station),
                        stage);
  }

  int chosen = -1;
  if (loops.size() == 1) chosen = 0;
  if (chosen < 0 && plane.defining) {
    double best = std::numeric_limits<double>::infinity();
    for (size_t l = 0; l < loops.size(); ++l) {
      double worst = 0.0;
      for (const Vec3& q : *plane.defining) {
        double dist;
        closest_on_loop(loops[l], q, &dist);
        worst = std::max(worst, dist);
      }
      if (worst < best) {
        best = worst;
        chosen = static_cast<int>(l);
      }
    }
    if (best > 1e-6 * mesh.bbox_diagonal()) chosen = -1;
  }
  if (chosen < 0) {
    // Loops enclosing the plane origin, largest first.
    const Vec3 ax = plane.normal.unitOrthogonal(), ay = plane.normal.cross(ax);
    double best_area = -1.0;
    for (size_t l = 0; l < loops.size(); ++l) {
      std::vector<Vec2> poly;
      for (const Vec3& p : loops[l]) poly.emplace_back((p - plane.origin).dot(ax), (p - plane.origin).dot(ay));
      int winding = 0;
      for (size_t k = 0; k < poly.size(); ++k) {
        const Vec2& a = poly[k];
        const Vec2& b = poly[(k + 1) % poly.size()];
        if (a.y() <= 0.0) {
          if (b.y() > 0.0 && cross2(b - a, -a) > 0.0) ++winding;
        } else if (b.y() <= 0.0 && cross2(b - a, -a) < 0.0) {
          --winding;
        }
      }
      const double area = std::abs(polygon_area(poly));
      if (winding != 0 && area > best_area) {
        best_area = area;
        chosen = static_cast<int>(l);
      }
    }
  }
  if (chosen < 0) {
    double best = std::numeric_limits<double>::infinity();
    for (size_t l = 0; l < loops.size(); ++l) {
      double dist;
      closest_on_loop(loops[l], plane.origin, &dist);
      if (dist < best) {
        best = dist;
        chosen = static_cast<int>(l);
      }
    }
  }
  Contour c = finish_contour(std::move(loops[chosen]), plane, anchor_hint, options);
  c.frame_index = mesh.frame_index;
  return c;
}

std::vector<Contour> extract_sections(const GridMesh& surface, const std::vector<SectionPlane>& planes,
                                      const ContourOptions& options, ExecPolicy policy) {
  const TriMesh mesh = surface.to_trimesh();
  const int count = static_cast<int>(planes.size());
  std::vector<Contour> out(count);
  std::vector<std::string> errors(count);
#pragma omp parallel for schedule(dynamic) if (policy == ExecPolicy::parallel)
  for (int k = 0; k < count; ++k) {
    const SectionPlane& plane = planes[k];
    const int j = std::clamp(plane.station, 0, surface.m - 1);
    const Vec3 hint = plane.defining ? (*plane.defining)[0] : surface.at(0, j);
    try {
      if (j == 0 || j == surface.m - 1) {
        std::vector<Vec3> row(surface.n);
        for (int i = 0; i < surface.n; ++i) {
          const Vec3& p = surface.at(i, j);
          row[i] = p - plane.normal * plane.signed_distance(p);
        }
        out[k] = finish_contour(std::move(row), plane, hint, options);
      } else {
        out[k] = extract_contour(mesh, plane, hint, options);
      }
      out[k].frame_index = surface.frame_index;
      out[k].surface = surface.surface;
    } catch (const GeometryError& e) {
      if (options.skip_open) {
        out[k] = Contour{};
        out[k].station = plane.station;
        out[k].frame_index = surface.frame_index;
        out[k].surface = surface.surface;
      } else {
        errors[k] = e.what();
      }
    } catch (const std::exception& e) {
      errors[k] = e.what();
    }
  }
  for (int k = 0; k < count; ++k) {
    if (!errors[k].empty()) {
      throw GeometryError("frame " + std::to_string(surface.frame_index) + " " + to_string(surface.surface) + ": " +
                              errors[k],
                          "extract_sections");
    }
  }
  return out;
}

std::vector<Vec2> resample_closed(const std::vector<Vec2>& polyline, int count) {
  const int n = static_cast<int>(polyline.size());
  if (n == 0 || count <= 0) return {};
  std::vector<double> s(n + 1, 0.0);
  for (int k = 0; k < n; ++k) s[k + 1] = s[k] + (polyline[(k + 1) % n] - polyline[k]).norm();
  const double total = s[n];
  std::vector<Vec2> out;
  out.reserve(count);
  if (!(total > 0.0)) return std::vector<Vec2>(count, polyline[0]);
  int seg = 0;
  for (int q = 0; q < count; ++q) {
    const double target = total * q / count;
    while (seg < n - 1 && s[seg + 1] < target) ++seg;
    const double len = s[seg + 1] - s[seg];
    const double t = len > 0.0 ? (target - s[seg]) / len : 0.0;
    out.push_back((1.0 - t) * polyline[seg] + t * polyline[(seg + 1) % n]);
  }
  return out;
}

double polygon_area(const std::vector<Vec2>& polygon) {
  double a = 0.0;
  const size_t n = polygon.size();
  for (size_t k = 0; k < n; ++k) a += cross2(polygon[k], polygon[(k + 1) % n]);
  return 0.5 * a;
}

double contour_area(const Contour& contour) { return std::abs(polygon_area(contour.points)); }

bool polygon_self_touching(const std::vector<Vec2>& polygon, double tolerance) {
  const int n = static_cast<int>(polygon.size());
  std::vector<Eigen::AlignedBox2d> boxes(n);
  for (int a = 0; a < n; ++a) {
    boxes[a].extend(polygon[a]).extend(polygon[(a + 1) % n]);
    boxes[a].min().array() -= tolerance;
  }
  for (int a = 0; a < n; ++a) {
    for (int b = a + 2; b < n; ++b) {
      if (a == 0 && b == n - 1) continue;
      if (!boxes[a].intersects(boxes[b])) continue;
      if (segments_distance(polygon[a], polygon[(a + 1) % n], polygon[b], polygon[(b + 1) % n]) <= tolerance) {
        return true;
      }
    }
  }
  return false;
}

NonIntersectionReport validate_nonintersection(const std::vector<SectionPlane>& planes,
                                               const std::vector<Contour>& contours, double tolerance) {
  if (planes.size() != contours.size()) throw InputError("one contour per plane required", "validate_nonintersection");
  NonIntersectionReport report;
  for (size_t j = 0; j + 1 < planes.size(); ++j) {
    if (contours[j].points.empty() || contours[j + 1].points.empty()) continue;
    IntersectionViolation v;
    v.frame_index = contours[j].frame_index;
    v.station = planes[j].station;
    v.surface = contours[j].surface;
    for (const Vec3& p : contours[j].points_3d()) {
      const double d = planes[j + 1].signed_distance(p);
      if (d > tolerance) {
        ++v.points;
        v.worst = std::max(v.worst, d);
      }
    }
    for (const Vec3& p : contours[j + 1].points_3d()) {
      const double d = -planes[j].signed_distance(p);
      if (d > tolerance) {
        ++v.points;
        v.worst = std::max(v.worst, d);
      }
    }
    if (v.points > 0) report.violations.push_back(v);
  }
  return report;
}

}  // namespace tubekin
