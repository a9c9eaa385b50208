#include "tubekin/mesh_core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <unordered_map>

namespace tubekin {

ValidationReport validate_topology(const TriMesh& mesh) {
  ValidationReport report;
  if (mesh.vertices.empty() || mesh.triangles.empty()) {
    report.message = "empty mesh";
    return report;
  }
  for (const auto& t : mesh.triangles) {
    for (int k = 0; k < 3; ++k) {
      if (t[k] < 0 || t[k] >= mesh.num_vertices()) {
        report.message = "triangle references vertex out of range";
        return report;
      }
    }
  }
  MeshTopology topo(mesh);
  for (int f = 0; f < mesh.num_triangles(); ++f) {
    if (mesh.face_area(f) <= kDegenerateArea) report.degenerate_triangles.push_back(f);
  }
  for (int e = 0; e < topo.num_edges(); ++e) {
    const auto& edge = topo.edge(e);
    if (edge.extra_faces > 0) {
      ++report.nonmanifold_edges;
      continue;
    }
    if (edge.f1 < 0) continue;
    // The two faces must traverse the shared edge in opposite directions.
    auto dir = [&](int f) {
      const auto& t = mesh.triangles[f];
      for (int k = 0; k < 3; ++k)
        if (t[k] == edge.v0 && t[(k + 1) % 3] == edge.v1) return 1;
      return -1;
    };
    if (dir(edge.f0) == dir(edge.f1)) report.consistently_oriented = false;
  }
  int used_vertices = 0;
  for (int v = 0; v < mesh.num_vertices(); ++v)
    if (!topo.vertex_faces(v).empty()) ++used_vertices;
  report.euler_characteristic = used_vertices - topo.num_edges() + mesh.num_triangles();
  report.boundary_loop_count = static_cast<int>(topo.boundary_loops(mesh).size());
  if (report.consistently_oriented && report.nonmanifold_edges == 0) {
    report.outward = enclosed_volume(mesh) > 0.0;
  }

  std::ostringstream msg;
  if (report.nonmanifold_edges > 0) msg << report.nonmanifold_edges << " non-manifold edges; ";
  if (report.boundary_loop_count != 2) msg << report.boundary_loop_count << " boundary loops (expected 2); ";
  if (report.euler_characteristic != 0) msg << "Euler characteristic " << report.euler_characteristic << " (expected 0); ";
  if (!report.degenerate_triangles.empty()) {
    msg << report.degenerate_triangles.size() << " degenerate triangles (first " << report.degenerate_triangles.front() << "); ";
  }
  if (!report.consistently_oriented) msg << "inconsistent orientation; ";
  if (!report.outward) msg << "normals point inward; ";
  report.message = msg.str();
  if (report.message.size() >= 2) report.message.resize(report.message.size() - 2);  // trailing "; "
  report.passes = report.message.empty();
  if (report.passes) report.message = "ok";
  return report;
}

Vec3 BoundaryLoop::centroid(const TriMesh& mesh) const {
  Vec3 c = Vec3::Zero();
  for (int v : vertices) c += mesh.vertices[v];
  return vertices.empty() ? c : Vec3(c / static_cast<double>(vertices.size()));
}

double BoundaryLoop::mean_radius(const TriMesh& mesh) const {
  const Vec3 c = centroid(mesh);
  double sum = 0.0;
  for (int v : vertices) sum += (mesh.vertices[v] - c).norm();
  return vertices.empty() ? 0.0 : sum / static_cast<double>(vertices.size());
}

double BoundaryLoop::perimeter(const TriMesh& mesh) const {
  double sum = 0.0;
  for (size_t i = 0; i < vertices.size(); ++i)
    sum += (mesh.vertices[vertices[(i + 1) % vertices.size()]] - mesh.vertices[vertices[i]]).norm();
  return sum;
}

std::pair<BoundaryLoop, BoundaryLoop> boundary_loops(const TriMesh& mesh, const LoopLabeling& labeling) {
  MeshTopology topo(mesh);
  auto loops = topo.boundary_loops(mesh);
  if (loops.size() != 2) {
    throw TopologyError("expected 2 boundary loops, found " + std::to_string(loops.size()), "boundary_loops");
  }
  BoundaryLoop a{std::move(loops[0]), LoopLabel::inlet};
  BoundaryLoop b{std::move(loops[1]), LoopLabel::outlet};
  bool a_is_inlet = true;
  if (labeling.inlet_hint) {
    double da = (a.centroid(mesh) - *labeling.inlet_hint).norm();
    double db = (b.centroid(mesh) - *labeling.inlet_hint).norm();
    a_is_inlet = da <= db;
  } else {
    double ra = a.mean_radius(mesh);
    double rb = b.mean_radius(mesh);
    if (std::abs(ra - rb) <= labeling.ambiguity_tolerance * std::max(ra, rb)) {
      if (!labeling.swap) {
        throw InputError("ambiguous inlet/outlet labeling: loop radii " + std::to_string(ra) + " and " +
                             std::to_string(rb) + " differ by less than 1%; set an inlet hint",
                         "boundary_loops");
      }
    }
    a_is_inlet = ra >= rb;
  }
  if (labeling.swap) a_is_inlet = !a_is_inlet;
  if (!a_is_inlet) std::swap(a.vertices, b.vertices);
  a.label = LoopLabel::inlet;
  b.label = LoopLabel::outlet;
  return {std::move(a), std::move(b)};
}

LoopPoint closest_point_on_loop(const TriMesh& mesh, const BoundaryLoop& loop, const Vec3& query) {
  LoopPoint best;
  double best_d2 = std::numeric_limits<double>::infinity();
  int best_key = std::numeric_limits<int>::max();
  const size_t n = loop.vertices.size();
  for (size_t i = 0; i < n; ++i) {
    int v0 = loop.vertices[i];
    int v1 = loop.vertices[(i + 1) % n];
    const Vec3& a = mesh.vertices[v0];
    const Vec3& b = mesh.vertices[v1];
    Vec3 ab = b - a;
    double len2 = ab.squaredNorm();
    double t = len2 > 0 ? std::clamp((query - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
    Vec3 p = a + t * ab;
    double d2 = (p - query).squaredNorm();
    // A point exactly at a shared vertex belongs to both adjacent segments;
    // resolve through the vertex id so ties are deterministic.
    int tie_key = t <= 0.0 ? v0 : (t >= 1.0 ? v1 : std::min(v0, v1));
    const double tol = 1e-15 * std::max(1.0, d2);
    if (d2 < best_d2 - tol || (std::abs(d2 - best_d2) <= tol && tie_key < best_key)) {
      best_d2 = d2;
      best_key = tie_key;
      best = {v0, v1, t, p};
    }
  }
  return best;
}

namespace {

double signed_tet(const Vec3& a, const Vec3& b, const Vec3& c) { return a.dot(b.cross(c)) / 6.0; }

}  // namespace

double enclosed_volume(const TriMesh& mesh) {
  if (mesh.triangles.empty()) return 0.0;
  // Reference point near the mesh keeps the tetra sums well conditioned.
  const Vec3 origin = mesh.vertices[mesh.triangles[0][0]];
  double vol = 0.0;
  for (const auto& t : mesh.triangles) {
    vol += signed_tet(mesh.vertices[t[0]] - origin, mesh.vertices[t[1]] - origin, mesh.vertices[t[2]] - origin);
  }
  MeshTopology topo(mesh);
  for (const auto& loop : topo.boundary_loops(mesh)) {
    Vec3 c = Vec3::Zero();
    for (int v : loop) c += mesh.vertices[v];
    c /= static_cast<double>(loop.size());
    // Boundary half-edge a->b is closed by the cap triangle (c, b, a).
    for (size_t i = 0; i < loop.size(); ++i) {
      const Vec3& a = mesh.vertices[loop[i]];
      const Vec3& b = mesh.vertices[loop[(i + 1) % loop.size()]];
      vol += signed_tet(c - origin, b - origin, a - origin);
    }
  }
  return vol;
}

double layer_volume(const TriMesh& outer, const TriMesh& inner) {
  double v = enclosed_volume(outer) - enclosed_volume(inner);
  if (v < 0.0) warn("negative layer volume: surfaces not nested or orientation flipped");
  return v;
}

TriMesh subdivide(const TriMesh& mesh) {
  MeshTopology topo(mesh);
  TriMesh out;
  out.frame_index = mesh.frame_index;
  out.time = mesh.time;
  out.vertices = mesh.vertices;
  const int nv = mesh.num_vertices();
  for (int e = 0; e < topo.num_edges(); ++e) {
    const auto& edge = topo.edge(e);
    out.vertices.push_back(0.5 * (mesh.vertices[edge.v0] + mesh.vertices[edge.v1]));
  }
  out.triangles.reserve(mesh.triangles.size() * 4);
  for (int f = 0; f < mesh.num_triangles(); ++f) {
    const auto& t = mesh.triangles[f];
    int m0 = nv + topo.face_edge(f, 0);
    int m1 = nv + topo.face_edge(f, 1);
    int m2 = nv + topo.face_edge(f, 2);
    out.triangles.push_back({t[0], m0, m2});
    out.triangles.push_back({m0, t[1], m1});
    out.triangles.push_back({m2, m1, t[2]});
    out.triangles.push_back({m0, m1, m2});
  }
  return out;
}

void compact(TriMesh& mesh) {
  std::vector<int> remap(mesh.num_vertices(), -1);
  for (const auto& t : mesh.triangles)
    for (int v : t) remap[v] = 0;
  std::vector<Vec3> kept;
  for (int v = 0; v < mesh.num_vertices(); ++v) {
    if (remap[v] == 0) {
      remap[v] = static_cast<int>(kept.size());
      kept.push_back(mesh.vertices[v]);
    }
  }
  for (auto& t : mesh.triangles)
    for (int& v : t) v = remap[v];
  mesh.vertices = std::move(kept);
}

int collapse_degenerate(TriMesh& mesh, double max_area_fraction) {
  const double total = mesh.total_area();
  double degenerate_area = 0.0;
  std::vector<int> degenerate;
  for (int f = 0; f < mesh.num_triangles(); ++f) {
    double a = mesh.face_area(f);
    if (a <= kDegenerateArea) {
      degenerate.push_back(f);
      degenerate_area += a;
    }
  }
  if (degenerate.empty()) return 0;
  if (degenerate_area > max_area_fraction * total) {
    throw GeometryError("degenerate triangles cover too much area", "collapse_degenerate");
  }
  // Union-find over merged vertices.
  std::vector<int> parent(mesh.num_vertices());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int v) {
    while (parent[v] != v) v = parent[v] = parent[parent[v]];
    return v;
  };
  for (int f : degenerate) {
    const auto& t = mesh.triangles[f];
    int best_k = 0;
    double best_len = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 3; ++k) {
      double len = (mesh.vertices[t[k]] - mesh.vertices[t[(k + 1) % 3]]).norm();
      if (len < best_len) {
        best_len = len;
        best_k = k;
      }
    }
    int a = find(t[best_k]);
    int b = find(t[(best_k + 1) % 3]);
    if (a == b) continue;
    if (b < a) std::swap(a, b);
    mesh.vertices[a] = 0.5 * (mesh.vertices[a] + mesh.vertices[b]);
    parent[b] = a;
  }
  std::vector<std::array<int, 3>> kept;
  kept.reserve(mesh.triangles.size());
  for (auto t : mesh.triangles) {
    for (int& v : t) v = find(v);
    if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2]) continue;
    kept.push_back(t);
  }
  int removed = mesh.num_triangles() - static_cast<int>(kept.size());
  mesh.triangles = std::move(kept);
  compact(mesh);
  warn("collapsed " + std::to_string(removed) + " degenerate triangles in frame " + std::to_string(mesh.frame_index));
  return removed;
}

}  // namespace tubekin
