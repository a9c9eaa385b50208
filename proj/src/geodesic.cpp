#include "tubekin/geodesic.hpp"

#include "tubekin/spatial.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <queue>
#include <unordered_map>

namespace tubekin {

namespace {

int local_corner(const TriMesh& mesh, int f, int v) {
  for (int k = 0; k < 3; ++k)
    if (mesh.triangles[f][k] == v) return k;
  return -1;
}

bool face_has(const TriMesh& mesh, int f, int v) { return local_corner(mesh, f, v) >= 0; }

double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

double angle_between(const Vec3& a, const Vec3& b) { return std::atan2(a.cross(b).norm(), a.dot(b)); }

double signed_angle2(const Vec2& a, const Vec2& b) { return std::atan2(cross2(a, b), a.dot(b)); }

// Steiner graph: vertex nodes [0, V), then k evenly spaced nodes per edge.
class SteinerGraph {
 public:
  SteinerGraph(const TriMesh& mesh, const MeshTopology& topo, int k) : mesh_(mesh), topo_(topo), k_(std::max(0, k)) {
    nv_ = mesh.num_vertices();
    positions_.resize(static_cast<size_t>(nv_) + static_cast<size_t>(topo.num_edges()) * k_);
    for (int v = 0; v < nv_; ++v) positions_[v] = mesh.vertices[v];
    for (int e = 0; e < topo.num_edges(); ++e) {
      const auto& edge = topo.edge(e);
      for (int s = 0; s < k_; ++s) {
        double t = param(s);
        positions_[node(e, s)] = (1 - t) * mesh.vertices[edge.v0] + t * mesh.vertices[edge.v1];
      }
    }
  }

  int num_nodes() const { return static_cast<int>(positions_.size()); }
  int node(int e, int s) const { return nv_ + e * k_ + s; }
  double param(int s) const { return static_cast<double>(s + 1) / (k_ + 1); }
  bool is_vertex(int n) const { return n < nv_; }
  int edge_of(int n) const { return (n - nv_) / k_; }
  int slot_of(int n) const { return (n - nv_) % k_; }
  const Vec3& position(int n) const { return positions_[n]; }
  int steiner_per_edge() const { return k_; }

  void face_nodes(int f, std::vector<int>& out) const {
    out.clear();
    for (int c = 0; c < 3; ++c) {
      out.push_back(mesh_.triangles[f][c]);
      int e = topo_.face_edge(f, c);
      for (int s = 0; s < k_; ++s) out.push_back(node(e, s));
    }
  }

  void node_faces(int n, std::vector<int>& out) const {
    out.clear();
    if (is_vertex(n)) {
      out = topo_.vertex_faces(n);
      return;
    }
    const auto& edge = topo_.edge(edge_of(n));
    out.push_back(edge.f0);
    if (edge.f1 >= 0) out.push_back(edge.f1);
  }

  SurfacePoint surface_point(int n, int face) const {
    if (is_vertex(n)) {
      SurfacePoint p;
      p.face = face;
      p.bary[local_corner(mesh_, face, n)] = 1.0;
      return p;
    }
    const auto& edge = topo_.edge(edge_of(n));
    return SurfacePoint::on_edge(mesh_, face, edge.v0, edge.v1, param(slot_of(n)));
  }

 private:
  const TriMesh& mesh_;
  const MeshTopology& topo_;
  int k_;
  int nv_;
  std::vector<Vec3> positions_;
};

std::vector<int> containing_faces(const TriMesh& mesh, const MeshTopology& topo, const SurfacePoint& p) {
  if (auto v = p.vertex(mesh)) return topo.vertex_faces(*v);
  for (int k = 0; k < 3; ++k) {
    if (p.bary[k] == 0.0) {
      int a = mesh.triangles[p.face][(k + 1) % 3];
      int b = mesh.triangles[p.face][(k + 2) % 3];
      const auto& edge = topo.edge(topo.find_edge(a, b));
      std::vector<int> out{edge.f0};
      if (edge.f1 >= 0) out.push_back(edge.f1);
      return out;
    }
  }
  return {p.face};
}

// Graph path from a start point to an end point. faces[i] holds the segment
// into nodes[i]; faces.back() holds the final segment into the end point.
struct GraphPath {
  SurfacePoint start, end;
  Vec3 start_pos, end_pos;
  std::vector<int> nodes;  // interior nodes
  std::vector<int> faces;  // size nodes.size() + 1
};

struct DijkstraState {
  std::vector<double> dist;
  std::vector<int> parent;
  std::vector<int> parent_face;
};

using QueueItem = std::pair<double, int>;

class GeodesicSolver {
 public:
  GeodesicSolver(const TriMesh& mesh, const GeodesicOptions& options)
      : mesh_(mesh), topo_(mesh), graph_(mesh, topo_, options.steiner_points), options_(options) {
    if (topo_.has_nonmanifold_edges()) throw TopologyError("mesh has non-manifold edges", "geodesic");
  }

  GeodesicPath between_loops(const BoundaryLoop& inlet, const BoundaryLoop& outlet) {
    const int n = graph_.num_nodes();
    DijkstraState st = init_state();
    std::vector<char> is_target(n, 0);
    std::priority_queue<QueueItem, std::vector<QueueItem>, std::greater<>> queue;
    auto loop_nodes = [&](const BoundaryLoop& loop, auto&& fn) {
      for (size_t i = 0; i < loop.vertices.size(); ++i) {
        int a = loop.vertices[i];
        int b = loop.vertices[(i + 1) % loop.vertices.size()];
        fn(a);
        int e = topo_.find_edge(a, b);
        if (e < 0) continue;
        for (int s = 0; s < graph_.steiner_per_edge(); ++s) fn(graph_.node(e, s));
      }
    };
    loop_nodes(inlet, [&](int node) {
      st.dist[node] = 0.0;
      queue.push({0.0, node});
    });
    loop_nodes(outlet, [&](int node) { is_target[node] = 1; });

    int reached = -1;
    std::vector<int> faces, nodes;
    while (!queue.empty()) {
      auto [d, u] = queue.top();
      queue.pop();
      if (d > st.dist[u]) continue;
      if (is_target[u]) {
        reached = u;
        break;
      }
      relax(u, d, st, queue, faces, nodes);
    }
    if (reached < 0) throw TopologyError("outlet not reachable from inlet", "geodesic");

    std::vector<int> chain{reached};
    std::vector<int> chain_faces;
    for (int u = reached; st.parent[u] >= 0; u = st.parent[u]) {
      chain_faces.push_back(st.parent_face[u]);
      chain.push_back(st.parent[u]);
    }
    std::reverse(chain.begin(), chain.end());
    std::reverse(chain_faces.begin(), chain_faces.end());
    if (chain.size() < 2) throw GeometryError("inlet and outlet touch", "geodesic");

    GraphPath gp;
    gp.start = graph_.surface_point(chain.front(), chain_faces.front());
    gp.end = graph_.surface_point(chain.back(), chain_faces.back());
    gp.start_pos = graph_.position(chain.front());
    gp.end_pos = graph_.position(chain.back());
    gp.nodes.assign(chain.begin() + 1, chain.end() - 1);
    gp.faces = chain_faces;
    return straighten(gp);
  }

  GeodesicPath between_points(const SurfacePoint& from, const SurfacePoint& to) {
    const Vec3 a = from.position(mesh_);
    const Vec3 b = to.position(mesh_);
    const auto faces_a = containing_faces(mesh_, topo_, from);
    const auto faces_b = containing_faces(mesh_, topo_, to);
    std::vector<char> target_face(mesh_.num_triangles(), 0);
    for (int f : faces_b) target_face[f] = 1;

    GraphPath gp;
    gp.start = from;
    gp.end = to;
    gp.start_pos = a;
    gp.end_pos = b;

    double best = std::numeric_limits<double>::infinity();
    int best_node = -1, best_face = -1;
    for (int f : faces_a) {
      if (target_face[f]) {
        best = (a - b).norm();
        best_face = f;
        break;
      }
    }

    DijkstraState st = init_state();
    std::priority_queue<QueueItem, std::vector<QueueItem>, std::greater<>> queue;
    std::vector<int> nodes, faces;
    for (int f : faces_a) {
      graph_.face_nodes(f, nodes);
      for (int w : nodes) {
        double d = (graph_.position(w) - a).norm();
        if (d < st.dist[w]) {
          st.dist[w] = d;
          st.parent[w] = -1;
          st.parent_face[w] = f;
          queue.push({d, w});
        }
      }
    }
    while (!queue.empty()) {
      auto [d, u] = queue.top();
      queue.pop();
      if (d > st.dist[u]) continue;
      if (d >= best) break;
      graph_.node_faces(u, faces);
      for (int f : faces) {
        if (!target_face[f]) continue;
        double cand = d + (graph_.position(u) - b).norm();
        if (cand < best) {
          best = cand;
          best_node = u;
          best_face = f;
        }
      }
      relax(u, d, st, queue, faces, nodes);
    }
    if (best_face < 0) throw TopologyError("target point not reachable", "geodesic");

    if (best_node >= 0) {
      std::vector<int> chain, chain_faces{best_face};
      for (int u = best_node; u >= 0; u = st.parent[u]) {
        chain.push_back(u);
        chain_faces.push_back(st.parent_face[u]);
      }
      std::reverse(chain.begin(), chain.end());
      std::reverse(chain_faces.begin(), chain_faces.end());
      gp.nodes = std::move(chain);
      gp.faces = std::move(chain_faces);
    } else {
      gp.faces = {best_face};
    }
    return straighten(gp);
  }

 private:
  DijkstraState init_state() const {
    const int n = graph_.num_nodes();
    DijkstraState st;
    st.dist.assign(n, std::numeric_limits<double>::infinity());
    st.parent.assign(n, -1);
    st.parent_face.assign(n, -1);
    return st;
  }

  void relax(int u, double d, DijkstraState& st,
             std::priority_queue<QueueItem, std::vector<QueueItem>, std::greater<>>& queue, std::vector<int>& faces,
             std::vector<int>& nodes) const {
    graph_.node_faces(u, faces);
    const Vec3& pu = graph_.position(u);
    for (int f : faces) {
      graph_.face_nodes(f, nodes);
      for (int w : nodes) {
        if (w == u) continue;
        double nd = d + (graph_.position(w) - pu).norm();
        if (nd < st.dist[w]) {
          st.dist[w] = nd;
          st.parent[w] = u;
          st.parent_face[w] = f;
          queue.push({nd, w});
        }
      }
    }
  }

  // Faces strictly between `from` and `to` around v, walking forward (true)
  // or backward through the ordered fan. Empty optional if the walk is
  // blocked by the boundary.
  std::optional<std::vector<int>> fan_walk(int v, int from, int to, bool forward) const {
    const auto fan = topo_.ordered_fan(mesh_, v);
    const int m = static_cast<int>(fan.size());
    const bool cyclic = !topo_.is_boundary_vertex(v);
    int ia = static_cast<int>(std::find(fan.begin(), fan.end(), from) - fan.begin());
    int ib = static_cast<int>(std::find(fan.begin(), fan.end(), to) - fan.begin());
    if (ia == m || ib == m) return std::nullopt;
    std::vector<int> out;
    int i = ia;
    for (int guard = 0; guard <= m; ++guard) {
      int next = forward ? i + 1 : i - 1;
      if (cyclic) {
        next = (next + m) % m;
      } else if (next < 0 || next >= m) {
        return std::nullopt;
      }
      if (next == ib) return out;
      out.push_back(fan[next]);
      i = next;
    }
    return std::nullopt;
  }

  double vertex_angle_sum(int v) const {
    double sum = 0.0;
    for (int f : topo_.vertex_faces(v)) sum += corner_angle(mesh_, f, local_corner(mesh_, f, v));
    return sum;
  }

  // Angle swept around v from ray v->p (inside face a) to ray v->q (inside
  // face b) through the given intermediate faces.
  double side_angle(int v, const Vec3& p, int a, const std::vector<int>& mid, int b, const Vec3& q,
                    bool forward) const {
    const Vec3& x = mesh_.vertices[v];
    auto exit_vertex = [&](int f) {
      int k = local_corner(mesh_, f, v);
      return mesh_.triangles[f][forward ? (k + 2) % 3 : (k + 1) % 3];
    };
    auto entry_vertex = [&](int f) {
      int k = local_corner(mesh_, f, v);
      return mesh_.triangles[f][forward ? (k + 1) % 3 : (k + 2) % 3];
    };
    double sum = angle_between(p - x, mesh_.vertices[exit_vertex(a)] - x);
    for (int f : mid) sum += corner_angle(mesh_, f, local_corner(mesh_, f, v));
    sum += angle_between(mesh_.vertices[entry_vertex(b)] - x, q - x);
    return sum;
  }

  static void remove_loops(std::vector<int>& strip) {
    for (bool changed = true; changed;) {
      changed = false;
      std::unordered_map<int, size_t> seen;
      for (size_t j = 0; j < strip.size(); ++j) {
        auto [it, inserted] = seen.emplace(strip[j], j);
        if (!inserted) {
          strip.erase(strip.begin() + static_cast<long>(it->second) + 1, strip.begin() + static_cast<long>(j) + 1);
          changed = true;
          break;
        }
      }
    }
  }

  std::vector<int> build_strip(const GraphPath& gp) const {
    std::vector<Vec3> pts;
    pts.push_back(gp.start_pos);
    for (int n : gp.nodes) pts.push_back(graph_.position(n));
    pts.push_back(gp.end_pos);

    std::vector<int> strip{gp.faces.front()};
    for (size_t i = 0; i < gp.nodes.size(); ++i) {
      const int a = strip.back();
      const int b = gp.faces[i + 1];
      const int node = gp.nodes[i];
      if (a == b) continue;
      if (!graph_.is_vertex(node)) {
        strip.push_back(b);
        continue;
      }
      const int v = node;
      auto fwd = fan_walk(v, a, b, true);
      auto bwd = fan_walk(v, a, b, false);
      if (!fwd && !bwd) throw GeometryError("cannot route around vertex " + std::to_string(v), "geodesic");
      bool use_forward = fwd.has_value();
      if (fwd && bwd) {
        double af = side_angle(v, pts[i], a, *fwd, b, pts[i + 2], true);
        double ab = side_angle(v, pts[i], a, *bwd, b, pts[i + 2], false);
        use_forward = af <= ab;
      }
      const auto& mid = use_forward ? *fwd : *bwd;
      strip.insert(strip.end(), mid.begin(), mid.end());
      strip.push_back(b);
    }
    remove_loops(strip);
    return strip;
  }

  struct Portal {
    Vec2 left, right;
    int left_vertex = -1, right_vertex = -1;
  };

  struct Unfolding {
    std::vector<std::array<Vec2, 3>> coords;  // per strip face, by local corner
    std::vector<Portal> portals;              // [0] = start, back() = end
  };

  Unfolding unfold(const std::vector<int>& strip, const Vec3& start, const Vec3& end) const {
    Unfolding u;
    const int n = static_cast<int>(strip.size());
    u.coords.resize(n);
    {
      const int f = strip[0];
      const Vec3& p0 = mesh_.corner(f, 0);
      const Vec3& p1 = mesh_.corner(f, 1);
      const Vec3& p2 = mesh_.corner(f, 2);
      const Vec3 e1 = p1 - p0;
      const double l1 = e1.norm();
      const Vec3 ex = e1 / l1;
      const Vec3 d2 = p2 - p0;
      const double x = d2.dot(ex);
      const double y = (d2 - x * ex).norm();
      u.coords[0] = {Vec2(0, 0), Vec2(l1, 0), Vec2(x, y)};
    }
    auto to2d = [&](int j, const Vec3& p) {
      Vec3 bary = barycentric_in_face(mesh_, strip[j], p);
      return Vec2(bary[0] * u.coords[j][0] + bary[1] * u.coords[j][1] + bary[2] * u.coords[j][2]);
    };
    Vec2 s2 = to2d(0, start);
    u.portals.push_back({s2, s2, -1, -1});
    for (int j = 1; j < n; ++j) {
      const int fp = strip[j - 1];
      const int f = strip[j];
      // Shared edge a->b in the orientation of the previous face.
      int ka = -1;
      for (int k = 0; k < 3; ++k) {
        int a = mesh_.triangles[fp][k];
        int b = mesh_.triangles[fp][(k + 1) % 3];
        if (face_has(mesh_, f, a) && face_has(mesh_, f, b)) {
          ka = k;
          break;
        }
      }
      if (ka < 0) throw GeometryError("strip faces " + std::to_string(fp) + ", " + std::to_string(f) + " not adjacent", "geodesic");
      const int va = mesh_.triangles[fp][ka];
      const int vb = mesh_.triangles[fp][(ka + 1) % 3];
      const Vec2 a2 = u.coords[j - 1][ka];
      const Vec2 b2 = u.coords[j - 1][(ka + 1) % 3];
      const Vec2 prev_other = u.coords[j - 1][(ka + 2) % 3];
      const int la = local_corner(mesh_, f, va);
      const int lb = local_corner(mesh_, f, vb);
      const int lc = 3 - la - lb;
      const Vec3& A = mesh_.vertices[va];
      const Vec3& B = mesh_.vertices[vb];
      const Vec3& C = mesh_.corner(f, lc);
      const Vec2 d = b2 - a2;
      const double len = d.norm();
      const Vec2 dx = d / len;
      const Vec2 dy(-dx.y(), dx.x());
      const double ac2 = (C - A).squaredNorm();
      const double bc2 = (C - B).squaredNorm();
      const double x = (ac2 - bc2 + len * len) / (2 * len);
      const double y = std::sqrt(std::max(0.0, ac2 - x * x));
      const double side = cross2(d, prev_other - a2) > 0 ? -1.0 : 1.0;
      u.coords[j][la] = a2;
      u.coords[j][lb] = b2;
      u.coords[j][lc] = a2 + x * dx + side * y * dy;
      u.portals.push_back({b2, a2, vb, va});
    }
    Vec2 e2 = to2d(n - 1, end);
    u.portals.push_back({e2, e2, -1, -1});
    return u;
  }

  struct Corner {
    Vec2 point;
    int portal = 0;
    int vertex = -1;
  };

  // Simple stupid funnel over the portal sequence. Returns the polyline
  // including start and end.
  static std::vector<Corner> funnel(const std::vector<Portal>& portals) {
    std::vector<Corner> out;
    const int n = static_cast<int>(portals.size());
    Vec2 apex = portals[0].left;
    int apex_index = 0;
    int apex_vertex = -1;
    Vec2 left = apex, right = apex;
    int left_index = 0, right_index = 0;
    int left_vertex = -1, right_vertex = -1;
    out.push_back({apex, 0, -1});
    for (int i = 1; i < n; ++i) {
      const Vec2& pl = portals[i].left;
      const Vec2& pr = portals[i].right;
      // Tighten the right side.
      if (cross2(right - apex, pr - apex) >= 0.0) {
        if (apex == right || cross2(left - apex, pr - apex) <= 0.0) {
          right = pr;
          right_index = i;
          right_vertex = portals[i].right_vertex;
        } else {
          apex = left;
          apex_index = left_index;
          apex_vertex = left_vertex;
          out.push_back({apex, apex_index, apex_vertex});
          left = right = apex;
          left_vertex = right_vertex = apex_vertex;
          right_index = left_index = apex_index;
          i = apex_index;
          continue;
        }
      }
      // Tighten the left side.
      if (cross2(left - apex, pl - apex) <= 0.0) {
        if (apex == left || cross2(right - apex, pl - apex) >= 0.0) {
          left = pl;
          left_index = i;
          left_vertex = portals[i].left_vertex;
        } else {
          apex = right;
          apex_index = right_index;
          apex_vertex = right_vertex;
          out.push_back({apex, apex_index, apex_vertex});
          left = right = apex;
          left_vertex = right_vertex = apex_vertex;
          right_index = left_index = apex_index;
          i = apex_index;
          continue;
        }
      }
    }
    const Vec2 end = portals[n - 1].left;
    if (!(out.back().point == end) || out.size() == 1) out.push_back({end, n - 1, -1});
    return out;
  }

  struct StripResult {
    std::vector<Corner> corners;
    Unfolding unfolding;
    double length = 0.0;
  };

  StripResult shortest_in_strip(const std::vector<int>& strip, const GraphPath& gp) const {
    StripResult r;
    r.unfolding = unfold(strip, gp.start_pos, gp.end_pos);
    r.corners = funnel(r.unfolding.portals);
    for (size_t i = 1; i < r.corners.size(); ++i) r.length += (r.corners[i].point - r.corners[i - 1].point).norm();
    return r;
  }

  // Replaces fan runs around corner vertices where the opposite side is
  // shorter. Returns true if the strip changed.
  bool reroute(std::vector<int>& strip, const StripResult& r) const {
    bool changed = false;
    int blocked_below = static_cast<int>(strip.size());
    for (int ci = static_cast<int>(r.corners.size()) - 2; ci >= 1; --ci) {
      const Corner& c = r.corners[ci];
      const int v = c.vertex;
      if (v < 0 || topo_.is_boundary_vertex(v)) continue;
      int i0 = c.portal - 1, i1 = c.portal;
      if (i0 < 0 || i1 >= static_cast<int>(strip.size())) continue;
      while (i0 > 0 && face_has(mesh_, strip[i0 - 1], v)) --i0;
      while (i1 + 1 < static_cast<int>(strip.size()) && face_has(mesh_, strip[i1 + 1], v)) ++i1;
      if (i1 >= blocked_below) continue;

      const auto& coords = r.unfolding.coords;
      const Vec2 x = coords[i0][local_corner(mesh_, strip[i0], v)];
      std::vector<Vec2> rays{r.corners[ci - 1].point - x};
      for (int j = i0 + 1; j <= i1; ++j) {
        const Portal& p = r.unfolding.portals[j];
        rays.push_back((p.left_vertex == v ? p.right : p.left) - x);
      }
      rays.push_back(r.corners[ci + 1].point - x);
      double beta = 0.0;
      for (size_t k = 1; k < rays.size(); ++k) beta += signed_angle2(rays[k - 1], rays[k]);
      beta = std::abs(beta);
      const double other = vertex_angle_sum(v) - beta;
      if (other >= std::numbers::pi - 1e-9) continue;

      const auto fan = topo_.ordered_fan(mesh_, v);
      const int m = static_cast<int>(fan.size());
      const int pos0 = static_cast<int>(std::find(fan.begin(), fan.end(), strip[i0]) - fan.begin());
      const bool strip_forward = fan[(pos0 + 1) % m] == strip[i0 + 1];
      auto mid = fan_walk(v, strip[i0], strip[i1], !strip_forward);
      if (!mid) continue;
      std::vector<int> next(strip.begin(), strip.begin() + i0 + 1);
      next.insert(next.end(), mid->begin(), mid->end());
      next.insert(next.end(), strip.begin() + i1, strip.end());
      strip = std::move(next);
      blocked_below = i0;
      changed = true;
    }
    if (changed) remove_loops(strip);
    return changed;
  }

  GeodesicPath to_path(const std::vector<int>& strip, const StripResult& r, const GraphPath& gp) const {
    const auto& portals = r.unfolding.portals;
    const int np = static_cast<int>(portals.size());
    GeodesicPath path;
    path.points.push_back(gp.start);
    size_t seg = 0;
    for (int j = 1; j + 1 < np; ++j) {
      while (seg + 2 < r.corners.size() && r.corners[seg + 1].portal < j) ++seg;
      const Corner& P = r.corners[seg];
      const Corner& Q = r.corners[seg + 1];
      const Portal& portal = portals[j];
      const int va = portal.right_vertex, vb = portal.left_vertex;
      double t;
      if (P.vertex == va || Q.vertex == va) {
        t = 0.0;
      } else if (P.vertex == vb || Q.vertex == vb) {
        t = 1.0;
      } else {
        const Vec2 a = portal.right, b = portal.left;
        const Vec2 dir = Q.point - P.point;
        const double den = cross2(b - a, dir);
        t = den != 0.0 ? cross2(P.point - a, dir) / den : 0.5;
        t = std::clamp(t, 0.0, 1.0);
      }
      path.points.push_back(SurfacePoint::on_edge(mesh_, strip[j - 1], va, vb, t));
    }
    path.points.push_back(gp.end);

    // Drop repeated visits to the same vertex or location.
    std::vector<SurfacePoint> kept;
    Vec3 last_pos;
    for (const auto& p : path.points) {
      Vec3 pos = p.position(mesh_);
      if (!kept.empty()) {
        auto v0 = kept.back().vertex(mesh_);
        auto v1 = p.vertex(mesh_);
        if ((v0 && v1 && *v0 == *v1) || pos == last_pos) continue;
      }
      kept.push_back(p);
      last_pos = pos;
    }
    path.points = std::move(kept);
    path.length = 0.0;
    auto poly = path.polyline(mesh_);
    for (size_t i = 1; i < poly.size(); ++i) path.length += (poly[i] - poly[i - 1]).norm();
    return path;
  }

  GeodesicPath straighten(const GraphPath& gp) const {
    std::vector<int> strip = build_strip(gp);
    StripResult r = shortest_in_strip(strip, gp);
    for (int it = 0; it < options_.max_iterations; ++it) {
      std::vector<int> candidate = strip;
      if (!reroute(candidate, r)) break;
      StripResult next = shortest_in_strip(candidate, gp);
      const double change = (r.length - next.length) / std::max(r.length, 1e-300);
      if (next.length <= r.length) {
        strip = std::move(candidate);
        r = std::move(next);
      }
      if (change < options_.relative_tolerance) break;
    }
    return to_path(strip, r, gp);
  }

  const TriMesh& mesh_;
  MeshTopology topo_;
  SteinerGraph graph_;
  GeodesicOptions options_;
};

}  // namespace

Vec3 SurfacePoint::position(const TriMesh& mesh) const {
  return bary[0] * mesh.corner(face, 0) + bary[1] * mesh.corner(face, 1) + bary[2] * mesh.corner(face, 2);
}

std::optional<int> SurfacePoint::vertex(const TriMesh& mesh) const {
  for (int k = 0; k < 3; ++k)
    if (bary[k] == 1.0) return mesh.triangles[face][k];
  return std::nullopt;
}

SurfacePoint SurfacePoint::at_vertex(const TriMesh& mesh, const MeshTopology& topo, int v) {
  const auto& faces = topo.vertex_faces(v);
  if (faces.empty()) throw GeometryError("vertex " + std::to_string(v) + " has no faces", "geodesic");
  SurfacePoint p;
  p.face = faces.front();
  p.bary[local_corner(mesh, p.face, v)] = 1.0;
  return p;
}

SurfacePoint SurfacePoint::on_edge(const TriMesh& mesh, int face, int a, int b, double t) {
  SurfacePoint p;
  p.face = face;
  const int ka = local_corner(mesh, face, a);
  const int kb = local_corner(mesh, face, b);
  if (ka < 0 || kb < 0) throw GeometryError("edge not in face " + std::to_string(face), "geodesic");
  p.bary[ka] = 1.0 - t;
  p.bary[kb] = t;
  if (t == 0.0) p.bary[ka] = 1.0;
  if (t == 1.0) p.bary[kb] = 1.0;
  return p;
}

std::vector<Vec3> GeodesicPath::polyline(const TriMesh& mesh) const {
  std::vector<Vec3> out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back(p.position(mesh));
  return out;
}

Vec3 barycentric_in_face(const TriMesh& mesh, int face, const Vec3& p) {
  return closest_point_barycentric(p, mesh.corner(face, 0), mesh.corner(face, 1), mesh.corner(face, 2));
}

SurfacePoint surface_point_on_loop(const TriMesh& mesh, const MeshTopology& topo, const LoopPoint& p) {
  if (p.t <= 0.0) return SurfacePoint::at_vertex(mesh, topo, p.v0);
  if (p.t >= 1.0) return SurfacePoint::at_vertex(mesh, topo, p.v1);
  int e = topo.find_edge(p.v0, p.v1);
  if (e < 0) throw GeometryError("loop segment is not a mesh edge", "geodesic");
  return SurfacePoint::on_edge(mesh, topo.edge(e).f0, p.v0, p.v1, p.t);
}

GeodesicPath shortest_boundary_geodesic(const TriMesh& mesh, const BoundaryLoop& inlet, const BoundaryLoop& outlet,
                                        const GeodesicOptions& options) {
  GeodesicSolver solver(mesh, options);
  return solver.between_loops(inlet, outlet);
}

GeodesicPath shortest_boundary_geodesic(const TriMesh& mesh, const LoopLabeling& labeling,
                                        const GeodesicOptions& options) {
  auto [inlet, outlet] = boundary_loops(mesh, labeling);
  return shortest_boundary_geodesic(mesh, inlet, outlet, options);
}

GeodesicPath shortest_geodesic_between(const TriMesh& mesh, const SurfacePoint& from, const SurfacePoint& to,
                                       const GeodesicOptions& options) {
  GeodesicSolver solver(mesh, options);
  return solver.between_points(from, to);
}

}  // namespace tubekin
