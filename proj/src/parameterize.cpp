#include "tubekin/parameterize.hpp"

#include "tubekin/mesh_core.hpp"
#include "tubekin/spatial.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <unordered_map>
#include <unordered_set>

namespace tubekin {

namespace {

struct CutPoint {
  int vertex = -1;  // original vertex, or -1 for an edge point
  int edge = -1;
  double t = 0.0;   // along edge v0 -> v1

  bool operator==(const CutPoint& o) const { return vertex == o.vertex && edge == o.edge && t == o.t; }
};

double polygon_area(const std::vector<Vec2>& pts, const std::vector<int>& poly) {
  double a = 0.0;
  for (size_t i = 0; i < poly.size(); ++i) {
    const Vec2& p = pts[poly[i]];
    const Vec2& q = pts[poly[(i + 1) % poly.size()]];
    a += p.x() * q.y() - q.x() * p.y();
  }
  return 0.5 * a;
}

double tri_area2(const Vec2& a, const Vec2& b, const Vec2& c) {
  return (b - a).x() * (c - a).y() - (b - a).y() * (c - a).x();
}

double min_angle(const Vec2& a, const Vec2& b, const Vec2& c) {
  auto ang = [](const Vec2& p, const Vec2& q, const Vec2& r) {
    Vec2 u = q - p, w = r - p;
    return std::atan2(std::abs(u.x() * w.y() - u.y() * w.x()), u.dot(w));
  };
  return std::min({ang(a, b, c), ang(b, c, a), ang(c, a, b)});
}

// Ear clipping of a convex polygon whose vertices may include collinear runs.
void clip_ears(const std::vector<Vec2>& pts, std::vector<int> poly, std::vector<std::array<int, 3>>& out) {
  const double scale = std::abs(polygon_area(pts, poly)) + 1e-300;
  while (poly.size() > 3) {
    int best = -1;
    double best_angle = -1.0;
    const int n = static_cast<int>(poly.size());
    for (int i = 0; i < n; ++i) {
      const Vec2& a = pts[poly[(i + n - 1) % n]];
      const Vec2& b = pts[poly[i]];
      const Vec2& c = pts[poly[(i + 1) % n]];
      if (tri_area2(a, b, c) <= 1e-12 * scale) continue;
      std::vector<int> rest = poly;
      rest.erase(rest.begin() + i);
      if (std::abs(polygon_area(pts, rest)) <= 1e-12 * scale) continue;
      double ang = min_angle(a, b, c);
      if (ang > best_angle) {
        best_angle = ang;
        best = i;
      }
    }
    if (best < 0) throw GeometryError("cannot triangulate split face", "cut_along_geodesic");
    out.push_back({poly[(best + n - 1) % n], poly[best], poly[(best + 1) % n]});
    poly.erase(poly.begin() + best);
  }
  out.push_back({poly[0], poly[1], poly[2]});
}

}  // namespace

CutMesh cut_along_geodesic(const TriMesh& mesh, const GeodesicPath& seam, const CutOptions& options) {
  const char* stage = "cut_along_geodesic";
  MeshTopology topo(mesh);
  {
    auto loops = topo.boundary_loops(mesh);
    if (loops.size() != 2 || topo.has_nonmanifold_edges()) {
      throw TopologyError("input is not a tube (" + std::to_string(loops.size()) + " boundary loops)", stage);
    }
  }
  if (seam.points.size() < 2) throw GeometryError("seam has fewer than two points", stage);

  // Path points as vertices or edge points, with near-vertex crossings snapped.
  std::vector<CutPoint> pts;
  const int np = static_cast<int>(seam.points.size());
  for (int idx = 0; idx < np; ++idx) {
    const SurfacePoint& sp = seam.points[idx];
    const bool endpoint = idx == 0 || idx == np - 1;
    CutPoint cp;
    if (auto v = sp.vertex(mesh)) {
      cp.vertex = *v;
    } else {
      int zero = -1;
      for (int k = 0; k < 3; ++k)
        if (sp.bary[k] == 0.0) zero = k;
      if (zero < 0) throw GeometryError("seam point " + std::to_string(idx) + " lies inside a face", stage);
      const int a = mesh.triangles[sp.face][(zero + 1) % 3];
      const int b = mesh.triangles[sp.face][(zero + 2) % 3];
      cp.edge = topo.find_edge(a, b);
      const auto& e = topo.edge(cp.edge);
      cp.t = e.v0 == a ? sp.bary[(zero + 2) % 3] : sp.bary[(zero + 1) % 3];
      auto snap_ok = [&](int v) { return endpoint || !topo.is_boundary_vertex(v); };
      if (cp.t < options.snap_fraction && snap_ok(e.v0)) {
        cp = {e.v0, -1, 0.0};
      } else if (cp.t > 1.0 - options.snap_fraction && snap_ok(e.v1)) {
        cp = {e.v1, -1, 0.0};
      }
    }
    if (!pts.empty() && pts.back() == cp) continue;
    pts.push_back(cp);
  }
  if (pts.size() < 2) throw GeometryError("seam collapses to a point", stage);
  auto on_boundary = [&](const CutPoint& p) {
    return p.vertex >= 0 ? topo.is_boundary_vertex(p.vertex) : topo.is_boundary_edge(p.edge);
  };
  if (!on_boundary(pts.front()) || !on_boundary(pts.back())) {
    throw GeometryError("seam endpoints must lie on the boundary", stage);
  }
  for (size_t i = 1; i + 1 < pts.size(); ++i) {
    if (on_boundary(pts[i])) throw GeometryError("seam touches the boundary at point " + std::to_string(i), stage);
  }

  CutMesh cut;
  cut.mesh.frame_index = mesh.frame_index;
  cut.mesh.time = mesh.time;
  cut.mesh.vertices = mesh.vertices;
  cut.source_vertex.resize(mesh.num_vertices());
  for (int v = 0; v < mesh.num_vertices(); ++v) cut.source_vertex[v] = v;

  std::unordered_map<int, int> edge_point;  // edge -> new vertex id
  std::unordered_set<int> used_vertices;
  std::vector<int> chain;
  for (const auto& p : pts) {
    if (p.vertex >= 0) {
      if (!used_vertices.insert(p.vertex).second) {
        throw GeometryError("seam self-intersection at vertex " + std::to_string(p.vertex), stage);
      }
      chain.push_back(p.vertex);
      continue;
    }
    if (edge_point.count(p.edge)) {
      throw GeometryError("seam self-intersection on edge " + std::to_string(p.edge), stage);
    }
    const auto& e = topo.edge(p.edge);
    const int id = cut.mesh.num_vertices();
    cut.mesh.vertices.push_back((1.0 - p.t) * mesh.vertices[e.v0] + p.t * mesh.vertices[e.v1]);
    cut.source_vertex.push_back(-1);
    edge_point[p.edge] = id;
    chain.push_back(id);
  }

  // Faces holding each seam segment as a diagonal.
  auto faces_of = [&](const CutPoint& p) -> std::vector<int> {
    if (p.vertex >= 0) return topo.vertex_faces(p.vertex);
    const auto& e = topo.edge(p.edge);
    std::vector<int> out{e.f0};
    if (e.f1 >= 0) out.push_back(e.f1);
    return out;
  };
  auto edge_has = [&](int edge, int v) { return topo.edge(edge).v0 == v || topo.edge(edge).v1 == v; };
  std::map<int, std::vector<std::pair<int, int>>> diagonals;
  for (size_t i = 0; i + 1 < pts.size(); ++i) {
    const CutPoint& p = pts[i];
    const CutPoint& q = pts[i + 1];
    bool along_edge = false;
    if (p.vertex >= 0 && q.vertex >= 0) along_edge = topo.find_edge(p.vertex, q.vertex) >= 0;
    else if (p.vertex >= 0) along_edge = edge_has(q.edge, p.vertex);
    else if (q.vertex >= 0) along_edge = edge_has(p.edge, q.vertex);
    if (along_edge) continue;
    auto fp = faces_of(p), fq = faces_of(q);
    std::vector<int> common;
    for (int f : fp)
      if (std::find(fq.begin(), fq.end(), f) != fq.end()) common.push_back(f);
    if (common.size() != 1) {
      throw GeometryError("seam segment " + std::to_string(i) + " does not lie in one face", stage);
    }
    diagonals[common.front()].push_back({chain[i], chain[i + 1]});
  }

  std::set<int> touched;
  for (const auto& [e, id] : edge_point) {
    touched.insert(topo.edge(e).f0);
    if (topo.edge(e).f1 >= 0) touched.insert(topo.edge(e).f1);
  }
  for (const auto& [f, d] : diagonals) touched.insert(f);

  for (int f = 0; f < mesh.num_triangles(); ++f) {
    if (!touched.count(f)) {
      cut.mesh.triangles.push_back(mesh.triangles[f]);
      cut.source_face.push_back(f);
      continue;
    }
    const auto& tri = mesh.triangles[f];
    std::vector<int> poly;
    for (int k = 0; k < 3; ++k) {
      poly.push_back(tri[k]);
      auto it = edge_point.find(topo.face_edge(f, k));
      if (it != edge_point.end()) poly.push_back(it->second);
    }
    // Local 2D frame in the face plane; the polygon is counterclockwise.
    const Vec3 o = mesh.corner(f, 0);
    const Vec3 n = mesh.face_normal(f).normalized();
    const Vec3 ex = (mesh.corner(f, 1) - o).normalized();
    const Vec3 ey = n.cross(ex);
    std::vector<Vec2> p2;
    std::unordered_map<int, int> local;
    for (size_t i = 0; i < poly.size(); ++i) {
      const Vec3 d = cut.mesh.vertices[poly[i]] - o;
      p2.emplace_back(d.dot(ex), d.dot(ey));
      local[poly[i]] = static_cast<int>(i);
    }
    std::vector<std::vector<int>> pieces(1);
    for (size_t i = 0; i < poly.size(); ++i) pieces[0].push_back(static_cast<int>(i));
    for (const auto& [ga, gb] : diagonals[f]) {
      const int a = local.at(ga), b = local.at(gb);
      for (size_t pi = 0; pi < pieces.size(); ++pi) {
        auto& pc = pieces[pi];
        auto ia = std::find(pc.begin(), pc.end(), a);
        auto ib = std::find(pc.begin(), pc.end(), b);
        if (ia == pc.end() || ib == pc.end()) continue;
        int i0 = static_cast<int>(ia - pc.begin()), i1 = static_cast<int>(ib - pc.begin());
        if (i0 > i1) std::swap(i0, i1);
        const int sz = static_cast<int>(pc.size());
        if (i1 - i0 == 1 || (i0 == 0 && i1 == sz - 1)) break;
        std::vector<int> first(pc.begin() + i0, pc.begin() + i1 + 1);
        std::vector<int> second(pc.begin() + i1, pc.end());
        second.insert(second.end(), pc.begin(), pc.begin() + i0 + 1);
        pc = std::move(first);
        pieces.push_back(std::move(second));
        break;
      }
    }
    for (const auto& pc : pieces) {
      std::vector<std::array<int, 3>> tris;
      clip_ears(p2, pc, tris);
      for (const auto& t : tris) {
        cut.mesh.triangles.push_back({poly[t[0]], poly[t[1]], poly[t[2]]});
        cut.source_face.push_back(f);
      }
    }
  }

  // Duplicate seam vertices: faces around each seam vertex split into the
  // two sides of the seam.
  std::set<std::pair<int, int>> seam_edges;
  for (size_t i = 0; i + 1 < chain.size(); ++i) seam_edges.insert(std::minmax(chain[i], chain[i + 1]));
  MeshTopology split_topo(cut.mesh);
  for (const auto& [a, b] : seam_edges) {
    if (split_topo.find_edge(a, b) < 0) throw GeometryError("seam edge missing after split", stage);
  }
  std::vector<std::vector<int>> twin_faces(chain.size());
  for (size_t si = 0; si < chain.size(); ++si) {
    const int s = chain[si];
    const auto fan = split_topo.ordered_fan(cut.mesh, s);
    const int m = static_cast<int>(fan.size());
    auto crossing_is_seam = [&](int f) {
      const auto& t = cut.mesh.triangles[f];
      int k = 0;
      while (t[k] != s) ++k;
      return seam_edges.count(std::minmax(s, t[(k + 2) % 3])) > 0;
    };
    std::vector<std::vector<int>> arcs(1);
    int start = 0;
    if (!split_topo.is_boundary_vertex(s)) {
      // Rotate so the fan starts right after a seam crossing.
      for (int i = 0; i < m; ++i) {
        if (crossing_is_seam(fan[(i + m - 1) % m])) {
          start = i;
          break;
        }
      }
    }
    for (int c = 0; c < m; ++c) {
      const int f = fan[(start + c) % m];
      arcs.back().push_back(f);
      if (c + 1 < m && crossing_is_seam(f)) arcs.emplace_back();
    }
    if (arcs.size() != 2) {
      throw GeometryError("seam vertex " + std::to_string(s) + " splits into " + std::to_string(arcs.size()) + " sides",
                          stage);
    }
    twin_faces[si] = arcs[1];
  }
  for (size_t si = 0; si < chain.size(); ++si) {
    const int s = chain[si];
    const int twin = cut.mesh.num_vertices();
    cut.mesh.vertices.push_back(cut.mesh.vertices[s]);
    cut.source_vertex.push_back(cut.source_vertex[s]);
    for (int f : twin_faces[si]) {
      for (int& v : cut.mesh.triangles[f])
        if (v == s) v = twin;
    }
    cut.seam.push_back(s);
    cut.seam_twin.push_back(twin);
  }
  return cut;
}

double FlattenedFrame::signed_area(int f) const {
  const auto& t = cut.mesh.triangles[f];
  return 0.5 * tri_area2(uv[t[0]], uv[t[1]], uv[t[2]]);
}

int FlattenedFrame::flipped_triangles() const {
  int count = 0;
  for (int f = 0; f < cut.mesh.num_triangles(); ++f)
    if (signed_area(f) <= 0.0) ++count;
  return count;
}

FlattenedFrame flatten_to_unit_square(const CutMesh& cut, const FlattenOptions& options) {
  const char* stage = "flatten_to_unit_square";
  const TriMesh& mesh = cut.mesh;
  MeshTopology topo(mesh);
  auto loops = topo.boundary_loops(mesh);
  if (loops.size() != 1) {
    throw TopologyError("cut mesh has " + std::to_string(loops.size()) + " boundary loops, expected a disk", stage);
  }
  const int nv = mesh.num_vertices();
  const int K = static_cast<int>(cut.seam.size()) - 1;
  std::unordered_map<int, int> seam_index;
  for (int k = 0; k <= K; ++k) {
    seam_index[cut.seam[k]] = k;
    seam_index[cut.seam_twin[k]] = k;
  }
  auto twin_of = [&](int v) {
    int k = seam_index.at(v);
    return cut.seam[k] == v ? cut.seam_twin[k] : cut.seam[k];
  };

  std::vector<int> loop = loops[0];
  const int L = static_cast<int>(loop.size());
  int start = -1;
  for (int i = 0; i < L; ++i) {
    auto it = seam_index.find(loop[i]);
    if (it != seam_index.end() && it->second == 0 && !seam_index.count(loop[(i + 1) % L])) {
      start = i;
      break;
    }
  }
  if (start < 0) throw TopologyError("seam start not found on the cut boundary", stage);
  std::rotate(loop.begin(), loop.begin() + start, loop.end());

  // Corners: (0,0) at loop[0], (1,0) at the other inlet copy, (1,1) and (0,1)
  // at the outlet copies.
  const int c00 = loop[0];
  const int c10 = twin_of(c00);
  auto pos = [&](int v) { return static_cast<int>(std::find(loop.begin(), loop.end(), v) - loop.begin()); };
  const int i10 = pos(c10);
  const int i11 = i10 + K;
  if (i10 >= L || i11 >= L || seam_index.count(loop[i11]) == 0 || seam_index.at(loop[i11]) != K) {
    throw TopologyError("cut boundary does not follow the seam", stage);
  }
  const int i01 = pos(twin_of(loop[i11]));
  if (i01 >= L || i01 + K != L) throw TopologyError("cut boundary does not close along the seam", stage);

  FlattenedFrame flat;
  flat.cut = cut;
  flat.uv.assign(nv, Vec2::Zero());
  flat.is_boundary.assign(nv, 0);

  auto arc_side = [&](int from, int to, auto&& assign) {
    std::vector<double> s{0.0};
    for (int i = from; i < to; ++i) {
      s.push_back(s.back() + (mesh.vertices[loop[(i + 1) % L]] - mesh.vertices[loop[i % L]]).norm());
    }
    const double total = s.back();
    if (total <= 0.0) throw GeometryError("zero-length boundary side", stage);
    for (int i = from; i <= to; ++i) {
      assign(loop[i % L], s[i - from] / total);
      flat.is_boundary[loop[i % L]] = 1;
    }
  };
  arc_side(0, i10, [&](int v, double a) { flat.uv[v] = Vec2(a, 0.0); });
  arc_side(i10, i11, [&](int v, double a) { flat.uv[v] = Vec2(1.0, a); });
  arc_side(i11, i01, [&](int v, double a) { flat.uv[v] = Vec2(1.0 - a, 1.0); });
  arc_side(i01, L, [&](int v, double a) { flat.uv[v] = Vec2(0.0, 1.0 - a); });

  // Interior: authalic weights w_ij = (cot g + cot d) / |xi - xj|^2 with g, d
  // the angles at j opposite the edges (i, k) in the two faces of edge ij.
  std::vector<int> unknown(nv, -1);
  int nu = 0;
  std::vector<char> used(nv, 0);
  for (const auto& t : mesh.triangles)
    for (int v : t) used[v] = 1;
  for (int v = 0; v < nv; ++v)
    if (used[v] && !flat.is_boundary[v]) unknown[v] = nu++;

  std::vector<std::map<int, double>> rows(nu);
  for (int f = 0; f < mesh.num_triangles(); ++f) {
    const auto& t = mesh.triangles[f];
    if (mesh.face_area(f) <= 0.0) {
      for (int v : t) {
        if (unknown[v] >= 0) {
          throw GeometryError("singular system: zero-area neighborhood at vertex " + std::to_string(v), stage);
        }
      }
    }
    for (int k = 0; k < 3; ++k) {
      const int i = t[k];
      if (unknown[i] < 0) continue;
      for (int side = 1; side <= 2; ++side) {
        const int kj = (k + side) % 3;
        const int j = t[kj];
        const double len2 = (mesh.vertices[i] - mesh.vertices[j]).squaredNorm();
        const double angle = corner_angle(mesh, f, kj);
        rows[unknown[i]][j] += (std::cos(angle) / std::sin(angle)) / len2;
      }
    }
  }
  int clamped = 0;
  typedef Eigen::Triplet<double> Tr;
  std::vector<Tr> triplets;
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(nu, 2);
  for (int v = 0; v < nv; ++v) {
    const int r = unknown[v];
    if (r < 0) continue;
    auto& row = rows[r];
    double mean = 0.0;
    for (const auto& [j, w] : row) mean += w;
    mean /= std::max<size_t>(1, row.size());
    const double bound = -options.clamp_ratio * std::abs(mean);
    double diag = 0.0;
    for (auto& [j, w] : row) {
      if (w < bound) {
        w = bound;
        ++clamped;
      }
      diag += w;
      if (unknown[j] >= 0) triplets.emplace_back(r, unknown[j], -w);
      else rhs.row(r) += w * flat.uv[j].transpose();
    }
    if (!(std::abs(diag) > 1e-300) || !std::isfinite(diag)) {
      throw GeometryError("singular system at vertex " + std::to_string(v), stage);
    }
    triplets.emplace_back(r, r, diag);
  }
  if (clamped > 0) {
    warn("frame " + std::to_string(mesh.frame_index) + ": clamped " + std::to_string(clamped) + " negative authalic weights");
  }
  if (nu > 0) {
    Eigen::SparseMatrix<double> A(nu, nu);
    A.setFromTriplets(triplets.begin(), triplets.end());
    A.makeCompressed();
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(A);
    if (lu.info() != Eigen::Success) throw GeometryError("singular system: " + lu.lastErrorMessage(), stage);
    Eigen::MatrixXd x = lu.solve(rhs);
    for (int refine = 0; refine < 3; ++refine) {
      Eigen::MatrixXd res = rhs - A * x;
      const double rel = res.norm() / std::max(rhs.norm(), 1e-300);
      if (rel < options.residual_tolerance) break;
      if (refine == 2) throw GeometryError("linear solve residual " + std::to_string(rel) + " above tolerance", stage);
      x += lu.solve(res);
    }
    for (int v = 0; v < nv; ++v)
      if (unknown[v] >= 0) flat.uv[v] = x.row(unknown[v]).transpose();
  }
  return flat;
}

Vec3 GridMesh::sample(double u, double v) const {
  double x = u * n;
  x -= std::floor(x / n) * n;
  const double y = std::clamp(v, 0.0, 1.0) * (m - 1);
  const int i0 = static_cast<int>(std::floor(x));
  const int j0 = std::min(static_cast<int>(std::floor(y)), m - 2);
  const double fx = x - i0, fy = y - j0;
  return (1 - fx) * (1 - fy) * at(i0, j0) + fx * (1 - fy) * at(i0 + 1, j0) + (1 - fx) * fy * at(i0, j0 + 1) +
         fx * fy * at(i0 + 1, j0 + 1);
}

TriMesh GridMesh::to_trimesh() const {
  TriMesh mesh;
  mesh.frame_index = frame_index;
  mesh.time = time;
  mesh.vertices = points;
  mesh.triangles.reserve(2 * static_cast<size_t>(n) * (m - 1));
  for (int j = 0; j + 1 < m; ++j) {
    for (int i = 0; i < n; ++i) {
      const int a = j * n + i, b = j * n + wrap(i + 1), c = (j + 1) * n + wrap(i + 1), d = (j + 1) * n + i;
      mesh.triangles.push_back({a, b, c});
      mesh.triangles.push_back({a, c, d});
    }
  }
  return mesh;
}

int GridMesh::flagged_count() const { return static_cast<int>(std::count(flagged.begin(), flagged.end(), 1)); }

GridMesh resample_grid(const FlattenedFrame& flat, int n, int m) {
  const char* stage = "resample_grid";
  if (n < 3 || m < 2) throw InputError("grid must be at least 3x2", stage);
  const TriMesh& mesh = flat.cut.mesh;
  const int nf = mesh.num_triangles();
  const int B = std::max(1, static_cast<int>(std::sqrt(nf / 2.0)));
  std::vector<std::vector<int>> buckets(static_cast<size_t>(B) * B);
  auto cell = [&](double x) { return std::clamp(static_cast<int>(std::floor(x * B)), 0, B - 1); };
  for (int f = 0; f < nf; ++f) {
    const auto& t = mesh.triangles[f];
    Eigen::AlignedBox2d box;
    for (int v : t) box.extend(flat.uv[v]);
    for (int by = cell(box.min().y() - 1e-9); by <= cell(box.max().y() + 1e-9); ++by)
      for (int bx = cell(box.min().x() - 1e-9); bx <= cell(box.max().x() + 1e-9); ++bx) buckets[by * B + bx].push_back(f);
  }
  GridMesh grid(n, m);
  grid.frame_index = mesh.frame_index;
  grid.time = mesh.time;
  for (int j = 0; j < m; ++j) {
    for (int i = 0; i < n; ++i) {
      const Vec2 q(static_cast<double>(i) / n, static_cast<double>(j) / (m - 1));
      int best = -1;
      double best_min = -std::numeric_limits<double>::infinity();
      Vec3 best_bary;
      for (int f : buckets[cell(q.y()) * B + cell(q.x())]) {
        const auto& t = mesh.triangles[f];
        const Vec2 &a = flat.uv[t[0]], &b = flat.uv[t[1]], &c = flat.uv[t[2]];
        const double den = tri_area2(a, b, c);
        if (den == 0.0) continue;
        const double l1 = tri_area2(q, b, c) / den;
        const double l2 = tri_area2(a, q, c) / den;
        const double l3 = 1.0 - l1 - l2;
        const double lo = std::min({l1, l2, l3});
        if (lo > best_min) {
          best_min = lo;
          best = f;
          best_bary = Vec3(l1, l2, l3);
        }
      }
      if (best < 0 || best_min < -1e-9) {
        throw GeometryError("lattice point (" + std::to_string(i) + ", " + std::to_string(j) +
                                ") lies outside all parameter triangles",
                            stage);
      }
      best_bary = best_bary.cwiseMax(0.0);
      best_bary /= best_bary.sum();
      const auto& t = mesh.triangles[best];
      grid.at(i, j) = best_bary[0] * mesh.vertices[t[0]] + best_bary[1] * mesh.vertices[t[1]] +
                      best_bary[2] * mesh.vertices[t[2]];
    }
  }
  return grid;
}

GridMesh project_to_inner(const GridMesh& outer, const TriMesh& inner, const ProjectionOptions& options) {
  TriangleTree tree(inner);
  GridMesh out = outer;
  out.surface = SurfaceKind::inner;
  out.frame_index = inner.frame_index;
  out.time = inner.time;
  int flagged = 0;
  for (size_t k = 0; k < outer.points.size(); ++k) {
    ClosestPoint cp = tree.closest(outer.points[k]);
    out.points[k] = cp.position;
    out.flagged[k] = cp.distance > options.max_distance ? 1 : 0;
    flagged += out.flagged[k];
  }
  if (flagged > 0) {
    warn("frame " + std::to_string(inner.frame_index) + ": " + std::to_string(flagged) +
         " grid nodes project farther than the layer-thickness bound");
  }
  return out;
}

GeodesicPath align_lumen_seam(const TriMesh& lumen, const Vec3& outer_start, const Vec3& outer_end,
                              const GeodesicOptions& options) {
  LoopLabeling labels;
  labels.inlet_hint = outer_start;
  auto [inlet, outlet] = boundary_loops(lumen, labels);
  MeshTopology topo(lumen);
  const LoopPoint a = closest_point_on_loop(lumen, inlet, outer_start);
  const LoopPoint b = closest_point_on_loop(lumen, outlet, outer_end);
  return shortest_geodesic_between(lumen, surface_point_on_loop(lumen, topo, a), surface_point_on_loop(lumen, topo, b),
                                   options);
}

GridMesh parameterize_frame(const TriMesh& mesh, const GeodesicPath& seam, int n, int m, SurfaceKind surface) {
  CutMesh cut = cut_along_geodesic(mesh, seam);
  FlattenedFrame flat = flatten_to_unit_square(cut);
  GridMesh grid = resample_grid(flat, n, m);
  grid.surface = surface;
  return grid;
}

SpacingVariation spacing_variation(const GridMesh& grid) {
  auto cv = [](const std::vector<double>& d) {
    double mean = 0.0;
    for (double x : d) mean += x;
    mean /= d.size();
    double var = 0.0;
    for (double x : d) var += (x - mean) * (x - mean);
    return mean > 0.0 ? std::sqrt(var / d.size()) / mean : 0.0;
  };
  SpacingVariation out;
  std::vector<double> d;
  for (int j = 0; j < grid.m; ++j) {
    d.clear();
    for (int i = 0; i < grid.n; ++i) d.push_back((grid.at(i + 1, j) - grid.at(i, j)).norm());
    out.row = std::max(out.row, cv(d));
  }
  for (int i = 0; i < grid.n; ++i) {
    d.clear();
    for (int j = 0; j + 1 < grid.m; ++j) d.push_back((grid.at(i, j + 1) - grid.at(i, j)).norm());
    out.column = std::max(out.column, cv(d));
  }
  return out;
}

double polyline_hausdorff(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
  auto one_sided = [](const std::vector<Vec3>& from, const std::vector<Vec3>& to) {
    double worst = 0.0;
    for (const Vec3& p : from) {
      double best = std::numeric_limits<double>::infinity();
      if (to.size() == 1) best = (p - to[0]).norm();
      for (size_t k = 0; k + 1 < to.size(); ++k) {
        const Vec3 e = to[k + 1] - to[k];
        const double len2 = e.squaredNorm();
        const double t = len2 > 0.0 ? std::clamp((p - to[k]).dot(e) / len2, 0.0, 1.0) : 0.0;
        best = std::min(best, (p - (to[k] + t * e)).norm());
      }
      worst = std::max(worst, best);
    }
    return worst;
  };
  if (a.empty() || b.empty()) throw InputError("empty polyline", "polyline_hausdorff");
  return std::max(one_sided(a, b), one_sided(b, a));
}

double seam_deviation(const GridMesh& grid, const TriMesh& mesh, const GeodesicPath& seam) {
  std::vector<Vec3> column;
  for (int j = 0; j < grid.m; ++j) column.push_back(grid.at(0, j));
  return polyline_hausdorff(column, seam.polyline(mesh));
}

}  // namespace tubekin
