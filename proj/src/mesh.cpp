#include "tubekin/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <mutex>

namespace tubekin {

namespace {
std::mutex g_warn_mutex;
bool g_quiet = false;
}  // namespace

void warn(const std::string& message) {
  std::lock_guard<std::mutex> lock(g_warn_mutex);
  if (!g_quiet) std::cerr << "warning: " << message << "\n";
}

void set_quiet(bool quiet) { g_quiet = quiet; }

Vec3 TriMesh::face_normal(int f) const {
  const Vec3& a = corner(f, 0);
  return (corner(f, 1) - a).cross(corner(f, 2) - a);
}

double TriMesh::total_area() const {
  double sum = 0.0;
  for (int f = 0; f < num_triangles(); ++f) sum += face_area(f);
  return sum;
}

double TriMesh::bbox_diagonal() const {
  if (vertices.empty()) return 0.0;
  Eigen::AlignedBox3d box;
  for (const auto& p : vertices) box.extend(p);
  return box.diagonal().norm();
}

double TriMesh::mean_edge_length() const {
  double sum = 0.0;
  for (const auto& t : triangles)
    for (int k = 0; k < 3; ++k) sum += (vertices[t[k]] - vertices[t[(k + 1) % 3]]).norm();
  return triangles.empty() ? 0.0 : sum / (3.0 * triangles.size());
}

TriMesh TriMesh::transformed(const Eigen::Isometry3d& xf) const {
  TriMesh out = *this;
  for (auto& p : out.vertices) p = xf * p;
  return out;
}

double corner_angle(const TriMesh& mesh, int f, int k) {
  const Vec3& p = mesh.corner(f, k);
  Vec3 a = mesh.corner(f, (k + 1) % 3) - p;
  Vec3 b = mesh.corner(f, (k + 2) % 3) - p;
  return std::atan2(a.cross(b).norm(), a.dot(b));
}

MeshTopology::MeshTopology(const TriMesh& mesh) {
  const int nf = mesh.num_triangles();
  face_edges_.resize(nf);
  vertex_faces_.resize(mesh.num_vertices());
  edge_index_.reserve(static_cast<size_t>(nf) * 2);
  for (int f = 0; f < nf; ++f) {
    for (int k = 0; k < 3; ++k) {
      int a = mesh.triangles[f][k];
      int b = mesh.triangles[f][(k + 1) % 3];
      auto [it, inserted] = edge_index_.try_emplace(key(a, b), static_cast<int>(edges_.size()));
      if (inserted) {
        Edge e;
        e.v0 = std::min(a, b);
        e.v1 = std::max(a, b);
        e.f0 = f;
        edges_.push_back(e);
      } else {
        Edge& e = edges_[it->second];
        if (e.f1 < 0) {
          e.f1 = f;
        } else {
          ++e.extra_faces;
          nonmanifold_ = true;
        }
      }
      face_edges_[f][k] = it->second;
      vertex_faces_[a].push_back(f);
    }
  }
  boundary_vertex_.assign(mesh.num_vertices(), 0);
  for (const auto& e : edges_) {
    if (e.f1 < 0) boundary_vertex_[e.v0] = boundary_vertex_[e.v1] = 1;
  }
}

int MeshTopology::find_edge(int a, int b) const {
  auto it = edge_index_.find(key(a, b));
  return it == edge_index_.end() ? -1 : it->second;
}

std::vector<int> MeshTopology::ordered_fan(const TriMesh& mesh, int v) const {
  const auto& faces = vertex_faces_[v];
  if (faces.empty()) return {};
  auto local = [&](int f) {
    for (int k = 0; k < 3; ++k)
      if (mesh.triangles[f][k] == v) return k;
    return -1;
  };
  // Walk "forward": from face f, cross the edge (v, prev corner) to the next face.
  int start = faces.front();
  if (boundary_vertex_[v]) {
    // Start at the face whose outgoing edge v->next is a boundary edge.
    for (int f : faces) {
      int k = local(f);
      int e = face_edges_[f][k];  // edge v -> next
      if (edges_[e].f1 < 0) {
        start = f;
        break;
      }
    }
  }
  std::vector<int> fan{start};
  int f = start;
  for (size_t guard = 0; guard < faces.size() + 1; ++guard) {
    int k = local(f);
    int e = face_edges_[f][(k + 2) % 3];  // edge prev -> v
    int next = other_face(e, f);
    if (next < 0 || next == start) break;
    fan.push_back(next);
    f = next;
  }
  return fan;
}

std::vector<std::vector<int>> MeshTopology::boundary_loops(const TriMesh& mesh) const {
  // Boundary half-edges oriented as in their face: a -> b.
  std::unordered_map<int, int> next_of;
  for (size_t ei = 0; ei < edges_.size(); ++ei) {
    const Edge& e = edges_[ei];
    if (e.f1 >= 0 || e.extra_faces > 0) continue;
    const auto& t = mesh.triangles[e.f0];
    for (int k = 0; k < 3; ++k) {
      if (face_edges_[e.f0][k] == static_cast<int>(ei)) {
        next_of[t[k]] = t[(k + 1) % 3];
        break;
      }
    }
  }
  std::vector<int> starts;
  starts.reserve(next_of.size());
  for (const auto& [a, b] : next_of) starts.push_back(a);
  std::sort(starts.begin(), starts.end());
  std::vector<std::vector<int>> loops;
  std::unordered_map<int, char> used;
  for (int s : starts) {
    if (used.count(s)) continue;
    std::vector<int> loop;
    int v = s;
    while (!used.count(v)) {
      used[v] = 1;
      loop.push_back(v);
      auto it = next_of.find(v);
      if (it == next_of.end()) break;
      v = it->second;
    }
    loops.push_back(std::move(loop));
  }
  return loops;
}

}  // namespace tubekin
