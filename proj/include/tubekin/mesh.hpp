#pragma once

#include "tubekin/common.hpp"

#include <array>
#include <cstdint>
#include <unordered_map>
#include <vector>

namespace tubekin {

/// One time sample of one surface: an indexed triangle mesh in mm.
struct TriMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> triangles;
  int frame_index = 0;
  double time = 0.0;  // seconds within the cycle

  int num_vertices() const { return static_cast<int>(vertices.size()); }
  int num_triangles() const { return static_cast<int>(triangles.size()); }

  const Vec3& corner(int f, int k) const { return vertices[triangles[f][k]]; }
  Vec3 face_normal(int f) const;  // unnormalized, |n| = 2 * area
  double face_area(int f) const { return 0.5 * face_normal(f).norm(); }
  double total_area() const;
  double bbox_diagonal() const;
  double mean_edge_length() const;

  TriMesh transformed(const Eigen::Isometry3d& xf) const;
};

/// Edge-based adjacency for a triangle mesh. Edge k of face f runs from
/// corner k to corner (k+1)%3.
class MeshTopology {
 public:
  struct Edge {
    int v0 = -1, v1 = -1;  // v0 < v1
    int f0 = -1, f1 = -1;  // incident faces; f1 == -1 on the boundary
    int extra_faces = 0;   // > 0 means non-manifold
  };

  explicit MeshTopology(const TriMesh& mesh);

  int num_edges() const { return static_cast<int>(edges_.size()); }
  const Edge& edge(int e) const { return edges_[e]; }
  int face_edge(int f, int k) const { return face_edges_[f][k]; }
  int find_edge(int a, int b) const;
  bool is_boundary_edge(int e) const { return edges_[e].f1 < 0 && edges_[e].extra_faces == 0; }
  bool is_boundary_vertex(int v) const { return boundary_vertex_[v]; }
  int other_face(int e, int f) const { return edges_[e].f0 == f ? edges_[e].f1 : edges_[e].f0; }
  const std::vector<int>& vertex_faces(int v) const { return vertex_faces_[v]; }
  bool has_nonmanifold_edges() const { return nonmanifold_; }

  /// Faces around v ordered by crossing shared edges. For boundary vertices the
  /// fan starts at the face whose first boundary edge leaves v.
  std::vector<int> ordered_fan(const TriMesh& mesh, int v) const;

  /// Boundary loops as vertex chains following the face orientation.
  std::vector<std::vector<int>> boundary_loops(const TriMesh& mesh) const;

 private:
  static std::uint64_t key(int a, int b) {
    if (a > b) std::swap(a, b);
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) | static_cast<std::uint32_t>(b);
  }

  std::vector<Edge> edges_;
  std::vector<std::array<int, 3>> face_edges_;
  std::vector<std::vector<int>> vertex_faces_;
  std::vector<char> boundary_vertex_;
  std::unordered_map<std::uint64_t, int> edge_index_;
  bool nonmanifold_ = false;
};

/// Corner angle of face f at local corner k.
double corner_angle(const TriMesh& mesh, int f, int k);

}  // namespace tubekin
