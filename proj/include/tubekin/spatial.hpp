#pragma once

#include "tubekin/mesh.hpp"

#include <vector>

namespace tubekin {

struct ClosestPoint {
  int face = -1;
  Vec3 bary = Vec3::Zero();
  Vec3 position = Vec3::Zero();
  double distance = 0.0;
};

/// Closest point on triangle abc, returned as barycentric coordinates.
Vec3 closest_point_barycentric(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c);

/// Static AABB hierarchy over the triangles of one mesh. Holds a reference to
/// the mesh; the mesh must outlive the tree and stay unmodified.
class TriangleTree {
 public:
  explicit TriangleTree(const TriMesh& mesh);

  ClosestPoint closest(const Vec3& query) const;

 private:
  struct Node {
    Eigen::AlignedBox3d box;
    int left = -1, right = -1;  // children; -1 for leaves
    int begin = 0, end = 0;     // range in order_ for leaves
  };

  int build(int begin, int end);
  void query(int node, const Vec3& p, ClosestPoint& best, double& best_d2) const;

  const TriMesh& mesh_;
  std::vector<int> order_;
  std::vector<Eigen::AlignedBox3d> face_boxes_;
  std::vector<Vec3> centers_;
  std::vector<Node> nodes_;
};

}  // namespace tubekin
