#include "tubekin/spatial.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace tubekin {

// Ericson, Real-Time Collision Detection, 5.1.5.
Vec3 closest_point_barycentric(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 ab = b - a, ac = c - a, ap = p - a;
  const double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0 && d2 <= 0) return {1, 0, 0};
  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0 && d4 <= d3) return {0, 1, 0};
  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0 && d1 >= 0 && d3 <= 0) {
    double v = d1 / (d1 - d3);
    return {1 - v, v, 0};
  }
  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0 && d5 <= d6) return {0, 0, 1};
  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0 && d2 >= 0 && d6 <= 0) {
    double w = d2 / (d2 - d6);
    return {1 - w, 0, w};
  }
  const double va = d3 * d6 - d5 * d4;
  if (va <= 0 && (d4 - d3) >= 0 && (d5 - d6) >= 0) {
    double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
    return {0, 1 - w, w};
  }
  const double denom = 1.0 / (va + vb + vc);
  const double v = vb * denom, w = vc * denom;
  return {1 - v - w, v, w};
}

TriangleTree::TriangleTree(const TriMesh& mesh) : mesh_(mesh) {
  const int nf = mesh.num_triangles();
  order_.resize(nf);
  std::iota(order_.begin(), order_.end(), 0);
  face_boxes_.resize(nf);
  centers_.resize(nf);
  for (int f = 0; f < nf; ++f) {
    Eigen::AlignedBox3d box;
    for (int k = 0; k < 3; ++k) box.extend(mesh.corner(f, k));
    face_boxes_[f] = box;
    centers_[f] = box.center();
  }
  nodes_.reserve(2 * static_cast<size_t>(nf) / 4 + 8);
  if (nf > 0) build(0, nf);
}

int TriangleTree::build(int begin, int end) {
  Node node;
  for (int i = begin; i < end; ++i) node.box.extend(face_boxes_[order_[i]]);
  int index = static_cast<int>(nodes_.size());
  nodes_.push_back(node);
  if (end - begin <= 4) {
    nodes_[index].begin = begin;
    nodes_[index].end = end;
    return index;
  }
  Eigen::AlignedBox3d cbox;
  for (int i = begin; i < end; ++i) cbox.extend(centers_[order_[i]]);
  int axis;
  cbox.diagonal().maxCoeff(&axis);
  int mid = (begin + end) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](int a, int b) { return centers_[a][axis] < centers_[b][axis]; });
  int left = build(begin, mid);
  int right = build(mid, end);
  nodes_[index].left = left;
  nodes_[index].right = right;
  return index;
}

namespace {
double box_distance2(const Eigen::AlignedBox3d& box, const Vec3& p) { return box.squaredExteriorDistance(p); }
}  // namespace

void TriangleTree::query(int ni, const Vec3& p, ClosestPoint& best, double& best_d2) const {
  const Node& node = nodes_[ni];
  if (node.left < 0) {
    for (int i = node.begin; i < node.end; ++i) {
      int f = order_[i];
      const Vec3& a = mesh_.corner(f, 0);
      const Vec3& b = mesh_.corner(f, 1);
      const Vec3& c = mesh_.corner(f, 2);
      Vec3 bary = closest_point_barycentric(p, a, b, c);
      Vec3 q = bary[0] * a + bary[1] * b + bary[2] * c;
      double d2 = (q - p).squaredNorm();
      if (d2 < best_d2 || (d2 == best_d2 && f < best.face)) {
        best_d2 = d2;
        best.face = f;
        best.bary = bary;
        best.position = q;
      }
    }
    return;
  }
  double dl = box_distance2(nodes_[node.left].box, p);
  double dr = box_distance2(nodes_[node.right].box, p);
  int first = node.left, second = node.right;
  if (dr < dl) {
    std::swap(first, second);
    std::swap(dl, dr);
  }
  if (dl <= best_d2) query(first, p, best, best_d2);
  if (dr <= best_d2) query(second, p, best, best_d2);
}

ClosestPoint TriangleTree::closest(const Vec3& p) const {
  ClosestPoint best;
  double best_d2 = std::numeric_limits<double>::infinity();
  if (!nodes_.empty()) query(0, p, best, best_d2);
  best.distance = std::sqrt(best_d2);
  return best;
}

}  // namespace tubekin
