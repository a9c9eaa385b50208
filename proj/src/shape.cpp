#include "tubekin/shape.hpp"

#include "tubekin/spatial.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>

namespace tubekin {

namespace {

double cot(const Vec3& a, const Vec3& b) { return a.dot(b) / a.cross(b).norm(); }

double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

// Singular values of a 3x2 map, largest first.
std::pair<double, double> stretches(const Eigen::Matrix<double, 3, 2>& F) {
  const Eigen::Matrix2d C = F.transpose() * F;
  const double half = 0.5 * (C(0, 0) + C(1, 1));
  const double disc = std::hypot(0.5 * (C(0, 0) - C(1, 1)), C(0, 1));
  const double e1 = half + disc, e2 = std::max(0.0, half - disc);
  return {std::sqrt(e1), std::sqrt(e2)};
}

}  // namespace

std::vector<double> mean_curvature(const TriMesh& mesh, std::vector<char>* boundary) {
  const int nv = mesh.num_vertices();
  std::vector<Vec3> laplace(nv, Vec3::Zero()), normal(nv, Vec3::Zero());
  std::vector<double> area(nv, 0.0);
  for (int f = 0; f < mesh.num_triangles(); ++f) {
    const auto& t = mesh.triangles[f];
    const Vec3 n = mesh.face_normal(f);
    const double fa = 0.5 * n.norm();
    double c[3];
    bool obtuse = false;
    for (int k = 0; k < 3; ++k) {
      const Vec3& p = mesh.vertices[t[k]];
      const Vec3 u = mesh.vertices[t[(k + 1) % 3]] - p, w = mesh.vertices[t[(k + 2) % 3]] - p;
      c[k] = cot(u, w);
      obtuse = obtuse || u.dot(w) < 0.0;
    }
    for (int k = 0; k < 3; ++k) {
      const int i = t[(k + 1) % 3], j = t[(k + 2) % 3];
      const Vec3 d = mesh.vertices[i] - mesh.vertices[j];
      laplace[i] += c[k] * d;
      laplace[j] -= c[k] * d;
      normal[t[k]] += n;
    }
    for (int k = 0; k < 3; ++k) {
      const Vec3& p = mesh.vertices[t[k]];
      const Vec3 q = mesh.vertices[t[(k + 1) % 3]], r = mesh.vertices[t[(k + 2) % 3]];
      if (!obtuse) {
        area[t[k]] += 0.125 * ((r - p).squaredNorm() * c[(k + 1) % 3] + (q - p).squaredNorm() * c[(k + 2) % 3]);
      } else {
        const bool here = (q - p).dot(r - p) < 0.0;
        area[t[k]] += here ? 0.5 * fa : 0.25 * fa;
      }
    }
  }
  MeshTopology topo(mesh);
  std::vector<double> H(nv, 0.0);
  if (boundary) boundary->assign(nv, 0);
  for (int v = 0; v < nv; ++v) {
    if (topo.is_boundary_vertex(v)) {
      if (boundary) (*boundary)[v] = 1;
      continue;
    }
    if (area[v] <= 0.0) continue;
    const Vec3 K = laplace[v] / (2.0 * area[v]);
    const double h = 0.5 * K.norm();
    H[v] = K.dot(normal[v]) < 0.0 ? -h : h;
  }
  return H;
}

CurvatureImage mean_curvature(const GridMesh& grid) {
  CurvatureImage img;
  img.n = grid.n;
  img.m = grid.m;
  img.kind = CurvatureKind::mean;
  img.frame_index = grid.frame_index;
  img.values = mean_curvature(grid.to_trimesh());
  img.flagged.assign(img.values.size(), 0);
  if (grid.m >= 3) {
    for (int i = 0; i < grid.n; ++i) {
      for (auto [edge, inner] : {std::pair{0, 1}, std::pair{grid.m - 1, grid.m - 2}}) {
        const size_t e = static_cast<size_t>(edge) * grid.n + i;
        img.values[e] = img.values[static_cast<size_t>(inner) * grid.n + i];
        img.flagged[e] = 1;
      }
    }
  }
  return img;
}

CurvatureImage mean_curvature(const GridMesh& grid, const TriMesh& source) {
  std::vector<char> boundary;
  std::vector<double> h = mean_curvature(source, &boundary);
  // Boundary vertices take the mean of their interior neighbours.
  std::vector<double> sum(h.size(), 0.0);
  std::vector<int> count(h.size(), 0);
  for (const auto& t : source.triangles)
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        if (a != b && boundary[t[a]] && !boundary[t[b]]) {
          sum[t[a]] += h[t[b]];
          ++count[t[a]];
        }
  for (size_t v = 0; v < h.size(); ++v)
    if (boundary[v] && count[v] > 0) h[v] = sum[v] / count[v];

  CurvatureImage img;
  img.n = grid.n;
  img.m = grid.m;
  img.kind = CurvatureKind::mean;
  img.frame_index = grid.frame_index;
  img.values.assign(grid.points.size(), 0.0);
  img.flagged.assign(grid.points.size(), 0);
  const TriangleTree tree(source);
  for (size_t i = 0; i < grid.points.size(); ++i) {
    const ClosestPoint cp = tree.closest(grid.points[i]);
    const auto& t = source.triangles[cp.face];
    img.values[i] = cp.bary[0] * h[t[0]] + cp.bary[1] * h[t[1]] + cp.bary[2] * h[t[2]];
  }
  if (grid.m >= 3) {
    for (int i = 0; i < grid.n; ++i) {
      img.flagged[i] = 1;
      img.flagged[static_cast<size_t>(grid.m - 1) * grid.n + i] = 1;
    }
  }
  return img;
}

std::vector<double> polygon_curvature(const std::vector<Vec2>& polygon, int stencil) {
  const int N = static_cast<int>(polygon.size());
  std::vector<double> kappa(N, 0.0);
  if (N < 3) return kappa;
  stencil = std::clamp(stencil, 1, (N - 1) / 2);
  for (int s = 0; s < N; ++s) {
    const Vec2& p = polygon[(s - stencil + N) % N];
    const Vec2& q = polygon[s];
    const Vec2& r = polygon[(s + stencil) % N];
    const double denom = (q - p).norm() * (r - q).norm() * (r - p).norm();
    kappa[s] = denom > 0.0 ? 2.0 * cross2(q - p, r - q) / denom : 0.0;
  }
  return kappa;
}

CurvatureImage radial_curvature_image(const GridMesh& grid, const std::vector<Contour>& sections,
                                      const RadialOptions& options) {
  if (static_cast<int>(sections.size()) != grid.m) throw InputError("one contour per grid row required", "shape");
  CurvatureImage img;
  img.n = grid.n;
  img.m = grid.m;
  img.kind = CurvatureKind::radial;
  img.frame_index = grid.frame_index;
  img.values.assign(static_cast<size_t>(grid.n) * grid.m, 0.0);
  img.flagged.assign(img.values.size(), 0);
  for (int j = 0; j < grid.m; ++j) {
    const Contour& c = sections[j];
    if (c.points.size() < 3 || contour_area(c) < options.collapse_area) {
      for (int i = 0; i < grid.n; ++i) img.flagged[static_cast<size_t>(j) * grid.n + i] = 1;
      continue;
    }
    const std::vector<double> kappa = polygon_curvature(c.points, options.stencil);
    const int N = static_cast<int>(c.points.size());
    for (int i = 0; i < grid.n; ++i) {
      const Vec3 d = grid.at(i, j) - c.origin;
      const Vec2 p(d.dot(c.x_axis), d.dot(c.y_axis));
      double best = std::numeric_limits<double>::infinity(), value = 0.0;
      for (int s = 0; s < N; ++s) {
        const Vec2& a = c.points[s];
        const Vec2& b = c.points[(s + 1) % N];
        const Vec2 ab = b - a;
        const double t = std::clamp((p - a).dot(ab) / std::max(ab.squaredNorm(), 1e-300), 0.0, 1.0);
        const double dist = (a + t * ab - p).squaredNorm();
        if (dist < best) {
          best = dist;
          value = (1.0 - t) * kappa[s] + t * kappa[(s + 1) % N];
        }
      }
      img.values[static_cast<size_t>(j) * grid.n + i] = value;
    }
  }
  return img;
}

std::vector<CurvatureImage> normalize_per_pixel(const std::vector<CurvatureImage>& stack) {
  std::vector<CurvatureImage> out = stack;
  if (stack.empty()) return out;
  const size_t count = stack.front().values.size();
  for (const auto& img : stack) {
    if (img.values.size() != count) throw InputError("curvature stack sizes differ", "shape");
  }
  for (size_t p = 0; p < count; ++p) {
    double lo = stack[0].values[p], hi = lo;
    for (const auto& img : stack) {
      lo = std::min(lo, img.values[p]);
      hi = std::max(hi, img.values[p]);
    }
    const bool constant = hi - lo <= 1e-12 * std::max(1.0, std::abs(hi));
    for (size_t k = 0; k < stack.size(); ++k) {
      out[k].values[p] = constant ? 0.5 : (stack[k].values[p] - lo) / (hi - lo);
      if (constant) out[k].flagged[p] = 1;
    }
  }
  return out;
}

StrainField strain_energy(const GridMesh& current, const GridMesh& reference) {
  if (current.n != reference.n || current.m != reference.m) throw InputError("grid sizes differ", "shape");
  StrainField field;
  field.n = current.n;
  field.m = current.m - 1;
  const size_t cells = static_cast<size_t>(field.n) * std::max(0, field.m);
  field.lambda1.assign(cells, 1.0);
  field.lambda2.assign(cells, 1.0);
  field.energy.assign(cells, 0.0);
  field.flagged.assign(cells, 0);
  for (int j = 0; j < field.m; ++j) {
    for (int i = 0; i < field.n; ++i) {
      const int corners[4][2] = {{i, j}, {i + 1, j}, {i + 1, j + 1}, {i, j + 1}};
      const int tris[2][3] = {{0, 1, 2}, {0, 2, 3}};
      double weight = 0.0, l1 = 0.0, l2 = 0.0, e = 0.0;
      for (const auto& t : tris) {
        const Vec3 a = reference.at(corners[t[0]][0], corners[t[0]][1]);
        const Vec3 E1 = reference.at(corners[t[1]][0], corners[t[1]][1]) - a;
        const Vec3 E2 = reference.at(corners[t[2]][0], corners[t[2]][1]) - a;
        const double area = 0.5 * E1.cross(E2).norm();
        if (area <= 1e-12) continue;
        const Vec3 q1 = E1.normalized();
        const Vec3 q2 = (E2 - E2.dot(q1) * q1).normalized();
        Eigen::Matrix2d R;
        R << E1.norm(), E2.dot(q1), 0.0, E2.dot(q2);
        const Vec3 b = current.at(corners[t[0]][0], corners[t[0]][1]);
        Eigen::Matrix<double, 3, 2> C;
        C.col(0) = current.at(corners[t[1]][0], corners[t[1]][1]) - b;
        C.col(1) = current.at(corners[t[2]][0], corners[t[2]][1]) - b;
        const auto [s1, s2] = stretches(C * R.inverse());
        weight += area;
        l1 += area * s1;
        l2 += area * s2;
        e += area * ((s1 - 1.0) * (s1 - 1.0) + (s2 - 1.0) * (s2 - 1.0));
      }
      const size_t idx = field.index(i, j);
      if (weight == 0.0) {
        field.flagged[idx] = 1;
        continue;
      }
      field.lambda1[idx] = l1 / weight;
      field.lambda2[idx] = l2 / weight;
      field.energy[idx] = e / weight;
    }
  }
  return field;
}

std::vector<StrainField> strain_sequence(const std::vector<GridMesh>& frames, const GridMesh& reference,
                                         ExecPolicy policy) {
  std::vector<StrainField> out(frames.size());
  const int count = static_cast<int>(frames.size());
  if (policy == ExecPolicy::parallel) {
#pragma omp parallel for schedule(dynamic)
    for (int k = 0; k < count; ++k) out[k] = strain_energy(frames[k], reference);
  } else {
    for (int k = 0; k < count; ++k) out[k] = strain_energy(frames[k], reference);
  }
  return out;
}

std::vector<Vec2> ShapeModes::reconstruct(int k) const {
  std::vector<Vec2> out = mean;
  for (size_t q = 0; q < modes.size(); ++q)
    for (size_t s = 0; s < out.size(); ++s) out[s] += scores[k][q] * modes[q][s];
  for (Vec2& p : out) p += centroids[k];
  return out;
}

ShapeModes contour_pca(const std::vector<Contour>& contours, const PcaOptions& options) {
  std::vector<std::vector<Vec2>> points;
  for (const Contour& c : contours) points.push_back(c.points);
  ShapeModes modes = contour_pca(points, options);
  if (!contours.empty()) modes.station = contours.front().station;
  return modes;
}

ShapeModes contour_pca(const std::vector<std::vector<Vec2>>& contours, const PcaOptions& options) {
  const int K = static_cast<int>(contours.size());
  if (K < 3) throw InputError("contour PCA needs at least 3 contours, got " + std::to_string(K), "shape");
  const int N = static_cast<int>(contours.front().size());
  for (const auto& c : contours) {
    if (static_cast<int>(c.size()) != N || N == 0) throw InputError("contours differ in sample count", "shape");
  }
  ShapeModes out;
  Eigen::MatrixXd D(K, 2 * N);
  for (int k = 0; k < K; ++k) {
    Vec2 centroid = Vec2::Zero();
    for (const Vec2& p : contours[k]) centroid += p;
    centroid /= N;
    out.centroids.push_back(centroid);
    for (int s = 0; s < N; ++s) D.block<1, 2>(k, 2 * s) = (contours[k][s] - centroid).transpose();
  }
  const Eigen::RowVectorXd mean = D.colwise().mean();
  D.rowwise() -= mean;
  out.mean.resize(N);
  for (int s = 0; s < N; ++s) out.mean[s] = mean.segment<2>(2 * s).transpose();

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(D, Eigen::ComputeThinV);
  const Eigen::VectorXd& sv = svd.singularValues();
  const int available = std::min(K - 1, 2 * N);
  if (available < options.max_modes) {
    warn("contour PCA: " + std::to_string(K) + " contours allow only " + std::to_string(available) + " of " +
         std::to_string(options.max_modes) + " requested modes");
  }
  const Eigen::VectorXd flat_mean = mean.transpose();
  for (int q = 0; q < std::min(available, options.max_modes); ++q) {
    const double variance = sv[q] * sv[q] / (K - 1);
    if (variance <= options.zero_variance) break;
    Eigen::VectorXd v = svd.matrixV().col(q);
    double sign = v.dot(flat_mean);
    if (std::abs(sign) <= 1e-9 * flat_mean.norm()) {
      Eigen::Index at = 0;
      v.cwiseAbs().maxCoeff(&at);
      sign = v[at];
    }
    if (sign < 0.0) v = -v;
    std::vector<Vec2> field(N);
    for (int s = 0; s < N; ++s) field[s] = v.segment<2>(2 * s);
    out.modes.push_back(std::move(field));
    out.variances.push_back(variance);
  }
  out.scores.assign(K, std::vector<double>(out.modes.size(), 0.0));
  for (size_t q = 0; q < out.modes.size(); ++q) {
    Eigen::VectorXd v(2 * N);
    for (int s = 0; s < N; ++s) v.segment<2>(2 * s) = out.modes[q][s];
    const Eigen::VectorXd sc = D * v;
    for (int k = 0; k < K; ++k) out.scores[k][q] = sc[k];
  }
  return out;
}

}  // namespace tubekin
