#pragma once

#include "tubekin/sections.hpp"

#include <string>
#include <vector>

namespace tubekin {

enum class CurvatureKind { mean, radial };

/// Per-node scalar over a grid, 1/mm; values[j * n + i].
struct CurvatureImage {
  int n = 0;
  int m = 0;
  CurvatureKind kind = CurvatureKind::mean;
  int frame_index = 0;
  std::vector<double> values;
  std::vector<char> flagged;  // boundary nodes, collapsed rows

  double at(int i, int j) const { return values[static_cast<size_t>(j) * n + i]; }
};

/// Signed mean curvature per vertex from the cotangent Laplacian with mixed
/// Voronoi areas; positive on a sphere with outward normals. Boundary
/// vertices are marked in `boundary` and left at 0.
std::vector<double> mean_curvature(const TriMesh& mesh, std::vector<char>* boundary = nullptr);

/// Mean curvature at grid nodes. Boundary rows copy the adjacent interior
/// row and are flagged.
CurvatureImage mean_curvature(const GridMesh& grid);

/// Mean curvature of the frame mesh the grid was sampled from, interpolated
/// at each node's closest point. Less sensitive to facets than the grid's own
/// cotangent estimate. Boundary vertices average their interior neighbours;
/// boundary rows are flagged.
CurvatureImage mean_curvature(const GridMesh& grid, const TriMesh& source);

/// Circumscribed-circle curvature of a closed polyline at every sample,
/// through the samples `stencil` steps before and after. Positive where a
/// counterclockwise polyline turns left.
std::vector<double> polygon_curvature(const std::vector<Vec2>& polygon, int stencil = 1);

struct RadialOptions {
  int stencil = 1;
  double collapse_area = 1e-8;  // mm^2; smaller contours flag their row
};

/// Planar curvature of each station's contour, sampled at the grid column
/// through the closest contour point.
CurvatureImage radial_curvature_image(const GridMesh& grid, const std::vector<Contour>& sections,
                                      const RadialOptions& options = {});

/// Per node (K - Kmin) / (Kmax - Kmin) over the stack; constant nodes get
/// 0.5 and are flagged in every frame.
std::vector<CurvatureImage> normalize_per_pixel(const std::vector<CurvatureImage>& stack);

/// Per quad cell (i, j), i around, j along (m - 1 rows).
struct StrainField {
  int n = 0;
  int m = 0;  // cell rows
  std::vector<double> lambda1, lambda2;  // area-weighted over the cell's two triangles, lambda1 >= lambda2
  std::vector<double> energy;            // (l1 - 1)^2 + (l2 - 1)^2, area-weighted
  std::vector<char> flagged;             // degenerate reference cell

  size_t index(int i, int j) const { return static_cast<size_t>(j) * n + i; }
};

/// Principal stretches of each triangle's deformation gradient from
/// `reference` to `current`, combined per cell.
StrainField strain_energy(const GridMesh& current, const GridMesh& reference);

std::vector<StrainField> strain_sequence(const std::vector<GridMesh>& frames, const GridMesh& reference,
                                         ExecPolicy policy = ExecPolicy::parallel);

struct ShapeModes {
  int station = 0;
  std::string phase;                       // "expansion" | "contraction" | ""
  std::vector<Vec2> mean;                  // centred mean contour
  std::vector<std::vector<Vec2>> modes;    // unit vectors in R^(2N), stored per sample
  std::vector<double> variances;           // non-increasing
  std::vector<Vec2> centroids;             // per input contour
  std::vector<std::vector<double>> scores; // [contour][mode]

  /// Input contour k rebuilt from the mean, its centroid and the kept modes.
  std::vector<Vec2> reconstruct(int k) const;
};

struct PcaOptions {
  int max_modes = 3;
  double zero_variance = 1e-20;  // mm^2; smaller variances are dropped
};

/// Linear PCA of arc-length resampled contours after removing each one's
/// centroid. Mode signs make the projection on the mean contour's outward
/// position non-negative.
ShapeModes contour_pca(const std::vector<Contour>& contours, const PcaOptions& options = {});
ShapeModes contour_pca(const std::vector<std::vector<Vec2>>& contours, const PcaOptions& options = {});

}  // namespace tubekin
