// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero if any fails. An optional argument runs only the criteria
// whose name contains it (determinism needs the wave speed run).

#include "test_support.hpp"

#include "tubekin/config.hpp"
#include "tubekin/dataset.hpp"
#include "tubekin/kinematics.hpp"
#include "tubekin/mesh_core.hpp"
#include "tubekin/pipeline.hpp"
#include "tubekin/sections.hpp"
#include "tubekin/shape.hpp"

#include <json.hpp>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>

using namespace tubekin;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;

int failures = 0;

void report(bool pass, const char* name, const std::string& detail) {
  if (!pass) ++failures;
  std::printf("%s  %-26s %s\n", pass ? "PASS" : "FAIL", name, detail.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::ordered_json read_summary(const fs::path& dir) {
  return nlohmann::ordered_json::parse(read_bytes(dir / "summary.json"));
}

fs::path synth_to(const fs::path& dir, const TubeSpec& spec) {
  SynthConfig config;
  config.spec = spec;
  return write_synth_dataset(dir, config);
}

// ---------------------------------------------------------------------------

void wave_speed(const fs::path& root) {
  const fs::path manifest = synth_to(root / "default", TubeSpec{});
  const auto start = std::chrono::steady_clock::now();
  run_pipeline(manifest, PipelineConfig{}, root / "run1");
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  const auto t = read_summary(root / "run1")["table1"];
  const double avg = t["speed_avg"], sd = t["speed_std"];
  const double c = TubeSpec{}.wave_speed;
  report(std::abs(avg - c) < 0.05 * c && sd < 0.1 * avg && seconds < 60.0, "wave speed",
         fmt("avg %.4f mm/s (c = %.1f, %+.2f%%), std/avg %.2f%%, pipeline %.1f s", avg, c, 100 * (avg - c) / c,
             100 * sd / avg, seconds));
}

void table1_contract(const fs::path& root) {
  const std::vector<std::string> expected = {"expand_percent", "contract_percent", "ratio", "period_ms",
                                             "expand_ms", "contract_ms", "speed_min", "speed_max",
                                             "speed_avg", "speed_std", "speed_cycle"};
  std::vector<std::string> keys;
  const auto t = read_summary(root / "run1")["table1"];
  for (auto it = t.begin(); it != t.end(); ++it) keys.push_back(it.key());

  TubeSpec spec;
  spec.pulse_width = 1.0;  // whole-period raised cosine: sinusoidal area and volume
  const fs::path manifest = synth_to(root / "sin", spec);
  PipelineConfig config;
  config.surfaces = {SurfaceKind::outer};
  config.frame_images = false;
  run_pipeline(manifest, config, root / "sin_out");
  const auto s = read_summary(root / "sin_out")["table1"];
  const double e = s["expand_percent"], c = s["contract_percent"], ratio = s["ratio"];
  report(keys == expected && std::abs(e - 50.0) < 0.5 && std::abs(c - 50.0) < 0.5 && std::abs(ratio - 1.0) <= 0.01,
         "table-1 contract", fmt("%zu fields%s; sinusoid %.2f%% / %.2f%%, ratio %.2f", keys.size(),
                                 keys == expected ? "" : " (wrong set)", e, c, ratio));
}

void volume_clip(const fs::path& root) {
  TubeSpec spec;
  spec.volume_variation = 0.2;
  const DatasetManifest manifest = load_manifest(synth_to(root / "vv", spec));
  PipelineConfig config;
  config.surfaces = {SurfaceKind::outer, SurfaceKind::inner};
  config.frame_images = false;
  const Dataset data = ingest(manifest, config.surfaces);
  const Analysis a = analyze(parameterize_dataset(data, config), data, config);
  if (!a.clip) {
    report(false, "volume-preserving clip", "no clip result");
    return;
  }
  const ClipResult& clip = *a.clip;
  const auto [lo, hi] = std::minmax_element(clip.volumes.begin(), clip.volumes.end());
  const double spread = (*hi - *lo) / clip.target;
  const auto [raw_lo, raw_hi] = std::minmax_element(a.layer_volumes.begin(), a.layer_volumes.end());
  const int min_cycle = a.cycle.cycle_index(static_cast<int>(raw_lo - a.layer_volumes.begin()));
  const bool unit_at_min = clip.reference_frame == min_cycle && clip.v_c[min_cycle] == 1.0;
  report(spread < 0.002 && unit_at_min, "volume-preserving clip",
         fmt("raw layer variation %.1f%%, clipped spread %.4f%%, v_c[min frame %d] = %.6f, min v_c %.4f",
             100 * (*raw_hi - *raw_lo) / *raw_lo, 100 * spread, min_cycle, clip.v_c[min_cycle],
             *std::min_element(clip.v_c.begin(), clip.v_c.end())));
}

void parameterization_quality() {
  struct Case {
    const char* name;
    TubeSpec spec;
  };
  TubeSpec bent;
  bent.shape = TubeShape::torus;
  bent.bend_radius = 1.0;
  const std::vector<Case> cases = {{"cylinder", test::static_spec(0.5, 0.5, 1.5)}, {"taper", TubeSpec{}},
                                   {"C", bent}};
  const LoopLabeling inlet_low{Vec3(0, 0, -1)};  // equal end radii need a hint
  double row = 0, col = 0, seam = 0;
  int flips = 0;
  std::string detail;
  for (const Case& c : cases) {
    double crow = 0, ccol = 0;
    for (int frame : {0, 48, 97, 146}) {
      if (frame >= c.spec.frames) break;
      const TriMesh mesh = generate_surface(c.spec, SurfaceKind::outer, frame);
      const GeodesicPath path = shortest_boundary_geodesic(mesh, inlet_low);
      const FlattenedFrame flat = flatten_to_unit_square(cut_along_geodesic(mesh, path));
      flips += flat.flipped_triangles();
      const GridMesh g = resample_grid(flat, 80, 50);
      const SpacingVariation cv = spacing_variation(g);
      crow = std::max(crow, cv.row);
      ccol = std::max(ccol, cv.column);
      seam = std::max(seam, seam_deviation(g, mesh, path) / mesh.mean_edge_length());
    }
    row = std::max(row, crow);
    col = std::max(col, ccol);
    detail += fmt("%s cv %.3f/%.3f, ", c.name, crow, ccol);
  }
  report(row < 0.10 && col < 0.10 && flips == 0 && seam < 1.0, "parameterization quality",
         detail + fmt("flips %d, seam hausdorff %.3f edge", flips, seam));
}

void non_intersection() {
  TubeSpec s = test::static_spec(0.5, 0.5, 2.0, 64, 80);
  s.shape = TubeShape::sheared;
  s.shear_amplitude = 1.2;
  const TriMesh mesh = generate_surface(s, SurfaceKind::outer, 0);
  const GridMesh g = parameterize_frame(mesh, shortest_boundary_geodesic(mesh, LoopLabeling{Vec3(0, 0, -1)}), 80, 50, SurfaceKind::outer);
  const auto grid_planes = section_planes(g);
  const size_t grid_bad = validate_nonintersection(grid_planes, extract_sections(g, grid_planes)).violations.size();

  std::vector<Vec3> axis;
  for (int j = 0; j < g.m; ++j) {
    const double z = s.length * j / (g.m - 1);
    axis.emplace_back(s.shear_amplitude * std::sin(kPi * z / s.length), 0.0, z);
  }
  const auto centre = centerline_planes(axis);
  ContourOptions lenient;
  lenient.skip_open = true;
  const size_t centre_bad = validate_nonintersection(centre, extract_sections(g, centre, lenient)).violations.size();
  report(grid_bad == 0 && centre_bad >= 1, "non-intersection",
         fmt("grid planes %zu violations, centerline planes %zu", grid_bad, centre_bad));
}

void curvature() {
  const TriMesh sphere = test::sphere(2.0, 4);
  double sphere_err = 0;
  for (double h : mean_curvature(sphere)) sphere_err = std::max(sphere_err, std::abs(h * 2.0 - 1.0));

  const GridMesh cyl = test::synth_grid(test::static_spec(0.5, 0.5, 1.5), SurfaceKind::outer, 0);
  const CurvatureImage ci = mean_curvature(cyl);
  double cyl_err = 0;
  for (size_t p = 0; p < ci.values.size(); ++p) cyl_err = std::max(cyl_err, std::abs(ci.values[p] - 1.0));

  auto radial = [](const GridMesh& g) { return radial_curvature_image(g, extract_sections(g, section_planes(g))); };
  TubeSpec e = test::static_spec(0.5, 0.5, 1.0);
  e.section = SectionShape::ellipse;
  e.ellipse_a = 0.8;
  e.ellipse_b = 0.4;
  const GridMesh eg = test::synth_grid(e, SurfaceKind::outer, 0, 80, 9);
  const CurvatureImage ei = radial(eg);
  double ratio_err = 0;
  for (int j = 0; j < eg.m; ++j) {
    double lo = 1e300, hi = -1e300;
    for (int i = 0; i < eg.n; ++i) {
      lo = std::min(lo, ei.at(i, j));
      hi = std::max(hi, ei.at(i, j));
    }
    ratio_err = std::max(ratio_err, std::abs(hi / lo / 8.0 - 1.0));
  }

  TubeSpec straight = test::static_spec(0.5, 0.3, 2.0);
  TubeSpec bent = straight;
  bent.shape = TubeShape::torus;
  bent.bend_radius = 1.2;
  const CurvatureImage a = radial(test::synth_grid(straight, SurfaceKind::outer, 0));
  const CurvatureImage b = radial(test::synth_grid(bent, SurfaceKind::outer, 0));
  double bend_diff = 0;
  for (size_t p = 0; p < a.values.size(); ++p) bend_diff = std::max(bend_diff, std::abs(b.values[p] / a.values[p] - 1.0));

  report(sphere_err < 0.02 && cyl_err < 0.02 && ratio_err < 0.05 && bend_diff < 0.01, "curvature oracles",
         fmt("sphere %.3f%%, cylinder %.3f%%, ellipse ratio %.2f%%, bent vs straight %.3f%%", 100 * sphere_err,
             100 * cyl_err, 100 * ratio_err, 100 * bend_diff));
}

void strain() {
  TubeSpec s;
  const GridMesh ref = test::synth_grid(s, SurfaceKind::outer, 0), cur = test::synth_grid(s, SurfaceKind::outer, 70);
  double identity = 0;
  for (double e : strain_energy(ref, ref).energy) identity = std::max(identity, e);

  GridMesh scaled = ref;
  for (Vec3& p : scaled.points) p *= 1.2;
  double scale_err = 0;
  for (double e : strain_energy(scaled, ref).energy) scale_err = std::max(scale_err, std::abs(e - 0.08));

  const Eigen::Isometry3d T = Eigen::Translation3d(4.0, -1.0, 2.5) * Eigen::AngleAxisd(2.1, Vec3(0.3, -1, 0.4).normalized());
  GridMesh moved = cur;
  for (Vec3& p : moved.points) p = T * p;
  const StrainField f = strain_energy(cur, ref), g = strain_energy(moved, ref);
  double drift = 0;
  for (size_t c = 0; c < f.energy.size(); ++c) drift = std::max(drift, std::abs(f.energy[c] - g.energy[c]));

  report(identity < 1e-12 && scale_err < 1e-6 && drift < 1e-9, "strain oracle",
         fmt("identity %.2e, scale 1.2 error %.2e, rigid drift %.2e", identity, scale_err, drift));
}

std::vector<Vec2> circle(double r, Vec2 centre, int samples = 100) {
  std::vector<Vec2> pts;
  for (int s = 0; s < samples; ++s)
    pts.push_back(centre + r * Vec2(std::cos(2 * kPi * s / samples), std::sin(2 * kPi * s / samples)));
  return pts;
}

void pca() {
  std::vector<std::vector<Vec2>> family;
  for (int q = 0; q <= 8; ++q) family.push_back(circle(0.8 + 0.05 * q, Vec2(0.1 * q, -0.03 * q)));
  const ShapeModes m = contour_pca(family);
  double total = 0;
  for (double v : m.variances) total += v;
  const double share = m.variances.empty() ? 0.0 : m.variances[0] / total;
  double worst_angle = kPi;
  if (!m.modes.empty()) {
    worst_angle = 0;
    for (size_t s = 0; s < m.mean.size(); ++s) {
      const Vec2 d = m.modes[0][s], r = m.mean[s];
      worst_angle = std::max(worst_angle, std::acos(std::clamp(d.dot(r) / (d.norm() * r.norm()), -1.0, 1.0)));
    }
  }

  // Orthonormality on a family with several modes.
  std::vector<std::vector<Vec2>> wobbly;
  for (int q = 0; q < 7; ++q) {
    std::vector<Vec2> c;
    for (int s = 0; s < 100; ++s) {
      const double th = 2 * kPi * s / 100;
      const double r = 1.0 + 0.04 * std::sin(q + 2 * th) + 0.03 * std::cos(1.7 * q + 3 * th) + 0.02 * std::sin(0.6 * q * q + 5 * th);
      c.push_back(r * Vec2(std::cos(th), std::sin(th)));
    }
    wobbly.push_back(c);
  }
  PcaOptions all;
  all.max_modes = 5;
  const ShapeModes w = contour_pca(wobbly, all);
  double ortho = 0;
  for (size_t a = 0; a < w.modes.size(); ++a)
    for (size_t b = 0; b < w.modes.size(); ++b) {
      double dot = 0;
      for (size_t s = 0; s < w.modes[a].size(); ++s) dot += w.modes[a][s].dot(w.modes[b][s]);
      ortho = std::max(ortho, std::abs(dot - (a == b ? 1.0 : 0.0)));
    }
  report(share > 0.99 && worst_angle < 2.0 * kPi / 180 && ortho < 1e-9 && w.modes.size() >= 3, "PCA oracle",
         fmt("mode 1 share %.6f, max angle to radial %.4f deg, orthonormality %.2e over %zu modes", share,
             worst_angle * 180 / kPi, ortho, w.modes.size()));
}

AreaImage single_row(const std::vector<double>& row) {
  AreaImage img;
  img.stations = 1;
  img.frames = static_cast<int>(row.size());
  img.values = row;
  img.depth = {0.0};
  img.seconds_per_frame = 1.0;
  return img;
}

void bands() {
  const int T = 195;
  std::vector<double> g(T);
  for (int k = 0; k < T; ++k) g[k] = 1.0 + 3.0 * std::exp(-std::pow(k - 90.3, 2) / (2.0 * 20.0 * 20.0));
  const ExpansionBand gb = expansion_band(g, peak_times(single_row(g)).frame[0]);

  const int base = 40, centre = 100;
  std::vector<double> tri(T, 1.0);
  for (int k = centre - base / 2; k <= centre + base / 2; ++k) tri[k] = 2.0 - std::abs(k - centre) / (0.5 * base);
  const ExpansionBand tb = expansion_band(tri, peak_times(single_row(tri)).frame[0]);
  const double sigma_err = std::abs(gb.sigma / 20.0 - 1.0);
  const double width_err = std::abs(tb.threshold.duration() - 0.5 * base);
  report(gb.fit_converged && sigma_err < 0.02 && width_err <= 1.0, "expansion-band oracle",
         fmt("sigma %.4f (%.3f%%), 75%% band %.3f frames for base %d", gb.sigma, 100 * sigma_err,
             tb.threshold.duration(), base));
}

void determinism(const fs::path& root) {
  run_pipeline(root / "default" / "manifest.json", PipelineConfig{}, root / "run2");
  size_t files = 0;
  std::vector<std::string> differing;
  for (const auto& entry : fs::recursive_directory_iterator(root / "run1")) {
    if (!entry.is_regular_file()) continue;
    ++files;
    const fs::path rel = fs::relative(entry.path(), root / "run1");
    if (read_bytes(entry.path()) != read_bytes(root / "run2" / rel)) differing.push_back(rel.string());
  }
  size_t files2 = 0;
  for (const auto& entry : fs::recursive_directory_iterator(root / "run2")) files2 += entry.is_regular_file();
  report(differing.empty() && files == files2 && files > 0, "determinism",
         fmt("%zu files compared, %zu differ%s%s", files, differing.size() + (files != files2),
             differing.empty() ? "" : ", first ", differing.empty() ? "" : differing.front().c_str()));
}

}  // namespace

int main(int argc, char** argv) {
  const std::string only = argc > 1 ? argv[1] : "";  // substring filter on criterion names
  set_quiet(true);
  const fs::path root = fs::temp_directory_path() / ("tubekin_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(root);
  fs::create_directories(root);
  const std::pair<const char*, std::function<void()>> criteria[] = {
      {"wave speed", [&] { wave_speed(root); }},
      {"table-1 contract", [&] { table1_contract(root); }},
      {"volume-preserving clip", [&] { volume_clip(root); }},
      {"parameterization quality", parameterization_quality},
      {"non-intersection", non_intersection},
      {"curvature oracles", curvature},
      {"strain oracle", strain},
      {"PCA oracle", pca},
      {"expansion-band oracle", bands},
      {"determinism", [&] { determinism(root); }},
  };
  for (const auto& [name, run] : criteria) {
    if (std::string(name).find(only) == std::string::npos) continue;
    try {
      run();
    } catch (const std::exception& e) {
      report(false, name, std::string("aborted: ") + e.what());
    }
  }
  fs::remove_all(root);
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
