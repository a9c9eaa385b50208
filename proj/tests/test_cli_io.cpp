#include "test_support.hpp"

#include "tubekin/config.hpp"
#include "tubekin/dataset.hpp"
#include "tubekin/mesh_io.hpp"
#include "tubekin/pipeline.hpp"
#include "tubekin/render.hpp"

#include <gtest/gtest.h>
#include <json.hpp>

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

using namespace tubekin;
namespace fs = std::filesystem;

namespace {

class TempDir {
 public:
  explicit TempDir(const std::string& name) {
    path_ = fs::temp_directory_path() / ("tubekin_" + name + "_" + std::to_string(::getpid()));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& s) const { return path_ / s; }

 private:
  fs::path path_;
};

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string error_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    return e.what();
  }
  return {};
}

TubeSpec small_spec() {
  TubeSpec s;
  s.frames = 16;
  s.circumferential = 32;
  s.longitudinal = 16;
  return s;
}

bool same_vertices(const TriMesh& a, const TriMesh& b) {
  if (a.vertices.size() != b.vertices.size() || a.triangles != b.triangles) return false;
  return std::memcmp(a.vertices.data(), b.vertices.data(), a.vertices.size() * sizeof(Vec3)) == 0;
}

}  // namespace

// ---------------------------------------------------------------- mesh files

TEST(MeshIo, RoundTripIsBitIdentical) {
  TempDir dir("roundtrip");
  TubeSpec spec = small_spec();
  spec.shape = TubeShape::torus;
  const TriMesh mesh = generate_surface(spec, SurfaceKind::outer, 5);
  for (auto [format, name] : {std::pair{MeshFormat::ply_ascii, "a.ply"}, std::pair{MeshFormat::ply_binary, "b.ply"},
                              std::pair{MeshFormat::obj, "c.obj"}}) {
    write_mesh(dir / name, mesh, format);
    EXPECT_TRUE(same_vertices(mesh, read_mesh(dir / name))) << name;
  }
}

TEST(MeshIo, ReadsForeignPly) {
  TempDir dir("foreign");
  write_text(dir / "q.ply",
             "ply\r\nformat ascii 1.0\ncomment made by hand\nelement vertex 4\nproperty float x\nproperty float y\n"
             "property float z\nproperty uchar red\nelement face 1\nproperty list uchar int vertex_indices\n"
             "element edge 1\nproperty int a\nproperty int b\nend_header\n"
             "0 0 0 255\n1 0 0 255\n1 1 0 255\n0 1 0 255\n4 0 1 2 3\n0 1\n");
  const TriMesh m = read_mesh(dir / "q.ply");
  ASSERT_EQ(m.num_vertices(), 4);
  ASSERT_EQ(m.num_triangles(), 2);  // quad fan
  EXPECT_EQ(m.triangles[1], (std::array<int, 3>{0, 2, 3}));
  EXPECT_DOUBLE_EQ(m.total_area(), 1.0);
}

TEST(MeshIo, BigEndianBinary) {
  TempDir dir("bigendian");
  std::string body = "ply\nformat binary_big_endian 1.0\nelement vertex 3\nproperty float x\nproperty float y\n"
                     "property float z\nelement face 1\nproperty list uchar int vertex_indices\nend_header\n";
  auto put_be = [&](const void* p, size_t n) {
    const auto* c = static_cast<const char*>(p);
    for (size_t i = 0; i < n; ++i) body.push_back(c[n - 1 - i]);
  };
  const float xyz[] = {0, 0, 0, 2, 0, 0, 0, 3, 0};
  for (float f : xyz) put_be(&f, 4);
  body.push_back(3);
  for (int v : {0, 1, 2}) put_be(&v, 4);
  write_text(dir / "be.ply", body);
  const TriMesh m = read_mesh(dir / "be.ply");
  ASSERT_EQ(m.num_triangles(), 1);
  EXPECT_DOUBLE_EQ(m.vertices[2].y(), 3.0);
  EXPECT_DOUBLE_EQ(m.total_area(), 3.0);
}

TEST(MeshIo, ParseErrorsNameFileAndLine) {
  TempDir dir("parse");
  write_text(dir / "bad.ply",
             "ply\nformat ascii 1.0\nelement vertex 3\nproperty double x\nproperty double y\nproperty double z\n"
             "element face 1\nproperty list uchar int vertex_indices\nend_header\n0 0 0\n1 0 zero\n0 1 0\n3 0 1 2\n");
  const std::string e = error_of([&] { read_mesh(dir / "bad.ply"); });
  EXPECT_NE(e.find("bad.ply:11"), std::string::npos) << e;
  EXPECT_NE(e.find("zero"), std::string::npos) << e;

  write_text(dir / "bad.obj", "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 7\n");
  const std::string o = error_of([&] { read_mesh(dir / "bad.obj"); });
  EXPECT_NE(o.find("bad.obj:4"), std::string::npos) << o;

  write_text(dir / "short.ply", "ply\nformat binary_little_endian 1.0\nelement vertex 2\nproperty double x\n"
                                "property double y\nproperty double z\nend_header\nabc");
  EXPECT_NE(error_of([&] { read_mesh(dir / "short.ply"); }).find("end of binary data"), std::string::npos);
  EXPECT_NE(error_of([&] { read_mesh(dir / "none.ply"); }).find("none.ply"), std::string::npos);
}

// ---------------------------------------------------------------- manifest

TEST(Manifest, SynthDatasetRoundTrips) {
  TempDir dir("synthset");
  SynthConfig config;
  config.spec = small_spec();
  config.subject = "round";
  const fs::path manifest_path = write_synth_dataset(dir.path(), config, ExecPolicy::serial);
  const DatasetManifest m = load_manifest(manifest_path);
  EXPECT_EQ(m.subject, "round");
  EXPECT_EQ(m.frames(), 16);
  const Dataset data = ingest(m, {SurfaceKind::outer, SurfaceKind::inner, SurfaceKind::lumen});
  const SynthSequence seq = generate_sequence(config.spec, ExecPolicy::serial);
  for (SurfaceKind s : {SurfaceKind::outer, SurfaceKind::inner, SurfaceKind::lumen})
    for (int k = 0; k < 16; ++k) {
      EXPECT_TRUE(same_vertices(seq.surface(s)[k], data.surface(s)[k])) << to_string(s) << " " << k;
      EXPECT_EQ(data.surface(s)[k].frame_index, k);
      EXPECT_DOUBLE_EQ(data.surface(s)[k].time, 0.4 * k / 16);
    }
}

TEST(Manifest, FrameCountMismatch) {
  TempDir dir("mismatch");
  nlohmann::json j;
  j["period"] = 0.4;
  for (int k = 0; k < 195; ++k) {
    if (k < 194) j["surfaces"]["outer"].push_back("o" + std::to_string(k) + ".ply");
    j["surfaces"]["inner"].push_back("i" + std::to_string(k) + ".ply");
  }
  write_text(dir / "m.json", j.dump());
  const std::string e = error_of([&] { load_manifest(dir / "m.json"); });
  EXPECT_NE(e.find("frame count mismatch"), std::string::npos) << e;
  EXPECT_NE(e.find("outer=194"), std::string::npos) << e;
  EXPECT_NE(e.find("inner=195"), std::string::npos) << e;
}

TEST(Manifest, MissingFileNamesPath) {
  TempDir dir("missing");
  write_mesh(dir / "a.ply", test::cylinder(0.5, 1.0, 16, 4), MeshFormat::ply_binary);
  write_text(dir / "m.json", R"({"period": 0.4, "surfaces": {"outer": ["a.ply", "gone/b.ply"]}})");
  const DatasetManifest m = load_manifest(dir / "m.json");
  const std::string e = error_of([&] { ingest(m, {SurfaceKind::outer}); });
  EXPECT_NE(e.find("gone/b.ply"), std::string::npos) << e;
  EXPECT_NE(e.find("not found"), std::string::npos) << e;
}

TEST(Manifest, JsonErrorsCarryLine) {
  TempDir dir("json");
  write_text(dir / "m.json", "{\n  \"period\": 0.4,\n  \"surfaces\": {\n    \"outer\": [\"a.ply\",]\n  }\n}\n");
  const std::string e = error_of([&] { load_manifest(dir / "m.json"); });
  EXPECT_NE(e.find("m.json:4"), std::string::npos) << e;
  write_text(dir / "n.json", R"({"surfaces": {"outer": ["a.ply"]}})");
  EXPECT_NE(error_of([&] { load_manifest(dir / "n.json"); }).find("period"), std::string::npos);
  write_text(dir / "u.json", R"({"period": 0.4, "units": "furlong", "surfaces": {"outer": ["a.ply"]}})");
  EXPECT_NE(error_of([&] { load_manifest(dir / "u.json"); }).find("furlong"), std::string::npos);
}

TEST(Manifest, UnitsConvertToMillimetres) {
  TempDir dir("units");
  TriMesh mesh = test::cylinder(500.0, 1000.0, 16, 4);  // micrometres
  write_mesh(dir / "a.ply", mesh, MeshFormat::ply_ascii);
  write_text(dir / "m.json", R"({"period": 0.4, "units": "um", "surfaces": {"outer": ["a.ply"]}})");
  const Dataset data = ingest(load_manifest(dir / "m.json"), {SurfaceKind::outer});
  EXPECT_NEAR(data.surface(SurfaceKind::outer)[0].bbox_diagonal(), mesh.bbox_diagonal() * 1e-3, 1e-12);
}

// ---------------------------------------------------------------- config

TEST(Config, KeyValueParsing) {
  const KeyValues kv = KeyValues::parse("# comment\ngrid = 40x20  # trailing\nclip=no\nsurfaces = lumen, outer\n"
                                        "threshold = p75\nmagnification = 2\n",
                                        "run.cfg");
  const PipelineConfig c = pipeline_config(kv);
  kv.reject_unused();
  EXPECT_EQ(c.grid.n, 40);
  EXPECT_EQ(c.grid.m, 20);
  EXPECT_FALSE(c.clip);
  EXPECT_EQ(c.surfaces, (std::vector<SurfaceKind>{SurfaceKind::outer, SurfaceKind::lumen}));
  EXPECT_EQ(c.threshold, ThresholdMode::p75);
  EXPECT_EQ(c.magnification, 2);
}

TEST(Config, ErrorsNameSourceAndLine) {
  const KeyValues kv = KeyValues::parse("grid = 80x50\n\ncolour = red\n", "run.cfg");
  pipeline_config(kv);
  const std::string e = error_of([&] { kv.reject_unused(); });
  EXPECT_NE(e.find("run.cfg:3"), std::string::npos) << e;
  EXPECT_NE(e.find("colour"), std::string::npos) << e;

  EXPECT_NE(error_of([] { KeyValues::parse("a = 1\na = 2\n", "x.cfg"); }).find("x.cfg:2"), std::string::npos);
  EXPECT_NE(error_of([] { KeyValues::parse("just words\n", "x.cfg"); }).find("x.cfg:1"), std::string::npos);
  const KeyValues bad = KeyValues::parse("pca_modes = three\n", "y.cfg");
  EXPECT_NE(error_of([&] { pipeline_config(bad); }).find("y.cfg:1"), std::string::npos);
  EXPECT_THROW(parse_grid_size("80by50"), InputError);
  EXPECT_THROW(parse_surfaces("inner,lumen"), InputError);
  EXPECT_THROW(parse_threshold_mode("p90"), InputError);
}

TEST(Config, SynthKeys) {
  const KeyValues kv = KeyValues::parse("wave_speed = 5\nshape = torus\nframes = 30\nformat = obj\nsection = ellipse\n");
  const SynthConfig c = synth_config(kv);
  kv.reject_unused();
  EXPECT_DOUBLE_EQ(c.spec.wave_speed, 5.0);
  EXPECT_EQ(c.spec.shape, TubeShape::torus);
  EXPECT_EQ(c.spec.section, SectionShape::ellipse);
  EXPECT_EQ(c.spec.frames, 30);
  EXPECT_EQ(c.format, MeshFormat::obj);
  EXPECT_THROW(synth_config(KeyValues::parse("depth = 1.5\n")), InputError);
}

// ---------------------------------------------------------------- rendering

TEST(Render, AreaMapEndpointsExact) {
  const ScalarGrid g{2, 2, {0.0, 1.0, 1.0, 0.0}};
  const Rendered r = render_scalar(g, ColorMap::area, 0.0, 1.0, 3);
  ASSERT_EQ(r.image.width, 6);
  ASSERT_EQ(r.image.height, 6);
  EXPECT_EQ(r.image.at(0, 0), (Rgb{0, 0, 255}));
  EXPECT_EQ(r.image.at(5, 0), (Rgb{255, 0, 0}));
  EXPECT_EQ(r.image.at(0, 5), (Rgb{255, 0, 0}));
  EXPECT_EQ(r.image.at(5, 5), (Rgb{0, 0, 255}));
  EXPECT_EQ(r.image.at(2, 2), (Rgb{0, 0, 255}));  // block edge
  EXPECT_EQ(r.nan_cells, 0);
  EXPECT_EQ(area_color(0.5), (Rgb{0, 255, 0}));
}

TEST(Render, ZeroGradientIsBlack) {
  AreaImage img;
  img.stations = 6;
  img.frames = 10;
  img.values.assign(60, 2.0);
  img.depth = {0, 1, 2, 3, 4, 5};
  img.seconds_per_frame = 0.01;
  const Rendered r = render_gradient(area_gradient_image(img), 2);
  for (int y = 0; y < r.image.height; ++y)
    for (int x = 0; x < r.image.width; ++x) ASSERT_EQ(r.image.at(x, y), (Rgb{0, 0, 0}));
}

TEST(Render, NanCellsAreGrayAndCounted) {
  const double nan = std::nan("");
  const ScalarGrid g{2, 3, {0.0, nan, 1.0, nan, 0.5, nan}};
  const Rendered r = render_scalar(g, ColorMap::gray, 0.0, 1.0, 1);
  EXPECT_EQ(r.nan_cells, 3);
  EXPECT_EQ(r.image.at(1, 0), kNanColor);
  EXPECT_EQ(r.image.at(2, 0), (Rgb{255, 255, 255}));
}

TEST(Render, PngDeterministicAndReadable) {
  TempDir dir("png");
  const ScalarGrid g{3, 4, {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11}};
  const Rendered r = render_scalar(g, ColorMap::area, 0.0, 11.0, 5);
  write_png(dir / "a.png", r.image);
  write_png(dir / "b.png", r.image);
  EXPECT_EQ(read_bytes(dir / "a.png"), read_bytes(dir / "b.png"));
  const RgbImage back = read_png(dir / "a.png");
  EXPECT_EQ(back.width, 20);
  EXPECT_EQ(back.height, 15);
  EXPECT_EQ(back.pixels, r.image.pixels);
}

namespace {

AreaImage oracle_wave_image(const TubeSpec& spec, int stations) {
  std::vector<std::vector<double>> areas(spec.frames, std::vector<double>(stations));
  std::vector<double> depth(stations);
  for (int j = 0; j < stations; ++j) depth[j] = spec.length * j / (stations - 1);
  for (int k = 0; k < spec.frames; ++k)
    for (int j = 0; j < stations; ++j)
      areas[k][j] = oracle_area(spec, static_cast<double>(j) / (stations - 1), spec.period * k / spec.frames);
  return build_area_image(areas, depth, spec.period / spec.frames);
}

}  // namespace

TEST(Render, WaveGradientMatchesGolden) {
  const TubeSpec spec;
  const Rendered r = render_gradient(area_gradient_image(oracle_wave_image(spec, 50)), 2);
  const fs::path golden = fs::path(TUBEKIN_GOLDEN_DIR) / "gradient_wave.png";
  TempDir dir("golden");
  write_png(dir / "gradient_wave.png", r.image);
  if (std::getenv("TUBEKIN_UPDATE_GOLDEN")) fs::copy_file(dir / "gradient_wave.png", golden, fs::copy_options::overwrite_existing);
  ASSERT_TRUE(fs::exists(golden)) << "missing " << golden << " (set TUBEKIN_UPDATE_GOLDEN=1 to create)";
  EXPECT_EQ(read_bytes(dir / "gradient_wave.png"), read_bytes(golden));

  // Stripes run diagonally: the brightest column of each row moves later
  // with depth at 1/c.
  const GradientImage g = area_gradient_image(oracle_wave_image(spec, 50));
  auto brightest = [&](int j) {
    int best = 0;
    for (int k = 0; k < g.frames; ++k)
      if (g.dt[g.index(j, k)] > g.dt[g.index(j, best)]) best = k;
    return best;
  };
  const double frames_per_mm = spec.frames / spec.period / spec.wave_speed;
  EXPECT_NEAR(brightest(45) - brightest(5), frames_per_mm * spec.length * 40.0 / 49.0, 1.5);
}

TEST(AreaProfile, GaussianRowLevels) {
  const int T = 120;
  AreaImage img;
  img.stations = 2;
  img.frames = T;
  img.seconds_per_frame = 0.005;
  img.depth = {0.0, 1.0};
  for (int k = 0; k < T; ++k) img.values.push_back(0.5 + 0.3 * std::exp(-std::pow(k - 40.0, 2) / (2.0 * 12.0 * 12.0)));
  img.values.insert(img.values.end(), T, std::nan(""));
  AreaImage finite = img;
  std::fill(finite.values.begin() + T, finite.values.end(), 0.0);
  const PeakTimes peaks = peak_times(finite);
  const auto bands = expansion_bands(finite, peaks);
  const AreaProfile p = area_profile(SurfaceKind::inner, img, peaks, bands, 0.75);
  EXPECT_EQ(p.surface, SurfaceKind::inner);
  EXPECT_NEAR(p.max_area[0], 0.8, 1e-12);
  EXPECT_NEAR(p.threshold_area[0], 0.6, 1e-12);
  ASSERT_TRUE(bands[0].fit_converged);
  EXPECT_DOUBLE_EQ(p.sigma_area[0], bands[0].baseline + bands[0].amplitude * std::exp(-0.5));
  EXPECT_NEAR(p.sigma_area[0], 0.5 + 0.3 * std::exp(-0.5), 1e-4);  // fitted curve
  EXPECT_NEAR(p.peak_time[0], 0.2, 1e-9);
  EXPECT_TRUE(std::isnan(p.max_area[1]));
  EXPECT_TRUE(std::isnan(p.peak_time[1]));
}

// ---------------------------------------------------------------- Table 1

TEST(Table1, RowFormat) {
  Table1Row row;
  row.expand_percent = 38.27;
  row.contract_percent = 61.73;
  row.ratio = truncate2(38.27 / 61.73);
  row.period_ms = 372;
  row.expand_ms = 0.3827 * 372;
  row.contract_ms = 0.6173 * 372;
  row.speed_min = 3.3601;
  row.speed_max = 18.499;
  row.speed_avg = 8.9619;
  row.speed_std = 3.4245;
  row.speed_cycle = 6.8149;
  EXPECT_EQ(format_table1_row("Normal A", row),
            "Normal A & 38.27% & 61.73% & .61 & 372 & 142 & 230 & 3.3601 & 18.499 & 8.9619 & 3.4245 & 6.8149");
  row.ratio = 1.0;
  EXPECT_NE(format_table1_row("S", row).find("& 1.00 &"), std::string::npos);
}

// ---------------------------------------------------------------- pipeline

namespace {

struct SmallRun {
  TempDir dir{"pipeline"};
  fs::path manifest;
  PipelineConfig config;

  SmallRun() {
    SynthConfig sc;
    sc.spec = small_spec();
    sc.spec.frames = 24;
    manifest = write_synth_dataset(dir / "data", sc, ExecPolicy::serial);
    config.grid = {32, 12};
    config.magnification = 1;
    config.contour_samples = 48;
  }
};

}  // namespace

TEST(Pipeline, DeterministicOutputs) {
  SmallRun run;
  RunOptions serial;
  serial.policy = ExecPolicy::serial;
  const OutputSummary a = run_pipeline(run.manifest, run.config, run.dir / "a");
  const OutputSummary b = run_pipeline(run.manifest, run.config, run.dir / "b", serial);
  ASSERT_EQ(a.files, b.files);
  for (const auto& f : a.files) EXPECT_EQ(read_bytes(run.dir / "a" / f), read_bytes(run.dir / "b" / f)) << f;

  const auto summary = nlohmann::ordered_json::parse(read_bytes(run.dir / "a" / "summary.json"));
  std::vector<std::string> keys;
  for (auto it = summary["table1"].begin(); it != summary["table1"].end(); ++it) keys.push_back(it.key());
  EXPECT_EQ(keys, (std::vector<std::string>{"expand_percent", "contract_percent", "ratio", "period_ms", "expand_ms",
                                            "contract_ms", "speed_min", "speed_max", "speed_avg", "speed_std",
                                            "speed_cycle"}));
  EXPECT_TRUE(summary["clip"]["enabled"].get<bool>());
  EXPECT_EQ(summary["contours"], "lagrangian");
  for (const char* f : {"area.png", "gradient.png", "bands.png", "area.csv", "peaks.csv", "bands.csv", "gradient.csv",
                        "percent_expanded.csv", "wave_speed.csv", "volumes.csv", "curvature.csv", "strain.csv",
                        "pca.csv", "pca_modes.csv", "area_profile.csv", "table1.txt", "frames/radial_000.png", "frames/lumen_mean_023.png",
                        "frames/strain_023.png"})
    EXPECT_TRUE(fs::exists(run.dir / "a" / f)) << f;

  // Nested walls: at every station outer > inner > lumen peak area.
  std::ifstream prof(run.dir / "a" / "area_profile.csv");
  std::string line;
  std::getline(prof, line);
  std::map<std::string, std::vector<double>> peak;
  while (std::getline(prof, line)) {
    std::stringstream ss(line);
    std::string surface, station, depth, max_area;
    std::getline(ss, surface, ',');
    std::getline(ss, station, ',');
    std::getline(ss, depth, ',');
    std::getline(ss, max_area, ',');
    peak[surface].push_back(std::stod(max_area));
  }
  ASSERT_EQ(peak.size(), 3u);
  ASSERT_EQ(peak["lumen"].size(), 12u);
  for (int j = 0; j < 12; ++j) {
    EXPECT_GT(peak["outer"][j], peak["inner"][j]) << j;
    EXPECT_GT(peak["inner"][j], peak["lumen"][j]) << j;
  }
}

TEST(Pipeline, SurfaceFilterAndNoClip) {
  SmallRun run;
  run.config.surfaces = {SurfaceKind::outer};
  run.config.frame_images = false;
  run_pipeline(run.manifest, run.config, run.dir / "outer");
  const auto s = nlohmann::json::parse(read_bytes(run.dir / "outer" / "summary.json"));
  EXPECT_EQ(s["surfaces"], nlohmann::json::array({"outer"}));
  EXPECT_FALSE(s["clip"]["enabled"].get<bool>());
  EXPECT_FALSE(fs::exists(run.dir / "outer" / "frames"));

  run.config.surfaces = {SurfaceKind::outer, SurfaceKind::inner};
  run.config.clip = false;
  run_pipeline(run.manifest, run.config, run.dir / "eulerian");
  const auto e = nlohmann::json::parse(read_bytes(run.dir / "eulerian" / "summary.json"));
  EXPECT_FALSE(e["clip"]["enabled"].get<bool>());
  EXPECT_EQ(e["contours"], "eulerian");
  std::ifstream vol(run.dir / "eulerian" / "volumes.csv");
  std::string header, first;
  std::getline(vol, header);
  std::getline(vol, first);
  EXPECT_EQ(first.substr(first.size() - 2), ",,");  // no clip columns
}

TEST(Pipeline, StageErrorsCarryContext) {
  SmallRun run;
  DatasetManifest m = load_manifest(run.manifest);
  // Frame 3 loses a triangle and gets a hole.
  TriMesh broken = read_mesh(m.resolve(m.surface(SurfaceKind::outer)[3]));
  broken.triangles.erase(broken.triangles.begin() + 100);
  write_mesh(m.resolve(m.surface(SurfaceKind::outer)[3]), broken, MeshFormat::ply_binary);
  try {
    run_pipeline(run.manifest, run.config, run.dir / "out");
    FAIL() << "expected a stage error";
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage(), "validate");
    EXPECT_EQ(e.context(), "outer frame 3");
  }
}
