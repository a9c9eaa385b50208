// Serial vs parallel timings of the frame- and station-parallel kernels.
// Argument 0 runs ExecPolicy::serial, 1 runs ExecPolicy::parallel.

#include "tubekin/kinematics.hpp"
#include "tubekin/sections.hpp"
#include "tubekin/shape.hpp"
#include "tubekin/synth.hpp"
#include "tubekin/temporal.hpp"

#include <benchmark/benchmark.h>

#include <numbers>

using namespace tubekin;

namespace {

ExecPolicy policy_of(const benchmark::State& state) {
  return state.range(0) == 0 ? ExecPolicy::serial : ExecPolicy::parallel;
}

TubeSpec bench_spec() {
  TubeSpec s;
  s.frames = 48;
  return s;
}

GridMesh grid_of(const TubeSpec& s, int frame, int n = 80, int m = 50) {
  GridMesh g(n, m);
  g.frame_index = frame;
  g.time = s.period * frame / s.frames;
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < n; ++i)
      g.at(i, j) = synth_point(s, SurfaceKind::outer, 2.0 * std::numbers::pi * i / n, static_cast<double>(j) / (m - 1), g.time);
  return g;
}

const SurfaceSequence& grids() {
  static const SurfaceSequence seq = [] {
    SurfaceSequence out;
    const TubeSpec s = bench_spec();
    out.period = s.period;
    for (int k = 0; k < s.frames; ++k) out.frames.push_back(grid_of(s, k));
    return out;
  }();
  return seq;
}

const AreaImage& area_image() {
  static const AreaImage img = [] {
    const TubeSpec s;
    const int stations = 50;
    std::vector<std::vector<double>> areas(s.frames, std::vector<double>(stations));
    std::vector<double> depth(stations);
    for (int j = 0; j < stations; ++j) depth[j] = s.length * j / (stations - 1);
    for (int k = 0; k < s.frames; ++k)
      for (int j = 0; j < stations; ++j)
        areas[k][j] = oracle_area(s, static_cast<double>(j) / (stations - 1), s.period * k / s.frames);
    return build_area_image(areas, depth, s.period / s.frames);
  }();
  return img;
}

void BM_GenerateSequence(benchmark::State& state) {
  const TubeSpec s = bench_spec();
  for (auto _ : state) benchmark::DoNotOptimize(generate_sequence(s, policy_of(state)));
}

void BM_SequenceVolumes(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(sequence_volumes(grids(), policy_of(state)));
}

void BM_ExtractSections(benchmark::State& state) {
  const GridMesh& g = grids().frames[10];
  const auto planes = section_planes(g);
  for (auto _ : state) benchmark::DoNotOptimize(extract_sections(g, planes, {}, policy_of(state)));
}

void BM_StrainSequence(benchmark::State& state) {
  const auto& frames = grids().frames;
  for (auto _ : state) benchmark::DoNotOptimize(strain_sequence(frames, frames.front(), policy_of(state)));
}

void BM_PeakTimes(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(peak_times(area_image(), policy_of(state)));
}

void BM_ExpansionBands(benchmark::State& state) {
  const PeakTimes peaks = peak_times(area_image());
  for (auto _ : state) benchmark::DoNotOptimize(expansion_bands(area_image(), peaks, {}, policy_of(state)));
}

void BM_AreaGradient(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(area_gradient_image(area_image(), policy_of(state)));
}

}  // namespace

BENCHMARK(BM_GenerateSequence)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SequenceVolumes)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ExtractSections)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_StrainSequence)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PeakTimes)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_ExpansionBands)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_AreaGradient)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
