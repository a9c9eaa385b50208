#pragma once

#include "tubekin/sections.hpp"
#include "tubekin/temporal.hpp"

#include <vector>

namespace tubekin {

/// Cross-sectional area over (station, frame). Station 0 is the inlet.
struct AreaImage {
  int stations = 0;
  int frames = 0;
  std::vector<double> values;  // values[j * frames + k], mm^2
  std::vector<double> depth;   // mm from the inlet, per station
  double seconds_per_frame = 0.0;

  double& at(int j, int k) { return values[static_cast<size_t>(j) * frames + k]; }
  double at(int j, int k) const { return values[static_cast<size_t>(j) * frames + k]; }
  std::vector<double> row(int j) const;
  double period() const { return frames * seconds_per_frame; }
};

/// `areas[k][j]` is the area of station j in frame k. Throws InputError
/// listing every missing (NaN or absent) or negative cell as (j,k).
AreaImage build_area_image(const std::vector<std::vector<double>>& areas, std::vector<double> depth,
                           double seconds_per_frame);

/// `sections[k]` holds the contours of frame k; an empty contour is a missing cell.
AreaImage area_image_from_sections(const std::vector<std::vector<Contour>>& sections, std::vector<double> depth,
                                   double seconds_per_frame);

/// Mean cumulative length along the grid columns, over all columns and frames.
std::vector<double> station_depths(const SurfaceSequence& sequence);

struct PeakTimes {
  std::vector<double> frame;  // refined peak position in frames, [0, T); NaN if flat
  std::vector<double> time;   // seconds
  std::vector<int> flat;      // stations with no usable peak

  bool defined(int j) const { return frame[j] == frame[j]; }
};

/// 3-point parabolic refinement of a cyclic extremum at index k; offset in (-0.5, 0.5].
double parabolic_offset(const std::vector<double>& values, int k);

PeakTimes peak_times(const AreaImage& image, ExecPolicy policy = ExecPolicy::parallel);

/// Time interval in frames; `end` may pass T and `begin` may be negative
/// (the band wraps).
struct Band {
  bool valid = false;
  double begin = 0.0;
  double end = 0.0;

  double duration() const { return valid ? end - begin : 0.0; }
};

struct ExpansionBand {
  int station = 0;
  double peak = 0.0;       // frames
  Band threshold;          // area >= 0.75 max
  Band gaussian;           // peak +- sigma of the fitted curve
  double amplitude = 0.0;  // fitted A, c, sigma (frames)
  double baseline = 0.0;
  double sigma = 0.0;
  bool fit_converged = false;
  bool divergent = false;  // variants differ by more than 10%
};

struct BandOptions {
  double threshold = 0.75;
  int max_iterations = 50;
  double divergence = 0.10;
};

/// Both band variants for one cyclic row with its (refined) peak in frames.
ExpansionBand expansion_band(const std::vector<double>& row, double peak, const BandOptions& options = {});

/// Bands for every station with a defined peak; flat stations keep invalid bands.
std::vector<ExpansionBand> expansion_bands(const AreaImage& image, const PeakTimes& peaks,
                                           const BandOptions& options = {},
                                           ExecPolicy policy = ExecPolicy::parallel);

struct ExpandedFraction {
  std::vector<double> threshold;  // NaN where the band is undefined
  std::vector<double> gaussian;
};

/// Band duration over the cycle, per station, both variants.
ExpandedFraction percent_time_expanded(const std::vector<ExpansionBand>& bands, int frames);

/// Derivatives of the area image in physical units. Axis order is (t, v):
/// the angle is atan2(dA/dv, dA/dt).
struct GradientImage {
  int stations = 0;
  int frames = 0;
  std::vector<double> dt;         // mm^2 / s
  std::vector<double> dv;         // mm^2 / mm
  std::vector<double> angle;      // radians, (-pi, pi]
  std::vector<double> magnitude;  // divided by the 99th percentile, clamped to [0, 1]
  double scale = 0.0;             // the percentile used

  size_t index(int j, int k) const { return static_cast<size_t>(j) * frames + k; }
};

GradientImage area_gradient_image(const AreaImage& image, ExecPolicy policy = ExecPolicy::parallel);

struct LocalSpeed {
  int station = 0;     // pair (station, station + 1)
  double delay = 0.0;  // s
  double speed = 0.0;  // mm/s; NaN when the pair was excluded
};

struct WaveStats {
  double min = 0.0, max = 0.0, avg = 0.0, std = 0.0;  // local speeds, mm/s; std is the population std
  double cycle = 0.0;                                  // end-to-end, mm/s
  int samples = 0;
  int excluded = 0;  // adjacent pairs with equal peak times
  std::vector<LocalSpeed> local;
};

/// Local speed between adjacent stations with defined peaks: depth
/// difference over the peak delay, delays taken in (-T/2, T/2]. Times and
/// period in seconds; NaN times mark undefined peaks.
WaveStats wave_speed_stats(const std::vector<double>& peak_time, const std::vector<double>& depth, double period);

struct PhaseRatios {
  double expand = 0.0;    // fractions of the cycle
  double contract = 0.0;
  double ratio = 0.0;     // expand / contract, truncated to two decimals
  double period_ms = 0.0;
  double expand_ms = 0.0;
  double contract_ms = 0.0;
  double min_frame = 0.0;  // refined extremum positions
  double max_frame = 0.0;
};

/// Expansion runs from the minimum-volume frame to the maximum-volume frame
/// (cyclic); both extrema are refined parabolically.
PhaseRatios cycle_phase_ratios(const std::vector<double>& volumes, double period);

/// x truncated toward zero at two decimals, ignoring representation error.
double truncate2(double x);

}  // namespace tubekin
