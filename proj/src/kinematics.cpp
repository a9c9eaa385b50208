#include "tubekin/kinematics.hpp"

#include <unsupported/Eigen/LevenbergMarquardt>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace tubekin {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

int wrap(int k, int n) { return ((k % n) + n) % n; }

// Signed cyclic offset of t from centre, in (-T/2, T/2].
double cyclic_offset(double t, double centre, double period) {
  double d = std::fmod(t - centre, period);
  if (d > 0.5 * period) d -= period;
  if (d <= -0.5 * period) d += period;
  return d;
}

// A exp(-d^2 / 2 sigma^2) + c around a pinned centre; x = (A, sigma, c).
struct GaussianResidual : Eigen::DenseFunctor<double> {
  const std::vector<double>* row;
  std::vector<double> offset;

  GaussianResidual(const std::vector<double>& r, double centre)
      : DenseFunctor<double>(3, static_cast<int>(r.size())), row(&r), offset(r.size()) {
    const double T = static_cast<double>(r.size());
    for (size_t k = 0; k < r.size(); ++k) offset[k] = cyclic_offset(static_cast<double>(k), centre, T);
  }

  int operator()(const InputType& x, ValueType& f) const {
    for (size_t k = 0; k < offset.size(); ++k) {
      const double g = std::exp(-offset[k] * offset[k] / (2.0 * x[1] * x[1]));
      f[k] = x[0] * g + x[2] - (*row)[k];
    }
    return 0;
  }

  int df(const InputType& x, JacobianType& J) const {
    for (size_t k = 0; k < offset.size(); ++k) {
      const double d2 = offset[k] * offset[k];
      const double g = std::exp(-d2 / (2.0 * x[1] * x[1]));
      J(k, 0) = g;
      J(k, 1) = x[0] * g * d2 / (x[1] * x[1] * x[1]);
      J(k, 2) = 1.0;
    }
    return 0;
  }
};

// Walk from the peak sample in direction `step` while the row stays at or
// above `level`; returns the interpolated crossing in unwrapped frames.
double crossing(const std::vector<double>& row, int start, int step, double level) {
  const int T = static_cast<int>(row.size());
  int k = start;
  for (int walked = 0; walked < T; ++walked) {
    const int next = k + step;
    const double a = row[wrap(k, T)];
    const double b = row[wrap(next, T)];
    if (b < level) return k + step * (a - level) / (a - b);
    k = next;
  }
  return k;
}

void for_rows(int count, ExecPolicy policy, const auto& body) {
  if (policy == ExecPolicy::parallel) {
#pragma omp parallel for schedule(dynamic)
    for (int j = 0; j < count; ++j) body(j);
  } else {
    for (int j = 0; j < count; ++j) body(j);
  }
}

}  // namespace

std::vector<double> AreaImage::row(int j) const {
  const auto first = values.begin() + static_cast<std::ptrdiff_t>(j) * frames;
  return std::vector<double>(first, first + frames);
}

AreaImage build_area_image(const std::vector<std::vector<double>>& areas, std::vector<double> depth,
                           double seconds_per_frame) {
  AreaImage image;
  image.frames = static_cast<int>(areas.size());
  image.stations = static_cast<int>(depth.size());
  image.depth = std::move(depth);
  image.seconds_per_frame = seconds_per_frame;
  if (image.frames == 0 || image.stations == 0) throw InputError("empty area table", "kinematics");
  if (!(seconds_per_frame > 0.0)) throw InputError("seconds per frame must be positive", "kinematics");
  image.values.assign(static_cast<size_t>(image.frames) * image.stations, kNaN);

  std::vector<std::pair<int, int>> missing, negative;
  for (int k = 0; k < image.frames; ++k) {
    for (int j = 0; j < image.stations; ++j) {
      const double a = j < static_cast<int>(areas[k].size()) ? areas[k][j] : kNaN;
      if (!std::isfinite(a)) {
        missing.emplace_back(j, k);
      } else if (a < 0.0) {
        negative.emplace_back(j, k);
      }
      image.at(j, k) = a;
    }
  }
  auto describe = [](const char* what, const std::vector<std::pair<int, int>>& cells) {
    std::ostringstream os;
    os << cells.size() << ' ' << what << " cell(s) (j,k):";
    for (const auto& [j, k] : cells) os << " (" << j << ',' << k << ')';
    return os.str();
  };
  if (!missing.empty()) throw InputError(describe("missing", missing), "kinematics");
  if (!negative.empty()) throw InputError(describe("negative", negative), "kinematics");
  return image;
}

AreaImage area_image_from_sections(const std::vector<std::vector<Contour>>& sections, std::vector<double> depth,
                                   double seconds_per_frame) {
  std::vector<std::vector<double>> areas(sections.size());
  for (size_t k = 0; k < sections.size(); ++k) {
    for (const Contour& c : sections[k]) areas[k].push_back(c.points.empty() ? kNaN : contour_area(c));
  }
  return build_area_image(areas, std::move(depth), seconds_per_frame);
}

std::vector<double> station_depths(const SurfaceSequence& sequence) {
  const int n = sequence.n(), m = sequence.m();
  std::vector<double> depth(m, 0.0);
  if (sequence.frames.empty()) return depth;
  for (const GridMesh& g : sequence.frames) {
    double along = 0.0;
    for (int j = 1; j < m; ++j) {
      double step = 0.0;
      for (int i = 0; i < n; ++i) step += (g.at(i, j) - g.at(i, j - 1)).norm();
      along += step / n;
      depth[j] += along;
    }
  }
  for (double& d : depth) d /= sequence.size();
  return depth;
}

double parabolic_offset(const std::vector<double>& values, int k) {
  const int T = static_cast<int>(values.size());
  if (T < 3) return 0.0;
  const double ym = values[wrap(k - 1, T)], y0 = values[wrap(k, T)], yp = values[wrap(k + 1, T)];
  const double denom = ym - 2.0 * y0 + yp;
  if (denom == 0.0) return 0.0;
  return std::clamp(0.5 * (ym - yp) / denom, -0.5, 0.5);
}

PeakTimes peak_times(const AreaImage& image, ExecPolicy policy) {
  PeakTimes peaks;
  peaks.frame.assign(image.stations, kNaN);
  peaks.time.assign(image.stations, kNaN);
  std::vector<char> flat(image.stations, 0);
  for_rows(image.stations, policy, [&](int j) {
    const std::vector<double> row = image.row(j);
    const auto [lo, hi] = std::minmax_element(row.begin(), row.end());
    if (*hi - *lo <= 1e-9 * std::max(1.0, std::abs(*hi))) {
      flat[j] = 1;
      return;
    }
    const int k = earliest_argmax(row);
    const double T = image.frames;
    double f = k + parabolic_offset(row, k);
    f = std::fmod(f + T, T);
    peaks.frame[j] = f;
    peaks.time[j] = f * image.seconds_per_frame;
  });
  for (int j = 0; j < image.stations; ++j) {
    if (flat[j]) peaks.flat.push_back(j);
  }
  return peaks;
}

ExpansionBand expansion_band(const std::vector<double>& row, double peak, const BandOptions& options) {
  ExpansionBand band;
  band.peak = peak;
  const int T = static_cast<int>(row.size());
  if (T < 3) return band;
  const auto [lo, hi] = std::minmax_element(row.begin(), row.end());
  const double vmax = *hi, vmin = *lo;
  if (vmax - vmin <= 1e-9 * std::max(1.0, std::abs(vmax))) return band;

  // Threshold variant: contiguous run around the peak sample.
  const int k0 = wrap(static_cast<int>(std::lround(peak)), T);
  int start = k0;
  const double level = options.threshold * vmax;
  if (row[start] < level) start = earliest_argmax(row);
  if (std::all_of(row.begin(), row.end(), [&](double a) { return a >= level; })) {
    band.threshold = {true, peak - 0.5 * T, peak + 0.5 * T};
  } else {
    band.threshold = {true, crossing(row, start, -1, level), crossing(row, start, +1, level)};
  }

  // Gaussian variant, centre pinned at the peak.
  GaussianResidual residual(row, peak);
  const double half = 0.5 * (vmin + vmax);
  const double above = static_cast<double>(std::count_if(row.begin(), row.end(), [&](double a) { return a >= half; }));
  Eigen::VectorXd x(3);
  x << vmax - vmin, std::max(1.0, above / 2.3548), vmin;
  Eigen::LevenbergMarquardt<GaussianResidual> lm(residual);
  auto status = lm.minimizeInit(x);
  int iterations = 0;
  if (status != Eigen::LevenbergMarquardtSpace::ImproperInputParameters) {
    do {
      status = lm.minimizeOneStep(x);
    } while (status == Eigen::LevenbergMarquardtSpace::Running && ++iterations < options.max_iterations);
  }
  using namespace Eigen::LevenbergMarquardtSpace;
  const bool stopped = status == RelativeReductionTooSmall || status == RelativeErrorTooSmall ||
                       status == RelativeErrorAndReductionTooSmall || status == CosinusTooSmall ||
                       status == FtolTooSmall || status == XtolTooSmall || status == GtolTooSmall;
  band.amplitude = x[0];
  band.sigma = std::abs(x[1]);
  band.baseline = x[2];
  band.fit_converged = stopped && x.allFinite() && x[0] > 0.0 && band.sigma > 0.0;
  if (band.fit_converged) {
    const double s = std::min(band.sigma, 0.5 * T);
    band.gaussian = {true, peak - s, peak + s};
    const double t = band.threshold.duration();
    band.divergent = std::abs(band.gaussian.duration() - t) > options.divergence * t;
  }
  return band;
}

std::vector<ExpansionBand> expansion_bands(const AreaImage& image, const PeakTimes& peaks, const BandOptions& options,
                                           ExecPolicy policy) {
  std::vector<ExpansionBand> bands(image.stations);
  for_rows(image.stations, policy, [&](int j) {
    if (peaks.defined(j)) bands[j] = expansion_band(image.row(j), peaks.frame[j], options);
    bands[j].station = j;
  });
  int unfitted = 0;
  for (const auto& b : bands) {
    if (b.threshold.valid && !b.fit_converged) ++unfitted;
  }
  if (unfitted > 0) warn(std::to_string(unfitted) + " station(s): Gaussian band fit did not converge, threshold band only");
  return bands;
}

ExpandedFraction percent_time_expanded(const std::vector<ExpansionBand>& bands, int frames) {
  ExpandedFraction out;
  for (const auto& b : bands) {
    out.threshold.push_back(b.threshold.valid ? b.threshold.duration() / frames : kNaN);
    out.gaussian.push_back(b.gaussian.valid ? b.gaussian.duration() / frames : kNaN);
  }
  return out;
}

GradientImage area_gradient_image(const AreaImage& image, ExecPolicy policy) {
  GradientImage g;
  const int m = image.stations, T = image.frames;
  g.stations = m;
  g.frames = T;
  const size_t count = static_cast<size_t>(m) * T;
  g.dt.assign(count, 0.0);
  g.dv.assign(count, 0.0);
  g.angle.assign(count, 0.0);
  g.magnitude.assign(count, 0.0);
  std::vector<double> raw(count, 0.0);
  for_rows(m, policy, [&](int j) {
    const int jm = std::max(0, j - 1), jp = std::min(m - 1, j + 1);
    const double dz = image.depth[jp] - image.depth[jm];
    for (int k = 0; k < T; ++k) {
      const size_t idx = g.index(j, k);
      g.dt[idx] = (image.at(j, wrap(k + 1, T)) - image.at(j, wrap(k - 1, T))) / (2.0 * image.seconds_per_frame);
      g.dv[idx] = dz > 0.0 ? (image.at(jp, k) - image.at(jm, k)) / dz : 0.0;
      g.angle[idx] = std::atan2(g.dv[idx], g.dt[idx]);
      raw[idx] = std::hypot(g.dt[idx], g.dv[idx]);
    }
  });
  std::vector<double> sorted = raw;
  std::sort(sorted.begin(), sorted.end());
  const double pos = 0.99 * (static_cast<double>(count) - 1.0);
  const size_t lo = static_cast<size_t>(std::floor(pos));
  const size_t hi = std::min(count - 1, lo + 1);
  g.scale = sorted[lo] + (pos - lo) * (sorted[hi] - sorted[lo]);
  if (g.scale > 0.0) {
    for (size_t i = 0; i < count; ++i) g.magnitude[i] = std::min(1.0, raw[i] / g.scale);
  }
  return g;
}

WaveStats wave_speed_stats(const std::vector<double>& peak_time, const std::vector<double>& depth, double period) {
  if (peak_time.size() != depth.size()) throw InputError("peak and depth counts differ", "kinematics");
  std::vector<int> defined;
  for (size_t j = 0; j < peak_time.size(); ++j) {
    if (std::isfinite(peak_time[j])) defined.push_back(static_cast<int>(j));
  }
  if (defined.size() < 3) throw InputError("fewer than 3 stations with a defined peak", "kinematics");

  WaveStats stats;
  std::vector<double> speeds;
  double delay = 0.0;
  for (size_t a = 0; a + 1 < defined.size(); ++a) {
    const int j = defined[a], jn = defined[a + 1];
    const double dt = cyclic_offset(peak_time[jn], peak_time[j], period);
    delay += dt;
    if (jn != j + 1) continue;  // a flat station sits between them
    if (dt == 0.0) {
      ++stats.excluded;
      stats.local.push_back({j, dt, kNaN});
      continue;
    }
    speeds.push_back((depth[jn] - depth[j]) / dt);
    stats.local.push_back({j, dt, speeds.back()});
  }
  if (stats.excluded > 0) warn(std::to_string(stats.excluded) + " adjacent station pair(s) with equal peak times excluded");
  stats.samples = static_cast<int>(speeds.size());
  if (speeds.empty()) throw InputError("no local wave speed could be measured", "kinematics");
  const auto [lo, hi] = std::minmax_element(speeds.begin(), speeds.end());
  stats.min = *lo;
  stats.max = *hi;
  stats.avg = std::accumulate(speeds.begin(), speeds.end(), 0.0) / speeds.size();
  double var = 0.0;
  for (double s : speeds) var += (s - stats.avg) * (s - stats.avg);
  stats.std = std::sqrt(var / speeds.size());
  const double length = depth[defined.back()] - depth[defined.front()];
  stats.cycle = delay != 0.0 ? length / delay : kNaN;
  return stats;
}

double truncate2(double x) {
  const double scaled = x * 100.0;
  return std::trunc(scaled + std::copysign(1e-9 * std::max(1.0, std::abs(scaled)), scaled)) / 100.0;
}

PhaseRatios cycle_phase_ratios(const std::vector<double>& volumes, double period) {
  const int T = static_cast<int>(volumes.size());
  if (T < 3) throw InputError("need at least 3 volumes", "kinematics");
  const CyclePhaseMap map = align_cycle_by_volume(volumes);
  std::vector<double> negated(volumes.size());
  std::transform(volumes.begin(), volumes.end(), negated.begin(), [](double v) { return -v; });
  PhaseRatios r;
  r.min_frame = map.min_index + parabolic_offset(negated, map.min_index);
  r.max_frame = map.max_index + parabolic_offset(volumes, map.max_index);
  double span = std::fmod(r.max_frame - r.min_frame + 2.0 * T, static_cast<double>(T));
  r.expand = span / T;
  r.contract = 1.0 - r.expand;
  r.ratio = r.contract > 0.0 ? truncate2(r.expand / r.contract) : kNaN;
  r.period_ms = 1000.0 * period;
  r.expand_ms = r.expand * r.period_ms;
  r.contract_ms = r.contract * r.period_ms;
  return r;
}

}  // namespace tubekin
