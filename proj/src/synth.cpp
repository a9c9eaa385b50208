#include "tubekin/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace tubekin {

namespace {

constexpr double kPi = std::numbers::pi;

double band_multiplier(const TubeSpec& s, double v) {
  if (s.band_position <= 0.0) return 1.0;
  const double x = (v - s.band_position) / s.band_width;
  return 1.0 - (1.0 - s.band_factor) * std::exp(-0.5 * x * x);
}

// W0 = rho_ref^2 - (rho_ref - thickness)^2, the layer area / pi at lambda = 1.
double layer_w0(const TubeSpec& s, double v) {
  const double r = oracle_rest_radius(s, v);
  const double ri = r * (1.0 - s.wall_fraction);
  return r * r - ri * ri;
}

double wrap_time(double x, double period) {
  x = std::fmod(x, period);
  if (x < -0.5 * period) x += period;
  if (x >= 0.5 * period) x -= period;
  return x;
}

double section_multiplier(const TubeSpec& s, SurfaceKind kind, double psi, double& a, double& b) {
  a = 1.0;
  b = 1.0;
  if (kind == SurfaceKind::lumen) {
    return s.lumen_star_lobes > 0 ? 1.0 + s.lumen_star_amplitude * std::cos(s.lumen_star_lobes * psi) : 1.0;
  }
  switch (s.section) {
    case SectionShape::circle: return 1.0;
    case SectionShape::ellipse:
      a = s.ellipse_a;
      b = s.ellipse_b;
      return 1.0;
    case SectionShape::star: return 1.0 + s.star_amplitude * std::cos(s.star_lobes * psi);
  }
  return 1.0;
}

// Composite Simpson over [a, b] of the rest layer area profile.
double integrate_w0(const TubeSpec& s, double a, double b, int intervals = 2000) {
  if (b <= a) return 0.0;
  const double h = (b - a) / intervals;
  double sum = layer_w0(s, a) + layer_w0(s, b);
  for (int i = 1; i < intervals; ++i) sum += (i % 2 ? 4.0 : 2.0) * layer_w0(s, a + i * h);
  return sum * h / 3.0;
}

}  // namespace

void TubeSpec::validate() const {
  auto fail = [](const std::string& msg) { throw InputError(msg, "synth"); };
  if (!(inlet_radius > 0 && outlet_radius > 0)) fail("radii must be positive");
  if (!(length > 0)) fail("length must be positive");
  if (!(depth >= 0 && depth < 1)) fail("wave depth must lie in [0, 1)");
  if (!(wall_fraction > 0 && wall_fraction < 1)) fail("wall fraction must lie in (0, 1)");
  if (!(lumen_fraction > 0 && lumen_fraction < 1)) fail("lumen fraction must lie in (0, 1)");
  if (band_position != 0.0 && !(band_position > 0 && band_position < 1)) fail("band position must lie in (0, 1)");
  if (!(band_factor > 0 && band_factor <= 1)) fail("band factor must lie in (0, 1]");
  if (std::abs(star_amplitude) >= 1 || std::abs(lumen_star_amplitude) >= 1) fail("star amplitude must be below 1");
  if (!(ellipse_a > 0 && ellipse_b > 0)) fail("ellipse multipliers must be positive");
  if (frames < 1 || circumferential < 3 || longitudinal < 1) fail("resolution too small");
  if (!(period > 0) || !(wave_speed != 0)) fail("period and wave speed must be nonzero");
  if (volume_variation < 0) fail("volume variation must be nonnegative");
  // The inner radius must stay real at the deepest contraction.
  if (1.0 - depth <= 1.0 - (1.0 - wall_fraction) * (1.0 - wall_fraction)) {
    fail("wave depth collapses the inner surface; reduce depth or wall fraction");
  }
  if (shape == TubeShape::torus) {
    const double widest = std::max(inlet_radius, outlet_radius) * std::max({ellipse_a, ellipse_b, 1.0 + std::abs(star_amplitude)});
    if (bend_radius <= widest) fail("bend radius must exceed the tube radius");
  }
}

const std::vector<TriMesh>& SynthSequence::surface(SurfaceKind kind) const {
  switch (kind) {
    case SurfaceKind::outer: return outer;
    case SurfaceKind::inner: return inner;
    case SurfaceKind::lumen: return lumen;
  }
  return outer;
}

double oracle_stretch(const TubeSpec& spec, double t) {
  return 1.0 + spec.volume_variation * 0.5 * (1.0 + std::cos(2.0 * kPi * t / spec.period));
}

double oracle_rest_radius(const TubeSpec& spec, double v) {
  return (spec.inlet_radius + (spec.outlet_radius - spec.inlet_radius) * v) * band_multiplier(spec, v);
}

double oracle_pulse(const TubeSpec& spec, double phase_time) {
  const double x = wrap_time(phase_time, spec.period);
  if (spec.profile == PulseProfile::gaussian) {
    const double sigma = spec.pulse_sigma * spec.period;
    return std::exp(-0.5 * x * x / (sigma * sigma));
  }
  const double half = 0.5 * spec.pulse_width * spec.period;
  if (std::abs(x) >= half) return 0.0;
  return 0.5 * (1.0 + std::cos(kPi * x / half));
}

double oracle_arrival_time(const TubeSpec& spec, double v) {
  const double lo = std::clamp(spec.reversal_begin, 0.0, v);
  const double hi = std::clamp(spec.reversal_end, 0.0, v);
  const double reversed = std::max(0.0, hi - lo);
  return spec.pulse_offset * spec.period + spec.length * (v - 2.0 * reversed) / spec.wave_speed;
}

double oracle_wave_speed(const TubeSpec& spec) { return spec.wave_speed; }

double oracle_radius(const TubeSpec& spec, SurfaceKind kind, double v, double t) {
  const double r0 = oracle_rest_radius(spec, v);
  const double w = oracle_pulse(spec, t - oracle_arrival_time(spec, v));
  const double ro2 = r0 * r0 * (1.0 - spec.depth + spec.depth * w);
  if (kind == SurfaceKind::outer) return std::sqrt(ro2);
  const double ri = std::sqrt(ro2 - layer_w0(spec, v) / oracle_stretch(spec, t));
  return kind == SurfaceKind::inner ? ri : spec.lumen_fraction * ri;
}

double oracle_section_factor(const TubeSpec& spec, SurfaceKind kind) {
  if (kind == SurfaceKind::lumen) return 1.0 + 0.5 * spec.lumen_star_amplitude * spec.lumen_star_amplitude;
  switch (spec.section) {
    case SectionShape::circle: return 1.0;
    case SectionShape::ellipse: return spec.ellipse_a * spec.ellipse_b;
    case SectionShape::star: return 1.0 + 0.5 * spec.star_amplitude * spec.star_amplitude;
  }
  return 1.0;
}

double oracle_area(const TubeSpec& spec, SurfaceKind kind, double v, double t) {
  const double r = oracle_radius(spec, kind, v, t);
  return kPi * r * r * oracle_section_factor(spec, kind);
}

double oracle_area(const TubeSpec& spec, double v, double t) { return oracle_area(spec, SurfaceKind::outer, v, t); }

double oracle_layer_volume(const TubeSpec& spec, double t) {
  return kPi * oracle_section_factor(spec, SurfaceKind::outer) * spec.length * integrate_w0(spec, 0.0, 1.0) /
         oracle_stretch(spec, t);
}

double oracle_clip_fraction(const TubeSpec& spec, double t) {
  const double lambda_max = 1.0 + spec.volume_variation;
  const double target = integrate_w0(spec, 0.0, 1.0) * oracle_stretch(spec, t) / lambda_max;
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 80; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (integrate_w0(spec, 1.0 - mid, 1.0) < target) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

double oracle_duty_cycle(const TubeSpec& spec, double fraction) {
  if (spec.depth <= 0.0) return 1.0;
  const double wstar = (fraction - 1.0 + spec.depth) / spec.depth;
  if (wstar <= 0.0) return 1.0;
  if (wstar > 1.0) return 0.0;
  if (spec.profile == PulseProfile::gaussian) {
    return std::min(1.0, 2.0 * spec.pulse_sigma * std::sqrt(-2.0 * std::log(wstar)));
  }
  return spec.pulse_width * std::acos(2.0 * wstar - 1.0) / kPi;
}

Vec3 synth_point(const TubeSpec& spec, SurfaceKind kind, double psi, double v, double t) {
  const double r = oracle_radius(spec, kind, v, t);
  double a, b;
  const double m = section_multiplier(spec, kind, psi, a, b);
  const double x = r * m * a * std::cos(psi);
  const double y = r * m * b * std::sin(psi);
  const double s = v * spec.length;
  switch (spec.shape) {
    case TubeShape::torus: {
      const double R = spec.bend_radius;
      const double phi = s / R;
      const Vec3 c(R - R * std::cos(phi), 0.0, R * std::sin(phi));
      const Vec3 n(std::cos(phi), 0.0, -std::sin(phi));
      return c + x * n + y * Vec3::UnitY();
    }
    case TubeShape::sheared: {
      const Vec3 c(spec.shear_amplitude * std::sin(kPi * s / spec.length), 0.0, s);
      return c + Vec3(x, y, 0.0);
    }
    case TubeShape::straight: break;
  }
  return {x, y, s};
}

TriMesh generate_surface(const TubeSpec& spec, SurfaceKind kind, int frame) {
  const int n = spec.circumferential;
  const int m = spec.longitudinal;
  TriMesh mesh;
  mesh.frame_index = frame;
  mesh.time = spec.period * frame / spec.frames;
  mesh.vertices.reserve(static_cast<size_t>(n) * (m + 1));
  for (int j = 0; j <= m; ++j) {
    const double v = static_cast<double>(j) / m;
    for (int i = 0; i < n; ++i) {
      mesh.vertices.push_back(synth_point(spec, kind, 2.0 * kPi * i / n, v, mesh.time));
    }
  }
  mesh.triangles.reserve(2 * static_cast<size_t>(n) * m);
  for (int j = 0; j < m; ++j) {
    for (int i = 0; i < n; ++i) {
      const int a = j * n + i;
      const int b = j * n + (i + 1) % n;
      const int c = (j + 1) * n + (i + 1) % n;
      const int d = (j + 1) * n + i;
      mesh.triangles.push_back({a, b, c});
      mesh.triangles.push_back({a, c, d});
    }
  }
  return mesh;
}

SynthSequence generate_sequence(const TubeSpec& spec, ExecPolicy policy) {
  spec.validate();
  SynthSequence seq;
  seq.spec = spec;
  seq.outer.resize(spec.frames);
  seq.inner.resize(spec.frames);
  seq.lumen.resize(spec.frames);
#pragma omp parallel for schedule(dynamic) if (policy == ExecPolicy::parallel)
  for (int k = 0; k < spec.frames; ++k) {
    seq.outer[k] = generate_surface(spec, SurfaceKind::outer, k);
    seq.inner[k] = generate_surface(spec, SurfaceKind::inner, k);
    seq.lumen[k] = generate_surface(spec, SurfaceKind::lumen, k);
  }
  return seq;
}

}  // namespace tubekin
