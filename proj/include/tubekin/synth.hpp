#pragma once

#include "tubekin/mesh.hpp"

#include <vector>

namespace tubekin {

enum class TubeShape { straight, torus, sheared };
enum class SectionShape { circle, ellipse, star };
enum class PulseProfile { raised_cosine, gaussian };

/// Analytic deforming tube. Lengths in mm, times in s. The centerline
/// coordinate s runs from the inlet (s = 0) to the outlet (s = length);
/// v = s / length.
struct TubeSpec {
  double inlet_radius = 0.5;
  double outlet_radius = 0.25;
  double length = 1.5;

  TubeShape shape = TubeShape::straight;
  double bend_radius = 1.0;      // torus: centerline radius; bend angle = length / bend_radius
  double shear_amplitude = 0.0;  // sheared: lateral centerline offset A sin(pi s / length)

  SectionShape section = SectionShape::circle;
  double ellipse_a = 1.0, ellipse_b = 1.0;  // multipliers along the normal / binormal
  int star_lobes = 0;
  double star_amplitude = 0.0;

  double wall_fraction = 0.2;    // rest wall thickness / rest outer radius
  double lumen_fraction = 0.6;   // lumen radius / inner radius
  int lumen_star_lobes = 0;
  double lumen_star_amplitude = 0.0;

  // Expansion wave: area factor 1 - depth + depth * w(t - arrival(s)).
  double wave_speed = 8.0;
  double depth = 0.4;
  PulseProfile profile = PulseProfile::raised_cosine;
  double pulse_width = 0.6;      // raised cosine support, fraction of period
  double pulse_sigma = 0.1;      // gaussian sigma, fraction of period
  double pulse_offset = 0.25;    // arrival time at the inlet, fraction of period
  double reversal_begin = 0.0;   // v range where the wave runs backwards
  double reversal_end = 0.0;

  // Neck: radius multiplied by 1 - (1 - band_factor) exp(-((v - v_b)/w)^2 / 2).
  double band_position = 0.0;    // 0 disables
  double band_factor = 1.0;
  double band_width = 0.08;

  // Longitudinal tissue stretch lambda(t) = 1 + e (1 + cos 2 pi t/P) / 2; the
  // layer volume inside the fixed window scales with 1 / lambda.
  double volume_variation = 0.0;

  int frames = 195;
  double period = 0.4;
  int circumferential = 64;      // vertices around
  int longitudinal = 48;         // segments along

  void validate() const;
};

struct SynthSequence {
  TubeSpec spec;
  std::vector<TriMesh> outer, inner, lumen;

  const std::vector<TriMesh>& surface(SurfaceKind kind) const;
};

/// Analytic point of a surface at circumferential angle psi (0 on the inner
/// side of a bend), longitudinal coordinate v in [0,1] and time t.
Vec3 synth_point(const TubeSpec& spec, SurfaceKind kind, double psi, double v, double t);

TriMesh generate_surface(const TubeSpec& spec, SurfaceKind kind, int frame);
SynthSequence generate_sequence(const TubeSpec& spec, ExecPolicy policy = ExecPolicy::parallel);

// Closed-form oracles.
double oracle_stretch(const TubeSpec& spec, double t);
double oracle_rest_radius(const TubeSpec& spec, double v);  // outer, without wave
double oracle_radius(const TubeSpec& spec, SurfaceKind kind, double v, double t);
double oracle_section_factor(const TubeSpec& spec, SurfaceKind kind);  // area / (pi r^2)
double oracle_area(const TubeSpec& spec, SurfaceKind kind, double v, double t);
double oracle_area(const TubeSpec& spec, double v, double t);  // outer
double oracle_wave_speed(const TubeSpec& spec);
double oracle_arrival_time(const TubeSpec& spec, double v);
double oracle_pulse(const TubeSpec& spec, double phase_time);
double oracle_layer_volume(const TubeSpec& spec, double t);
/// Fraction of the window kept, clipping at the inlet, that brings the layer
/// volume of time t down to the minimum over the cycle.
double oracle_clip_fraction(const TubeSpec& spec, double t);
/// Fraction of the period a station spends with area >= fraction * its max.
double oracle_duty_cycle(const TubeSpec& spec, double fraction);

}  // namespace tubekin
