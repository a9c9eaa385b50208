#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <stdexcept>
#include <string>

namespace tubekin {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;

/// Base class for every error raised by the library. Carries the pipeline
/// stage that produced it so batch runs can report where they stopped.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what, std::string stage = {})
      : std::runtime_error(stage.empty() ? what : stage + ": " + what), stage_(std::move(stage)) {}

  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

class TopologyError : public Error {
 public:
  using Error::Error;
};

class GeometryError : public Error {
 public:
  using Error::Error;
};

class InputError : public Error {
 public:
  using Error::Error;
};

enum class SurfaceKind { outer, inner, lumen };

inline const char* to_string(SurfaceKind s) {
  switch (s) {
    case SurfaceKind::outer: return "outer";
    case SurfaceKind::inner: return "inner";
    case SurfaceKind::lumen: return "lumen";
  }
  return "?";
}

/// Batch kernels take a policy so the serial path stays available as the
/// reference for the OpenMP one.
enum class ExecPolicy { serial, parallel };

// Diagnostics go to stderr; never into output artifacts.
void warn(const std::string& message);
void set_quiet(bool quiet);

}  // namespace tubekin
