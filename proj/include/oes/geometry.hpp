#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>

namespace oes {

// Units throughout: mm, MeV, tesla, ns.

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  constexpr Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  constexpr Vec2 operator*(double s) const { return {x * s, y * s}; }
  constexpr Vec2 operator/(double s) const { return {x / s, y / s}; }

  constexpr double dot(const Vec2& o) const { return x * o.x + y * o.y; }
  /// z component of the 3D cross product.
  constexpr double cross(const Vec2& o) const { return x * o.y - y * o.x; }
  double norm() const { return std::hypot(x, y); }
  double angle() const { return std::atan2(y, x); }
};

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  constexpr Vec3 operator+(const Vec3& o) const {
    return {x + o.x, y + o.y, z + o.z};
  }
  constexpr Vec3 operator-(const Vec3& o) const {
    return {x - o.x, y - o.y, z - o.z};
  }
  constexpr Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }

  constexpr double dot(const Vec3& o) const {
    return x * o.x + y * o.y + z * o.z;
  }
  double norm() const { return std::sqrt(dot(*this)); }
  constexpr Vec2 transverse() const { return {x, y}; }
};

struct PhysicsConstants {
  static constexpr double muon_rest_energy = 105.6584;   // MeV
  static constexpr double electron_mass = 0.51099895;    // MeV/c^2
  static constexpr double pt_conversion = 0.299792458;   // MeV/c per (T mm)
};

/// Four concentric pixel cylinders around a target disk, all in a solenoid
/// field along z.
struct DetectorGeometry {
  std::array<double, 4> layer_radii{23.3, 29.8, 73.9, 86.3};
  std::array<double, 4> layer_half_length{60.0, 60.0, 170.0, 180.0};
  double target_radius = 19.0;
  double target_half_length = 50.0;
  double b_field = 1.0;

  /// Throws Error(kConfig) when the ordering or positivity invariants break.
  void validate() const;

  /// FNV-1a over the canonical text form; stored next to chunk files so a
  /// run can detect data generated with a different geometry.
  std::uint64_t hash() const;
};

/// Signed radius: positive means counter-clockwise travel seen from +z,
/// which is the positron convention used everywhere in this library.
struct Circle2D {
  Vec2 center;
  double radius_signed = 0.0;

  double radius() const { return std::abs(radius_signed); }
};

inline constexpr double kInfiniteRadius = std::numeric_limits<double>::infinity();

/// Longitudinal slope between two hits on cylinders r_inner < r_outer.
/// Empty when the radii coincide (invalid layer pairing).
std::optional<double> tan_lambda(double z_inner, double r_inner, double z_outer,
                                 double r_outer);

/// Cosine of the transverse opening angle seen from the beam axis, clamped to
/// [-1, 1]. Empty for a zero-length input.
std::optional<double> cos_phi(const Vec2& a, const Vec2& b);

/// Signed radius of the transverse circle through three hits (positive for
/// counter-clockwise h0 -> h1 -> h2). Returns kInfiniteRadius for collinear
/// points.
double circle_radius_3pt(const Vec3& h0, const Vec3& h1, const Vec3& h2);

std::optional<Vec2> circumcenter_3pt(const Vec2& a, const Vec2& b,
                                     const Vec2& c);

double pt_from_radius(double radius, double b_field);
double radius_from_pt(double pt, double b_field);

/// Highland width of the projected scattering angle for a singly charged
/// particle of momentum p (MeV/c) and mass m through x/X0 of material.
double highland_sigma(double momentum, double mass, double x_over_x0);

/// Wraps an angle into (-pi, pi].
double wrap_angle(double a);

/// Point on a helix with its transverse direction angle, the slope dz/ds
/// (s = transverse arc length) and signed curvature (positive = CCW).
struct HelixState {
  Vec3 position;
  double phi = 0.0;
  double tan_dip = 0.0;
  double kappa = 0.0;

  Circle2D circle() const;
  Vec3 direction() const;
  /// Moves by transverse arc length s along the direction of travel.
  HelixState advanced(double s) const;
};

/// Transverse arc length to the first crossing of the cylinder of the given
/// radius strictly ahead of the current point, or empty if the helix never
/// reaches it.
std::optional<double> arc_length_to_cylinder(const HelixState& state,
                                             double radius);

std::optional<HelixState> propagate_to_cylinder(const HelixState& state,
                                                double radius);

}  // namespace oes
