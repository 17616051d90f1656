#include "oes/geometry.hpp"

#include <algorithm>
#include <cstdio>
#include <numbers>
#include <string>

#include "oes/error.hpp"

namespace oes {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Angle in [0, 2pi).
double wrap_positive(double a) {
  a = std::fmod(a, kTwoPi);
  return a < 0.0 ? a + kTwoPi : a;
}

}  // namespace

void DetectorGeometry::validate() const {
  auto fail = [](const char* what) { throw Error(ErrorCode::kConfig, what); };
  if (!(target_radius > 0.0)) fail("geometry: target_radius must be > 0");
  if (!(target_radius < layer_radii[0]))
    fail("geometry: target_radius must be below the innermost layer radius");
  for (std::size_t i = 1; i < layer_radii.size(); ++i) {
    if (!(layer_radii[i - 1] < layer_radii[i]))
      fail("geometry: layer_radii must be strictly ascending");
  }
  for (double h : layer_half_length) {
    if (!(h > 0.0)) fail("geometry: layer_half_length entries must be > 0");
  }
  if (!(target_half_length > 0.0))
    fail("geometry: target_half_length must be > 0");
  if (!(b_field > 0.0)) fail("geometry: b_field must be > 0");
}

std::uint64_t DetectorGeometry::hash() const {
  std::string text;
  char buf[64];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g;", v);
    text += buf;
  };
  for (double r : layer_radii) put(r);
  for (double h : layer_half_length) put(h);
  put(target_radius);
  put(target_half_length);
  put(b_field);

  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::optional<double> tan_lambda(double z_inner, double r_inner, double z_outer,
                                 double r_outer) {
  const double dr = r_outer - r_inner;
  if (dr == 0.0) return std::nullopt;
  return (z_outer - z_inner) / dr;
}

std::optional<double> cos_phi(const Vec2& a, const Vec2& b) {
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) return std::nullopt;
  if (a.cross(b) == 0.0) return a.dot(b) > 0.0 ? 1.0 : -1.0;
  return std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
}

double circle_radius_3pt(const Vec3& h0, const Vec3& h1, const Vec3& h2) {
  const Vec2 p0 = h0.transverse();
  const Vec2 p1 = h1.transverse();
  const Vec2 p2 = h2.transverse();
  const double cross = (p1 - p0).cross(p2 - p1);
  if (cross == 0.0) return kInfiniteRadius;
  const double d01 = (p0 - p1).norm();
  const double d12 = (p1 - p2).norm();
  const double d20 = (p2 - p0).norm();
  return d01 * d12 * d20 / (2.0 * cross);
}

std::optional<Vec2> circumcenter_3pt(const Vec2& a, const Vec2& b,
                                     const Vec2& c) {
  // Solve relative to a to keep the arithmetic well conditioned.
  const Vec2 ab = b - a;
  const Vec2 ac = c - a;
  const double d = 2.0 * ab.cross(ac);
  if (d == 0.0) return std::nullopt;
  const double ab2 = ab.dot(ab);
  const double ac2 = ac.dot(ac);
  const Vec2 rel{(ac.y * ab2 - ab.y * ac2) / d, (ab.x * ac2 - ac.x * ab2) / d};
  return a + rel;
}

double pt_from_radius(double radius, double b_field) {
  return PhysicsConstants::pt_conversion * b_field * radius;
}

double radius_from_pt(double pt, double b_field) {
  return pt / (PhysicsConstants::pt_conversion * b_field);
}

double highland_sigma(double momentum, double mass, double x_over_x0) {
  const double energy = std::hypot(momentum, mass);
  const double beta = momentum / energy;
  return 13.6 / (beta * momentum) * std::sqrt(x_over_x0) *
         (1.0 + 0.038 * std::log(x_over_x0));
}

double wrap_angle(double a) {
  a = std::remainder(a, kTwoPi);
  return a <= -std::numbers::pi ? a + kTwoPi : a;
}

Circle2D HelixState::circle() const {
  const double r = 1.0 / kappa;
  return {{position.x - r * std::sin(phi), position.y + r * std::cos(phi)}, r};
}

Vec3 HelixState::direction() const {
  const double norm = std::sqrt(1.0 + tan_dip * tan_dip);
  return {std::cos(phi) / norm, std::sin(phi) / norm, tan_dip / norm};
}

HelixState HelixState::advanced(double s) const {
  const Circle2D c = circle();
  const double r = c.radius_signed;
  const double phi_new = phi + kappa * s;
  HelixState out = *this;
  out.position = {c.center.x + r * std::sin(phi_new),
                  c.center.y - r * std::cos(phi_new), position.z + s * tan_dip};
  out.phi = phi_new;
  return out;
}

std::optional<double> arc_length_to_cylinder(const HelixState& state,
                                             double radius) {
  if (state.kappa == 0.0 || !(radius > 0.0)) return std::nullopt;
  const Circle2D c = state.circle();
  const double r = c.radius_signed;
  const double rho = c.center.norm();
  if (rho == 0.0) return std::nullopt;

  // |pos(psi)|^2 = rho^2 + r^2 + 2 r (cx sin psi - cy cos psi), psi = phi + k s
  //              = rho^2 + r^2 + 2 r rho sin(psi + delta)
  const double delta = std::atan2(-c.center.y, c.center.x);
  const double k = (radius * radius - rho * rho - r * r) / (2.0 * r * rho);
  if (k > 1.0 || k < -1.0) return std::nullopt;
  const double base = std::asin(k);

  // Slack so that a start point already on the cylinder is not re-found.
  constexpr double kMinArc = 1e-9;
  const double abs_kappa = std::abs(state.kappa);
  std::optional<double> best;
  for (double root : {base - delta, std::numbers::pi - base - delta}) {
    const double turn = state.kappa > 0.0 ? wrap_positive(root - state.phi)
                                          : wrap_positive(state.phi - root);
    double s = turn / abs_kappa;
    if (s <= kMinArc) s += kTwoPi / abs_kappa;
    if (!best || s < *best) best = s;
  }
  return best;
}

std::optional<HelixState> propagate_to_cylinder(const HelixState& state,
                                                double radius) {
  const auto s = arc_length_to_cylinder(state, radius);
  if (!s) return std::nullopt;
  return state.advanced(*s);
}

}  // namespace oes
