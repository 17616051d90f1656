#pragma once

// Reference kink construction for the triplet fit: explicit circle centres
// and tangent vectors instead of the chord-angle formulas of the library.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "oes/geometry.hpp"
#include "oes/triplet_fit.hpp"

namespace oes::test {

struct OracleKinks {
  double phi;
  double theta;
};

inline std::optional<OracleKinks> oracle_kinks(const Vec3& a, const Vec3& b, const Vec3& c,
                                               double kappa) {
  const double R = 1.0 / std::abs(kappa);
  const double sense = kappa > 0 ? 1.0 : -1.0;
  struct Arc {
    Vec2 centre;
    double length;
  };
  auto arc = [&](const Vec3& p, const Vec3& q) -> std::optional<Arc> {
    const Vec2 d = q.transverse() - p.transverse();
    const double len = d.norm();
    if (len > 2.0 * R) return std::nullopt;
    const Vec2 mid = (p.transverse() + q.transverse()) * 0.5;
    const Vec2 left{-d.y / len, d.x / len};
    const double h = std::sqrt(std::max(0.0, R * R - 0.25 * len * len));
    return Arc{mid + left * (sense * h), 2.0 * R * std::asin(0.5 * len / R)};
  };
  const auto first = arc(a, b);
  const auto second = arc(b, c);
  if (!first || !second) return std::nullopt;
  auto tangent = [&](const Vec2& centre) {
    const Vec2 r = b.transverse() - centre;
    return Vec2{-r.y, r.x} * sense;
  };
  const Vec2 t1 = tangent(first->centre), t2 = tangent(second->centre);
  OracleKinks k;
  k.phi = std::atan2(t1.cross(t2), t1.dot(t2));
  k.theta = std::atan2(c.z - b.z, second->length) - std::atan2(b.z - a.z, first->length);
  return k;
}

inline std::optional<double> oracle_chi2(const Vec3& a, const Vec3& b, const Vec3& c,
                                         double kappa, const TripletFitResult& r) {
  const auto k = oracle_kinks(a, b, c, kappa);
  if (!k) return std::nullopt;
  return k->phi * k->phi / r.sigma_phi2 + k->theta * k->theta / r.sigma_theta2;
}


// Grid minimum of the oracle chi2 over [0.5, 1.5] x kappa0. `edge` is set
// when the minimum sits on the boundary of the range.
inline std::optional<double> grid_minimum(const Vec3& a, const Vec3& b, const Vec3& c,
                                          double kappa0, const TripletFitResult& r,
                                          int n, bool* edge) {
  double best_k = 0.0, best = std::numeric_limits<double>::infinity();
  int best_i = -1;
  for (int i = 0; i <= n; ++i) {
    const double k = kappa0 * (0.5 + double(i) / n);
    const auto chi2 = oracle_chi2(a, b, c, k, r);
    if (chi2 && *chi2 < best) {
      best = *chi2;
      best_k = k;
      best_i = i;
    }
  }
  if (best_i < 0) return std::nullopt;
  *edge = best_i == 0 || best_i == n;
  return best_k;
}

}  // namespace oes::test
