#include "oes/triplet_fit.hpp"

#include <cmath>

#include "oes/error.hpp"

namespace oes {

namespace {

constexpr int kMaxIterations = 3;
constexpr double kConvergence = 1e-9;
constexpr double kDerivativeStep = 1e-6;

// Signed turning angle of the arc of curvature kappa spanning a chord.
std::optional<double> arc_angle(double kappa, double chord) {
  const double x = 0.5 * kappa * chord;
  if (x > 1.0 || x < -1.0) return std::nullopt;
  return 2.0 * std::asin(x);
}

// Transverse arc length for a turning angle; the chord itself as kappa -> 0.
double arc_length(double kappa, double turn, double chord) {
  return kappa == 0.0 ? chord : turn / kappa;
}

struct Derivatives {
  double phi = 0.0;
  double theta = 0.0;
};

std::optional<Derivatives> kink_derivatives(const Vec3& h0, const Vec3& h1,
                                            const Vec3& h2, double kappa,
                                            double step) {
  const auto plus = scattering_angles(h0, h1, h2, kappa + step);
  const auto minus = scattering_angles(h0, h1, h2, kappa - step);
  if (plus && minus) {
    return Derivatives{wrap_angle(plus->phi_ms - minus->phi_ms) / (2.0 * step),
                       (plus->theta_ms - minus->theta_ms) / (2.0 * step)};
  }
  // One side left the reachable branch: fall back to a one-sided difference.
  const auto here = scattering_angles(h0, h1, h2, kappa);
  if (!here) return std::nullopt;
  if (plus) {
    return Derivatives{wrap_angle(plus->phi_ms - here->phi_ms) / step,
                       (plus->theta_ms - here->theta_ms) / step};
  }
  if (minus) {
    return Derivatives{wrap_angle(here->phi_ms - minus->phi_ms) / step,
                       (here->theta_ms - minus->theta_ms) / step};
  }
  return std::nullopt;
}

}  // namespace

void FitConfig::validate() const {
  if (!(chi2_max > 0.0)) throw Error(ErrorCode::kConfig, "fit: chi2_max must be > 0");
  if (max_tracks == 0) throw Error(ErrorCode::kConfig, "fit: max_tracks must be > 0");
  if (!(x_over_x0 > 0.0)) throw Error(ErrorCode::kConfig, "fit: x_over_x0 must be > 0");
}

std::optional<TripletKinks> scattering_angles(const Vec3& h0, const Vec3& h1,
                                              const Vec3& h2, double kappa) {
  const Vec2 c01 = h1.transverse() - h0.transverse();
  const Vec2 c12 = h2.transverse() - h1.transverse();
  const double d01 = c01.norm();
  const double d12 = c12.norm();
  const auto arc01 = arc_angle(kappa, d01);
  const auto arc12 = arc_angle(kappa, d12);
  if (!arc01 || !arc12) return std::nullopt;

  TripletKinks k;
  k.arc01 = *arc01;
  k.arc12 = *arc12;
  // Tangent at h1: chord direction turned by half the arc, forward for the
  // incoming arc and backward for the outgoing one.
  const double incoming = c01.angle() + 0.5 * k.arc01;
  const double outgoing = c12.angle() - 0.5 * k.arc12;
  k.phi_ms = wrap_angle(outgoing - incoming);

  const double s01 = arc_length(kappa, k.arc01, d01);
  const double s12 = arc_length(kappa, k.arc12, d12);
  k.lambda01 = std::atan2(h1.z - h0.z, s01);
  k.lambda12 = std::atan2(h2.z - h1.z, s12);
  k.theta_ms = k.lambda12 - k.lambda01;
  return k;
}

std::optional<double> triplet_chi2(const Vec3& h0, const Vec3& h1,
                                   const Vec3& h2, double kappa,
                                   double sigma_theta2, double sigma_phi2) {
  const auto k = scattering_angles(h0, h1, h2, kappa);
  if (!k) return std::nullopt;
  return k->phi_ms * k->phi_ms / sigma_phi2 +
         k->theta_ms * k->theta_ms / sigma_theta2;
}

std::optional<TripletFitResult> fit_triplet(const Vec3& h0, const Vec3& h1,
                                            const Vec3& h2, double rt_cached,
                                            double b_field,
                                            const FitConfig& config) {
  if (!std::isfinite(rt_cached) || rt_cached == 0.0) return std::nullopt;
  const double kappa0 = 1.0 / rt_cached;
  const auto start = scattering_angles(h0, h1, h2, kappa0);
  if (!start) return std::nullopt;

  // Kink variances are fixed at the circle solution.
  const double dip = 0.5 * (start->lambda01 + start->lambda12);
  const double cos_dip = std::cos(dip);
  if (!(cos_dip > 1e-12)) return std::nullopt;
  const double momentum = pt_from_radius(std::abs(rt_cached), b_field) / cos_dip;
  const double sigma =
      highland_sigma(momentum, PhysicsConstants::electron_mass, config.x_over_x0);

  TripletFitResult r;
  r.sigma_theta2 = sigma * sigma;
  r.sigma_phi2 = r.sigma_theta2 / (cos_dip * cos_dip);

  const double step = kDerivativeStep * std::abs(kappa0);
  double kappa = kappa0;
  double information = 0.0;
  TripletKinks current = *start;
  for (int iter = 0; iter < kMaxIterations; ++iter) {
    const auto d = kink_derivatives(h0, h1, h2, kappa, step);
    if (!d) return std::nullopt;
    information = d->phi * d->phi / r.sigma_phi2 +
                  d->theta * d->theta / r.sigma_theta2;
    if (!(information > 0.0)) return std::nullopt;
    const double gradient = current.phi_ms * d->phi / r.sigma_phi2 +
                            current.theta_ms * d->theta / r.sigma_theta2;
    double delta = -gradient / information;

    // Shrink until the trial point is reachable and keeps the charge sign.
    std::optional<TripletKinks> trial;
    for (int halvings = 0; halvings < 40; ++halvings) {
      const double candidate = kappa + delta;
      if (candidate * kappa0 > 0.0) {
        trial = scattering_angles(h0, h1, h2, candidate);
        if (trial) break;
      }
      delta *= 0.5;
    }
    if (!trial) break;
    kappa += delta;
    current = *trial;
    if (std::abs(delta / kappa) < kConvergence) break;
  }

  r.kappa = kappa;
  r.sigma_kappa = 1.0 / std::sqrt(information);
  r.phi_ms = current.phi_ms;
  r.theta_ms = current.theta_ms;
  r.lambda01 = current.lambda01;
  r.lambda12 = current.lambda12;
  r.arc12 = current.arc12;
  r.chi2 = r.phi_ms * r.phi_ms / r.sigma_phi2 +
           r.theta_ms * r.theta_ms / r.sigma_theta2;
  return r;
}

std::optional<Vec3> extrapolate_to_layer3(const TripletFitResult& result,
                                          const Vec3& h1, const Vec3& h2,
                                          const DetectorGeometry& geometry) {
  HelixState state;
  state.position = h2;
  state.phi = (h2.transverse() - h1.transverse()).angle() + 0.5 * result.arc12;
  state.tan_dip = std::tan(result.lambda12);
  state.kappa = result.kappa;
  const auto at = propagate_to_cylinder(state, geometry.layer_radii[3]);
  if (!at) return std::nullopt;
  return at->position;
}

Vec3 TrackCandidate::momentum_at(const Vec2& point) const {
  const Vec2 radial = point - circle.center;
  const double norm = radial.norm();
  // Counter-clockwise travel for positive curvature.
  const double sense = kappa_bar > 0.0 ? 1.0 : -1.0;
  const Vec2 tangent{-radial.y * sense / norm, radial.x * sense / norm};
  return {tangent.x * pt, tangent.y * pt, pt * std::tan(lambda)};
}

double weighted_curvature(const std::vector<TripletFitResult>& fits) {
  double num = 0.0;
  double den = 0.0;
  for (const auto& f : fits) {
    const double w = 1.0 / (f.sigma_kappa * f.sigma_kappa);
    num += f.kappa * w;
    den += w;
  }
  return num / den;
}

std::optional<TrackCandidate> fit_track(const TripletCandidate& triplet,
                                        const FramePoints& frame,
                                        const DetectorGeometry& geometry,
                                        const FitConfig& config) {
  const auto& layer3 = frame.layers[3];
  if (layer3.empty()) return std::nullopt;
  const Vec3& h0 = frame.layers[0][triplet.index[0]];
  const Vec3& h1 = frame.layers[1][triplet.index[1]];
  const Vec3& h2 = frame.layers[2][triplet.index[2]];

  const auto first = fit_triplet(h0, h1, h2, triplet.rt, geometry.b_field, config);
  if (!first) return std::nullopt;
  const auto predicted = extrapolate_to_layer3(*first, h1, h2, geometry);
  if (!predicted) return std::nullopt;

  std::uint32_t i3 = 0;
  double best = std::numeric_limits<double>::infinity();
  for (std::uint32_t i = 0; i < layer3.size(); ++i) {
    const Vec3 d = layer3[i] - *predicted;
    const double dist2 = d.dot(d);
    if (dist2 < best) {
      best = dist2;
      i3 = i;
    }
  }
  const Vec3& h3 = layer3[i3];

  const auto second = fit_triplet(h1, h2, h3, circle_radius_3pt(h1, h2, h3),
                                  geometry.b_field, config);
  if (!second) return std::nullopt;

  const double kappa_bar = weighted_curvature({*first, *second});
  const auto chi2_first = triplet_chi2(h0, h1, h2, kappa_bar,
                                       first->sigma_theta2, first->sigma_phi2);
  const auto chi2_second = triplet_chi2(h1, h2, h3, kappa_bar,
                                        second->sigma_theta2, second->sigma_phi2);
  if (!chi2_first || !chi2_second) return std::nullopt;
  const double chi2 = *chi2_first + *chi2_second;
  if (!(chi2 < config.chi2_max)) return std::nullopt;

  const auto kinks = scattering_angles(h0, h1, h2, kappa_bar);
  if (!kinks) return std::nullopt;

  TrackCandidate track;
  track.hit_index = {triplet.index[0], triplet.index[1], triplet.index[2], i3};
  track.hits = {h0, h1, h2, h3};
  track.kappa_bar = kappa_bar;
  track.chi2_global = chi2;
  track.charge = kappa_bar > 0.0 ? 1 : -1;
  track.lambda = kinks->lambda01;

  const double radius = 1.0 / kappa_bar;
  const double tangent =
      (h1.transverse() - h0.transverse()).angle() - 0.5 * kinks->arc01;
  track.circle.center = {h0.x - radius * std::sin(tangent),
                         h0.y + radius * std::cos(tangent)};
  track.circle.radius_signed = radius;

  track.pt = pt_from_radius(std::abs(radius), geometry.b_field);
  track.momentum = track.pt / std::cos(track.lambda);
  track.energy = std::hypot(track.momentum, PhysicsConstants::electron_mass);
  track.sigma_ms = highland_sigma(track.momentum, PhysicsConstants::electron_mass,
                                  config.x_over_x0);
  return track;
}

TrackingResult reconstruct_tracks(const std::vector<TripletCandidate>& triplets,
                                  const FramePoints& frame,
                                  const DetectorGeometry& geometry,
                                  const FitConfig& config) {
  TrackingResult result;
  for (const auto& triplet : triplets) {
    ++result.fitted;
    auto track = fit_track(triplet, frame, geometry, config);
    if (!track) continue;
    if (result.tracks.size() >= config.max_tracks) {
      result.overflow = true;
      break;
    }
    result.tracks.push_back(std::move(*track));
  }
  return result;
}

}  // namespace oes
