#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "oes/geometry.hpp"
#include "oes/selection.hpp"

namespace oes {

struct FitConfig {
  double chi2_max = 32.0;
  std::size_t max_tracks = 64;
  /// Material per layer for the Highland width used as the kink variance.
  double x_over_x0 = 0.00115;

  void validate() const;
};

/// Kink angles at the middle hit for a trial curvature, plus the pieces of
/// the construction that other steps reuse.
struct TripletKinks {
  double phi_ms = 0.0;    // transverse tangent kink at h1
  double theta_ms = 0.0;  // lambda12 - lambda01 in the (s, z) plane
  double lambda01 = 0.0;  // dip angle of the h0 -> h1 segment
  double lambda12 = 0.0;
  double arc01 = 0.0;  // signed turning angles of the two arcs
  double arc12 = 0.0;
};

/// Empty when |kappa| * d / 2 > 1 for either hit pair (no arc of that
/// curvature connects the hits).
std::optional<TripletKinks> scattering_angles(const Vec3& h0, const Vec3& h1,
                                              const Vec3& h2, double kappa);

struct TripletFitResult {
  double kappa = 0.0;  // 1/mm, signed
  double sigma_kappa = 0.0;
  double chi2 = 0.0;
  double phi_ms = 0.0;
  double theta_ms = 0.0;
  double lambda01 = 0.0;
  double lambda12 = 0.0;
  double arc12 = 0.0;
  double sigma_theta2 = 0.0;  // variance of Θ_MS
  double sigma_phi2 = 0.0;    // variance of Φ_MS
};

/// χ² of one triplet at a trial curvature with fixed kink variances; empty
/// outside the reachable branch.
std::optional<double> triplet_chi2(const Vec3& h0, const Vec3& h1,
                                   const Vec3& h2, double kappa,
                                   double sigma_theta2, double sigma_phi2);

/// Linearised fit started from the circle solution (Φ_MS = 0). Empty for a
/// collinear triplet or a purely longitudinal track.
std::optional<TripletFitResult> fit_triplet(const Vec3& h0, const Vec3& h1,
                                            const Vec3& h2, double rt_cached,
                                            double b_field,
                                            const FitConfig& config);

/// Continues the fitted helix from h2 to the outermost layer. Empty when the
/// helix turns back before reaching it.
std::optional<Vec3> extrapolate_to_layer3(const TripletFitResult& result,
                                          const Vec3& h1, const Vec3& h2,
                                          const DetectorGeometry& geometry);

struct TrackCandidate {
  std::array<std::uint32_t, 4> hit_index{};  // per-layer indices in the frame
  std::array<Vec3, 4> hits;
  double kappa_bar = 0.0;
  double chi2_global = 0.0;
  int charge = 0;
  double lambda = 0.0;  // dip angle of the first segment
  Circle2D circle;
  double pt = 0.0;
  double momentum = 0.0;
  double energy = 0.0;
  double sigma_ms = 0.0;

  /// Momentum at a point of the transverse circle: tangent in the direction
  /// of travel, magnitude p_t / cos(lambda).
  Vec3 momentum_at(const Vec2& point) const;
};

/// Global curvature from the per-triplet fits, weighted by 1 / σ_κ².
double weighted_curvature(const std::vector<TripletFitResult>& fits);

/// Full four-hit reconstruction of one cut survivor. Empty when rejected.
std::optional<TrackCandidate> fit_track(const TripletCandidate& triplet,
                                        const FramePoints& frame,
                                        const DetectorGeometry& geometry,
                                        const FitConfig& config);

struct TrackingResult {
  std::vector<TrackCandidate> tracks;
  bool overflow = false;
  std::uint64_t fitted = 0;
};

/// Fits every survivor in order; more than max_tracks accepted tracks sets
/// overflow and stops.
TrackingResult reconstruct_tracks(const std::vector<TripletCandidate>& triplets,
                                  const FramePoints& frame,
                                  const DetectorGeometry& geometry,
                                  const FitConfig& config);

}  // namespace oes
