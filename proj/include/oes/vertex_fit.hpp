#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "oes/geometry.hpp"
#include "oes/triplet_fit.hpp"

namespace oes {

struct VertexConfig {
  double energy_window = 10.0;   // MeV around m_mu c^2
  double chi2_vertex_max = 260.0;  // tuned, see README
  double target_margin = 3.0;    // mm beyond the target disk radius
  double p_total_max = 15.0;     // MeV/c
  std::size_t max_track_combs = 32;
  /// Spatial resolution entering the point uncertainties, mm.
  double pixel_sigma = 0.08 / 3.4641016151377544;

  void validate() const;
};

/// Indices into the frame's track list: two positrons (a < b) and an
/// electron.
struct TrackTriple {
  std::size_t positron_a = 0;
  std::size_t positron_b = 0;
  std::size_t electron = 0;

  friend auto operator<=>(const TrackTriple&, const TrackTriple&) = default;
};

struct VertexCandidate {
  Vec3 position;
  double chi2 = 0.0;
  TrackTriple triple;
  std::array<Vec3, 3> pca;
  Vec3 total_momentum;
  double total_energy = 0.0;
};

bool energy_precheck(const TrackCandidate& positron_a,
                     const TrackCandidate& positron_b,
                     const TrackCandidate& electron, const VertexConfig& config);

struct CircleIntersection {
  enum class Kind { kNone, kTwo, kDegenerate };
  Kind kind = Kind::kNone;
  std::array<Vec2, 2> points;  // equal for a tangent pair
};

CircleIntersection circle_intersections(const Circle2D& a, const Circle2D& b);

/// Inverse-variance weighted mean of the points.
Vec2 vertex_2d(std::span<const Vec2> points, std::span<const double> sigma2);

/// Empty when the point sits on the circle centre.
std::optional<Vec2> point_of_closest_approach(const Circle2D& circle,
                                              const Vec2& point);

/// Signed turning angle in the direction of travel from the track's layer-0
/// hit to a point on its circle, in (-pi, pi].
double travel_angle(const TrackCandidate& track, const Vec2& point);

/// z on the helix at a point of its transverse circle, measured from the
/// layer-0 hit along the direction of travel.
double project_to_z(const TrackCandidate& track, const Vec2& point);

/// σ² of a track position at a transverse point: MS growing with the arc
/// length from the layer-0 hit plus the pixel resolution.
double track_point_sigma2(const TrackCandidate& track, const Vec2& point,
                          double pixel_sigma);

/// Σ |pca_i - μ|² / σ_i².
double vertex_chi2(std::span<const Vec3> pca, const Vec3& mu,
                   std::span<const double> sigma2);

/// Vertex estimate for one triple and one choice of pair intersections.
std::optional<VertexCandidate> estimate_vertex(
    const std::array<const TrackCandidate*, 3>& tracks,
    const std::array<Vec2, 3>& intersections, const VertexConfig& config);

struct VertexDecision {
  bool keep = false;
  bool comb_overflow = false;
  std::uint64_t n_triples = 0;  // triples passing the energy pre-check
  std::optional<VertexCandidate> vertex;  // best passing, else best seen
};

/// Two phases: collect energy-compatible (e+, e+, e-) triples of hit-disjoint
/// tracks, then keep the frame if any intersection choice of any triple gives
/// a vertex passing the χ², target and momentum tests.
VertexDecision evaluate_frame(const std::vector<TrackCandidate>& tracks,
                              const DetectorGeometry& geometry,
                              const VertexConfig& config);

}  // namespace oes
