#include "oes/vertex_fit.hpp"

#include <cmath>
#include <limits>

#include "oes/error.hpp"

namespace oes {

void VertexConfig::validate() const {
  auto fail = [](const char* what) { throw Error(ErrorCode::kConfig, what); };
  if (!(energy_window > 0.0)) fail("vertex: energy_window must be > 0");
  if (!(chi2_vertex_max > 0.0)) fail("vertex: chi2_vertex_max must be > 0");
  if (!(target_margin > 0.0)) fail("vertex: target_margin must be > 0");
  if (!(p_total_max > 0.0)) fail("vertex: p_total_max must be > 0");
  if (max_track_combs == 0) fail("vertex: max_track_combs must be > 0");
  if (!(pixel_sigma > 0.0)) fail("vertex: pixel_sigma must be > 0");
}

bool energy_precheck(const TrackCandidate& positron_a,
                     const TrackCandidate& positron_b,
                     const TrackCandidate& electron, const VertexConfig& config) {
  const double total = positron_a.energy + positron_b.energy + electron.energy;
  return std::abs(total - PhysicsConstants::muon_rest_energy) <=
         config.energy_window;
}

CircleIntersection circle_intersections(const Circle2D& a, const Circle2D& b) {
  CircleIntersection out;
  const double r1 = a.radius();
  const double r2 = b.radius();
  const Vec2 delta = b.center - a.center;
  const double d = delta.norm();
  if (d == 0.0) {
    if (r1 == r2) out.kind = CircleIntersection::Kind::kDegenerate;
    return out;
  }
  const double along = (d * d + r1 * r1 - r2 * r2) / (2.0 * d);
  double h2 = r1 * r1 - along * along;
  if (h2 < 0.0) {
    if (h2 < -1e-9 * r1 * r1) return out;
    h2 = 0.0;
  }
  const double h = std::sqrt(h2);
  const Vec2 u = delta / d;
  const Vec2 perp{-u.y, u.x};
  const Vec2 mid = a.center + u * along;
  out.kind = CircleIntersection::Kind::kTwo;
  out.points = {mid + perp * h, mid - perp * h};
  return out;
}

Vec2 vertex_2d(std::span<const Vec2> points, std::span<const double> sigma2) {
  Vec2 num;
  double den = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double w = 1.0 / sigma2[i];
    num = num + points[i] * w;
    den += w;
  }
  return num / den;
}

std::optional<Vec2> point_of_closest_approach(const Circle2D& circle,
                                              const Vec2& point) {
  const Vec2 radial = point - circle.center;
  const double norm = radial.norm();
  if (norm == 0.0) return std::nullopt;
  return circle.center + radial * (circle.radius() / norm);
}

double travel_angle(const TrackCandidate& track, const Vec2& point) {
  const Vec2 from = track.hits[0].transverse() - track.circle.center;
  const Vec2 to = point - track.circle.center;
  const double ccw = std::atan2(from.cross(to), from.dot(to));
  return track.kappa_bar > 0.0 ? ccw : -ccw;
}

double project_to_z(const TrackCandidate& track, const Vec2& point) {
  const double arc = travel_angle(track, point) * track.circle.radius();
  return track.hits[0].z + arc * std::tan(track.lambda);
}

double track_point_sigma2(const TrackCandidate& track, const Vec2& point,
                          double pixel_sigma) {
  const double s = std::abs(travel_angle(track, point)) * track.circle.radius();
  return track.sigma_ms * track.sigma_ms * s * s + pixel_sigma * pixel_sigma;
}

double vertex_chi2(std::span<const Vec3> pca, const Vec3& mu,
                   std::span<const double> sigma2) {
  double chi2 = 0.0;
  for (std::size_t i = 0; i < pca.size(); ++i) {
    const Vec3 d = pca[i] - mu;
    chi2 += d.dot(d) / sigma2[i];
  }
  return chi2;
}

std::optional<VertexCandidate> estimate_vertex(
    const std::array<const TrackCandidate*, 3>& tracks,
    const std::array<Vec2, 3>& intersections, const VertexConfig& config) {
  // intersections[k] belongs to the track pair that excludes track 2 - k.
  static constexpr std::array<std::array<int, 2>, 3> kPairs{{{0, 1}, {0, 2}, {1, 2}}};
  std::array<double, 3> point_sigma2{};
  for (std::size_t k = 0; k < 3; ++k) {
    for (int t : kPairs[k]) {
      point_sigma2[k] +=
          track_point_sigma2(*tracks[t], intersections[k], config.pixel_sigma);
    }
  }
  const Vec2 mu_t = vertex_2d(intersections, point_sigma2);

  VertexCandidate v;
  std::array<double, 3> sigma2{};
  double z_num = 0.0;
  double z_den = 0.0;
  for (std::size_t i = 0; i < 3; ++i) {
    const TrackCandidate& track = *tracks[i];
    const auto pca = point_of_closest_approach(track.circle, mu_t);
    if (!pca) return std::nullopt;
    const double z = project_to_z(track, *pca);
    v.pca[i] = {pca->x, pca->y, z};
    sigma2[i] = track_point_sigma2(track, *pca, config.pixel_sigma);
    z_num += z / sigma2[i];
    z_den += 1.0 / sigma2[i];
    v.total_momentum = v.total_momentum + track.momentum_at(*pca);
    v.total_energy += track.energy;
  }
  v.position = {mu_t.x, mu_t.y, z_num / z_den};
  v.chi2 = vertex_chi2(v.pca, v.position, sigma2);
  return v;
}

namespace {

bool shares_hit(const TrackCandidate& a, const TrackCandidate& b) {
  for (std::size_t l = 0; l < a.hit_index.size(); ++l) {
    if (a.hit_index[l] == b.hit_index[l]) return true;
  }
  return false;
}

}  // namespace

VertexDecision evaluate_frame(const std::vector<TrackCandidate>& tracks,
                              const DetectorGeometry& geometry,
                              const VertexConfig& config) {
  VertexDecision decision;

  std::vector<TrackTriple> triples;
  for (std::size_t a = 0; a < tracks.size(); ++a) {
    if (tracks[a].charge != 1) continue;
    for (std::size_t b = a + 1; b < tracks.size(); ++b) {
      if (tracks[b].charge != 1 || shares_hit(tracks[a], tracks[b])) continue;
      for (std::size_t e = 0; e < tracks.size(); ++e) {
        if (tracks[e].charge != -1 || shares_hit(tracks[a], tracks[e]) ||
            shares_hit(tracks[b], tracks[e])) {
          continue;
        }
        if (energy_precheck(tracks[a], tracks[b], tracks[e], config))
          triples.push_back({a, b, e});
      }
    }
  }
  decision.n_triples = triples.size();
  if (triples.size() > config.max_track_combs) {
    decision.comb_overflow = true;
    decision.keep = true;
    return decision;
  }

  const double max_radius = geometry.target_radius + config.target_margin;
  auto better = [](const std::optional<VertexCandidate>& best, double chi2) {
    return !best || chi2 < best->chi2;
  };
  std::optional<VertexCandidate> best_seen;
  for (const TrackTriple& triple : triples) {
    const std::array<const TrackCandidate*, 3> trio{
        &tracks[triple.positron_a], &tracks[triple.positron_b],
        &tracks[triple.electron]};

    std::array<std::vector<Vec2>, 3> near_target;
    bool complete = true;
    static constexpr std::array<std::array<int, 2>, 3> kPairs{{{0, 1}, {0, 2}, {1, 2}}};
    for (std::size_t k = 0; k < 3 && complete; ++k) {
      const auto hit = circle_intersections(trio[kPairs[k][0]]->circle,
                                            trio[kPairs[k][1]]->circle);
      if (hit.kind != CircleIntersection::Kind::kTwo) {
        complete = false;
        break;
      }
      for (const Vec2& p : hit.points) {
        if (p.norm() <= max_radius) near_target[k].push_back(p);
      }
      complete = !near_target[k].empty();
    }
    if (!complete) continue;

    for (const Vec2& p0 : near_target[0]) {
      for (const Vec2& p1 : near_target[1]) {
        for (const Vec2& p2 : near_target[2]) {
          auto v = estimate_vertex(trio, {p0, p1, p2}, config);
          if (!v) continue;
          v->triple = triple;
          const bool passes =
              v->chi2 <= config.chi2_vertex_max &&
              std::hypot(v->position.x, v->position.y) <= max_radius &&
              v->total_momentum.norm() <= config.p_total_max;
          if (passes) {
            if (!decision.keep || better(decision.vertex, v->chi2)) {
              decision.vertex = v;
            }
            decision.keep = true;
          } else if (better(best_seen, v->chi2)) {
            best_seen = v;
          }
        }
      }
    }
  }
  if (!decision.keep) decision.vertex = best_seen;
  return decision;
}

}  // namespace oes
