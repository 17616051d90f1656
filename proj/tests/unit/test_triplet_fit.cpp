#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "oes/toygen.hpp"
#include "oes/triplet_fit.hpp"
#include "fit_oracle.hpp"
#include "support.hpp"

using namespace oes;

namespace {

struct ToyTrack {
  std::array<Vec3, 4> hits;
  double kappa;
};

// Tracks with all four hits from the toy generator, optionally noiseless.
std::vector<ToyTrack> toy_tracks(std::size_t n, bool noiseless, std::uint64_t seed) {
  GenConfig c;
  c.seed = seed;
  if (noiseless) {
    c.sigma_ms = 0.0;
    c.pixel_sigma = 0.0;
  }
  const DetectorGeometry g;
  Rng rng(seed);
  std::vector<ToyTrack> out;
  while (out.size() < n) {
    auto p = generate_michel_positron(rng, sample_target_point(rng, g));
    if (out.size() % 2) p.charge = -1;
    const auto h = propagate_to_layers(p, g, c, rng);
    if (!h[0] || !h[1] || !h[2] || !h[3]) continue;
    const double pt = std::hypot(p.momentum.x, p.momentum.y);
    out.push_back({{*h[0], *h[1], *h[2], *h[3]}, p.charge / radius_from_pt(pt, g.b_field)});
  }
  return out;
}

FramePoints frame_of(const ToyTrack& t) {
  FramePoints f;
  for (std::size_t l = 0; l < 4; ++l) f.layers[l].push_back(t.hits[l]);
  return f;
}

}  // namespace

TEST_CASE("scattering angles on an exact circle") {
  const double R = 90.0;
  auto at = [&](double deg, double z) {
    const double a = deg * std::numbers::pi / 180.0;
    return Vec3{R * std::cos(a), R * std::sin(a), z};
  };
  // Constant dz/ds: both kinks vanish at the true curvature.
  const Vec3 h0 = at(0, 0), h1 = at(20, 20 * 0.3), h2 = at(50, 50 * 0.3);
  const auto k = scattering_angles(h0, h1, h2, 1.0 / R);
  REQUIRE(k);
  CHECK(std::abs(k->phi_ms) < 1e-12);
  CHECK(std::abs(k->theta_ms) < 1e-12);
  // Unreachable curvature.
  CHECK_FALSE(scattering_angles(h0, h1, h2, 1.0).has_value());
}

TEST_CASE("scattering angles match the geometric oracle") {
  std::mt19937_64 rng(31);
  std::normal_distribution<double> kick(0.0, 0.3);
  const auto tracks = toy_tracks(300, true, 4);
  for (const auto& t : tracks) {
    Vec3 h1 = t.hits[1];
    h1.x += kick(rng);
    h1.y += kick(rng);
    h1.z += kick(rng);
    for (double f : {0.8, 1.0, 1.25}) {
      const double kappa = t.kappa * f;
      const auto lib = scattering_angles(t.hits[0], h1, t.hits[2], kappa);
      const auto ref = test::oracle_kinks(t.hits[0], h1, t.hits[2], kappa);
      REQUIRE(lib.has_value() == ref.has_value());
      if (!lib) continue;
      CHECK(std::abs(lib->phi_ms - ref->phi) < 1e-6);
      CHECK(std::abs(lib->theta_ms - ref->theta) < 1e-6);
    }
  }
}

TEST_CASE("noiseless triplets sit at the circle solution") {
  const FitConfig cfg;
  for (const auto& t : toy_tracks(500, true, 5)) {
    const double rt = circle_radius_3pt(t.hits[0], t.hits[1], t.hits[2]);
    const auto r = fit_triplet(t.hits[0], t.hits[1], t.hits[2], rt, 1.0, cfg);
    REQUIRE(r);
    CHECK(test::rel_diff(r->kappa, 1.0 / rt) < 1e-9);
    CHECK(r->chi2 < 1e-12);
    CHECK(r->sigma_kappa > 0.0);
    CHECK((r->kappa > 0) == (rt > 0));
  }
}

TEST_CASE("linearised fit agrees with a grid search") {
  const FitConfig cfg;
  int compared = 0, at_edge = 0;
  for (const auto& t : toy_tracks(1000, false, 6)) {
    const Vec3 &a = t.hits[0], &b = t.hits[1], &c = t.hits[2];
    const double rt = circle_radius_3pt(a, b, c);
    const auto r = fit_triplet(a, b, c, rt, 1.0, cfg);
    REQUIRE(r);
    CHECK((r->kappa > 0) == (rt > 0));
    bool edge = false;
    const auto best_k = test::grid_minimum(a, b, c, 1.0 / rt, *r, 100000, &edge);
    REQUIRE(best_k);
    if (edge) {
      ++at_edge;
      continue;
    }
    ++compared;
    CHECK(test::rel_diff(r->kappa, *best_k) < 1e-3);
  }
  CHECK(compared >= 990);
  MESSAGE("grid minimum on the range edge: " << at_edge);
}

TEST_CASE("extrapolation of a noiseless track") {
  const DetectorGeometry g;
  const FitConfig cfg;
  for (const auto& t : toy_tracks(300, true, 7)) {
    const double rt = circle_radius_3pt(t.hits[0], t.hits[1], t.hits[2]);
    const auto r = fit_triplet(t.hits[0], t.hits[1], t.hits[2], rt, 1.0, cfg);
    REQUIRE(r);
    const auto p = extrapolate_to_layer3(*r, t.hits[1], t.hits[2], g);
    REQUIRE(p);
    CHECK((*p - t.hits[3]).norm() < 1e-6);
  }
  // 2/kappa = 70 mm cannot reach 86.3 mm.
  TripletFitResult tight;
  tight.kappa = 1.0 / 35.0;
  const Vec3 h1{29.8, 0, 0};
  CHECK_FALSE(extrapolate_to_layer3(tight, h1, {30.0, 0.5, 0.0}, g).has_value());
}

TEST_CASE("extrapolation residuals are centred with scattering") {
  const DetectorGeometry g;
  const FitConfig cfg;
  double sx = 0.0, sz = 0.0, sxx = 0.0, szz = 0.0;
  int n = 0;
  for (const auto& t : toy_tracks(4000, false, 8)) {
    const double rt = circle_radius_3pt(t.hits[0], t.hits[1], t.hits[2]);
    const auto r = fit_triplet(t.hits[0], t.hits[1], t.hits[2], rt, 1.0, cfg);
    if (!r) continue;
    const auto p = extrapolate_to_layer3(*r, t.hits[1], t.hits[2], g);
    if (!p) continue;
    // Azimuthal and longitudinal residuals on the layer-3 cylinder.
    const double dphi = wrap_angle(t.hits[3].transverse().angle() - p->transverse().angle()) *
                        g.layer_radii[3] * (t.kappa > 0 ? 1 : -1);
    const double dz = t.hits[3].z - p->z;
    sx += dphi;
    sz += dz;
    sxx += dphi * dphi;
    szz += dz * dz;
    ++n;
  }
  REQUIRE(n > 3000);
  const double mx = sx / n, mz = sz / n;
  const double ex = std::sqrt(sxx / n - mx * mx) / std::sqrt(n);
  const double ez = std::sqrt(szz / n - mz * mz) / std::sqrt(n);
  CHECK(std::abs(mx) < 4.0 * ex);
  CHECK(std::abs(mz) < 4.0 * ez);
}

TEST_CASE("noiseless four-hit tracks") {
  const DetectorGeometry g;
  const FitConfig cfg;
  for (const auto& t : toy_tracks(300, true, 9)) {
    const FramePoints f = frame_of(t);
    const double rt = circle_radius_3pt(t.hits[0], t.hits[1], t.hits[2]);
    const auto track = fit_track({{0, 0, 0}, rt}, f, g, cfg);
    REQUIRE(track);
    CHECK(track->chi2_global < 1e-9);
    CHECK(test::rel_diff(track->kappa_bar, t.kappa) < 1e-6);
    CHECK(track->charge == (t.kappa > 0 ? 1 : -1));
    CHECK(track->energy >= track->momentum);
    // The circle passes through all four hits.
    for (const auto& h : t.hits)
      CHECK(std::abs((h.transverse() - track->circle.center).norm() - track->circle.radius()) <
            1e-6);
  }
}

TEST_CASE("weighted curvature") {
  TripletFitResult a;
  a.kappa = 0.01;
  a.sigma_kappa = 0.002;
  CHECK(weighted_curvature({a, a}) == doctest::Approx(0.01).epsilon(1e-15));

  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> k(-0.03, 0.03), s(1e-4, 1e-2);
  for (int i = 0; i < 1000; ++i) {
    TripletFitResult x, y;
    x.kappa = k(rng);
    y.kappa = k(rng);
    x.sigma_kappa = s(rng);
    y.sigma_kappa = s(rng);
    const double m = weighted_curvature({x, y});
    CHECK(m >= std::min(x.kappa, y.kappa) - 1e-15);
    CHECK(m <= std::max(x.kappa, y.kappa) + 1e-15);
    const double wx = 1 / (x.sigma_kappa * x.sigma_kappa), wy = 1 / (y.sigma_kappa * y.sigma_kappa);
    CHECK(m == doctest::Approx((wx * x.kappa + wy * y.kappa) / (wx + wy)));
  }
}

TEST_CASE("global chi2 is smallest at the weighted curvature") {
  const FitConfig cfg;
  int checked = 0;
  for (const auto& t : toy_tracks(1000, false, 10)) {
    const Vec3 &a = t.hits[0], &b = t.hits[1], &c = t.hits[2], &d = t.hits[3];
    const auto f1 = fit_triplet(a, b, c, circle_radius_3pt(a, b, c), 1.0, cfg);
    const auto f2 = fit_triplet(b, c, d, circle_radius_3pt(b, c, d), 1.0, cfg);
    if (!f1 || !f2) continue;
    auto global = [&](double k) -> std::optional<double> {
      const auto x = triplet_chi2(a, b, c, k, f1->sigma_theta2, f1->sigma_phi2);
      const auto y = triplet_chi2(b, c, d, k, f2->sigma_theta2, f2->sigma_phi2);
      if (!x || !y) return std::nullopt;
      return *x + *y;
    };
    const auto at_bar = global(weighted_curvature({*f1, *f2}));
    REQUIRE(at_bar);
    for (double k : {f1->kappa, f2->kappa}) {
      const auto other = global(k);
      if (!other) continue;
      // Linearisation leaves a small second-order slack.
      CHECK(*at_bar <= *other * (1.0 + 1e-3) + 1e-9);
    }
    ++checked;
  }
  CHECK(checked > 900);
}

TEST_CASE("mirroring y flips the charge") {
  const DetectorGeometry g;
  const FitConfig cfg;
  int checked = 0;
  for (const auto& t : toy_tracks(500, false, 11)) {
    ToyTrack m = t;
    for (auto& h : m.hits) h.y = -h.y;
    const FramePoints f = frame_of(t), fm = frame_of(m);
    const auto a = fit_track({{0, 0, 0}, circle_radius_3pt(t.hits[0], t.hits[1], t.hits[2])}, f,
                             g, cfg);
    const auto b = fit_track({{0, 0, 0}, circle_radius_3pt(m.hits[0], m.hits[1], m.hits[2])}, fm,
                             g, cfg);
    REQUIRE(a.has_value() == b.has_value());
    if (!a) continue;
    CHECK(a->charge == -b->charge);
    CHECK(a->kappa_bar == doctest::Approx(-b->kappa_bar).epsilon(1e-9));
    CHECK(a->chi2_global == doctest::Approx(b->chi2_global).epsilon(1e-6));
    ++checked;
  }
  CHECK(checked > 400);
}

TEST_CASE("track overflow") {
  const DetectorGeometry g;
  FitConfig cfg;
  cfg.max_tracks = 3;
  const auto tracks = toy_tracks(5, true, 12);
  FramePoints f;
  std::vector<TripletCandidate> cands;
  for (std::uint32_t i = 0; i < tracks.size(); ++i) {
    for (std::size_t l = 0; l < 4; ++l) f.layers[l].push_back(tracks[i].hits[l]);
    cands.push_back({{i, i, i},
                     circle_radius_3pt(tracks[i].hits[0], tracks[i].hits[1], tracks[i].hits[2])});
  }
  const auto r = reconstruct_tracks(cands, f, g, cfg);
  CHECK(r.overflow);
  CHECK(r.tracks.size() == 3);
  cfg.max_tracks = 64;
  const auto all = reconstruct_tracks(cands, f, g, cfg);
  CHECK_FALSE(all.overflow);
  CHECK(all.tracks.size() == 5);
  for (std::uint32_t i = 0; i < 5; ++i) CHECK(all.tracks[i].hit_index[3] == i);
}

TEST_CASE("empty layer 3 rejects") {
  const DetectorGeometry g;
  auto t = toy_tracks(1, true, 13)[0];
  FramePoints f = frame_of(t);
  f.layers[3].clear();
  CHECK_FALSE(fit_track({{0, 0, 0}, circle_radius_3pt(t.hits[0], t.hits[1], t.hits[2])}, f, g,
                        FitConfig{})
                  .has_value());
}
