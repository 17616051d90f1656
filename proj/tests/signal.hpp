#pragma once

// Noiseless signal decays reconstructed in double precision.

#include <optional>
#include <vector>

#include "oes/selection.hpp"
#include "oes/toygen.hpp"
#include "oes/triplet_fit.hpp"

namespace oes::test {

struct SignalCase {
  Vec3 origin;
  std::array<TruthParticle, 3> particles;
  FramePoints frame;
  std::vector<TrackCandidate> tracks;
};

inline GenConfig noiseless_gen() {
  GenConfig c;
  c.sigma_ms = 0.0;
  c.pixel_sigma = 0.0;
  c.noise_hits_per_frame = 0.0;
  return c;
}

// Next decay whose three products all reach layer 3, with tracks fitted
// from the default cuts. `reconstructed` is false when the chain lost one.
inline SignalCase next_signal(Rng& rng, const DetectorGeometry& g, bool* reconstructed) {
  const GenConfig c = noiseless_gen();
  for (;;) {
    SignalCase s;
    s.origin = sample_target_point(rng, g);
    s.particles = generate_signal_event(rng, s.origin);
    bool all = true;
    for (auto& p : s.particles) {
      const auto h = propagate_to_layers(p, g, c, rng);
      for (std::size_t l = 0; l < 4; ++l) {
        if (!h[l]) {
          all = false;
          continue;
        }
        p.hit_index[l] = static_cast<std::int32_t>(s.frame.layers[l].size());
        s.frame.layers[l].push_back(*h[l]);
      }
    }
    if (!all) continue;
    const auto sel = select_triplets(s.frame, g, CutConfig{});
    s.tracks = reconstruct_tracks(sel.triplets, s.frame, g, FitConfig{}).tracks;
    *reconstructed = s.tracks.size() == 3;
    return s;
  }
}

}  // namespace oes::test
