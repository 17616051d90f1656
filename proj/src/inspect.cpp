#include "oes/inspect.hpp"

#include <cstdio>

#include "oes/error.hpp"

namespace oes {

FramePoints find_frame(const std::string& chunk_path, std::uint64_t frame_id) {
  ChunkFileReader reader(chunk_path);
  const std::size_t capacity = reader.header().capacity;
  std::size_t chunk_index = 0;
  while (auto chunk = reader.next()) {
    ParsedChunk parsed;
    try {
      parsed = ParsedChunk::parse(chunk->bytes(), capacity);
    } catch (const Error& e) {
      throw Error(e.code(), "chunk " + std::to_string(chunk_index) + ": " + e.what());
    }
    for (std::size_t i = 0; i < parsed.frame_count(); ++i) {
      const FrameView view = parsed.frame(i);
      if (view.frame_id() == frame_id) return FramePoints::from(view);
    }
    ++chunk_index;
  }
  throw Error(ErrorCode::kUsage,
              "frame " + std::to_string(frame_id) + " not found in " + chunk_path);
}

namespace {

const TruthParticle* match(const TrackCandidate& track, const TruthFrame* truth) {
  if (!truth) return nullptr;
  for (const TruthParticle& p : truth->particles) {
    bool same = true;
    for (std::size_t l = 0; l < 4; ++l) {
      if (p.hit_index[l] < 0 ||
          track.hit_index[l] != static_cast<std::uint32_t>(p.hit_index[l])) {
        same = false;
        break;
      }
    }
    if (same) return &p;
  }
  return nullptr;
}

}  // namespace

std::string describe_frame(const FramePoints& frame, const RunConfig& config,
                           const TruthFrame* truth) {
  const FrameAnalysis a = analyze_frame(frame, config);
  std::string s;
  char line[256];
  auto add = [&](const char* fmt, auto... args) {
    std::snprintf(line, sizeof line, fmt, args...);
    s += line;
  };
  add("frame %llu\n", static_cast<unsigned long long>(frame.frame_id));
  add("hits per layer: %zu %zu %zu %zu\n", frame.layers[0].size(),
      frame.layers[1].size(), frame.layers[2].size(), frame.layers[3].size());
  add("combinations: %llu, cut survivors: %zu%s\n",
      static_cast<unsigned long long>(a.decision.n_combinations),
      a.selection.triplets.size(), a.selection.overflow ? " (overflow)" : "");
  add("tracks: %zu%s\n", a.tracking.tracks.size(),
      a.tracking.overflow ? " (overflow)" : "");
  for (std::size_t i = 0; i < a.tracking.tracks.size(); ++i) {
    const TrackCandidate& t = a.tracking.tracks[i];
    add("  [%zu] hits %u %u %u %u  q=%+d  p=%.2f MeV  pt=%.2f  chi2=%.3f",
        i, t.hit_index[0], t.hit_index[1], t.hit_index[2], t.hit_index[3],
        t.charge, t.momentum, t.pt, t.chi2_global);
    if (const TruthParticle* p = match(t, truth)) {
      add("  truth %s p=%.2f", to_string(p->kind), p->momentum.norm());
    }
    s += "\n";
  }
  add("energy-compatible triples: %llu%s\n",
      static_cast<unsigned long long>(a.vertex.n_triples),
      a.vertex.comb_overflow ? " (overflow)" : "");
  if (a.vertex.vertex) {
    const VertexCandidate& v = *a.vertex.vertex;
    add("vertex: (%.3f, %.3f, %.3f) mm  chi2=%.3f  |p|=%.2f MeV  E=%.2f MeV  "
        "tracks %zu %zu %zu\n",
        v.position.x, v.position.y, v.position.z, v.chi2, v.total_momentum.norm(),
        v.total_energy, v.triple.positron_a, v.triple.positron_b, v.triple.electron);
  } else {
    s += "vertex: none\n";
  }
  add("decision: %s (%s)\n", a.decision.keep ? "keep" : "discard",
      to_string(a.decision.reason));
  if (truth) {
    add("truth: %s, %u decays, %zu particles\n",
        truth->is_signal_frame ? "signal frame" : "background frame", truth->n_decays,
        truth->particles.size());
  }
  return s;
}

}  // namespace oes
