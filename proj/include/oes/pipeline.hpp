#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "oes/config.hpp"
#include "oes/framestore.hpp"
#include "oes/selection.hpp"
#include "oes/toygen.hpp"
#include "oes/triplet_fit.hpp"
#include "oes/vertex_fit.hpp"

namespace oes {

enum class KeepReason {
  kNone,
  kTripletOverflow,
  kTrackOverflow,
  kCombOverflow,
  kVertexFound,
};
inline constexpr std::size_t kKeepReasonCount = 5;

const char* to_string(KeepReason reason);

struct FrameDecision {
  std::uint64_t frame_id = 0;
  bool keep = false;
  KeepReason reason = KeepReason::kNone;
  std::uint64_t n_combinations = 0;
  std::uint64_t n_cut_survivors = 0;
  std::uint64_t n_tracks = 0;
  std::uint64_t n_triples = 0;

  friend bool operator==(const FrameDecision&, const FrameDecision&) = default;
};

/// Everything the three stages produced for one frame.
struct FrameAnalysis {
  FrameDecision decision;
  SelectionResult selection;
  TrackingResult tracking;
  VertexDecision vertex;
};

FrameAnalysis analyze_frame(const FramePoints& frame, const RunConfig& config);
FrameDecision process_frame(const FramePoints& frame, const RunConfig& config);

/// Truth-based bookkeeping, filled when a truth sidecar is supplied.
struct TruthMetrics {
  std::uint64_t true_triplets = 0;       // particles with hits on layers 0-2
  std::uint64_t true_triplets_kept = 0;  // ...that survived the cuts
  std::uint64_t true_tracks = 0;         // particles with hits on all layers
  std::uint64_t true_track_candidates = 0;  // ...whose triplet survived
  std::uint64_t true_tracks_found = 0;
  std::uint64_t signal_tracks = 0;
  std::uint64_t signal_tracks_found = 0;
  std::uint64_t signal_frames = 0;
  std::uint64_t signal_frames_reconstructable = 0;
  std::uint64_t signal_frames_kept = 0;  // reconstructable and kept
  std::uint64_t signal_frames_vertex_found = 0;
  std::uint64_t background_frames = 0;
  std::uint64_t background_frames_kept = 0;

  TruthMetrics& operator+=(const TruthMetrics& o);
  friend bool operator==(const TruthMetrics&, const TruthMetrics&) = default;

  double triplet_retention() const;
  /// Accepted fraction of truth-matched candidates reaching the fit.
  double track_acceptance() const;
  double track_efficiency() const;
  double signal_track_efficiency() const;
  double signal_frame_efficiency() const;
};

void accumulate_truth(const FrameAnalysis& analysis, const TruthFrame& truth,
                      TruthMetrics& metrics);

struct RunReport {
  std::uint64_t frames_total = 0;
  std::uint64_t frames_kept = 0;
  std::array<std::uint64_t, kKeepReasonCount> kept_by_reason{};
  CutFunnel funnel;
  std::uint64_t tracks_total = 0;
  std::uint64_t triples_total = 0;
  std::uint64_t chunks_in = 0;
  std::uint64_t chunks_out = 0;
  std::optional<TruthMetrics> truth;
  std::size_t worker_count = 1;
  double wall_seconds = 0.0;

  double frames_per_second() const {
    return wall_seconds > 0.0 ? static_cast<double>(frames_total) / wall_seconds
                              : 0.0;
  }
  std::uint64_t frames_discarded() const {
    return kept_by_reason[static_cast<std::size_t>(KeepReason::kNone)];
  }
  /// Counter equality, timing excluded.
  bool same_counts(const RunReport& other) const;

  /// One JSON object per line: config echo, summary, reasons, funnel, truth.
  void write_lines(std::ostream& out, const RunConfig& config) const;
  /// Human-readable table with the kept-by-reason breakdown.
  std::string summary_table() const;
};

using TruthIndex = std::unordered_map<std::uint64_t, TruthFrame>;
TruthIndex index_truth(std::vector<TruthFrame> frames);

using ChunkSource = std::function<std::optional<Chunk>()>;
using ChunkSink = std::function<void(const Chunk&)>;

/// Bounded queue of sealed chunks feeding `worker_count` workers. Kept frames
/// are copied verbatim into new chunks of the same capacity and emitted in
/// input order, so the output does not depend on the worker count. A corrupt
/// chunk aborts the run with Error(kCorruptData) naming its index.
RunReport run_pipeline(const ChunkSource& source, const ChunkSink& sink,
                       std::size_t capacity, const RunConfig& config,
                       const TruthIndex* truth = nullptr);

/// File front end: reads `in` (with its header sidecar), writes kept frames
/// to `out` when non-empty.
RunReport run_files(const std::string& in, const std::string& out,
                    const RunConfig& config, const TruthIndex* truth = nullptr);

struct BenchPoint {
  std::size_t workers = 0;
  double median_fps = 0.0;
  double min_fps = 0.0;
  double max_fps = 0.0;
  std::uint64_t frames = 0;
};

/// Repeated runs over chunks already in memory, so only filtering is timed.
std::vector<BenchPoint> bench(const std::vector<Chunk>& chunks,
                              const RunConfig& config,
                              const std::vector<std::size_t>& worker_counts,
                              std::size_t repeat);

std::string bench_table(const std::vector<BenchPoint>& points);

}  // namespace oes
