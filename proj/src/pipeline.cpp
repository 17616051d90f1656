#include "oes/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "oes/bounded_queue.hpp"
#include "oes/error.hpp"

namespace oes {

const char* to_string(KeepReason reason) {
  switch (reason) {
    case KeepReason::kNone: return "none";
    case KeepReason::kTripletOverflow: return "triplet_overflow";
    case KeepReason::kTrackOverflow: return "track_overflow";
    case KeepReason::kCombOverflow: return "comb_overflow";
    case KeepReason::kVertexFound: return "vertex_found";
  }
  return "none";
}

FrameAnalysis analyze_frame(const FramePoints& frame, const RunConfig& config) {
  FrameAnalysis a;
  FrameDecision& d = a.decision;
  d.frame_id = frame.frame_id;
  d.n_combinations = frame.combination_count();

  a.selection = select_triplets(frame, config.geometry, config.cuts);
  d.n_cut_survivors = a.selection.triplets.size();
  if (a.selection.overflow) {
    d.keep = true;
    d.reason = KeepReason::kTripletOverflow;
    return a;
  }

  a.tracking = reconstruct_tracks(a.selection.triplets, frame, config.geometry,
                                  config.fit);
  d.n_tracks = a.tracking.tracks.size();
  if (a.tracking.overflow) {
    d.keep = true;
    d.reason = KeepReason::kTrackOverflow;
    return a;
  }

  a.vertex = evaluate_frame(a.tracking.tracks, config.geometry, config.vertex);
  d.n_triples = a.vertex.n_triples;
  if (a.vertex.comb_overflow) {
    d.keep = true;
    d.reason = KeepReason::kCombOverflow;
  } else if (a.vertex.keep) {
    d.keep = true;
    d.reason = KeepReason::kVertexFound;
  }
  return a;
}

FrameDecision process_frame(const FramePoints& frame, const RunConfig& config) {
  return analyze_frame(frame, config).decision;
}

TruthMetrics& TruthMetrics::operator+=(const TruthMetrics& o) {
  true_triplets += o.true_triplets;
  true_triplets_kept += o.true_triplets_kept;
  true_tracks += o.true_tracks;
  true_track_candidates += o.true_track_candidates;
  true_tracks_found += o.true_tracks_found;
  signal_tracks += o.signal_tracks;
  signal_tracks_found += o.signal_tracks_found;
  signal_frames += o.signal_frames;
  signal_frames_reconstructable += o.signal_frames_reconstructable;
  signal_frames_kept += o.signal_frames_kept;
  signal_frames_vertex_found += o.signal_frames_vertex_found;
  background_frames += o.background_frames;
  background_frames_kept += o.background_frames_kept;
  return *this;
}

namespace {

double ratio(std::uint64_t num, std::uint64_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

bool is_signal(ParticleKind kind) {
  return kind == ParticleKind::kSignalPositron ||
         kind == ParticleKind::kSignalElectron;
}

}  // namespace

double TruthMetrics::triplet_retention() const {
  return ratio(true_triplets_kept, true_triplets);
}
double TruthMetrics::track_acceptance() const {
  return ratio(true_tracks_found, true_track_candidates);
}
double TruthMetrics::track_efficiency() const {
  return ratio(true_tracks_found, true_tracks);
}
double TruthMetrics::signal_track_efficiency() const {
  return ratio(signal_tracks_found, signal_tracks);
}
double TruthMetrics::signal_frame_efficiency() const {
  return ratio(signal_frames_kept, signal_frames_reconstructable);
}

void accumulate_truth(const FrameAnalysis& analysis, const TruthFrame& truth,
                      TruthMetrics& m) {
  const auto& survivors = analysis.selection.triplets;
  const auto& tracks = analysis.tracking.tracks;
  // Tracks were only fitted when the cut stage did not overflow.
  const bool tracked = !analysis.selection.overflow;

  for (const TruthParticle& p : truth.particles) {
    if (p.kind == ParticleKind::kNoise) continue;
    const auto& h = p.hit_index;
    if (h[0] < 0 || h[1] < 0 || h[2] < 0) continue;
    ++m.true_triplets;
    const bool survived = std::any_of(
        survivors.begin(), survivors.end(), [&](const TripletCandidate& t) {
          return t.index[0] == static_cast<std::uint32_t>(h[0]) &&
                 t.index[1] == static_cast<std::uint32_t>(h[1]) &&
                 t.index[2] == static_cast<std::uint32_t>(h[2]);
        });
    if (survived) ++m.true_triplets_kept;
    if (!p.has_all_layers()) continue;

    ++m.true_tracks;
    const bool found = std::any_of(
        tracks.begin(), tracks.end(), [&](const TrackCandidate& t) {
          for (std::size_t l = 0; l < 4; ++l) {
            if (t.hit_index[l] != static_cast<std::uint32_t>(h[l])) return false;
          }
          return true;
        });
    if (survived && tracked) ++m.true_track_candidates;
    if (found) ++m.true_tracks_found;
    if (is_signal(p.kind)) {
      ++m.signal_tracks;
      if (found) ++m.signal_tracks_found;
    }
  }

  const FrameDecision& d = analysis.decision;
  if (truth.is_signal_frame) {
    ++m.signal_frames;
    if (truth.signal_reconstructable()) {
      ++m.signal_frames_reconstructable;
      if (d.keep) ++m.signal_frames_kept;
      if (d.reason == KeepReason::kVertexFound) ++m.signal_frames_vertex_found;
    }
  } else {
    ++m.background_frames;
    if (d.keep) ++m.background_frames_kept;
  }
}

bool RunReport::same_counts(const RunReport& o) const {
  return frames_total == o.frames_total && frames_kept == o.frames_kept &&
         kept_by_reason == o.kept_by_reason && funnel == o.funnel &&
         tracks_total == o.tracks_total && triples_total == o.triples_total &&
         chunks_in == o.chunks_in && chunks_out == o.chunks_out &&
         truth == o.truth;
}

namespace {

nlohmann::ordered_json reason_json(const RunReport& r) {
  nlohmann::ordered_json j;
  for (std::size_t i = 0; i < kKeepReasonCount; ++i) {
    j[to_string(static_cast<KeepReason>(i))] = r.kept_by_reason[i];
  }
  return j;
}

}  // namespace

void RunReport::write_lines(std::ostream& out, const RunConfig& config) const {
  using J = nlohmann::ordered_json;
  J cfg;
  cfg["record"] = "config";
  const KeyValueFile kv = config.to_key_values();
  for (const auto& [key, value] : kv.entries()) cfg[key] = value;
  out << cfg.dump() << '\n';

  J summary;
  summary["record"] = "summary";
  summary["frames_total"] = frames_total;
  summary["frames_kept"] = frames_kept;
  summary["frames_discarded"] = frames_discarded();
  summary["kept_fraction"] = ratio(frames_kept, frames_total);
  summary["reduction_factor"] =
      frames_kept == 0 ? 0.0 : static_cast<double>(frames_total) / frames_kept;
  summary["tracks"] = tracks_total;
  summary["track_triples"] = triples_total;
  summary["chunks_in"] = chunks_in;
  summary["chunks_out"] = chunks_out;
  summary["workers"] = worker_count;
  summary["wall_seconds"] = wall_seconds;
  summary["frames_per_second"] = frames_per_second();
  out << summary.dump() << '\n';

  J reasons;
  reasons["record"] = "kept_by_reason";
  reasons.update(reason_json(*this));
  out << reasons.dump() << '\n';

  J f;
  f["record"] = "funnel";
  f["combinations"] = funnel.combinations;
  f["pass_delta_lambda"] = funnel.pass_delta_lambda;
  f["pass_phi01"] = funnel.pass_phi01;
  f["pass_phi12"] = funnel.pass_phi12;
  f["pass_rt"] = funnel.pass_rt;
  out << f.dump() << '\n';

  if (truth) {
    const TruthMetrics& t = *truth;
    J j;
    j["record"] = "truth";
    j["true_triplets"] = t.true_triplets;
    j["true_triplets_kept"] = t.true_triplets_kept;
    j["triplet_retention"] = t.triplet_retention();
    j["true_tracks"] = t.true_tracks;
    j["true_track_candidates"] = t.true_track_candidates;
    j["true_tracks_found"] = t.true_tracks_found;
    j["track_acceptance"] = t.track_acceptance();
    j["track_efficiency"] = t.track_efficiency();
    j["signal_tracks"] = t.signal_tracks;
    j["signal_tracks_found"] = t.signal_tracks_found;
    j["signal_track_efficiency"] = t.signal_track_efficiency();
    j["signal_frames"] = t.signal_frames;
    j["signal_frames_reconstructable"] = t.signal_frames_reconstructable;
    j["signal_frames_kept"] = t.signal_frames_kept;
    j["signal_frames_vertex_found"] = t.signal_frames_vertex_found;
    j["signal_frame_efficiency"] = t.signal_frame_efficiency();
    j["background_frames"] = t.background_frames;
    j["background_frames_kept"] = t.background_frames_kept;
    out << j.dump() << '\n';
  }
}

std::string RunReport::summary_table() const {
  std::string s;
  char line[160];
  auto add = [&](const char* fmt, auto... args) {
    std::snprintf(line, sizeof line, fmt, args...);
    s += line;
  };
  add("frames total      %12llu\n", static_cast<unsigned long long>(frames_total));
  add("frames kept       %12llu  (%.3f%%)\n",
      static_cast<unsigned long long>(frames_kept),
      100.0 * ratio(frames_kept, frames_total));
  if (frames_kept > 0) {
    add("reduction factor  %12.1f\n",
        static_cast<double>(frames_total) / static_cast<double>(frames_kept));
  } else {
    add("reduction factor  %12s\n", "n/a");
  }
  s += "\nreason to keep          frames     share\n";
  static constexpr std::pair<KeepReason, const char*> kRows[] = {
      {KeepReason::kTripletOverflow, "# hit triplets"},
      {KeepReason::kTrackOverflow, "# tracks"},
      {KeepReason::kCombOverflow, "# track combinations"},
      {KeepReason::kVertexFound, "vertex found"},
  };
  for (const auto& [reason, label] : kRows) {
    const auto n = kept_by_reason[static_cast<std::size_t>(reason)];
    add("  %-20s %9llu  %7.2f%%\n", label, static_cast<unsigned long long>(n),
        100.0 * ratio(n, frames_kept));
  }
  add("  %-20s %9llu\n", "(discarded)",
      static_cast<unsigned long long>(frames_discarded()));

  s += "\ncut funnel              passing  of total\n";
  const std::pair<const char*, std::uint64_t> stages[] = {
      {"combinations", funnel.combinations},
      {"delta lambda", funnel.pass_delta_lambda},
      {"phi 01", funnel.pass_phi01},
      {"phi 12", funnel.pass_phi12},
      {"circle radius", funnel.pass_rt},
  };
  for (const auto& [label, n] : stages) {
    add("  %-20s %9llu  %7.2f%%\n", label, static_cast<unsigned long long>(n),
        100.0 * ratio(n, funnel.combinations));
  }

  if (truth) {
    const TruthMetrics& t = *truth;
    s += "\ntruth\n";
    add("  triplet retention     %7.2f%%  (%llu / %llu)\n",
        100.0 * t.triplet_retention(),
        static_cast<unsigned long long>(t.true_triplets_kept),
        static_cast<unsigned long long>(t.true_triplets));
    add("  track acceptance      %7.2f%%  (%llu / %llu)\n",
        100.0 * t.track_acceptance(),
        static_cast<unsigned long long>(t.true_tracks_found),
        static_cast<unsigned long long>(t.true_track_candidates));
    add("  track efficiency      %7.2f%%\n", 100.0 * t.track_efficiency());
    add("  signal track eff.     %7.2f%%\n", 100.0 * t.signal_track_efficiency());
    add("  signal frames kept    %7.2f%%  (%llu / %llu reconstructable)\n",
        100.0 * t.signal_frame_efficiency(),
        static_cast<unsigned long long>(t.signal_frames_kept),
        static_cast<unsigned long long>(t.signal_frames_reconstructable));
    add("  background kept       %7.3f%%\n",
        100.0 * ratio(t.background_frames_kept, t.background_frames));
  }

  add("\nworkers %zu, %.3f s, %.0f frames/s\n", worker_count, wall_seconds,
      frames_per_second());
  return s;
}

TruthIndex index_truth(std::vector<TruthFrame> frames) {
  TruthIndex index;
  index.reserve(frames.size());
  for (auto& f : frames) {
    const auto id = f.frame_id;
    index.emplace(id, std::move(f));
  }
  return index;
}

namespace {

struct KeptFrame {
  std::uint64_t frame_id = 0;
  std::array<std::vector<Hit>, kLayerCount> hits;
};

struct ChunkResult {
  std::vector<KeptFrame> kept;
  RunReport counts;
};

ChunkResult process_chunk(const Chunk& chunk, std::size_t capacity,
                          const RunConfig& config, const TruthIndex* truth) {
  const ParsedChunk parsed = ParsedChunk::parse(chunk.bytes(), capacity);
  ChunkResult result;
  RunReport& r = result.counts;
  if (truth) r.truth.emplace();
  for (std::size_t i = 0; i < parsed.frame_count(); ++i) {
    const FrameView view = parsed.frame(i);
    const FramePoints points = FramePoints::from(view);
    const FrameAnalysis analysis = analyze_frame(points, config);
    const FrameDecision& d = analysis.decision;

    ++r.frames_total;
    ++r.kept_by_reason[static_cast<std::size_t>(d.reason)];
    r.funnel += analysis.selection.funnel;
    r.tracks_total += d.n_tracks;
    r.triples_total += d.n_triples;
    if (d.keep) {
      ++r.frames_kept;
      KeptFrame k;
      k.frame_id = view.frame_id();
      for (std::size_t l = 0; l < kLayerCount; ++l) {
        k.hits[l].assign(view.layers[l].begin(), view.layers[l].end());
      }
      result.kept.push_back(std::move(k));
    }
    if (truth) {
      const auto it = truth->find(view.frame_id());
      if (it != truth->end()) accumulate_truth(analysis, it->second, *r.truth);
    }
  }
  return result;
}

void merge_counts(RunReport& into, const RunReport& from) {
  into.frames_total += from.frames_total;
  into.frames_kept += from.frames_kept;
  for (std::size_t i = 0; i < kKeepReasonCount; ++i)
    into.kept_by_reason[i] += from.kept_by_reason[i];
  into.funnel += from.funnel;
  into.tracks_total += from.tracks_total;
  into.triples_total += from.triples_total;
  if (from.truth) {
    if (!into.truth) into.truth.emplace();
    *into.truth += *from.truth;
  }
}

}  // namespace

RunReport run_pipeline(const ChunkSource& source, const ChunkSink& sink,
                       std::size_t capacity, const RunConfig& config,
                       const TruthIndex* truth) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  const std::size_t workers = config.pipeline.worker_count;

  RunReport report;
  report.worker_count = workers;
  if (truth) report.truth.emplace();

  BoundedQueue<std::pair<std::size_t, Chunk>> queue(config.pipeline.chunk_queue_depth);
  std::mutex results_mutex;
  std::map<std::size_t, ChunkResult> ready;
  std::atomic<bool> failed{false};
  std::optional<std::pair<std::size_t, Error>> failure;

  auto worker = [&] {
    while (auto item = queue.pop()) {
      if (failed.load()) continue;
      try {
        ChunkResult r = process_chunk(item->second, capacity, config, truth);
        std::lock_guard lock(results_mutex);
        ready.emplace(item->first, std::move(r));
      } catch (const Error& e) {
        std::lock_guard lock(results_mutex);
        if (!failure || item->first < failure->first) {
          failure.emplace(item->first,
                          Error(e.code(), "chunk " + std::to_string(item->first) +
                                              ": " + e.what()));
        }
        failed.store(true);
      }
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t i = 0; i < workers; ++i) pool.emplace_back(worker);

  ChunkBuilder out(capacity);
  std::size_t next_merge = 0;
  auto emit = [&](const KeptFrame& k) {
    const LayerHits layers{k.hits[0], k.hits[1], k.hits[2], k.hits[3]};
    if (out.push_frame(k.frame_id, layers) == ChunkBuilder::PushResult::kAccepted)
      return;
    sink(out.seal());
    ++report.chunks_out;
    out.reset();
    out.push_frame(k.frame_id, layers);
  };
  // Merge whatever is contiguous with what was already merged, in input order.
  auto drain = [&] {
    for (;;) {
      ChunkResult r;
      {
        std::lock_guard lock(results_mutex);
        const auto it = ready.find(next_merge);
        if (it == ready.end()) return;
        r = std::move(it->second);
        ready.erase(it);
      }
      merge_counts(report, r.counts);
      for (const KeptFrame& k : r.kept) emit(k);
      ++next_merge;
    }
  };

  std::exception_ptr source_error;
  try {
    std::size_t index = 0;
    while (!failed.load()) {
      auto chunk = source();
      if (!chunk) break;
      if (chunk->capacity() != capacity) {
        throw Error(ErrorCode::kCorruptData,
                    "chunk " + std::to_string(index) + ": size " +
                        std::to_string(chunk->capacity()) + " != capacity " +
                        std::to_string(capacity));
      }
      ++report.chunks_in;
      queue.push({index++, std::move(*chunk)});
      drain();
    }
  } catch (...) {
    source_error = std::current_exception();
    failed.store(true);
  }
  queue.close();
  for (auto& t : pool) t.join();
  if (source_error) std::rethrow_exception(source_error);
  if (failure) throw failure->second;

  drain();
  if (!out.empty()) {
    sink(out.seal());
    ++report.chunks_out;
  }
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

RunReport run_files(const std::string& in, const std::string& out,
                    const RunConfig& config, const TruthIndex* truth) {
  ChunkFileReader reader(in);
  const ChunkFileHeader header = reader.header();
  if (header.geometry_hash != 0 && header.geometry_hash != config.geometry.hash()) {
    throw Error(ErrorCode::kConfig,
                in + " was written for a different detector geometry");
  }
  std::optional<ChunkFileWriter> writer;
  if (!out.empty()) writer.emplace(out, header);

  ChunkSource source = [&] { return reader.next(); };
  ChunkSink sink = [&](const Chunk& c) {
    if (writer) writer->write(c);
  };
  RunReport report = run_pipeline(source, sink, header.capacity, config, truth);
  if (writer) writer->close();
  return report;
}

std::vector<BenchPoint> bench(const std::vector<Chunk>& chunks,
                              const RunConfig& config,
                              const std::vector<std::size_t>& worker_counts,
                              std::size_t repeat) {
  if (repeat == 0) throw Error(ErrorCode::kUsage, "bench: repeat must be >= 1");
  const std::size_t capacity =
      chunks.empty() ? config.pipeline.chunk_capacity : chunks.front().capacity();
  std::vector<BenchPoint> points;
  for (std::size_t w : worker_counts) {
    RunConfig c = config;
    c.pipeline.worker_count = w;
    std::vector<double> fps;
    BenchPoint p;
    p.workers = w;
    for (std::size_t r = 0; r < repeat; ++r) {
      std::size_t next = 0;
      ChunkSource source = [&]() -> std::optional<Chunk> {
        if (next == chunks.size()) return std::nullopt;
        return chunks[next++];
      };
      const RunReport report = run_pipeline(source, [](const Chunk&) {}, capacity, c);
      fps.push_back(report.frames_per_second());
      p.frames = report.frames_total;
    }
    std::sort(fps.begin(), fps.end());
    p.min_fps = fps.front();
    p.max_fps = fps.back();
    p.median_fps = fps.size() % 2 == 1
                       ? fps[fps.size() / 2]
                       : 0.5 * (fps[fps.size() / 2 - 1] + fps[fps.size() / 2]);
    points.push_back(p);
  }
  return points;
}

std::string bench_table(const std::vector<BenchPoint>& points) {
  std::string s = "workers      frames   median fps      min fps      max fps  speedup\n";
  const double base = points.empty() ? 0.0 : points.front().median_fps;
  char line[160];
  for (const BenchPoint& p : points) {
    std::snprintf(line, sizeof line, "%7zu %11llu %12.0f %12.0f %12.0f %8.2f\n",
                  p.workers, static_cast<unsigned long long>(p.frames),
                  p.median_fps, p.min_fps, p.max_fps,
                  base > 0.0 ? p.median_fps / base : 0.0);
    s += line;
  }
  return s;
}

}  // namespace oes
