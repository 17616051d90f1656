#include "oes/oes.h"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <map>
#include <memory>
#include <new>
#include <optional>
#include <string>

#include "oes/config.hpp"
#include "oes/error.hpp"
#include "oes/inspect.hpp"
#include "oes/pipeline.hpp"
#include "oes/tuning.hpp"

struct oes_config {
  oes::RunConfig value;
};

struct oes_report {
  oes::RunReport value;
};

namespace {

thread_local std::string last_error;

oes_status fail(oes_status status, const std::string& message) {
  last_error = message;
  return status;
}

template <typename F>
oes_status guarded(F&& body) {
  try {
    last_error.clear();
    return body();
  } catch (const oes::Error& e) {
    return fail(static_cast<oes_status>(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(OES_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(OES_ERR_INTERNAL, e.what());
  }
}

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void require(const void* p, const char* what) {
  if (!p) throw oes::Error(oes::ErrorCode::kUsage, std::string(what) + " is NULL");
}

std::map<std::string, double> report_metrics(const oes::RunReport& r) {
  std::map<std::string, double> m;
  auto u = [](std::uint64_t v) { return static_cast<double>(v); };
  m["frames_total"] = u(r.frames_total);
  m["frames_kept"] = u(r.frames_kept);
  m["frames_discarded"] = u(r.frames_discarded());
  m["tracks"] = u(r.tracks_total);
  m["track_triples"] = u(r.triples_total);
  m["chunks_in"] = u(r.chunks_in);
  m["chunks_out"] = u(r.chunks_out);
  m["workers"] = u(r.worker_count);
  m["wall_seconds"] = r.wall_seconds;
  m["frames_per_second"] = r.frames_per_second();
  for (std::size_t i = 0; i < oes::kKeepReasonCount; ++i) {
    m[std::string("kept_by_reason.") + oes::to_string(static_cast<oes::KeepReason>(i))] =
        u(r.kept_by_reason[i]);
  }
  m["funnel.combinations"] = u(r.funnel.combinations);
  m["funnel.pass_delta_lambda"] = u(r.funnel.pass_delta_lambda);
  m["funnel.pass_phi01"] = u(r.funnel.pass_phi01);
  m["funnel.pass_phi12"] = u(r.funnel.pass_phi12);
  m["funnel.pass_rt"] = u(r.funnel.pass_rt);
  if (r.truth) {
    const oes::TruthMetrics& t = *r.truth;
    m["truth.true_triplets"] = u(t.true_triplets);
    m["truth.true_triplets_kept"] = u(t.true_triplets_kept);
    m["truth.triplet_retention"] = t.triplet_retention();
    m["truth.true_tracks"] = u(t.true_tracks);
    m["truth.true_track_candidates"] = u(t.true_track_candidates);
    m["truth.true_tracks_found"] = u(t.true_tracks_found);
    m["truth.track_acceptance"] = t.track_acceptance();
    m["truth.track_efficiency"] = t.track_efficiency();
    m["truth.signal_tracks"] = u(t.signal_tracks);
    m["truth.signal_tracks_found"] = u(t.signal_tracks_found);
    m["truth.signal_track_efficiency"] = t.signal_track_efficiency();
    m["truth.signal_frames"] = u(t.signal_frames);
    m["truth.signal_frames_reconstructable"] = u(t.signal_frames_reconstructable);
    m["truth.signal_frames_kept"] = u(t.signal_frames_kept);
    m["truth.signal_frames_vertex_found"] = u(t.signal_frames_vertex_found);
    m["truth.signal_frame_efficiency"] = t.signal_frame_efficiency();
    m["truth.background_frames"] = u(t.background_frames);
    m["truth.background_frames_kept"] = u(t.background_frames_kept);
  }
  return m;
}

std::vector<oes::Chunk> read_all_chunks(const std::string& path) {
  oes::ChunkFileReader reader(path);
  std::vector<oes::Chunk> chunks;
  while (auto c = reader.next()) chunks.push_back(std::move(*c));
  return chunks;
}

}  // namespace

extern "C" {

const char* oes_last_error(void) { return last_error.c_str(); }

const char* oes_version(void) { return "1.0.0"; }

void oes_string_free(char* s) { std::free(s); }

oes_status oes_config_new(oes_config** out) {
  return guarded([&] {
    require(out, "out");
    *out = new oes_config{};
    return OES_OK;
  });
}

oes_status oes_config_load(const char* path, oes_config** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new oes_config{oes::RunConfig::load(path)};
    return OES_OK;
  });
}

oes_status oes_config_clone(const oes_config* config, oes_config** out) {
  return guarded([&] {
    require(config, "config");
    require(out, "out");
    *out = new oes_config{config->value};
    return OES_OK;
  });
}

oes_status oes_config_set(oes_config* config, const char* key, const char* value) {
  return guarded([&] {
    require(config, "config");
    require(key, "key");
    require(value, "value");
    config->value.set(key, value);
    return OES_OK;
  });
}

oes_status oes_config_get(const oes_config* config, const char* key, char** value) {
  return guarded([&] {
    require(config, "config");
    require(key, "key");
    require(value, "value");
    *value = copy_string(config->value.get(key));
    return OES_OK;
  });
}

oes_status oes_config_validate(const oes_config* config) {
  return guarded([&] {
    require(config, "config");
    config->value.validate();
    return OES_OK;
  });
}

oes_status oes_config_save(const oes_config* config, const char* path) {
  return guarded([&] {
    require(config, "config");
    require(path, "path");
    config->value.save(path);
    return OES_OK;
  });
}

oes_status oes_config_to_string(const oes_config* config, char** out) {
  return guarded([&] {
    require(config, "config");
    require(out, "out");
    *out = copy_string(config->value.to_key_values().to_string());
    return OES_OK;
  });
}

void oes_config_free(oes_config* config) { delete config; }

oes_status oes_generate(const oes_config* config, uint64_t n_frames,
                        const char* chunk_path, const char* truth_path) {
  return guarded([&] {
    require(config, "config");
    require(chunk_path, "chunk_path");
    require(truth_path, "truth_path");
    const oes::RunConfig& c = config->value;
    c.validate();
    oes::generate_stream(c.gen, c.geometry, n_frames, c.pipeline.chunk_capacity,
                         chunk_path, truth_path);
    return OES_OK;
  });
}

oes_status oes_run(const oes_config* config, const char* in, const char* out,
                   const char* truth, oes_report** report) {
  return guarded([&] {
    require(config, "config");
    require(in, "in");
    require(report, "report");
    std::optional<oes::TruthIndex> index;
    if (truth) index = oes::index_truth(oes::read_truth_file(truth));
    auto r = std::make_unique<oes_report>();
    r->value = oes::run_files(in, out ? out : "", config->value,
                              index ? &*index : nullptr);
    *report = r.release();
    return OES_OK;
  });
}

uint64_t oes_report_frames_total(const oes_report* report) {
  return report ? report->value.frames_total : 0;
}

uint64_t oes_report_frames_kept(const oes_report* report) {
  return report ? report->value.frames_kept : 0;
}

uint64_t oes_report_kept_by_reason(const oes_report* report, oes_keep_reason reason) {
  const auto i = static_cast<std::size_t>(reason);
  if (!report || i >= oes::kKeepReasonCount) return 0;
  return report->value.kept_by_reason[i];
}

int oes_report_has_truth(const oes_report* report) {
  return report && report->value.truth ? 1 : 0;
}

oes_status oes_report_metric(const oes_report* report, const char* name,
                             double* value) {
  return guarded([&] {
    require(report, "report");
    require(name, "name");
    require(value, "value");
    const auto metrics = report_metrics(report->value);
    const auto it = metrics.find(name);
    if (it == metrics.end()) {
      throw oes::Error(oes::ErrorCode::kUsage, std::string("unknown metric '") + name + "'");
    }
    *value = it->second;
    return OES_OK;
  });
}

oes_status oes_report_write(const oes_report* report, const oes_config* config,
                            const char* path) {
  return guarded([&] {
    require(report, "report");
    require(config, "config");
    require(path, "path");
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw oes::Error(oes::ErrorCode::kIo, std::string("cannot open ") + path);
    report->value.write_lines(out, config->value);
    out.close();
    if (!out) throw oes::Error(oes::ErrorCode::kIo, std::string("write failed on ") + path);
    return OES_OK;
  });
}

oes_status oes_report_summary(const oes_report* report, char** out) {
  return guarded([&] {
    require(report, "report");
    require(out, "out");
    *out = copy_string(report->value.summary_table());
    return OES_OK;
  });
}

void oes_report_free(oes_report* report) { delete report; }

oes_status oes_tune(const oes_config* base, const char* in, const char* truth,
                    double cut_retention, double track_retention,
                    double signal_retention, oes_config** tuned, char** summary) {
  return guarded([&] {
    require(base, "base");
    require(in, "in");
    require(truth, "truth");
    require(tuned, "tuned");
    oes::TuneTargets targets;
    targets.cut_retention = cut_retention;
    if (track_retention >= 0.0) targets.track_retention = track_retention;
    targets.signal_retention = signal_retention;
    targets.validate();
    const auto frames = oes::load_labelled(in, truth);
    const oes::TuneResult result = oes::tune(frames, base->value, targets);
    *tuned = new oes_config{result.config};
    if (summary) *summary = copy_string(result.summary());
    if (!result.reachable()) {
      return fail(OES_ERR_UNREACHABLE,
                  "a tuning target is unreachable; thresholds give the best achievable "
                  "retention");
    }
    return OES_OK;
  });
}

oes_status oes_bench(const oes_config* config, const char* in, const size_t* workers,
                     size_t n_workers, size_t repeat, double* median_fps,
                     char** table) {
  return guarded([&] {
    require(config, "config");
    require(in, "in");
    if (n_workers > 0) require(workers, "workers");
    const auto chunks = read_all_chunks(in);
    const std::vector<std::size_t> counts(workers, workers + n_workers);
    for (std::size_t w : counts) {
      if (w == 0) throw oes::Error(oes::ErrorCode::kUsage, "worker count must be >= 1");
    }
    const auto points = oes::bench(chunks, config->value, counts, repeat);
    if (median_fps) {
      for (std::size_t i = 0; i < points.size(); ++i) median_fps[i] = points[i].median_fps;
    }
    if (table) *table = copy_string(oes::bench_table(points));
    return OES_OK;
  });
}

oes_status oes_inspect(const oes_config* config, const char* in, const char* truth,
                       uint64_t frame_id, char** text) {
  return guarded([&] {
    require(config, "config");
    require(in, "in");
    require(text, "text");
    const oes::FramePoints frame = oes::find_frame(in, frame_id);
    std::optional<oes::TruthFrame> truth_frame;
    if (truth) {
      for (auto& f : oes::read_truth_file(truth)) {
        if (f.frame_id == frame_id) {
          truth_frame = std::move(f);
          break;
        }
      }
    }
    *text = copy_string(
        oes::describe_frame(frame, config->value, truth_frame ? &*truth_frame : nullptr));
    return OES_OK;
  });
}

}  // extern "C"
