#include "oes/tuning.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "oes/error.hpp"

namespace oes {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Widen a threshold by a hair so the sample that defines it still passes
// after the cut recomputes the same quantity in a different order.
double widen_up(double v) { return v + 1e-12 * std::max(1.0, std::abs(v)); }
double widen_down(double v) { return v - 1e-12 * std::max(1.0, std::abs(v)); }

// Smallest value v such that at least `keep` of the sorted sample is <= v.
double upper_quantile(const std::vector<double>& sorted, double keep) {
  if (sorted.empty()) return kInf;
  const double n = static_cast<double>(sorted.size());
  auto k = static_cast<std::size_t>(std::ceil(keep * n));
  k = std::clamp<std::size_t>(k, 1, sorted.size());
  return sorted[k - 1];
}

// Largest value v such that at least `keep` of the sorted sample is >= v.
double lower_quantile(const std::vector<double>& sorted, double keep) {
  if (sorted.empty()) return -kInf;
  const double n = static_cast<double>(sorted.size());
  auto k = static_cast<std::size_t>(std::ceil(keep * n));
  k = std::clamp<std::size_t>(k, 1, sorted.size());
  return sorted[sorted.size() - k];
}

struct TripletSample {
  double delta_lambda;
  double cos01;
  double cos12;
  double abs_rt;
};

bool passes(const TripletSample& s, const CutConfig& c) {
  return s.delta_lambda <= c.delta_lambda_max && s.cos01 >= c.phi01_min_cos &&
         s.cos12 >= c.phi12_min_cos && s.abs_rt >= c.rt_min &&
         s.abs_rt <= c.rt_max;
}

std::vector<TripletSample> true_triplet_samples(
    const std::vector<LabelledFrame>& frames, const DetectorGeometry& geometry) {
  std::vector<TripletSample> out;
  for (const LabelledFrame& f : frames) {
    for (const TruthParticle& p : f.truth.particles) {
      if (p.kind == ParticleKind::kNoise) continue;
      const auto& h = p.hit_index;
      if (h[0] < 0 || h[1] < 0 || h[2] < 0) continue;
      const Vec3& h0 = f.points.layers[0].at(static_cast<std::size_t>(h[0]));
      const Vec3& h1 = f.points.layers[1].at(static_cast<std::size_t>(h[1]));
      const Vec3& h2 = f.points.layers[2].at(static_cast<std::size_t>(h[2]));
      const auto c01 = cos_phi(h0.transverse(), h1.transverse());
      const auto c12 = cos_phi(h1.transverse(), h2.transverse());
      const double rt = circle_radius_3pt(h0, h1, h2);
      out.push_back({std::abs(delta_lambda(h0, h1, h2, geometry)),
                     c01 ? *c01 : -kInf, c12 ? *c12 : -kInf,
                     std::isinf(rt) ? kInf : std::abs(rt)});
    }
  }
  return out;
}

double retention_of(const std::vector<TripletSample>& samples, const CutConfig& c) {
  if (samples.empty()) return 0.0;
  const auto n = std::count_if(samples.begin(), samples.end(),
                               [&](const TripletSample& s) { return passes(s, c); });
  return static_cast<double>(n) / static_cast<double>(samples.size());
}

CutConfig rejecting_everything(std::size_t cuts_max) {
  CutConfig c;
  c.delta_lambda_max = 0.0;
  c.phi01_min_cos = 1.0;
  c.phi12_min_cos = 1.0;
  c.rt_min = 0.0;
  c.rt_max = std::numeric_limits<double>::min();
  c.cuts_max = cuts_max;
  return c;
}

const TripletCandidate* find_triplet(const SelectionResult& selection,
                                     const TruthParticle& p) {
  for (const TripletCandidate& t : selection.triplets) {
    if (t.index[0] == static_cast<std::uint32_t>(p.hit_index[0]) &&
        t.index[1] == static_cast<std::uint32_t>(p.hit_index[1]) &&
        t.index[2] == static_cast<std::uint32_t>(p.hit_index[2])) {
      return &t;
    }
  }
  return nullptr;
}

}  // namespace

void TuneTargets::validate() const {
  auto check = [](double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0))
      throw Error(ErrorCode::kUsage, std::string(name) + " must be in [0, 1]");
  };
  check(cut_retention, "cut retention");
  if (track_retention) check(*track_retention, "track retention");
  check(signal_retention, "signal retention");
}

bool TuneResult::reachable() const {
  return std::all_of(stages.begin(), stages.end(),
                     [](const StageTuning& s) { return s.reachable; });
}

std::string TuneResult::summary() const {
  std::string s;
  char line[200];
  for (const StageTuning& st : stages) {
    if (std::isnan(st.target)) {
      std::snprintf(line, sizeof line, "%-8s measured %.4f (not tuned, %zu samples)\n",
                    st.stage.c_str(), st.achieved, st.samples);
    } else {
      std::snprintf(line, sizeof line, "%-8s target %.4f achieved %.4f%s (%zu samples)\n",
                    st.stage.c_str(), st.target, st.achieved,
                    st.reachable ? "" : "  UNREACHABLE", st.samples);
    }
    s += line;
  }
  std::snprintf(line, sizeof line,
                "combinations rejected: %.2f%% (delta lambda alone %.2f%%)\n",
                100.0 * combination_rejection, 100.0 * delta_lambda_rejection);
  s += line;
  for (const std::string& w : warnings) s += "warning: " + w + "\n";
  return s;
}

std::vector<LabelledFrame> load_labelled(const std::string& chunk_path,
                                         const std::string& truth_path) {
  TruthIndex truth = index_truth(read_truth_file(truth_path));
  ChunkFileReader reader(chunk_path);
  const std::size_t capacity = reader.header().capacity;
  std::vector<LabelledFrame> frames;
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
      const auto it = truth.find(view.frame_id());
      if (it == truth.end()) {
        throw Error(ErrorCode::kUsage, "frame " + std::to_string(view.frame_id()) +
                                           " has no truth record");
      }
      frames.push_back({FramePoints::from(view), std::move(it->second)});
    }
    ++chunk_index;
  }
  return frames;
}

CutConfig tune_cuts(const std::vector<LabelledFrame>& frames,
                    const DetectorGeometry& geometry, const CutConfig& base,
                    double retention, double* achieved, std::size_t* samples) {
  const auto data = true_triplet_samples(frames, geometry);
  if (samples) *samples = data.size();
  auto report = [&](const CutConfig& c) {
    if (achieved) *achieved = retention_of(data, c);
    return c;
  };
  if (retention >= 1.0) return report(CutConfig::vacuous(base.cuts_max));
  if (retention <= 0.0) return report(rejecting_everything(base.cuts_max));
  if (data.empty()) return report(base);

  std::vector<double> dl, c01, c12, rt;
  for (const TripletSample& s : data) {
    dl.push_back(s.delta_lambda);
    c01.push_back(s.cos01);
    c12.push_back(s.cos12);
    rt.push_back(s.abs_rt);
  }
  for (auto* v : {&dl, &c01, &c12, &rt}) std::sort(v->begin(), v->end());

  // Five tails share the loss budget; shrink it until the joint retention,
  // which suffers from correlated tails less than the union bound, is met.
  double budget = std::min(1.0, 5.0 * (1.0 - retention));
  CutConfig best = base;
  for (int iter = 0; iter < 400; ++iter) {
    const double tail = budget / 5.0;
    CutConfig c = base;
    c.delta_lambda_max = widen_up(upper_quantile(dl, 1.0 - tail));
    c.phi01_min_cos = std::max(-1.0, widen_down(lower_quantile(c01, 1.0 - tail)));
    c.phi12_min_cos = std::max(-1.0, widen_down(lower_quantile(c12, 1.0 - tail)));
    c.rt_min = std::max(0.0, widen_down(lower_quantile(rt, 1.0 - tail)));
    c.rt_max = widen_up(upper_quantile(rt, 1.0 - tail));
    best = c;
    if (retention_of(data, c) >= retention) break;
    budget *= 0.9;
  }
  return report(best);
}

TuneResult tune(const std::vector<LabelledFrame>& frames, const RunConfig& base,
                const TuneTargets& targets) {
  targets.validate();
  TuneResult result;
  result.config = base;
  RunConfig& config = result.config;

  StageTuning cuts{"cuts", targets.cut_retention};
  config.cuts = tune_cuts(frames, config.geometry, base.cuts, targets.cut_retention,
                          &cuts.achieved, &cuts.samples);
  cuts.reachable = cuts.samples > 0 && cuts.achieved >= targets.cut_retention;
  if (cuts.samples == 0) result.warnings.push_back("no true triplets in the sample");
  if (targets.cut_retention <= 0.0)
    result.warnings.push_back("retention 0: the cuts now reject every combination");
  result.stages.push_back(cuts);

  CutFunnel funnel;
  for (const LabelledFrame& f : frames)
    funnel += select_triplets(f.points, config.geometry, config.cuts).funnel;
  if (funnel.combinations > 0) {
    const double n = static_cast<double>(funnel.combinations);
    result.combination_rejection = 1.0 - static_cast<double>(funnel.pass_rt) / n;
    result.delta_lambda_rejection =
        1.0 - static_cast<double>(funnel.pass_delta_lambda) / n;
  }

  // χ² of every truth-matched track whose triplet survives the cuts.
  FitConfig open_fit = config.fit;
  open_fit.chi2_max = kInf;
  std::vector<double> track_chi2;
  for (const LabelledFrame& f : frames) {
    const SelectionResult selection =
        select_triplets(f.points, config.geometry, config.cuts);
    if (selection.overflow) continue;
    for (const TruthParticle& p : f.truth.particles) {
      if (p.kind == ParticleKind::kNoise || !p.has_all_layers()) continue;
      const TripletCandidate* t = find_triplet(selection, p);
      if (!t) continue;
      const auto track = fit_track(*t, f.points, config.geometry, open_fit);
      const bool matched =
          track && track->hit_index[3] == static_cast<std::uint32_t>(p.hit_index[3]);
      track_chi2.push_back(matched ? track->chi2_global : kInf);
    }
  }
  std::sort(track_chi2.begin(), track_chi2.end());
  auto fraction_below = [](const std::vector<double>& sorted, double limit) {
    if (sorted.empty()) return 0.0;
    const auto n = std::lower_bound(sorted.begin(), sorted.end(), limit) - sorted.begin();
    return static_cast<double>(n) / static_cast<double>(sorted.size());
  };
  StageTuning fit{"tracks", std::numeric_limits<double>::quiet_NaN()};
  fit.samples = track_chi2.size();
  if (targets.track_retention) {
    fit.target = *targets.track_retention;
    const double q = upper_quantile(track_chi2, fit.target);
    if (std::isfinite(q)) {
      config.fit.chi2_max = std::max(widen_up(q), 1e-12);
    } else {
      const auto last_finite = std::find_if(track_chi2.rbegin(), track_chi2.rend(),
                                            [](double v) { return std::isfinite(v); });
      if (last_finite != track_chi2.rend()) config.fit.chi2_max = widen_up(*last_finite);
    }
    fit.achieved = fraction_below(track_chi2, config.fit.chi2_max);
    fit.reachable = fit.samples > 0 && fit.achieved >= fit.target;
  } else {
    fit.achieved = fraction_below(track_chi2, config.fit.chi2_max);
  }
  result.stages.push_back(fit);

  // Smallest passing vertex χ² per signal frame whose three decay products
  // all arrived as tracks; frames kept for an overflow need no vertex and
  // count as 0. Frames that lost a track upstream are not this stage's loss.
  RunConfig open_vertex = config;
  open_vertex.vertex.chi2_vertex_max = kInf;
  std::vector<double> vertex_chi2;
  for (const LabelledFrame& f : frames) {
    if (!f.truth.signal_reconstructable()) continue;
    const FrameAnalysis a = analyze_frame(f.points, open_vertex);
    double v = kInf;
    if (a.decision.keep && a.decision.reason != KeepReason::kVertexFound) {
      v = 0.0;
    } else {
      std::size_t matched = 0;
      for (const TruthParticle& p : f.truth.particles) {
        if (p.kind != ParticleKind::kSignalPositron &&
            p.kind != ParticleKind::kSignalElectron) {
          continue;
        }
        const bool found = std::any_of(
            a.tracking.tracks.begin(), a.tracking.tracks.end(),
            [&](const TrackCandidate& t) {
              for (std::size_t l = 0; l < 4; ++l) {
                if (t.hit_index[l] != static_cast<std::uint32_t>(p.hit_index[l]))
                  return false;
              }
              return true;
            });
        if (found) ++matched;
      }
      if (matched < 3) continue;
      if (a.decision.keep) v = a.vertex.vertex->chi2;
    }
    vertex_chi2.push_back(v);
  }
  std::sort(vertex_chi2.begin(), vertex_chi2.end());
  StageTuning vertex{"vertex", targets.signal_retention};
  vertex.samples = vertex_chi2.size();
  if (vertex_chi2.empty()) {
    result.warnings.push_back(
        "no signal frames reached the vertex stage; vertex.chi2_vertex_max left unchanged");
    vertex.target = std::numeric_limits<double>::quiet_NaN();
  } else {
    const double q = upper_quantile(vertex_chi2, targets.signal_retention);
    double threshold = q;
    if (!std::isfinite(q)) {
      const auto last_finite = std::find_if(vertex_chi2.rbegin(), vertex_chi2.rend(),
                                            [](double v) { return std::isfinite(v); });
      threshold = last_finite != vertex_chi2.rend() ? *last_finite
                                                    : base.vertex.chi2_vertex_max;
    }
    config.vertex.chi2_vertex_max = std::max(widen_up(threshold), 1e-9);
    const auto kept = std::upper_bound(vertex_chi2.begin(), vertex_chi2.end(),
                                       config.vertex.chi2_vertex_max) -
                      vertex_chi2.begin();
    vertex.achieved = static_cast<double>(kept) / static_cast<double>(vertex_chi2.size());
    vertex.reachable = vertex.achieved >= targets.signal_retention;
  }
  result.stages.push_back(vertex);
  return result;
}

}  // namespace oes
