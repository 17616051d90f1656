#pragma once

#include <optional>
#include <string>
#include <vector>

#include "oes/config.hpp"
#include "oes/pipeline.hpp"
#include "oes/selection.hpp"
#include "oes/toygen.hpp"

namespace oes {

struct TuneTargets {
  /// Joint fraction of true triplets the four cuts must keep.
  double cut_retention = 0.985;
  /// Fraction of truth-matched fitted tracks under chi2_max; the configured
  /// chi2_max is kept when empty.
  std::optional<double> track_retention;
  /// Fraction of signal frames the vertex stage must keep, counted over
  /// frames whose three decay products all arrived as tracks.
  double signal_retention = 0.94;

  void validate() const;
};

struct StageTuning {
  std::string stage;
  double target = 0.0;
  double achieved = 0.0;
  bool reachable = true;
  std::size_t samples = 0;
};

struct TuneResult {
  RunConfig config;
  std::vector<StageTuning> stages;
  std::vector<std::string> warnings;
  double combination_rejection = 0.0;    // all cuts, on the tuning sample
  double delta_lambda_rejection = 0.0;   // first cut alone
  bool reachable() const;
  std::string summary() const;
};

/// A frame of the tuning sample together with its truth record.
struct LabelledFrame {
  FramePoints points;
  TruthFrame truth;
};

std::vector<LabelledFrame> load_labelled(const std::string& chunk_path,
                                         const std::string& truth_path);

/// Cut thresholds from per-cut quantiles of the true-triplet distributions,
/// tightened together until the joint retention meets the target. A target
/// of 1 gives vacuous cuts and 0 gives cuts that reject everything.
CutConfig tune_cuts(const std::vector<LabelledFrame>& frames,
                    const DetectorGeometry& geometry, const CutConfig& base,
                    double retention, double* achieved = nullptr,
                    std::size_t* samples = nullptr);

/// Full scan: cuts, then (optionally) the track χ², then the vertex χ², each
/// stage using the thresholds already chosen upstream.
TuneResult tune(const std::vector<LabelledFrame>& frames, const RunConfig& base,
                const TuneTargets& targets);

}  // namespace oes
