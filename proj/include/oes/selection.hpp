#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

#include "oes/framestore.hpp"
#include "oes/geometry.hpp"

namespace oes {

/// Hit positions of one frame in double precision, grouped by layer.
struct FramePoints {
  std::uint64_t frame_id = 0;
  std::array<std::vector<Vec3>, 4> layers;

  static FramePoints from(const FrameView& view);
  std::size_t combination_count() const {
    return layers[0].size() * layers[1].size() * layers[2].size();
  }
};

struct CutConfig {
  // Defaults from `oes tune` at 98.5% retention on 1e4 nominal toy frames.
  double delta_lambda_max = 0.54;
  double phi01_min_cos = 0.953;
  double phi12_min_cos = 0.43;
  double rt_min = 35.0;
  double rt_max = 185.0;
  std::size_t cuts_max = 768;

  void validate() const;

  /// Thresholds that let every non-degenerate combination through.
  static CutConfig vacuous(std::size_t cuts_max = 768) {
    CutConfig c;
    c.delta_lambda_max = std::numeric_limits<double>::infinity();
    c.phi01_min_cos = -1.0;
    c.phi12_min_cos = -1.0;
    c.rt_min = 0.0;
    c.rt_max = std::numeric_limits<double>::infinity();
    c.cuts_max = cuts_max;
    return c;
  }
};

struct TripletCandidate {
  std::array<std::uint32_t, 3> index{};  // into layers 0, 1, 2
  double rt = 0.0;                       // signed circle radius, mm

  friend bool operator==(const TripletCandidate&,
                         const TripletCandidate&) = default;
};

/// How many combinations reached and passed each test, in application order.
struct CutFunnel {
  std::uint64_t combinations = 0;
  std::uint64_t pass_delta_lambda = 0;
  std::uint64_t pass_phi01 = 0;
  std::uint64_t pass_phi12 = 0;
  std::uint64_t pass_rt = 0;

  CutFunnel& operator+=(const CutFunnel& o) {
    combinations += o.combinations;
    pass_delta_lambda += o.pass_delta_lambda;
    pass_phi01 += o.pass_phi01;
    pass_phi12 += o.pass_phi12;
    pass_rt += o.pass_rt;
    return *this;
  }
  friend bool operator==(const CutFunnel&, const CutFunnel&) = default;
};

struct SelectionResult {
  std::vector<TripletCandidate> triplets;
  bool overflow = false;
  CutFunnel funnel;
};

/// |tan(lambda_12) - tan(lambda_01)| within the window, with slopes taken
/// over the nominal layer radii.
bool pass_delta_lambda(const Vec3& h0, const Vec3& h1, const Vec3& h2,
                       const DetectorGeometry& geometry,
                       const CutConfig& config);

/// Slope difference itself; the quantity the Δλ test thresholds.
double delta_lambda(const Vec3& h0, const Vec3& h1, const Vec3& h2,
                    const DetectorGeometry& geometry);

/// Transverse opening angle test; zero vectors fail.
bool pass_phi(const Vec2& a, const Vec2& b, double min_cos);

/// Circle-radius window. Returns the signed radius for reuse by the fit.
std::pair<bool, double> pass_rt(const Vec3& h0, const Vec3& h1, const Vec3& h2,
                                const CutConfig& config);

/// Row-major enumeration (layer-0 index outermost) with the tests applied
/// in the order Δλ, Φ01, Φ12, r_t. Survivors beyond cuts_max set overflow
/// and stop the enumeration.
SelectionResult select_triplets(const FramePoints& frame,
                                const DetectorGeometry& geometry,
                                const CutConfig& config);

}  // namespace oes
