#include "oes/selection.hpp"

#include <cmath>

#include "oes/error.hpp"

namespace oes {

FramePoints FramePoints::from(const FrameView& view) {
  FramePoints points;
  points.frame_id = view.frame_id();
  for (std::size_t l = 0; l < kLayerCount; ++l) {
    points.layers[l].reserve(view.layers[l].size());
    for (const Hit& h : view.layers[l]) points.layers[l].push_back(h.position());
  }
  return points;
}

void CutConfig::validate() const {
  auto fail = [](const char* what) { throw Error(ErrorCode::kConfig, what); };
  if (!(delta_lambda_max >= 0.0)) fail("cuts: delta_lambda_max must be >= 0");
  if (!(phi01_min_cos >= -1.0 && phi01_min_cos <= 1.0))
    fail("cuts: phi01_min_cos must be in [-1, 1]");
  if (!(phi12_min_cos >= -1.0 && phi12_min_cos <= 1.0))
    fail("cuts: phi12_min_cos must be in [-1, 1]");
  if (!(rt_min >= 0.0 && rt_min < rt_max)) fail("cuts: need 0 <= rt_min < rt_max");
  if (cuts_max == 0) fail("cuts: cuts_max must be > 0");
}

double delta_lambda(const Vec3& h0, const Vec3& h1, const Vec3& h2,
                    const DetectorGeometry& geometry) {
  const auto& r = geometry.layer_radii;
  const auto t01 = tan_lambda(h0.z, r[0], h1.z, r[1]);
  const auto t12 = tan_lambda(h1.z, r[1], h2.z, r[2]);
  if (!t01 || !t12) return std::numeric_limits<double>::infinity();
  return *t12 - *t01;
}

bool pass_delta_lambda(const Vec3& h0, const Vec3& h1, const Vec3& h2,
                       const DetectorGeometry& geometry,
                       const CutConfig& config) {
  return std::abs(delta_lambda(h0, h1, h2, geometry)) <= config.delta_lambda_max;
}

bool pass_phi(const Vec2& a, const Vec2& b, double min_cos) {
  const auto c = cos_phi(a, b);
  return c && *c >= min_cos;
}

std::pair<bool, double> pass_rt(const Vec3& h0, const Vec3& h1, const Vec3& h2,
                                const CutConfig& config) {
  const double rt = circle_radius_3pt(h0, h1, h2);
  if (std::isinf(rt)) return {false, rt};
  const double a = std::abs(rt);
  return {a >= config.rt_min && a <= config.rt_max, rt};
}

SelectionResult select_triplets(const FramePoints& frame,
                                const DetectorGeometry& geometry,
                                const CutConfig& config) {
  SelectionResult result;
  const auto& l0 = frame.layers[0];
  const auto& l1 = frame.layers[1];
  const auto& l2 = frame.layers[2];
  const auto& r = geometry.layer_radii;
  const double inv_dr01 = 1.0 / (r[1] - r[0]);
  const double inv_dr12 = 1.0 / (r[2] - r[1]);

  for (std::uint32_t i0 = 0; i0 < l0.size(); ++i0) {
    const Vec3& h0 = l0[i0];
    for (std::uint32_t i1 = 0; i1 < l1.size(); ++i1) {
      const Vec3& h1 = l1[i1];
      const double t01 = (h1.z - h0.z) * inv_dr01;
      for (std::uint32_t i2 = 0; i2 < l2.size(); ++i2) {
        const Vec3& h2 = l2[i2];
        ++result.funnel.combinations;
        const double t12 = (h2.z - h1.z) * inv_dr12;
        if (!(std::abs(t12 - t01) <= config.delta_lambda_max)) continue;
        ++result.funnel.pass_delta_lambda;
        if (!pass_phi(h0.transverse(), h1.transverse(), config.phi01_min_cos))
          continue;
        ++result.funnel.pass_phi01;
        if (!pass_phi(h1.transverse(), h2.transverse(), config.phi12_min_cos))
          continue;
        ++result.funnel.pass_phi12;
        const auto [ok, rt] = pass_rt(h0, h1, h2, config);
        if (!ok) continue;
        ++result.funnel.pass_rt;
        if (result.triplets.size() >= config.cuts_max) {
          result.overflow = true;
          return result;
        }
        result.triplets.push_back({{i0, i1, i2}, rt});
      }
    }
  }
  return result;
}

}  // namespace oes
