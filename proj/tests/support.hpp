#pragma once

// Shared helpers for the unit and acceptance tests.

#include <array>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "oes/framestore.hpp"
#include "oes/geometry.hpp"
#include "oes/selection.hpp"

namespace oes::test {

// Exact helix of a charged particle from `origin`, intersected with the four
// layers. Empty entries where the helix turns back first.
inline std::array<std::optional<Vec3>, 4> helix_hits(
    const DetectorGeometry& g, const Vec3& origin, double pt, double phi0,
    double tan_dip, int charge) {
  HelixState s;
  s.position = origin;
  s.phi = phi0;
  s.tan_dip = tan_dip;
  s.kappa = charge / radius_from_pt(pt, g.b_field);
  std::array<std::optional<Vec3>, 4> out;
  for (std::size_t l = 0; l < 4; ++l) {
    auto next = propagate_to_cylinder(s, g.layer_radii[l]);
    if (!next) break;
    s = *next;
    out[l] = s.position;
  }
  return out;
}

inline bool all_layers(const std::array<std::optional<Vec3>, 4>& h) {
  for (const auto& v : h)
    if (!v) return false;
  return true;
}

inline FramePoints single_track_frame(const std::array<std::optional<Vec3>, 4>& h) {
  FramePoints f;
  for (std::size_t l = 0; l < 4; ++l)
    if (h[l]) f.layers[l].push_back(*h[l]);
  return f;
}

// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("oes_test_" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

inline double rel_diff(double a, double b) {
  return std::abs(a - b) / std::max(std::abs(a), std::abs(b));
}

}  // namespace oes::test
