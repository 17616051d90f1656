#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "oes/framestore.hpp"
#include "oes/geometry.hpp"

namespace oes {

using Rng = std::mt19937_64;

enum class ParticleKind {
  kSignalPositron,
  kSignalElectron,
  kMichelPositron,
  kConversionPositron,
  kConversionElectron,
  kNoise,
};

const char* to_string(ParticleKind kind);
ParticleKind particle_kind_from_string(const std::string& text);

struct TruthParticle {
  int charge = 1;
  Vec3 momentum;  // MeV/c at production
  Vec3 origin;
  ParticleKind kind = ParticleKind::kMichelPositron;
  /// Index into the frame's layer slice, -1 where the particle left no hit.
  std::array<std::int32_t, 4> hit_index{-1, -1, -1, -1};

  bool has_all_layers() const {
    for (auto i : hit_index)
      if (i < 0) return false;
    return true;
  }
};

struct TruthFrame {
  std::uint64_t frame_id = 0;
  std::vector<TruthParticle> particles;
  bool is_signal_frame = false;
  std::uint32_t n_decays = 0;

  /// Signal frame whose three decay products all crossed the four layers.
  bool signal_reconstructable() const;
};

struct GenConfig {
  double muon_rate = 1e8;      // muons per second
  double frame_length = 64.0;  // ns
  std::uint64_t seed = 1;
  /// Fixed scattering width per layer crossing in rad; empty means Highland at
  /// each particle's momentum with x_over_x0 per layer.
  std::optional<double> sigma_ms;
  double x_over_x0 = 0.00115;
  double pixel_sigma = 0.08 / 3.4641016151377544;  // 80 um pitch / sqrt(12)
  double noise_hits_per_frame = 2.0;
  /// Probability that a frame carries one signal decay on top of the
  /// Poisson-distributed Michel decays.
  double signal_fraction = 0.0;
  /// Fraction of ordinary decays replaced by a signal-like triple with
  /// part of the energy removed (crude internal-conversion stand-in).
  double conversion_fraction = 0.0;
  double conversion_energy_loss = 0.1;

  void validate() const;
  double mean_decays_per_frame() const { return muon_rate * frame_length * 1e-9; }
};

/// mu+ -> e+ e- e+ at rest at `origin`, uniform over three-body phase space.
/// Entries 0 and 1 are the positrons.
std::array<TruthParticle, 3> generate_signal_event(Rng& rng, const Vec3& origin);

TruthParticle generate_michel_positron(Rng& rng, const Vec3& origin);

/// Endpoint of the Michel momentum spectrum, m_mu c / 2.
inline constexpr double kMichelEndpoint = PhysicsConstants::muon_rest_energy / 2.0;

/// Analytic CDF of the Michel shape 3x^2 - 2x^3 in x = p / endpoint.
double michel_cdf(double x);

/// Scattering width used for a particle of the given momentum.
double scattering_sigma(const GenConfig& config, double momentum);

/// Swims the particle outward through the four layers, scattering after each
/// crossing and smearing the recorded position on the cylinder surface.
std::array<std::optional<Vec3>, 4> propagate_to_layers(
    const TruthParticle& particle, const DetectorGeometry& geometry,
    const GenConfig& config, Rng& rng);

/// Uniform point in the target disk.
Vec3 sample_target_point(Rng& rng, const DetectorGeometry& geometry);

struct GeneratedFrame {
  TruthFrame truth;
  std::array<std::vector<Hit>, 4> hits;

  LayerHits layer_hits() const {
    return {hits[0], hits[1], hits[2], hits[3]};
  }
};

class ToyGenerator {
 public:
  ToyGenerator(const GenConfig& config, const DetectorGeometry& geometry);

  GeneratedFrame next_frame();

  const GenConfig& config() const { return config_; }

 private:
  void add_particle(GeneratedFrame& frame, TruthParticle particle);

  GenConfig config_;
  DetectorGeometry geometry_;
  Rng rng_;
  std::uint64_t next_id_ = 0;
};

/// Writes a chunk file (plus header sidecar) and the truth sidecar.
void generate_stream(const GenConfig& config, const DetectorGeometry& geometry,
                     std::uint64_t n_frames, std::size_t chunk_capacity,
                     const std::string& chunk_path,
                     const std::string& truth_path);

// Truth sidecar: one JSON object per line, keyed by frame_id.
void write_truth_line(std::ostream& out, const TruthFrame& frame);
TruthFrame parse_truth_line(const std::string& line);
std::vector<TruthFrame> read_truth_file(const std::string& path);

}  // namespace oes
