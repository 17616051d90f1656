#include "oes/toygen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>

#include "json.hpp"

#include "oes/error.hpp"

namespace oes {

namespace {

constexpr double kMuonMass = PhysicsConstants::muon_rest_energy;
constexpr double kElectronMass = PhysicsConstants::electron_mass;

Vec3 isotropic_direction(Rng& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  const double cos_theta = u(rng);
  const double sin_theta = std::sqrt(1.0 - cos_theta * cos_theta);
  const double phi = angle(rng);
  return {sin_theta * std::cos(phi), sin_theta * std::sin(phi), cos_theta};
}

// Uniformly distributed rotation from a normalised Gaussian quaternion.
struct Rotation {
  double m[3][3];

  static Rotation random(Rng& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    double w = n(rng), x = n(rng), y = n(rng), z = n(rng);
    const double norm = std::sqrt(w * w + x * x + y * y + z * z);
    w /= norm, x /= norm, y /= norm, z /= norm;
    return {{{1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)},
             {2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)},
             {2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)}}};
  }

  Vec3 apply(const Vec3& v) const {
    return {m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
            m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
            m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z};
  }
};

double momentum_from_energy(double e) {
  return std::sqrt(std::max(0.0, e * e - kElectronMass * kElectronMass));
}

}  // namespace

const char* to_string(ParticleKind kind) {
  switch (kind) {
    case ParticleKind::kSignalPositron: return "signal_e+";
    case ParticleKind::kSignalElectron: return "signal_e-";
    case ParticleKind::kMichelPositron: return "michel_e+";
    case ParticleKind::kConversionPositron: return "conversion_e+";
    case ParticleKind::kConversionElectron: return "conversion_e-";
    case ParticleKind::kNoise: return "noise";
  }
  return "unknown";
}

ParticleKind particle_kind_from_string(const std::string& text) {
  for (auto kind : {ParticleKind::kSignalPositron, ParticleKind::kSignalElectron,
                    ParticleKind::kMichelPositron,
                    ParticleKind::kConversionPositron,
                    ParticleKind::kConversionElectron, ParticleKind::kNoise}) {
    if (text == to_string(kind)) return kind;
  }
  throw Error(ErrorCode::kCorruptData, "unknown particle kind '" + text + "'");
}

bool TruthFrame::signal_reconstructable() const {
  if (!is_signal_frame) return false;
  int complete = 0;
  for (const auto& p : particles) {
    if (p.kind == ParticleKind::kSignalPositron ||
        p.kind == ParticleKind::kSignalElectron) {
      if (!p.has_all_layers()) return false;
      ++complete;
    }
  }
  return complete == 3;
}

void GenConfig::validate() const {
  auto fail = [](const char* what) { throw Error(ErrorCode::kConfig, what); };
  if (!(muon_rate >= 0.0)) fail("gen: muon_rate must be >= 0");
  if (!(frame_length > 0.0)) fail("gen: frame_length must be > 0");
  if (sigma_ms && !(*sigma_ms >= 0.0)) fail("gen: sigma_ms must be >= 0");
  if (!(x_over_x0 > 0.0)) fail("gen: x_over_x0 must be > 0");
  if (!(pixel_sigma >= 0.0)) fail("gen: pixel_sigma must be >= 0");
  if (!(noise_hits_per_frame >= 0.0))
    fail("gen: noise_hits_per_frame must be >= 0");
  if (!(signal_fraction >= 0.0 && signal_fraction <= 1.0))
    fail("gen: signal_fraction must be in [0, 1]");
  if (!(conversion_fraction >= 0.0 && conversion_fraction <= 1.0))
    fail("gen: conversion_fraction must be in [0, 1]");
  if (!(conversion_energy_loss >= 0.0 && conversion_energy_loss < 1.0))
    fail("gen: conversion_energy_loss must be in [0, 1)");
}

std::array<TruthParticle, 3> generate_signal_event(Rng& rng,
                                                   const Vec3& origin) {
  // Flat Dalitz density is flat in (E1, E2); reject points whose momenta
  // cannot close into a triangle.
  const double e_max =
      (kMuonMass * kMuonMass - 3.0 * kElectronMass * kElectronMass) /
      (2.0 * kMuonMass);
  std::uniform_real_distribution<double> energy(kElectronMass, e_max);
  double e1, e2, e3, p1, p2, p3;
  for (;;) {
    e1 = energy(rng);
    e2 = energy(rng);
    e3 = kMuonMass - e1 - e2;
    if (e3 < kElectronMass) continue;
    p1 = momentum_from_energy(e1);
    p2 = momentum_from_energy(e2);
    p3 = momentum_from_energy(e3);
    if (p3 <= p1 + p2 && p3 >= std::abs(p1 - p2) && p1 > 0.0 && p2 > 0.0) break;
  }

  const double cos12 =
      std::clamp((p3 * p3 - p1 * p1 - p2 * p2) / (2.0 * p1 * p2), -1.0, 1.0);
  const double sin12 = std::sqrt(1.0 - cos12 * cos12);
  const Vec3 a{0.0, 0.0, p1};
  const Vec3 b{p2 * sin12, 0.0, p2 * cos12};
  const Vec3 c = (a + b) * -1.0;

  const Rotation rot = Rotation::random(rng);
  std::array<TruthParticle, 3> out;
  const Vec3 momenta[3] = {rot.apply(a), rot.apply(b), rot.apply(c)};
  for (int i = 0; i < 3; ++i) {
    out[i].momentum = momenta[i];
    out[i].origin = origin;
    out[i].charge = i < 2 ? 1 : -1;
    out[i].kind =
        i < 2 ? ParticleKind::kSignalPositron : ParticleKind::kSignalElectron;
  }
  return out;
}

double michel_cdf(double x) {
  x = std::clamp(x, 0.0, 1.0);
  return 2.0 * x * x * x - x * x * x * x;
}

TruthParticle generate_michel_positron(Rng& rng, const Vec3& origin) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double x;
  do {
    x = 1.0 - u(rng);  // (0, 1]
  } while (u(rng) > 3.0 * x * x - 2.0 * x * x * x);

  TruthParticle p;
  p.charge = 1;
  p.kind = ParticleKind::kMichelPositron;
  p.origin = origin;
  p.momentum = isotropic_direction(rng) * (x * kMichelEndpoint);
  return p;
}

double scattering_sigma(const GenConfig& config, double momentum) {
  if (config.sigma_ms) return *config.sigma_ms;
  return highland_sigma(momentum, kElectronMass, config.x_over_x0);
}

std::array<std::optional<Vec3>, 4> propagate_to_layers(
    const TruthParticle& particle, const DetectorGeometry& geometry,
    const GenConfig& config, Rng& rng) {
  std::array<std::optional<Vec3>, 4> hits;
  const Vec3& p = particle.momentum;
  const double momentum = p.norm();
  const double pt = std::hypot(p.x, p.y);
  if (!(pt > 0.0) || particle.charge == 0) return hits;

  HelixState state;
  state.position = particle.origin;
  state.phi = std::atan2(p.y, p.x);
  state.tan_dip = p.z / pt;
  state.kappa = particle.charge / radius_from_pt(pt, geometry.b_field);

  std::normal_distribution<double> gauss(0.0, 1.0);
  const double sigma = scattering_sigma(config, momentum);
  for (std::size_t layer = 0; layer < hits.size(); ++layer) {
    const double radius = geometry.layer_radii[layer];
    const auto next = propagate_to_cylinder(state, radius);
    if (!next) break;
    state = *next;
    if (std::abs(state.position.z) > geometry.layer_half_length[layer]) continue;

    double azimuth = std::atan2(state.position.y, state.position.x);
    double z = state.position.z;
    if (config.pixel_sigma > 0.0) {
      azimuth += config.pixel_sigma * gauss(rng) / radius;
      z += config.pixel_sigma * gauss(rng);
    }
    hits[layer] = Vec3{radius * std::cos(azimuth), radius * std::sin(azimuth), z};

    if (sigma > 0.0 && layer + 1 < hits.size()) {
      const double dip = std::atan(state.tan_dip) + sigma * gauss(rng);
      const double cos_dip = std::cos(dip);
      state.phi += sigma / std::cos(std::atan(state.tan_dip)) * gauss(rng);
      state.tan_dip = std::tan(dip);
      // |p| is conserved, so the transverse part follows the new dip.
      const double new_pt = momentum * std::abs(cos_dip);
      state.kappa = particle.charge / radius_from_pt(new_pt, geometry.b_field);
    }
  }
  return hits;
}

Vec3 sample_target_point(Rng& rng, const DetectorGeometry& geometry) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double r = geometry.target_radius * std::sqrt(u(rng));
  const double phi = 2.0 * std::numbers::pi * u(rng);
  const double z = geometry.target_half_length * (2.0 * u(rng) - 1.0);
  return {r * std::cos(phi), r * std::sin(phi), z};
}

ToyGenerator::ToyGenerator(const GenConfig& config,
                           const DetectorGeometry& geometry)
    : config_(config), geometry_(geometry), rng_(config.seed) {
  config_.validate();
  geometry_.validate();
}

void ToyGenerator::add_particle(GeneratedFrame& frame, TruthParticle particle) {
  const auto hits = propagate_to_layers(particle, geometry_, config_, rng_);
  for (std::size_t layer = 0; layer < hits.size(); ++layer) {
    if (!hits[layer]) continue;
    particle.hit_index[layer] =
        static_cast<std::int32_t>(frame.hits[layer].size());
    frame.hits[layer].push_back(Hit::from(*hits[layer]));
  }
  frame.truth.particles.push_back(particle);
}

GeneratedFrame ToyGenerator::next_frame() {
  GeneratedFrame frame;
  frame.truth.frame_id = next_id_++;
  std::uniform_real_distribution<double> u(0.0, 1.0);

  auto add_triple = [&](std::array<TruthParticle, 3> triple, bool conversion) {
    for (auto& p : triple) {
      if (conversion) {
        p.momentum = p.momentum * (1.0 - config_.conversion_energy_loss);
        p.kind = p.charge > 0 ? ParticleKind::kConversionPositron
                              : ParticleKind::kConversionElectron;
      }
      add_particle(frame, p);
    }
  };

  if (config_.signal_fraction > 0.0 && u(rng_) < config_.signal_fraction) {
    const Vec3 origin = sample_target_point(rng_, geometry_);
    add_triple(generate_signal_event(rng_, origin), false);
    frame.truth.is_signal_frame = true;
    ++frame.truth.n_decays;
  }

  const double mean = config_.mean_decays_per_frame();
  const std::uint32_t n_decays =
      mean > 0.0 ? std::poisson_distribution<std::uint32_t>(mean)(rng_) : 0;
  for (std::uint32_t i = 0; i < n_decays; ++i) {
    const Vec3 origin = sample_target_point(rng_, geometry_);
    if (config_.conversion_fraction > 0.0 &&
        u(rng_) < config_.conversion_fraction) {
      add_triple(generate_signal_event(rng_, origin), true);
    } else {
      add_particle(frame, generate_michel_positron(rng_, origin));
    }
  }
  frame.truth.n_decays += n_decays;

  const std::uint32_t n_noise =
      config_.noise_hits_per_frame > 0.0
          ? std::poisson_distribution<std::uint32_t>(
                config_.noise_hits_per_frame)(rng_)
          : 0;
  std::uniform_int_distribution<std::size_t> pick_layer(0, 3);
  for (std::uint32_t i = 0; i < n_noise; ++i) {
    const std::size_t layer = pick_layer(rng_);
    const double radius = geometry_.layer_radii[layer];
    const double phi = 2.0 * std::numbers::pi * u(rng_);
    const double z = geometry_.layer_half_length[layer] * (2.0 * u(rng_) - 1.0);
    TruthParticle noise;
    noise.kind = ParticleKind::kNoise;
    noise.charge = 0;
    noise.hit_index[layer] = static_cast<std::int32_t>(frame.hits[layer].size());
    frame.hits[layer].push_back(
        Hit::from({radius * std::cos(phi), radius * std::sin(phi), z}));
    frame.truth.particles.push_back(noise);
  }

  // Hit order within a layer carries no truth information.
  for (std::size_t layer = 0; layer < frame.hits.size(); ++layer) {
    auto& hits = frame.hits[layer];
    std::vector<std::int32_t> order(hits.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng_);
    std::vector<std::int32_t> new_index(hits.size());
    std::vector<Hit> shuffled(hits.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
      shuffled[i] = hits[order[i]];
      new_index[order[i]] = static_cast<std::int32_t>(i);
    }
    hits = std::move(shuffled);
    for (auto& p : frame.truth.particles) {
      if (p.hit_index[layer] >= 0) p.hit_index[layer] = new_index[p.hit_index[layer]];
    }
  }
  return frame;
}

void generate_stream(const GenConfig& config, const DetectorGeometry& geometry,
                     std::uint64_t n_frames, std::size_t chunk_capacity,
                     const std::string& chunk_path,
                     const std::string& truth_path) {
  ToyGenerator gen(config, geometry);
  ChunkFileHeader header;
  header.capacity = chunk_capacity;
  header.geometry_hash = geometry.hash();
  ChunkStreamWriter writer(chunk_path, header);
  std::ofstream truth(truth_path, std::ios::trunc);
  if (!truth) throw Error(ErrorCode::kIo, "cannot open " + truth_path);
  for (std::uint64_t i = 0; i < n_frames; ++i) {
    const GeneratedFrame frame = gen.next_frame();
    writer.push_frame(frame.truth.frame_id, frame.layer_hits());
    write_truth_line(truth, frame.truth);
  }
  writer.finish();
  truth.close();
  if (truth.fail()) throw Error(ErrorCode::kIo, "write failed on " + truth_path);
}

void write_truth_line(std::ostream& out, const TruthFrame& frame) {
  nlohmann::json j;
  j["frame_id"] = frame.frame_id;
  j["is_signal"] = frame.is_signal_frame;
  j["n_decays"] = frame.n_decays;
  nlohmann::json particles = nlohmann::json::array();
  for (const auto& p : frame.particles) {
    particles.push_back({{"kind", to_string(p.kind)},
                         {"charge", p.charge},
                         {"p", {p.momentum.x, p.momentum.y, p.momentum.z}},
                         {"origin", {p.origin.x, p.origin.y, p.origin.z}},
                         {"hits", p.hit_index}});
  }
  j["particles"] = std::move(particles);
  out << j.dump() << '\n';
}

TruthFrame parse_truth_line(const std::string& line) {
  try {
    const auto j = nlohmann::json::parse(line);
    TruthFrame frame;
    frame.frame_id = j.at("frame_id").get<std::uint64_t>();
    frame.is_signal_frame = j.at("is_signal").get<bool>();
    frame.n_decays = j.at("n_decays").get<std::uint32_t>();
    for (const auto& jp : j.at("particles")) {
      TruthParticle p;
      p.kind = particle_kind_from_string(jp.at("kind").get<std::string>());
      p.charge = jp.at("charge").get<int>();
      const auto& mom = jp.at("p");
      p.momentum = {mom.at(0).get<double>(), mom.at(1).get<double>(),
                    mom.at(2).get<double>()};
      const auto& o = jp.at("origin");
      p.origin = {o.at(0).get<double>(), o.at(1).get<double>(),
                  o.at(2).get<double>()};
      p.hit_index = jp.at("hits").get<std::array<std::int32_t, 4>>();
      frame.particles.push_back(p);
    }
    return frame;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kCorruptData,
                std::string("malformed truth record: ") + e.what());
  }
}

std::vector<TruthFrame> read_truth_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  std::vector<TruthFrame> frames;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) frames.push_back(parse_truth_line(line));
  }
  return frames;
}

}  // namespace oes
