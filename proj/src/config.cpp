#include "oes/config.hpp"

#include <algorithm>
#include <functional>

#include "oes/error.hpp"

namespace oes {

namespace {

struct Field {
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&, const std::string&)> set;
};

template <typename Section>
Field real(Section RunConfig::*section, double Section::*member) {
  return {[=](const RunConfig& c) { return format_double(c.*section.*member); },
          [=](RunConfig& c, const std::string& key, const std::string& v) {
            c.*section.*member = parse_double(v, key);
          }};
}

template <typename Section, typename Int>
Field integer(Section RunConfig::*section, Int Section::*member) {
  return {[=](const RunConfig& c) { return std::to_string(c.*section.*member); },
          [=](RunConfig& c, const std::string& key, const std::string& v) {
            c.*section.*member = static_cast<Int>(parse_unsigned(v, key));
          }};
}

Field layer_array(std::array<double, 4> DetectorGeometry::*member) {
  return {[=](const RunConfig& c) {
            std::string out;
            for (double v : c.geometry.*member) {
              if (!out.empty()) out += ", ";
              out += format_double(v);
            }
            return out;
          },
          [=](RunConfig& c, const std::string& key, const std::string& v) {
            const auto values = parse_double_list(v, key);
            if (values.size() != 4)
              throw Error(ErrorCode::kConfig, key + " needs exactly 4 values");
            std::copy(values.begin(), values.end(), (c.geometry.*member).begin());
          }};
}

const std::vector<std::pair<std::string, Field>>& fields() {
  static const std::vector<std::pair<std::string, Field>> table = [] {
    using R = RunConfig;
    std::vector<std::pair<std::string, Field>> t;
    t.emplace_back("geometry.layer_radii", layer_array(&DetectorGeometry::layer_radii));
    t.emplace_back("geometry.layer_half_length",
                   layer_array(&DetectorGeometry::layer_half_length));
    t.emplace_back("geometry.target_radius",
                   real(&R::geometry, &DetectorGeometry::target_radius));
    t.emplace_back("geometry.target_half_length",
                   real(&R::geometry, &DetectorGeometry::target_half_length));
    t.emplace_back("geometry.b_field", real(&R::geometry, &DetectorGeometry::b_field));

    t.emplace_back("gen.muon_rate", real(&R::gen, &GenConfig::muon_rate));
    t.emplace_back("gen.frame_length", real(&R::gen, &GenConfig::frame_length));
    t.emplace_back("gen.seed", integer(&R::gen, &GenConfig::seed));
    t.emplace_back(
        "gen.sigma_ms",
        Field{[](const RunConfig& c) {
                return c.gen.sigma_ms ? format_double(*c.gen.sigma_ms)
                                      : std::string("highland");
              },
              [](RunConfig& c, const std::string& key, const std::string& v) {
                if (v == "highland")
                  c.gen.sigma_ms.reset();
                else
                  c.gen.sigma_ms = parse_double(v, key);
              }});
    t.emplace_back("gen.x_over_x0", real(&R::gen, &GenConfig::x_over_x0));
    t.emplace_back("gen.pixel_sigma", real(&R::gen, &GenConfig::pixel_sigma));
    t.emplace_back("gen.noise_hits_per_frame",
                   real(&R::gen, &GenConfig::noise_hits_per_frame));
    t.emplace_back("gen.signal_fraction", real(&R::gen, &GenConfig::signal_fraction));
    t.emplace_back("gen.conversion_fraction",
                   real(&R::gen, &GenConfig::conversion_fraction));
    t.emplace_back("gen.conversion_energy_loss",
                   real(&R::gen, &GenConfig::conversion_energy_loss));

    t.emplace_back("cuts.delta_lambda_max", real(&R::cuts, &CutConfig::delta_lambda_max));
    t.emplace_back("cuts.phi01_min_cos", real(&R::cuts, &CutConfig::phi01_min_cos));
    t.emplace_back("cuts.phi12_min_cos", real(&R::cuts, &CutConfig::phi12_min_cos));
    t.emplace_back("cuts.rt_min", real(&R::cuts, &CutConfig::rt_min));
    t.emplace_back("cuts.rt_max", real(&R::cuts, &CutConfig::rt_max));
    t.emplace_back("cuts.cuts_max", integer(&R::cuts, &CutConfig::cuts_max));

    t.emplace_back("fit.chi2_max", real(&R::fit, &FitConfig::chi2_max));
    t.emplace_back("fit.max_tracks", integer(&R::fit, &FitConfig::max_tracks));
    t.emplace_back("fit.x_over_x0", real(&R::fit, &FitConfig::x_over_x0));

    t.emplace_back("vertex.energy_window", real(&R::vertex, &VertexConfig::energy_window));
    t.emplace_back("vertex.chi2_vertex_max",
                   real(&R::vertex, &VertexConfig::chi2_vertex_max));
    t.emplace_back("vertex.target_margin", real(&R::vertex, &VertexConfig::target_margin));
    t.emplace_back("vertex.p_total_max", real(&R::vertex, &VertexConfig::p_total_max));
    t.emplace_back("vertex.max_track_combs",
                   integer(&R::vertex, &VertexConfig::max_track_combs));
    t.emplace_back("vertex.pixel_sigma", real(&R::vertex, &VertexConfig::pixel_sigma));

    t.emplace_back("pipeline.worker_count",
                   integer(&R::pipeline, &PipelineConfig::worker_count));
    t.emplace_back("pipeline.chunk_queue_depth",
                   integer(&R::pipeline, &PipelineConfig::chunk_queue_depth));
    t.emplace_back("pipeline.chunk_capacity",
                   integer(&R::pipeline, &PipelineConfig::chunk_capacity));
    return t;
  }();
  return table;
}

const Field& field(const std::string& key) {
  for (const auto& [name, f] : fields()) {
    if (name == key) return f;
  }
  throw Error(ErrorCode::kConfig, "unknown config key '" + key + "'");
}

}  // namespace

void PipelineConfig::validate() const {
  if (worker_count == 0) throw Error(ErrorCode::kConfig, "pipeline: worker_count must be >= 1");
  if (chunk_queue_depth == 0)
    throw Error(ErrorCode::kConfig, "pipeline: chunk_queue_depth must be >= 1");
  if (chunk_capacity < kMinChunkCapacity)
    throw Error(ErrorCode::kConfig, "pipeline: chunk_capacity below the minimum");
}

void RunConfig::validate() const {
  geometry.validate();
  gen.validate();
  cuts.validate();
  fit.validate();
  vertex.validate();
  pipeline.validate();
}

RunConfig RunConfig::load(const std::string& path) {
  return from_key_values(KeyValueFile::load(path));
}

RunConfig RunConfig::from_key_values(const KeyValueFile& kv) {
  RunConfig config;
  for (const auto& [key, value] : kv.entries()) config.set(key, value);
  config.validate();
  return config;
}

KeyValueFile RunConfig::to_key_values() const {
  KeyValueFile kv;
  for (const auto& [name, f] : fields()) kv.set(name, f.get(*this));
  return kv;
}

void RunConfig::save(const std::string& path) const { to_key_values().save(path); }

void RunConfig::set(const std::string& key, const std::string& value) {
  field(key).set(*this, key, value);
}

std::string RunConfig::get(const std::string& key) const {
  return field(key).get(*this);
}

const std::vector<std::string>& RunConfig::keys() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& entry : fields()) out.push_back(entry.first);
    return out;
  }();
  return names;
}

}  // namespace oes
