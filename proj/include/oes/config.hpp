#pragma once

#include <string>
#include <vector>

#include "oes/framestore.hpp"
#include "oes/geometry.hpp"
#include "oes/keyvalue.hpp"
#include "oes/selection.hpp"
#include "oes/toygen.hpp"
#include "oes/triplet_fit.hpp"
#include "oes/vertex_fit.hpp"

namespace oes {

struct PipelineConfig {
  std::size_t worker_count = 1;
  std::size_t chunk_queue_depth = 4;
  std::size_t chunk_capacity = kDefaultChunkCapacity;

  void validate() const;
};

/// Everything a run needs, loadable from a `key = value` file such as
///
///   geometry.layer_radii = 23.3, 29.8, 73.9, 86.3
///   cuts.delta_lambda_max = 0.12
///   pipeline.worker_count = 8
///
/// Keys are `<section>.<field>`; unknown keys are rejected and every section
/// is re-validated after loading.
struct RunConfig {
  DetectorGeometry geometry;
  GenConfig gen;
  CutConfig cuts;
  FitConfig fit;
  VertexConfig vertex;
  PipelineConfig pipeline;

  void validate() const;

  static RunConfig load(const std::string& path);
  static RunConfig from_key_values(const KeyValueFile& kv);
  KeyValueFile to_key_values() const;
  void save(const std::string& path) const;

  /// Sets one key from its text form. Does not re-validate.
  void set(const std::string& key, const std::string& value);
  std::string get(const std::string& key) const;
  static const std::vector<std::string>& keys();
};

}  // namespace oes
