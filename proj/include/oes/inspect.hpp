#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "oes/config.hpp"
#include "oes/pipeline.hpp"

namespace oes {

/// Reads frames from a chunk file until `frame_id` turns up. Throws
/// Error(kUsage) when the file does not contain it.
FramePoints find_frame(const std::string& chunk_path, std::uint64_t frame_id);

/// Per-layer hit counts, cut survivors, fitted tracks and the vertex result,
/// as text. Truth, when given, marks the tracks that match a particle.
std::string describe_frame(const FramePoints& frame, const RunConfig& config,
                           const TruthFrame* truth = nullptr);

}  // namespace oes
