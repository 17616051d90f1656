#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "oes/geometry.hpp"

namespace oes {

/// Chunk layout (little-endian):
///
///   [0, 12*n_hits)                      hit records, 3 x float32 each
///   ...                                 zero padding
///   [cap-4-28*k, cap-4)                 k frame descriptors, frame 0 last
///   [cap-4, cap)                        u32 frame count
///
/// Descriptor i occupies [cap-4-28*(i+1), cap-4-28*i) and holds a u64 frame id
/// followed by five u32 hit indices: the start of each of the four layers and
/// the one-past-the-end index of the frame.
inline constexpr std::size_t kHitBytes = 12;
inline constexpr std::size_t kDescriptorBytes = 28;
inline constexpr std::size_t kFooterBytes = 4;
inline constexpr std::size_t kMinChunkCapacity =
    kHitBytes + kDescriptorBytes + kFooterBytes;
inline constexpr std::size_t kDefaultChunkCapacity = 4u << 20;
inline constexpr std::size_t kLayerCount = 4;

/// Storage form of a hit. Kept as float so frames can be copied verbatim.
struct Hit {
  float x = 0.0f;
  float y = 0.0f;
  float z = 0.0f;

  Vec3 position() const { return {x, y, z}; }
  static Hit from(const Vec3& v) {
    return {static_cast<float>(v.x), static_cast<float>(v.y),
            static_cast<float>(v.z)};
  }
  friend bool operator==(const Hit&, const Hit&) = default;
};

struct FrameDescriptor {
  std::uint64_t frame_id = 0;
  std::array<std::uint32_t, kLayerCount> layer_start{};
  std::uint32_t end_index = 0;

  std::uint32_t layer_size(std::size_t layer) const {
    const std::uint32_t end =
        layer + 1 < kLayerCount ? layer_start[layer + 1] : end_index;
    return end - layer_start[layer];
  }
  std::uint32_t hit_count() const { return end_index - layer_start[0]; }
  friend bool operator==(const FrameDescriptor&,
                         const FrameDescriptor&) = default;
};

using LayerHits = std::array<std::span<const Hit>, kLayerCount>;

/// Sealed, immutable chunk block of exactly `capacity` bytes.
class Chunk {
 public:
  Chunk() = default;
  explicit Chunk(std::vector<std::uint8_t> bytes) : bytes_(std::move(bytes)) {}

  std::span<const std::uint8_t> bytes() const { return bytes_; }
  std::size_t capacity() const { return bytes_.size(); }

 private:
  std::vector<std::uint8_t> bytes_;
};

class ChunkBuilder {
 public:
  enum class PushResult { kAccepted, kChunkFull };

  /// Throws Error(kConfig) when capacity cannot hold a single one-hit frame.
  explicit ChunkBuilder(std::size_t capacity = kDefaultChunkCapacity);

  /// Appends hits layer 0..3 and a descriptor. Returns kChunkFull and leaves
  /// the builder untouched when the frame does not fit; throws
  /// Error(kOversizedFrame) when it would not even fit an empty chunk.
  PushResult push_frame(std::uint64_t frame_id, const LayerHits& hits);

  /// Produces the byte block. The builder can be reused after reset().
  Chunk seal();
  void reset();

  std::size_t capacity() const { return capacity_; }
  std::size_t frame_count() const { return descriptors_.size(); }
  std::size_t hit_count() const { return hits_.size(); }
  bool sealed() const { return sealed_; }
  bool empty() const { return descriptors_.empty(); }

  /// Bytes needed by a frame of n hits, descriptor included.
  static std::size_t frame_bytes(std::size_t n_hits) {
    return n_hits * kHitBytes + kDescriptorBytes;
  }

 private:
  std::size_t used_bytes() const {
    return hits_.size() * kHitBytes + descriptors_.size() * kDescriptorBytes +
           kFooterBytes;
  }

  std::size_t capacity_;
  std::vector<Hit> hits_;
  std::vector<FrameDescriptor> descriptors_;
  bool sealed_ = false;
};

/// One frame of a parsed chunk: per-layer slices into the chunk's hit array.
struct FrameView {
  FrameDescriptor descriptor;
  LayerHits layers;

  std::uint64_t frame_id() const { return descriptor.frame_id; }
  std::size_t hit_count() const { return descriptor.hit_count(); }
};

/// Decoded chunk. Validation happens once in parse(); frame access afterwards
/// is O(1) from the descriptors.
class ParsedChunk {
 public:
  /// Throws Error(kCorruptData) naming the first violated layout invariant.
  static ParsedChunk parse(std::span<const std::uint8_t> bytes,
                           std::size_t capacity);

  std::size_t frame_count() const { return descriptors_.size(); }
  FrameView frame(std::size_t i) const;
  std::span<const Hit> hits() const { return hits_; }
  std::span<const FrameDescriptor> descriptors() const { return descriptors_; }

 private:
  std::vector<Hit> hits_;
  std::vector<FrameDescriptor> descriptors_;
};

/// Sidecar next to a chunk file (`<path>.hdr`), key = value text.
struct ChunkFileHeader {
  std::size_t capacity = kDefaultChunkCapacity;
  std::uint64_t geometry_hash = 0;

  static std::string path_for(const std::string& chunk_path) {
    return chunk_path + ".hdr";
  }
  void write(const std::string& chunk_path) const;
  static ChunkFileHeader read(const std::string& chunk_path);
};

/// Sequential writer of capacity-sized blocks.
class ChunkFileWriter {
 public:
  ChunkFileWriter(const std::string& path, const ChunkFileHeader& header);

  void write(const Chunk& chunk);
  void close();
  std::size_t chunks_written() const { return chunks_written_; }

 private:
  std::string path_;
  ChunkFileHeader header_;
  std::ofstream out_;
  std::size_t chunks_written_ = 0;
};

/// Sequential reader; the header sidecar supplies the block size.
class ChunkFileReader {
 public:
  explicit ChunkFileReader(const std::string& path);
  ChunkFileReader(const std::string& path, std::size_t capacity);

  const ChunkFileHeader& header() const { return header_; }
  std::size_t chunk_count() const { return chunk_count_; }

  /// Next raw block, or empty at end of file.
  std::optional<Chunk> next();

 private:
  void open(const std::string& path);

  ChunkFileHeader header_;
  std::ifstream in_;
  std::size_t chunk_count_ = 0;
  std::size_t read_ = 0;
};

/// Streams frames into a file, sealing a chunk whenever the next frame would
/// overflow it.
class ChunkStreamWriter {
 public:
  ChunkStreamWriter(const std::string& path, const ChunkFileHeader& header);

  void push_frame(std::uint64_t frame_id, const LayerHits& hits);
  void finish();

 private:
  ChunkBuilder builder_;
  ChunkFileWriter file_;
};

}  // namespace oes
