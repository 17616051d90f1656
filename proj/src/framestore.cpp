#include "oes/framestore.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <filesystem>
#include <limits>
#include <sstream>

#include "oes/error.hpp"
#include "oes/keyvalue.hpp"

namespace oes {

namespace {

void put_u32(std::uint8_t* p, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) p[i] = static_cast<std::uint8_t>(v >> (8 * i));
}

void put_u64(std::uint8_t* p, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) p[i] = static_cast<std::uint8_t>(v >> (8 * i));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
  return v;
}

std::uint64_t get_u64(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

std::size_t descriptor_offset(std::size_t capacity, std::size_t index) {
  return capacity - kFooterBytes - kDescriptorBytes * (index + 1);
}

[[noreturn]] void corrupt(const std::string& what) {
  throw Error(ErrorCode::kCorruptData, "corrupt chunk: " + what);
}

}  // namespace

ChunkBuilder::ChunkBuilder(std::size_t capacity) : capacity_(capacity) {
  if (capacity < kMinChunkCapacity) {
    throw Error(ErrorCode::kConfig,
                "chunk capacity " + std::to_string(capacity) +
                    " is below the minimum of " +
                    std::to_string(kMinChunkCapacity) + " bytes");
  }
  if (capacity > std::numeric_limits<std::uint32_t>::max() / 2) {
    throw Error(ErrorCode::kConfig, "chunk capacity too large");
  }
}

ChunkBuilder::PushResult ChunkBuilder::push_frame(std::uint64_t frame_id,
                                                  const LayerHits& hits) {
  if (sealed_) throw Error(ErrorCode::kUsage, "push_frame on a sealed chunk");
  std::size_t n = 0;
  for (const auto& layer : hits) n += layer.size();
  const std::size_t needed = frame_bytes(n);
  if (needed + kFooterBytes > capacity_) {
    throw Error(ErrorCode::kOversizedFrame,
                "frame " + std::to_string(frame_id) + " with " +
                    std::to_string(n) + " hits does not fit a chunk of " +
                    std::to_string(capacity_) + " bytes");
  }
  if (used_bytes() + needed > capacity_) return PushResult::kChunkFull;

  FrameDescriptor d;
  d.frame_id = frame_id;
  for (std::size_t layer = 0; layer < kLayerCount; ++layer) {
    d.layer_start[layer] = static_cast<std::uint32_t>(hits_.size());
    hits_.insert(hits_.end(), hits[layer].begin(), hits[layer].end());
  }
  d.end_index = static_cast<std::uint32_t>(hits_.size());
  descriptors_.push_back(d);
  return PushResult::kAccepted;
}

Chunk ChunkBuilder::seal() {
  std::vector<std::uint8_t> bytes(capacity_, 0);
  std::uint8_t* out = bytes.data();
  for (std::size_t i = 0; i < hits_.size(); ++i) {
    std::uint8_t* p = out + i * kHitBytes;
    put_u32(p, std::bit_cast<std::uint32_t>(hits_[i].x));
    put_u32(p + 4, std::bit_cast<std::uint32_t>(hits_[i].y));
    put_u32(p + 8, std::bit_cast<std::uint32_t>(hits_[i].z));
  }
  for (std::size_t i = 0; i < descriptors_.size(); ++i) {
    const FrameDescriptor& d = descriptors_[i];
    std::uint8_t* p = out + descriptor_offset(capacity_, i);
    put_u64(p, d.frame_id);
    for (std::size_t l = 0; l < kLayerCount; ++l)
      put_u32(p + 8 + 4 * l, d.layer_start[l]);
    put_u32(p + 24, d.end_index);
  }
  put_u32(out + capacity_ - kFooterBytes,
          static_cast<std::uint32_t>(descriptors_.size()));
  sealed_ = true;
  return Chunk(std::move(bytes));
}

void ChunkBuilder::reset() {
  hits_.clear();
  descriptors_.clear();
  sealed_ = false;
}

ParsedChunk ParsedChunk::parse(std::span<const std::uint8_t> bytes,
                               std::size_t capacity) {
  if (bytes.size() != capacity) {
    corrupt("block is " + std::to_string(bytes.size()) +
            " bytes, expected capacity " + std::to_string(capacity));
  }
  if (capacity < kMinChunkCapacity) corrupt("capacity below minimum");

  const std::uint8_t* base = bytes.data();
  const std::uint64_t count = get_u32(base + capacity - kFooterBytes);
  if (kFooterBytes + count * kDescriptorBytes > capacity) {
    corrupt("frame_count " + std::to_string(count) +
            " exceeds the descriptor space of the chunk");
  }

  ParsedChunk chunk;
  chunk.descriptors_.reserve(count);
  std::uint32_t expected_start = 0;
  for (std::size_t i = 0; i < count; ++i) {
    const std::uint8_t* p = base + descriptor_offset(capacity, i);
    FrameDescriptor d;
    d.frame_id = get_u64(p);
    for (std::size_t l = 0; l < kLayerCount; ++l)
      d.layer_start[l] = get_u32(p + 8 + 4 * l);
    d.end_index = get_u32(p + 24);

    const std::string where = "frame " + std::to_string(i) + ": ";
    if (d.layer_start[0] != expected_start) {
      corrupt(where + (i == 0 ? "first frame does not start at hit 0"
                              : "frame does not start where the previous "
                                "frame ended"));
    }
    for (std::size_t l = 1; l < kLayerCount; ++l) {
      if (d.layer_start[l] < d.layer_start[l - 1])
        corrupt(where + "layer_start indices not ascending");
    }
    if (d.layer_start[kLayerCount - 1] > d.end_index)
      corrupt(where + "layer_start beyond end_index");
    if (i > 0 && d.frame_id <= chunk.descriptors_.back().frame_id)
      corrupt(where + "frame ids not strictly ascending");
    expected_start = d.end_index;
    chunk.descriptors_.push_back(d);
  }

  const std::size_t hit_bytes = std::size_t{expected_start} * kHitBytes;
  const std::size_t descriptor_begin =
      capacity - kFooterBytes - count * kDescriptorBytes;
  if (hit_bytes > descriptor_begin)
    corrupt("hit area overlaps the descriptor area");
  for (std::size_t i = hit_bytes; i < descriptor_begin; ++i) {
    if (base[i] != 0) corrupt("non-zero byte in the unused region");
  }

  chunk.hits_.resize(expected_start);
  for (std::size_t i = 0; i < chunk.hits_.size(); ++i) {
    const std::uint8_t* p = base + i * kHitBytes;
    Hit& h = chunk.hits_[i];
    h.x = std::bit_cast<float>(get_u32(p));
    h.y = std::bit_cast<float>(get_u32(p + 4));
    h.z = std::bit_cast<float>(get_u32(p + 8));
    if (!std::isfinite(h.x) || !std::isfinite(h.y) || !std::isfinite(h.z))
      corrupt("non-finite coordinate in hit " + std::to_string(i));
  }
  return chunk;
}

FrameView ParsedChunk::frame(std::size_t i) const {
  FrameView view;
  view.descriptor = descriptors_.at(i);
  const std::span<const Hit> all = hits_;
  for (std::size_t l = 0; l < kLayerCount; ++l) {
    view.layers[l] =
        all.subspan(view.descriptor.layer_start[l], view.descriptor.layer_size(l));
  }
  return view;
}

void ChunkFileHeader::write(const std::string& chunk_path) const {
  KeyValueFile kv;
  kv.set("capacity", std::to_string(capacity));
  std::ostringstream hash;
  hash << "0x" << std::hex << geometry_hash;
  kv.set("geometry_hash", hash.str());
  kv.save(path_for(chunk_path));
}

ChunkFileHeader ChunkFileHeader::read(const std::string& chunk_path) {
  const KeyValueFile kv = KeyValueFile::load(path_for(chunk_path));
  ChunkFileHeader h;
  for (const auto& [key, value] : kv.entries()) {
    if (key == "capacity") {
      h.capacity = static_cast<std::size_t>(parse_unsigned(value, key));
    } else if (key == "geometry_hash") {
      h.geometry_hash = parse_unsigned(value, key);
    } else {
      throw Error(ErrorCode::kCorruptData,
                  "unknown key '" + key + "' in " + path_for(chunk_path));
    }
  }
  return h;
}

ChunkFileWriter::ChunkFileWriter(const std::string& path,
                                 const ChunkFileHeader& header)
    : path_(path), header_(header), out_(path, std::ios::binary | std::ios::trunc) {
  if (!out_) throw Error(ErrorCode::kIo, "cannot open " + path + " for writing");
  header_.write(path);
}

void ChunkFileWriter::write(const Chunk& chunk) {
  if (chunk.capacity() != header_.capacity) {
    throw Error(ErrorCode::kUsage, "chunk capacity does not match file header");
  }
  out_.write(reinterpret_cast<const char*>(chunk.bytes().data()),
             static_cast<std::streamsize>(chunk.capacity()));
  if (!out_) throw Error(ErrorCode::kIo, "write failed on " + path_);
  ++chunks_written_;
}

void ChunkFileWriter::close() {
  out_.close();
  if (out_.fail()) throw Error(ErrorCode::kIo, "close failed on " + path_);
}

ChunkFileReader::ChunkFileReader(const std::string& path)
    : header_(ChunkFileHeader::read(path)) {
  open(path);
}

ChunkFileReader::ChunkFileReader(const std::string& path, std::size_t capacity) {
  header_.capacity = capacity;
  open(path);
}

void ChunkFileReader::open(const std::string& path) {
  std::error_code ec;
  const auto size = std::filesystem::file_size(path, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot stat " + path + ": " + ec.message());
  if (header_.capacity < kMinChunkCapacity)
    throw Error(ErrorCode::kCorruptData, "chunk capacity in header too small");
  if (size % header_.capacity != 0) {
    throw Error(ErrorCode::kCorruptData,
                path + " is not a whole number of " +
                    std::to_string(header_.capacity) + "-byte chunks");
  }
  chunk_count_ = size / header_.capacity;
  in_.open(path, std::ios::binary);
  if (!in_) throw Error(ErrorCode::kIo, "cannot open " + path);
}

std::optional<Chunk> ChunkFileReader::next() {
  if (read_ == chunk_count_) return std::nullopt;
  std::vector<std::uint8_t> bytes(header_.capacity);
  in_.read(reinterpret_cast<char*>(bytes.data()),
           static_cast<std::streamsize>(bytes.size()));
  if (!in_) {
    throw Error(ErrorCode::kIo, "short read in chunk " + std::to_string(read_));
  }
  ++read_;
  return Chunk(std::move(bytes));
}

ChunkStreamWriter::ChunkStreamWriter(const std::string& path,
                                     const ChunkFileHeader& header)
    : builder_(header.capacity), file_(path, header) {}

void ChunkStreamWriter::push_frame(std::uint64_t frame_id,
                                   const LayerHits& hits) {
  if (builder_.push_frame(frame_id, hits) ==
      ChunkBuilder::PushResult::kAccepted) {
    return;
  }
  file_.write(builder_.seal());
  builder_.reset();
  builder_.push_frame(frame_id, hits);
}

void ChunkStreamWriter::finish() {
  if (!builder_.empty()) file_.write(builder_.seal());
  builder_.reset();
  file_.close();
}

}  // namespace oes
