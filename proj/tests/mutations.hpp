#pragma once

// Byte-level corruptions of a sealed chunk, one per layout invariant the
// parser has to enforce.

#include <cstdint>
#include <cstring>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "oes/framestore.hpp"

namespace oes::test {

struct Mutation {
  std::string name;
  std::function<std::vector<std::uint8_t>(std::vector<std::uint8_t>)> apply;
};

inline std::uint32_t get_u32(const std::vector<std::uint8_t>& b, std::size_t at) {
  std::uint32_t v;
  std::memcpy(&v, b.data() + at, 4);
  return v;
}
inline void put_u32(std::vector<std::uint8_t>& b, std::size_t at, std::uint32_t v) {
  std::memcpy(b.data() + at, &v, 4);
}
inline void put_u64(std::vector<std::uint8_t>& b, std::size_t at, std::uint64_t v) {
  std::memcpy(b.data() + at, &v, 8);
}

// Offset of descriptor i (frame 0 sits right below the footer).
inline std::size_t descriptor_at(std::size_t cap, std::size_t i) {
  return cap - kFooterBytes - kDescriptorBytes * (i + 1);
}

// Expects a chunk holding at least two frames, the second with hits on
// layers 0 and 1, and some free space between the areas.
inline std::vector<Mutation> chunk_mutations() {
  std::vector<Mutation> m;
  m.push_back({"truncated block", [](auto b) {
                 b.pop_back();
                 return b;
               }});
  m.push_back({"extended block", [](auto b) {
                 b.push_back(0);
                 return b;
               }});
  m.push_back({"frame count beyond capacity", [](auto b) {
                 put_u32(b, b.size() - 4, std::numeric_limits<std::uint32_t>::max());
                 return b;
               }});
  m.push_back({"descriptors overlap hit area", [](auto b) {
                 // Enough descriptors to reach down into the hits while
                 // still fitting inside the block.
                 put_u32(b, b.size() - 4,
                         static_cast<std::uint32_t>((b.size() - 4) / kDescriptorBytes));
                 return b;
               }});
  m.push_back({"first frame not at hit 0", [](auto b) {
                 const std::size_t d = descriptor_at(b.size(), 0);
                 put_u32(b, d + 8, 1);
                 return b;
               }});
  m.push_back({"gap between frames", [](auto b) {
                 const std::size_t d = descriptor_at(b.size(), 1);
                 put_u32(b, d + 8, get_u32(b, d + 8) + 1);
                 return b;
               }});
  m.push_back({"layer starts descending", [](auto b) {
                 const std::size_t d = descriptor_at(b.size(), 1);
                 put_u32(b, d + 12, get_u32(b, d + 8) - 1);
                 return b;
               }});
  m.push_back({"layer start beyond end", [](auto b) {
                 const std::size_t d = descriptor_at(b.size(), 1);
                 put_u32(b, d + 20, get_u32(b, d + 24) + 1);
                 return b;
               }});
  m.push_back({"frame ids not ascending", [](auto b) {
                 put_u64(b, descriptor_at(b.size(), 1), 0);
                 return b;
               }});
  m.push_back({"dirty padding", [](auto b) {
                 b[b.size() / 2] = 0x5a;
                 return b;
               }});
  m.push_back({"non-finite hit", [](auto b) {
                 const float nan = std::numeric_limits<float>::quiet_NaN();
                 std::memcpy(b.data() + 4, &nan, 4);
                 return b;
               }});
  m.push_back({"hit count past capacity", [](auto b) {
                 const std::size_t d = descriptor_at(b.size(), 1);
                 put_u32(b, d + 24, static_cast<std::uint32_t>(b.size()));
                 return b;
               }});
  return m;
}

}  // namespace oes::test
