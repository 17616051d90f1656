#include <cstring>
#include <fstream>
#include <random>
#include <vector>

#include "doctest.h"
#include "mutations.hpp"
#include "oes/error.hpp"
#include "oes/framestore.hpp"
#include "support.hpp"

using namespace oes;

namespace {

struct Frame {
  std::uint64_t id;
  std::array<std::vector<Hit>, 4> layers;
  LayerHits view() const { return {layers[0], layers[1], layers[2], layers[3]}; }
};

Frame random_frame(std::mt19937_64& rng, std::uint64_t id, std::size_t max_per_layer) {
  std::uniform_int_distribution<std::size_t> n(0, max_per_layer);
  std::uniform_real_distribution<float> u(-200.0f, 200.0f);
  Frame f{id, {}};
  for (auto& l : f.layers) {
    const std::size_t k = n(rng);
    for (std::size_t i = 0; i < k; ++i) l.push_back({u(rng), u(rng), u(rng)});
  }
  return f;
}

std::uint32_t footer(const Chunk& c) {
  std::uint32_t v;
  std::memcpy(&v, c.bytes().data() + c.capacity() - 4, 4);
  return v;
}

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode{};
}

}  // namespace

TEST_CASE("builder capacity") {
  ChunkBuilder big(4u << 20);
  CHECK(big.frame_count() == 0);

  ChunkBuilder tiny(44);
  const std::vector<Hit> one{{1, 2, 3}};
  const std::vector<Hit> none;
  CHECK(tiny.push_frame(0, {one, none, none, none}) == ChunkBuilder::PushResult::kAccepted);
  CHECK(tiny.push_frame(1, {none, none, none, none}) == ChunkBuilder::PushResult::kChunkFull);
  CHECK(tiny.frame_count() == 1);

  CHECK(code_of([] { ChunkBuilder b(10); }) == ErrorCode::kConfig);
}

TEST_CASE("empty frame and exact fill") {
  const std::size_t cap = 4 + 28 * 2 + 12 * 7;
  ChunkBuilder b(cap);
  std::vector<Hit> a(3, Hit{1, 1, 1}), c(4, Hit{2, 2, 2}), none;
  CHECK(b.push_frame(5, {a, none, none, none}) == ChunkBuilder::PushResult::kAccepted);
  CHECK(b.push_frame(6, {none, c, none, none}) == ChunkBuilder::PushResult::kAccepted);
  CHECK(b.push_frame(7, {none, none, none, none}) == ChunkBuilder::PushResult::kChunkFull);
  const Chunk sealed = b.seal();
  CHECK(sealed.capacity() == cap);
  const auto parsed = ParsedChunk::parse(sealed.bytes(), cap);
  REQUIRE(parsed.frame_count() == 2);
  CHECK(parsed.frame(1).hit_count() == 4);

  ChunkBuilder e(4096);
  e.push_frame(0, {a, none, none, none});
  e.push_frame(1, {none, none, none, none});
  const auto pe = ParsedChunk::parse(e.seal().bytes(), 4096);
  const auto d = pe.frame(1).descriptor;
  for (auto s : d.layer_start) CHECK(s == 3);
  CHECK(d.end_index == 3);
}

TEST_CASE("oversized frame") {
  ChunkBuilder b(4u << 20);
  const std::vector<Hit> huge(1000000);
  const std::vector<Hit> none;
  CHECK(code_of([&] { b.push_frame(0, {huge, none, none, none}); }) ==
        ErrorCode::kOversizedFrame);
  CHECK(b.empty());
}

TEST_CASE("seal footer and determinism") {
  ChunkBuilder b(1024);
  const Chunk empty = b.seal();
  CHECK(empty.capacity() == 1024);
  CHECK(footer(empty) == 0);

  std::mt19937_64 rng(1);
  const Frame f0 = random_frame(rng, 1, 3), f1 = random_frame(rng, 2, 3);
  auto build = [&] {
    ChunkBuilder x(1024);
    x.push_frame(f0.id, f0.view());
    x.push_frame(f1.id, f1.view());
    return x.seal();
  };
  const Chunk c1 = build(), c2 = build();
  CHECK(footer(c1) == 2);
  CHECK(std::equal(c1.bytes().begin(), c1.bytes().end(), c2.bytes().begin()));
}

TEST_CASE("layer slice lengths follow builder bookkeeping") {
  const std::array<std::size_t, 3> counts{0, 5, 17};
  ChunkBuilder b(4096);
  std::vector<Frame> frames;
  for (std::size_t i = 0; i < 3; ++i) {
    Frame f{i, {}};
    for (std::size_t h = 0; h < counts[i]; ++h) f.layers[h % 4].push_back({float(h), 0, 0});
    frames.push_back(f);
  }
  for (const auto& f : frames) b.push_frame(f.id, f.view());
  const auto p = ParsedChunk::parse(b.seal().bytes(), 4096);
  for (std::size_t i = 0; i < 3; ++i) {
    std::size_t sum = 0;
    for (const auto& l : p.frame(i).layers) sum += l.size();
    CHECK(sum == counts[i]);
    CHECK(p.frame(i).hit_count() == counts[i]);
  }
}

TEST_CASE("round trip property") {
  std::mt19937_64 rng(42);
  std::uniform_int_distribution<std::size_t> cap_pick(44, 6000);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t cap = cap_pick(rng);
    ChunkBuilder b(cap);
    std::vector<Frame> accepted;
    std::uint64_t id = rng() % 1000;
    for (int k = 0; k < 40; ++k) {
      Frame f = random_frame(rng, id, 6);
      id += 1 + rng() % 3;
      if (ChunkBuilder::frame_bytes(0) + 4 > cap) break;
      try {
        if (b.push_frame(f.id, f.view()) == ChunkBuilder::PushResult::kChunkFull) break;
      } catch (const Error&) {
        break;
      }
      accepted.push_back(std::move(f));
    }
    const Chunk c = b.seal();
    REQUIRE(c.capacity() == cap);
    const auto p = ParsedChunk::parse(c.bytes(), cap);
    REQUIRE(p.frame_count() == accepted.size());
    std::size_t recount = 0;
    for (std::size_t i = 0; i < accepted.size(); ++i) {
      const FrameView v = p.frame(i);
      CHECK(v.frame_id() == accepted[i].id);
      for (std::size_t l = 0; l < 4; ++l) {
        REQUIRE(v.layers[l].size() == accepted[i].layers[l].size());
        CHECK(std::memcmp(v.layers[l].data(), accepted[i].layers[l].data(),
                          v.layers[l].size() * sizeof(Hit)) == 0);
        recount += accepted[i].layers[l].size();
      }
    }
    CHECK(p.hits().size() == recount);
  }
}

TEST_CASE("corrupt chunks are rejected") {
  std::mt19937_64 rng(9);
  ChunkBuilder b(2048);
  Frame f0 = random_frame(rng, 3, 2), f1{4, {}}, f2 = random_frame(rng, 8, 2);
  f0.layers[0].push_back({1, 1, 1});
  f1.layers[0] = {{1, 2, 3}, {4, 5, 6}};
  f1.layers[1] = {{7, 8, 9}};
  b.push_frame(f0.id, f0.view());
  b.push_frame(f1.id, f1.view());
  b.push_frame(f2.id, f2.view());
  const Chunk good = b.seal();
  const std::vector<std::uint8_t> bytes(good.bytes().begin(), good.bytes().end());
  CHECK_NOTHROW(ParsedChunk::parse(bytes, 2048));
  for (const auto& m : test::chunk_mutations()) {
    CAPTURE(m.name);
    const auto bad = m.apply(bytes);
    CHECK(code_of([&] { ParsedChunk::parse(bad, 2048); }) == ErrorCode::kCorruptData);
  }
}

TEST_CASE("chunk files") {
  test::TempDir dir;
  const std::string path = dir.file("a.m3c");
  ChunkFileHeader h;
  h.capacity = 512;
  h.geometry_hash = 77;
  {
    ChunkStreamWriter w(path, h);
    std::mt19937_64 rng(2);
    for (std::uint64_t i = 0; i < 50; ++i) {
      const Frame f = random_frame(rng, i, 3);
      w.push_frame(f.id, f.view());
    }
    w.finish();
  }
  ChunkFileReader r(path);
  CHECK(r.header().capacity == 512);
  CHECK(r.header().geometry_hash == 77);
  std::size_t frames = 0, chunks = 0;
  std::uint64_t expect = 0;
  while (auto c = r.next()) {
    CHECK(c->capacity() == 512);
    const auto p = ParsedChunk::parse(c->bytes(), 512);
    for (std::size_t i = 0; i < p.frame_count(); ++i) CHECK(p.frame(i).frame_id() == expect++);
    frames += p.frame_count();
    ++chunks;
  }
  CHECK(frames == 50);
  CHECK(chunks == r.chunk_count());
  CHECK(std::filesystem::file_size(path) == chunks * 512);

  // A file that is not a whole number of blocks is corrupt.
  { std::ofstream(path, std::ios::app | std::ios::binary) << 'x'; }
  CHECK(code_of([&] { ChunkFileReader bad(path); }) == ErrorCode::kCorruptData);
  CHECK(code_of([&] { ChunkFileReader missing(dir.file("nope.m3c")); }) != ErrorCode{});
}
