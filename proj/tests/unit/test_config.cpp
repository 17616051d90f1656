#include <fstream>

#include "doctest.h"
#include "oes/config.hpp"
#include "oes/error.hpp"
#include "oes/keyvalue.hpp"
#include "support.hpp"

using namespace oes;

namespace {

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode{};
}

}  // namespace

TEST_CASE("key value text") {
  const auto kv = KeyValueFile::parse("# comment\n\na = 1\n  b.c =  x y  \n", "t");
  REQUIRE(kv.entries().size() == 2);
  CHECK(kv.entries()[1].first == "b.c");
  CHECK(kv.entries()[1].second == "x y");
  CHECK(code_of([] { KeyValueFile::parse("a = 1\na = 2\n", "t"); }) == ErrorCode::kConfig);
  CHECK(code_of([] { KeyValueFile::parse("no equals\n", "t"); }) == ErrorCode::kConfig);

  CHECK(parse_double("1e8", "k") == 1e8);
  CHECK(std::isinf(parse_double("inf", "k")));
  CHECK(code_of([] { parse_double("1.5x", "k"); }) == ErrorCode::kConfig);
  CHECK(code_of([] { parse_unsigned("-3", "k"); }) == ErrorCode::kConfig);
  CHECK(parse_double_list("1, 2,3", "k") == std::vector<double>{1, 2, 3});
  CHECK(format_double(60.0) == "60");
  CHECK(format_double(0.1) == "0.1");
  CHECK(parse_double(format_double(1.0 / 3.0), "k") == 1.0 / 3.0);
}

TEST_CASE("run config round trip") {
  RunConfig c;
  c.cuts.delta_lambda_max = 0.1234567890123;
  c.gen.sigma_ms = 0.002;
  c.pipeline.worker_count = 8;
  c.geometry.layer_radii = {20, 30, 70, 80};
  c.vertex.chi2_vertex_max = std::numeric_limits<double>::infinity();
  const RunConfig back = RunConfig::from_key_values(c.to_key_values());
  CHECK(back.to_key_values().to_string() == c.to_key_values().to_string());
  CHECK(back.cuts.delta_lambda_max == c.cuts.delta_lambda_max);
  CHECK(back.gen.sigma_ms == c.gen.sigma_ms);
  CHECK(back.geometry.layer_radii == c.geometry.layer_radii);

  test::TempDir dir;
  c.save(dir.file("a.cfg"));
  CHECK(RunConfig::load(dir.file("a.cfg")).to_key_values().to_string() ==
        c.to_key_values().to_string());
  for (const auto& k : RunConfig::keys()) CHECK_NOTHROW(c.get(k));
}

TEST_CASE("partial files keep defaults and bad values are rejected") {
  test::TempDir dir;
  {
    std::ofstream(dir.file("p.cfg")) << "cuts.rt_max = 250\npipeline.worker_count = 3\n";
  }
  const RunConfig c = RunConfig::load(dir.file("p.cfg"));
  CHECK(c.cuts.rt_max == 250.0);
  CHECK(c.pipeline.worker_count == 3);
  CHECK(c.fit.chi2_max == 32.0);

  auto bad = [&](const std::string& text) {
    std::ofstream(dir.file("b.cfg"), std::ios::trunc) << text;
    return code_of([&] { RunConfig::load(dir.file("b.cfg")); });
  };
  CHECK(bad("cuts.nope = 1\n") == ErrorCode::kConfig);
  CHECK(bad("cuts.rt_min = 300\n") == ErrorCode::kConfig);
  CHECK(bad("pipeline.worker_count = 0\n") == ErrorCode::kConfig);
  CHECK(bad("geometry.layer_radii = 1, 2, 3\n") == ErrorCode::kConfig);
  CHECK(bad("fit.chi2_max = -1\n") == ErrorCode::kConfig);
  CHECK(code_of([&] { RunConfig::load(dir.file("missing.cfg")); }) == ErrorCode::kIo);

  RunConfig s;
  s.set("gen.sigma_ms", "highland");
  CHECK_FALSE(s.gen.sigma_ms.has_value());
  CHECK(code_of([&] { s.set("vertex.max_track_combs", "many"); }) == ErrorCode::kConfig);
}
