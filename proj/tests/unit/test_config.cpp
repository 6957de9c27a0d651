#include <doctest.h>

#include "slidegen/config.hpp"
#include "test_support.hpp"

using namespace slidegen;
using nlohmann::json;

TEST_SUITE("config") {

TEST_CASE("defaults validate") {
  const RunConfig c = parse_config(json::object(), "/base");
  CHECK(c.cgseg.grid == 20);
  CHECK(c.cgseg.max_depth == 2);
  CHECK(c.cgseg.threshold == 1.5);
  CHECK(c.top_k == 5);
  CHECK(c.max_refine == 3);
  CHECK(c.slide_width_in == 12192000.0 / 914400.0);
  CHECK(c.slide_height_in == 7.5);
  CHECK(c.embedding.kind == EmbeddingConfig::Kind::mock);
}

TEST_CASE("unknown keys are rejected at every level") {
  CHECK_THROWS_AS(parse_config({{"desgin", "x.png"}}, "."), ConfigError);
  CHECK_THROWS_AS(parse_config({{"cgseg", {{"grid", 20}, {"depth", 2}}}}, "."), ConfigError);
  CHECK_THROWS_AS(parse_config({{"backend", {{"kind", "mock"}, {"temperature", 0}}}}, "."), ConfigError);
  CHECK_THROWS_AS(parse_config({{"runner", {{"cmd", "x"}}}}, "."), ConfigError);
  CHECK_THROWS_AS(parse_config(json::array(), "."), ConfigError);
}

TEST_CASE("relative paths resolve against the config directory") {
  const RunConfig c = parse_config({{"design", "d.png"},
                                    {"output_dir", "/abs/out"},
                                    {"kb", {{"shape_types", "kb/st.jsonl"}}},
                                    {"backend", {{"kind", "mock"}, {"script", "s.json"}}}},
                                   "/cfg");
  CHECK(c.design == std::filesystem::path("/cfg/d.png"));
  CHECK(c.output_dir == std::filesystem::path("/abs/out"));
  CHECK(c.shape_types_kb == std::filesystem::path("/cfg/kb/st.jsonl"));
  CHECK(c.backend.script_path == "/cfg/s.json");
}

TEST_CASE("out of range values") {
  CHECK_THROWS_AS(parse_config({{"cgseg", {{"grid", 0}}}}, "."), ConfigError);
  CHECK_THROWS_AS(parse_config({{"max_refine", 0}}, "."), ConfigError);
  CHECK_THROWS_AS(parse_config({{"top_k", 0}}, "."), ConfigError);
  CHECK_THROWS_AS(parse_config({{"parallelism", 0}}, "."), ConfigError);
  CHECK_THROWS_AS(parse_config({{"geometry", {{"slide_width_in", -1}}}}, "."), ConfigError);
  CHECK_THROWS_AS(parse_config({{"scm", {{"alpha", -0.5}}}}, "."), ConfigError);
  CHECK_THROWS_AS(parse_config({{"top_k", "five"}}, "."), ConfigError);
  CHECK_THROWS_AS(parse_config({{"backend", {{"kind", "http"}}}}, "."), ConfigError);
  CHECK_THROWS_AS(parse_config({{"embedding", {{"kind", "http"}}}}, "."), ConfigError);
  CHECK_THROWS_AS(parse_config({{"embedding", {{"kind", "bert"}}}}, "."), ConfigError);
  CHECK_THROWS_AS(parse_config({{"runner", {{"command", json::array()}}}}, "."), ConfigError);
  CHECK_NOTHROW(parse_config({{"runner", {{"command", json::array()}, {"check_snippets", false}, {"check_program", false}}}}, "."));
}

TEST_CASE("loading files") {
  testing::TempDir dir("config");
  CHECK_THROWS_AS(load_config(dir / "missing.json"), ConfigError);
  testing::write_file(dir / "bad.json", "{ not json");
  CHECK_THROWS_AS(load_config(dir / "bad.json"), ConfigError);
  for (const char* name : {"mock.json", "http.json"}) {
    CAPTURE(name);
    const RunConfig c = load_config(testing::data_dir() / "config" / name);
    CHECK(std::filesystem::exists(c.shape_types_kb));
    CHECK(std::filesystem::exists(c.operation_functions_kb));
  }
}

TEST_CASE("embedding provider factory") {
  EmbeddingConfig e;
  e.dimension = 32;
  const auto p = make_embedding_provider(e);
  CHECK(p->dimension() == 32);
  CHECK(p->embed("textbox").norm() == doctest::Approx(1.0));
}

}
