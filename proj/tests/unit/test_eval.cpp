#include <doctest.h>

#include <fstream>

#include "slidegen/eval.hpp"
#include "test_support.hpp"

using namespace slidegen;
using namespace slidegen::eval;
using nlohmann::json;

namespace {

ShapeRecord shape(const std::string& type, double x, double y, double w, double h, const std::string& text = "") {
  ShapeRecord s;
  s.type_name = type;
  s.bbox = {x, y, w, h};
  s.text = text;
  return s;
}

raster::Plane<double> luma(const raster::RasterImage& img) { return raster::to_grayscale(img).cast<double>(); }

SampleMetrics executed(double c, double p, double s) {
  SampleMetrics m;
  m.executed = true;
  m.content = c;
  m.position = p;
  m.ssim = s;
  return m;
}

}  // namespace

TEST_SUITE("eval") {

TEST_CASE("gaussian kernel") {
  const Eigen::VectorXd k = gaussian_kernel(11, 1.5);
  CHECK(k.sum() == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(k(5) == k.maxCoeff());
  for (int i = 0; i < 5; ++i) CHECK(k(i) == doctest::Approx(k(10 - i)).epsilon(1e-15));
  CHECK(k(4) / k(5) == doctest::Approx(std::exp(-1.0 / 4.5)).epsilon(1e-12));
}

TEST_CASE("ssim self-similarity and bounds") {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 20; ++i) {
    const auto img = testing::random_image(rng, 20 + static_cast<int>(rng() % 60), 20 + static_cast<int>(rng() % 60));
    CHECK(std::abs(ssim(img, img) - 1.0) < 1e-9);
  }
  const auto a = testing::random_image(rng, 40, 30);
  const auto b = testing::random_image(rng, 40, 30);
  const double v = ssim(a, b);
  CHECK(v >= 0.0);
  CHECK(v <= 1.0);
}

TEST_CASE("constant black against constant white") {
  raster::Plane<double> a = raster::Plane<double>::Zero(32, 32);
  raster::Plane<double> b = raster::Plane<double>::Constant(32, 32, 255.0);
  const double c1 = std::pow(0.01 * 255, 2);
  const double closed_form = c1 / (255.0 * 255.0 + c1);
  const double v = ssim_plane(a, b);
  CHECK(v < 0.01);
  CHECK(v == doctest::Approx(closed_form).epsilon(1e-9));
}

TEST_CASE("ssim agrees with the reference implementation on the fixture pairs") {
  const auto dir = testing::fixtures_dir() / "ssim";
  std::ifstream in(dir / "reference.json");
  const json ref = json::parse(in);
  REQUIRE(ref["pairs"].size() == 10);
  for (const auto& p : ref["pairs"]) {
    CAPTURE(p["a"].get<std::string>());
    const auto a = raster::load_image(dir / p["a"].get<std::string>());
    const auto b = raster::load_image(dir / p["b"].get<std::string>());
    const double expected = p["ssim"].get<double>();
    CHECK(std::abs(ssim(a, b) - expected) < 1e-6);
    CHECK(std::abs(testing::brute_ssim(luma(a), luma(b)) - expected) < 1e-6);
  }
}

TEST_CASE("ssim matches the direct window oracle") {
  std::mt19937_64 rng(9);
  for (int i = 0; i < 5; ++i) {
    const auto a = testing::blob_image(rng, 30, 25);
    const auto b = testing::blob_image(rng, 30, 25);
    CHECK(ssim_plane(luma(a), luma(b)) == doctest::Approx(std::clamp(testing::brute_ssim(luma(a), luma(b)), 0.0, 1.0)).epsilon(1e-10));
  }
}

TEST_CASE("ssim edge cases") {
  CHECK_THROWS_AS(ssim_plane(raster::Plane<double>(0, 0), raster::Plane<double>(0, 0)), EvalError);
  CHECK_THROWS_AS(ssim_plane(raster::Plane<double>::Zero(12, 12), raster::Plane<double>::Zero(12, 13)), EvalError);
  const raster::Plane<double> tiny = raster::Plane<double>::Constant(4, 6, 10.0);
  CHECK(ssim_plane(tiny, tiny) == doctest::Approx(1.0));
  std::mt19937_64 rng(2);
  const auto big = testing::random_image(rng, 64, 48);
  const auto half = raster::resize_bilinear(big, 32, 24);
  CHECK(ssim(half, big) == doctest::Approx(ssim_plane(luma(half), luma(raster::resize_bilinear(big, 32, 24)))));
}

TEST_CASE("text similarity") {
  CHECK(text_similarity("", "") == 1.0);
  CHECK(text_similarity("abc", "") == 0.0);
  CHECK(text_similarity("abc", "abc") == 1.0);
  CHECK(text_similarity("abcd", "abxd") == doctest::Approx(0.75));
  CHECK(text_similarity("kitten", "sitting") == doctest::Approx(8.0 / 13.0));
  CHECK(text_similarity("ab", "ba") == text_similarity("ba", "ab"));
}

TEST_CASE("matching") {
  const std::vector<ShapeRecord> ref{shape("textbox", 0, 0, 1, 1, "Title"), shape("picture", 5, 5, 2, 2)};
  SUBCASE("identical lists") {
    const Matching m = match_shapes(ref, ref);
    REQUIRE(m.pairs.size() == 2);
    for (const auto& p : m.pairs) CHECK(p.ref == p.gen);
    CHECK(content_similarity(m, ref, ref) == 1.0);
    CHECK(position_similarity(m, ref, ref, kWideSlideWidthIn, 7.5) == 1.0);
  }
  SUBCASE("same type wins over text") {
    const std::vector<ShapeRecord> gen{shape("autoshape", 0, 0, 1, 1, "Title"), shape("textbox", 9, 6, 1, 1, "zzz")};
    const Matching m = match_shapes(ref, gen);
    REQUIRE(m.pairs.size() == 2);
    CHECK(m.pairs[0].ref == 0);
    CHECK(m.pairs[0].gen == 1);
  }
  SUBCASE("empty generated deck") {
    const Matching m = match_shapes(ref, {});
    CHECK(m.pairs.empty());
    CHECK(content_similarity(m, ref, {}) == 0.0);
    CHECK(position_similarity(m, ref, {}, 10, 5) == 0.0);
  }
  SUBCASE("both empty") {
    const Matching m = match_shapes({}, {});
    CHECK(content_similarity(m, {}, {}) == 1.0);
    CHECK(position_similarity(m, {}, {}, 10, 5) == 1.0);
  }
}

TEST_CASE("content similarity arithmetic: one of two shapes matched at 0.8") {
  // "abcde" vs "abcdx": LCS 4, ratio 8/10.
  const std::vector<ShapeRecord> ref{shape("textbox", 0, 0, 1, 1, "abcde"), shape("table", 3, 3, 1, 1, "grid")};
  const std::vector<ShapeRecord> gen{shape("textbox", 0, 0, 1, 1, "abcdx")};
  const Matching m = match_shapes(ref, gen);
  CHECK(text_similarity("abcde", "abcdx") == doctest::Approx(0.8));
  CHECK(content_similarity(m, ref, gen) == doctest::Approx(0.4));
}

TEST_CASE("position at opposite corners scores zero") {
  const double w = 10.0, h = 5.0;
  const std::vector<ShapeRecord> ref{shape("textbox", -0.5, -0.5, 1, 1)};
  const std::vector<ShapeRecord> gen{shape("textbox", w - 0.5, h - 0.5, 1, 1)};
  CHECK(position_similarity(match_shapes(ref, gen), ref, gen, w, h) == 0.0);
  const std::vector<ShapeRecord> mid{shape("textbox", 2, 1, 1, 1)};
  CHECK(position_similarity(match_shapes(ref, mid), ref, mid, w, h) == doctest::Approx(1.0 - 4.0 / 15.0));
  CHECK_THROWS_AS(position_similarity({}, {}, {}, 0, 1), EvalError);
}

TEST_CASE("greedy matching keeps the maximum number of same-type pairs on small instances") {
  std::mt19937_64 rng(17);
  const std::array<const char*, 3> types{"textbox", "picture", "autoshape"};
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<ShapeRecord> ref, gen;
    const int nr = 1 + static_cast<int>(rng() % 5), ng = 1 + static_cast<int>(rng() % 5);
    for (int i = 0; i < nr; ++i) ref.push_back(shape(types[rng() % 3], rng() % 10, rng() % 5, 1, 1, std::string(rng() % 4, 'a')));
    for (int i = 0; i < ng; ++i) gen.push_back(shape(types[rng() % 3], rng() % 10, rng() % 5, 1, 1, std::string(rng() % 4, 'a')));
    const Matching m = match_shapes(ref, gen);
    std::size_t same = 0;
    for (const auto& p : m.pairs) same += ref[p.ref].type_name == gen[p.gen].type_name;
    CHECK(same == testing::brute_max_same_type_pairs(ref, gen));
    CHECK(m.pairs.size() == std::min(ref.size(), gen.size()));
    const Matching swapped = match_shapes(gen, ref);
    CHECK(content_similarity(m, ref, gen) == doctest::Approx(content_similarity(swapped, gen, ref)));
    const double c = content_similarity(m, ref, gen);
    CHECK(c >= 0.0);
    CHECK(c <= 1.0);
  }
}

TEST_CASE("contributions and aggregation") {
  SampleMetrics perfect = executed(1, 1, 1);
  perfect.id = "perfect";
  SampleMetrics failed = failed_sample("failed");
  CHECK(perfect.contribution() == 100.0);
  CHECK(failed.contribution() == 0.0);
  const std::vector<SampleMetrics> two{perfect, failed};
  const BatchReport r = batch_report(two);
  CHECK(r.overall == 50.0);
  CHECK(r.execution_rate == 50.0);
  CHECK(r.mean_content == std::optional<double>(1.0));
  CHECK_FALSE(r.clip_included);
  CHECK_THROWS_AS(batch_report({}), EvalError);

  // contributions 80, 60, 0, 100 (with clip) -> overall 60.
  std::vector<SampleMetrics> four{executed(0.9, 0.7, 0.8), executed(0.5, 0.75, 0.55), failed_sample("x"),
                                  executed(1.0, 1.0, 1.0)};
  four[3].clip = 1.0;
  CHECK(four[0].contribution() == doctest::Approx(80.0));
  CHECK(four[1].contribution() == doctest::Approx(60.0));
  const BatchReport r4 = batch_report(four);
  CHECK(r4.overall == doctest::Approx(60.0));
  CHECK(r4.execution_rate == 75.0);
  CHECK(*r4.mean_content == doctest::Approx(2.4 / 3));
  CHECK(*r4.mean_clip == 1.0);
  CHECK(r4.clip_included);
  CHECK(r4.to_json()["metrics_in_overall"].size() == 4);
  CHECK(r4.table().find("overall 60.00") != std::string::npos);
}

TEST_CASE("adding a failed sample never raises the overall score") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0, 1);
  for (int t = 0; t < 100; ++t) {
    std::vector<SampleMetrics> batch;
    for (int i = 0; i < 1 + t % 7; ++i) batch.push_back(executed(u(rng), u(rng), u(rng)));
    const double before = batch_report(batch).overall;
    batch.push_back(failed_sample("f"));
    const double after = batch_report(batch).overall;
    CHECK(after <= before);
    CHECK(after >= 0.0);
    CHECK(after <= 100.0);
  }
}

TEST_CASE("clip merge") {
  std::vector<SampleMetrics> s{executed(1, 1, 1), failed_sample("b")};
  s[0].id = "a";
  merge_clip(s, {{"a", 0.5}, {"b", 0.9}});
  CHECK(s[0].clip == std::optional<double>(0.5));
  CHECK_FALSE(s[1].clip.has_value());
  CHECK(s[0].contribution() == doctest::Approx(87.5));
  CHECK_THROWS_AS(merge_clip(s, {{"a", 1.5}}), EvalError);
  CHECK_THROWS_AS(merge_clip(s, json::array()), EvalError);
}

TEST_CASE("score_sample on a committed inventory against itself") {
  const auto shapes = load_inventory(testing::fixtures_dir() / "corpus/slide_c.json");
  const auto img = raster::load_image(testing::fixtures_dir() / "corpus/slide_c.png");
  const SampleMetrics m = score_sample("c", shapes, img, shapes, img, kWideSlideWidthIn, 7.5);
  CHECK(m.executed);
  CHECK(*m.content == 1.0);
  CHECK(*m.position == 1.0);
  CHECK(std::abs(*m.ssim - 1.0) < 1e-9);
  CHECK(m.contribution() == doctest::Approx(100.0));
}

}
