#include <doctest.h>

#include <set>

#include "slidegen/scm.hpp"
#include "test_support.hpp"

using namespace slidegen;
using namespace slidegen::scm;

namespace {

ShapeRecord shape(const std::string& type) { return {type, {0, 0, 1, 1}, "", nlohmann::json::object()}; }

ComplexityRecord record(std::string id, int c, int e, double v) {
  ComplexityRecord r;
  r.id = std::move(id);
  r.features = {c, e, v};
  return r;
}

double sig(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

TEST_SUITE("scm") {

TEST_CASE("features from an inventory") {
  const raster::RasterImage white(400, 400);
  const auto empty = features_from_inventory({}, white, {});
  CHECK(empty.element_count == 0);
  CHECK(empty.type_count == 0);
  CHECK(empty.coverage == 0.0);

  const std::vector<ShapeRecord> shapes = {shape("textbox"), shape("textbox"), shape("textbox"), shape("picture")};
  const auto f = features_from_inventory(shapes, white, {});
  CHECK(f.element_count == 4);
  CHECK(f.type_count == 2);

  raster::RasterImage rect(400, 400);
  rect.fill_rect({40, 40, 120, 80}, {0, 0, 255});
  CHECK(features_from_inventory(shapes, rect, {}).coverage == doctest::Approx(0.12));
}

TEST_CASE("fixture inventory counts") {
  const auto shapes = load_inventory(testing::fixtures_dir() / "corpus/slide_b.json");
  const raster::RasterImage img = raster::load_image(testing::fixtures_dir() / "corpus/slide_b.png");
  const auto f = features_from_inventory(shapes, img, {});
  CHECK(f.element_count == 5);
  CHECK(f.type_count == 3);
}

TEST_CASE("normalize") {
  Eigen::ArrayXd all_equal = Eigen::ArrayXd::Constant(7, 0.1);
  CHECK((normalize(all_equal, 1e-6) == 0.5).all());
  CHECK(normalize(Eigen::ArrayXd::Constant(1, 42.0), 1e-6)(0) == 0.5);

  Eigen::ArrayXd two(2);
  two << 0, 10;
  const Eigen::ArrayXd n = normalize(two, 1e-6);
  CHECK(n(0) == doctest::Approx(0.26894).epsilon(1e-4));
  CHECK(n(1) == doctest::Approx(0.73106).epsilon(1e-4));

  CHECK_THROWS_AS(normalize(Eigen::ArrayXd(0), 1e-6), ScmError);
}

TEST_CASE("normalize agrees with the column recomputation") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> d(-50, 50);
  for (int t = 0; t < 30; ++t) {
    std::vector<double> xs(1 + t * 7);
    for (auto& x : xs) x = d(rng);
    const Eigen::ArrayXd got = normalize(Eigen::Map<const Eigen::ArrayXd>(xs.data(), xs.size()), 1e-6);
    const auto want = testing::sheet_normalize(xs, 1e-6);
    for (std::size_t i = 0; i < xs.size(); ++i) CHECK(std::abs(got(i) - want[i]) < 1e-12);
  }
}

TEST_CASE("normalize properties") {
  std::mt19937_64 rng(22);
  std::uniform_real_distribution<double> d(0, 20);
  for (int t = 0; t < 50; ++t) {
    Eigen::ArrayXd xs(12);
    for (auto& x : xs) x = d(rng);
    const Eigen::ArrayXd n = normalize(xs, 1e-6);
    CHECK((n > 0.0).all());
    CHECK((n < 1.0).all());
    for (int i = 0; i < 12; ++i)
      for (int j = 0; j < 12; ++j)
        if (xs(i) < xs(j)) CHECK(n(i) < n(j));
    const Eigen::ArrayXd shifted = normalize(xs + 37.5, 1e-6);
    CHECK(((shifted - n).abs() < 1e-9).all());
  }
}

TEST_CASE("score cohort") {
  const auto single = score_cohort({record("a", 3, 2, 0.4)}, {});
  CHECK(single[0].z == 0.5);

  // Two records: every dimension has mean halfway and sd half the gap, so each
  // normalized value is sigmoid(+-1 / (1 + eps / half_gap)).
  const auto two = score_cohort({record("a", 1, 1, 0.1), record("b", 9, 3, 0.9)}, {});
  const double eps = 1e-6;
  const double lo = (sig(-4.0 / (4.0 + eps)) + sig(-1.0 / (1.0 + eps)) + sig(-0.4 / (0.4 + eps))) / 3.0;
  const double hi = (sig(4.0 / (4.0 + eps)) + sig(1.0 / (1.0 + eps)) + sig(0.4 / (0.4 + eps))) / 3.0;
  CHECK(two[0].z == doctest::Approx(lo).epsilon(1e-12));
  CHECK(two[1].z == doctest::Approx(hi).epsilon(1e-12));

  const auto only_c = score_cohort({record("a", 1, 1, 0.1), record("b", 9, 3, 0.9), record("c", 4, 2, 0.5)},
                                   {1.0, 0.0, 0.0, 1e-6});
  for (const auto& r : only_c) CHECK(r.z == r.normalized(0));

  CHECK_THROWS_AS(score_cohort({}, {}), ScmError);
  CHECK_THROWS_AS(score_cohort({record("a", 1, 1, 0.1)}, {0.5, 0.5, 0.5, 1e-6}), ScmError);
}

TEST_CASE("z stays inside the unit interval and follows the raw features") {
  std::mt19937_64 rng(23);
  std::uniform_int_distribution<int> c(0, 40);
  std::uniform_real_distribution<double> v(0, 1);
  for (int t = 0; t < 20; ++t) {
    std::vector<ComplexityRecord> recs;
    for (int i = 0; i < 30; ++i) {
      const int cc = c(rng);
      recs.push_back(record("r" + std::to_string(i), cc, std::min(cc, c(rng) / 4), v(rng)));
    }
    const auto scored = score_cohort(recs, {0.5, 0.3, 0.2, 1e-6});
    for (const auto& r : scored) {
      CHECK(r.z > 0.0);
      CHECK(r.z < 1.0);
    }
    // Dominating raw features imply a score at least as high.
    for (const auto& a : scored)
      for (const auto& b : scored)
        if (a.features.element_count >= b.features.element_count && a.features.type_count >= b.features.type_count &&
            a.features.coverage >= b.features.coverage)
          CHECK(a.z >= b.z);
  }
}

TEST_CASE("kmeans on three tight groups") {
  std::vector<double> zs;
  for (double g : {0.1, 0.5, 0.9})
    for (int i = 0; i < 10; ++i) zs.push_back(g);
  const Tiering t = kmeans_tier(zs);
  for (int i = 0; i < 30; ++i) CHECK(t.tiers[i] == static_cast<Tier>(i / 10 + 1));
  CHECK(t.centers[0] == doctest::Approx(0.1));
  CHECK(t.centers[1] == doctest::Approx(0.5));
  CHECK(t.centers[2] == doctest::Approx(0.9));
  CHECK(t.iterations >= 1);
}

TEST_CASE("kmeans needs three distinct values") {
  CHECK_THROWS_AS(kmeans_tier(std::vector<double>{0.2, 0.2, 0.7, 0.7}), ScmError);
  CHECK_THROWS_AS(kmeans_tier(std::vector<double>{}), ScmError);
  CHECK_NOTHROW(kmeans_tier(std::vector<double>{0.1, 0.2, 0.3}));
}

TEST_CASE("kmeans with an initially empty cluster still fills all tiers") {
  // The upper quantile centers start equal, so one cluster begins empty.
  std::vector<double> zs = {0.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 5.0};
  const Tiering t = kmeans_tier(zs);
  std::array<int, 3> counts{};
  for (auto tier : t.tiers) ++counts[static_cast<int>(tier) - 1];
  CHECK(counts[0] > 0);
  CHECK(counts[1] > 0);
  CHECK(counts[2] > 0);
  CHECK(t.tiers.front() == Tier::simple);
  CHECK(t.tiers.back() == Tier::complex);
}

TEST_CASE("kmeans is permutation invariant") {
  std::mt19937_64 rng(24);
  std::uniform_real_distribution<double> d(0, 1);
  for (int t = 0; t < 20; ++t) {
    std::vector<double> zs(40);
    for (auto& z : zs) z = d(rng);
    const Tiering base = kmeans_tier(zs);
    std::vector<std::size_t> perm(zs.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<double> shuffled;
    for (auto i : perm) shuffled.push_back(zs[i]);
    const Tiering other = kmeans_tier(shuffled);
    for (std::size_t k = 0; k < perm.size(); ++k) CHECK(other.tiers[k] == base.tiers[perm[k]]);
  }
}

TEST_CASE("tier sampling") {
  std::vector<ComplexityRecord> recs;
  for (int i = 0; i < 3; ++i) {
    auto r = record("only" + std::to_string(i), 0, 0, 0);
    r.tier = static_cast<Tier>(i + 1);
    recs.push_back(r);
  }
  const Selection one = sample_tiers(recs, 1, 5);
  CHECK(one.ids[0] == std::vector<std::string>{"only0"});
  CHECK(one.ids[1] == std::vector<std::string>{"only1"});
  CHECK(one.ids[2] == std::vector<std::string>{"only2"});
  CHECK_THROWS_AS(sample_tiers(recs, 2, 5), ScmError);

  std::vector<ComplexityRecord> big;
  for (int i = 0; i < 1000; ++i) {
    auto r = record("s" + std::to_string(i), 0, 0, 0);
    r.tier = static_cast<Tier>(i % 3 + 1);
    big.push_back(r);
  }
  const Selection a = sample_tiers(big, 100, 99);
  const Selection b = sample_tiers(big, 100, 99);
  CHECK(a.size() == 300);
  for (int t = 0; t < 3; ++t) {
    CHECK(a.ids[t].size() == 100);
    CHECK(a.ids[t] == b.ids[t]);
    CHECK(std::set<std::string>(a.ids[t].begin(), a.ids[t].end()).size() == 100);
  }
  CHECK(sample_tiers(big, 100, 100).ids[0] != a.ids[0]);

  // Input order does not matter.
  std::vector<ComplexityRecord> rev(big.rbegin(), big.rend());
  CHECK(sample_tiers(rev, 100, 99).ids[1] == a.ids[1]);
}

TEST_CASE("tier names") {
  CHECK(to_string(Tier::simple) == "simple");
  CHECK(to_string(Tier::medium) == "medium");
  CHECK(to_string(Tier::complex) == "complex");
  CHECK(to_string(Tier::unassigned) == "unassigned");
}

}
