#include <doctest.h>

#include "slidegen/raster.hpp"
#include "test_support.hpp"

using namespace slidegen;
using namespace slidegen::raster;
using slidegen::testing::TempDir;
using slidegen::testing::fixtures_dir;

TEST_SUITE("raster") {

TEST_CASE("white png decodes to white pixels") {
  const RasterImage img = load_image(fixtures_dir() / "raster/white_2x2.png");
  CHECK(img.width() == 2);
  CHECK(img.height() == 2);
  for (int y = 0; y < 2; ++y)
    for (int x = 0; x < 2; ++x) CHECK(img.at(x, y) == kWhite);
}

TEST_CASE("alpha is composited over white") {
  const RasterImage img = load_image(fixtures_dir() / "raster/alpha_2x1.png");
  CHECK(img.at(0, 0) == kWhite);
  // black at alpha 128: 255 * (1 - 128/255) = 127
  CHECK(img.at(1, 0) == Rgb{127, 127, 127});
}

TEST_CASE("grayscale png expands to equal channels") {
  const RasterImage img = load_image(fixtures_dir() / "raster/gray_3x2.png");
  CHECK(img.width() == 3);
  CHECK(img.at(2, 1) == Rgb{77, 77, 77});
}

TEST_CASE("generated red square round-trips through png") {
  TempDir dir("raster");
  RasterImage red(64, 64, {255, 0, 0});
  save_png(red, dir / "red_square_64.png");
  const RasterImage back = load_image(dir / "red_square_64.png");
  CHECK(back.width() == 64);
  CHECK(back.height() == 64);
  CHECK(back == red);
}

TEST_CASE("load errors") {
  CHECK_THROWS_AS(load_image(fixtures_dir() / "raster/missing.png"), ImageError);
  CHECK_THROWS_AS(load_image(fixtures_dir() / "raster/not_a_png.png"), ImageError);
  CHECK_THROWS_AS(save_png(RasterImage(1, 1), ""), ImageError);
  CHECK_THROWS_AS(RasterImage(0, 3), ImageError);
}

TEST_CASE("luma conversion") {
  CHECK((to_grayscale(RasterImage(3, 2, kWhite)) == 255).all());
  CHECK((to_grayscale(RasterImage(3, 2, {0, 0, 0})) == 0).all());
  CHECK((to_grayscale(RasterImage(3, 2, {255, 0, 0})) == 76).all());
  CHECK((to_grayscale(RasterImage(1, 1, {0, 255, 0})) == 150).all());  // 149.685
  CHECK((to_grayscale(RasterImage(1, 1, {0, 0, 255})) == 29).all());   // 29.07
}

TEST_CASE("grayscale is idempotent") {
  std::mt19937_64 rng(7);
  for (int t = 0; t < 10; ++t) {
    const RasterImage img = testing::random_image(rng, 13, 9);
    const GrayImage g = to_grayscale(img);
    CHECK((to_grayscale(gray_to_rgb(g)) == g).all());
  }
}

TEST_CASE("sobel of constant images is zero") {
  for (int v : {0, 17, 255}) {
    GrayImage g = GrayImage::Constant(7, 5, static_cast<std::uint8_t>(v));
    CHECK((sobel_magnitude(g) == 0.0).all());
  }
  CHECK(sobel_magnitude(GrayImage::Constant(1, 1, 200))(0, 0) == 0.0);
}

TEST_CASE("sobel vertical step edge") {
  GrayImage g(4, 4);
  g.leftCols(2).setConstant(0);
  g.rightCols(2).setConstant(255);
  const GradientField m = sobel_magnitude(g);
  for (int y = 0; y < 4; ++y) {
    CHECK(m(y, 1) == doctest::Approx(1020.0));
    CHECK(m(y, 2) == doctest::Approx(1020.0));
    CHECK(m(y, 0) == 0.0);
    CHECK(m(y, 3) == 0.0);
  }
  CHECK((m == testing::brute_sobel(g)).all());
}

TEST_CASE("sobel matches direct convolution on random images") {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 20; ++t) {
    std::uniform_int_distribution<int> dim(1, 24);
    const RasterImage img = testing::random_image(rng, dim(rng), dim(rng));
    const GrayImage g = to_grayscale(img);
    const GradientField fast = sobel_magnitude(g);
    const GradientField slow = testing::brute_sobel(g);
    CHECK(((fast - slow).abs() < 1e-9).all());
    CHECK((fast >= 0.0).all());
  }
}

TEST_CASE("sobel is translation invariant in the interior") {
  std::mt19937_64 rng(5);
  GrayImage base = to_grayscale(testing::random_image(rng, 20, 20));
  GrayImage shifted = GrayImage::Constant(20, 20, 0);
  shifted.block(3, 2, 17, 18) = base.block(0, 0, 17, 18);
  const GradientField a = sobel_magnitude(base);
  const GradientField b = sobel_magnitude(shifted);
  for (int y = 2; y < 15; ++y)
    for (int x = 2; x < 16; ++x) CHECK(b(y + 3, x + 2) == a(y, x));
}

TEST_CASE("crop") {
  std::mt19937_64 rng(3);
  const RasterImage img = testing::random_image(rng, 10, 12);
  CHECK(crop(img, img.extent()) == img);

  const RasterImage red(5, 5, {255, 0, 0});
  const RasterImage one = crop(red, {0, 0, 1, 1});
  CHECK(one.width() == 1);
  CHECK(one.at(0, 0) == Rgb{255, 0, 0});

  RasterImage coords(16, 16);
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 16; ++x)
      coords.set(x, y, {static_cast<std::uint8_t>(x), static_cast<std::uint8_t>(y), 0});
  const RasterImage c = crop(coords, {2, 3, 4, 5});
  CHECK(c.width() == 4);
  CHECK(c.height() == 5);
  for (int j = 0; j < 5; ++j)
    for (int i = 0; i < 4; ++i) CHECK(c.at(i, j) == coords.at(2 + i, 3 + j));

  CHECK_THROWS_AS(crop(img, {8, 0, 3, 1}), ImageError);
  CHECK_THROWS_AS(crop(img, {-1, 0, 2, 2}), ImageError);
  CHECK_THROWS_AS(crop(img, {0, 0, 0, 2}), ImageError);
}

TEST_CASE("bilinear resize") {
  std::mt19937_64 rng(9);
  const RasterImage img = testing::random_image(rng, 17, 11);
  CHECK(resize_bilinear(img, 17, 11) == img);
  const RasterImage flat(5, 3, {10, 20, 30});
  const RasterImage big = resize_bilinear(flat, 40, 31);
  CHECK(big.width() == 40);
  CHECK(big.height() == 31);
  CHECK(big == RasterImage(40, 31, {10, 20, 30}));
  // 2x upscale of a two-pixel ramp: centers at 0.25 and 0.75 of the gap
  std::vector<std::uint8_t> px = {0, 0, 0, 200, 200, 200};
  const RasterImage ramp = resize_bilinear(RasterImage::from_interleaved(2, 1, px), 4, 1);
  CHECK(ramp.at(0, 0).r == 0);
  CHECK(ramp.at(1, 0).r == 50);
  CHECK(ramp.at(2, 0).r == 150);
  CHECK(ramp.at(3, 0).r == 200);
}

TEST_CASE("fill_rect clips to the image") {
  RasterImage img(4, 4);
  img.fill_rect({2, 2, 10, 10}, {0, 0, 0});
  CHECK(img.at(3, 3) == Rgb{0, 0, 0});
  CHECK(img.at(1, 1) == kWhite);
}

}
