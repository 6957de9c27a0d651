#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "slidegen/geometry.hpp"

namespace slidegen::raster {

/// Row-major 2-D plane: rows are image rows (y), columns are image columns (x).
template <typename Scalar>
using Plane = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using GrayImage = Plane<std::uint8_t>;
using GradientField = Plane<double>;

class ImageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

inline constexpr Rgb kWhite{255, 255, 255};

/// 8-bit RGB image stored as three equally sized channel planes.
class RasterImage {
 public:
  RasterImage(int width, int height, Rgb fill = kWhite);

  /// Builds an image from row-major interleaved RGB triples.
  static RasterImage from_interleaved(int width, int height, std::span<const std::uint8_t> rgb);

  int width() const { return static_cast<int>(channels_[0].cols()); }
  int height() const { return static_cast<int>(channels_[0].rows()); }
  PixelBox extent() const { return {0, 0, width(), height()}; }

  Rgb at(int x, int y) const { return {channels_[0](y, x), channels_[1](y, x), channels_[2](y, x)}; }
  void set(int x, int y, Rgb c) {
    channels_[0](y, x) = c.r;
    channels_[1](y, x) = c.g;
    channels_[2](y, x) = c.b;
  }
  void fill_rect(const PixelBox& box, Rgb c);

  const Plane<std::uint8_t>& channel(int c) const { return channels_.at(c); }
  Plane<std::uint8_t>& channel(int c) { return channels_.at(c); }

  std::vector<std::uint8_t> interleaved() const;

  friend bool operator==(const RasterImage& a, const RasterImage& b);

 private:
  std::array<Plane<std::uint8_t>, 3> channels_;
};

/// Decodes a PNG; any alpha channel is composited over white.
RasterImage load_image(const std::filesystem::path& path);

void save_png(const RasterImage& img, const std::filesystem::path& path);

/// Rec. 601 luma, rounded to nearest.
GrayImage to_grayscale(const RasterImage& img);

/// Expands a gray plane back to an RGB image with equal channels.
RasterImage gray_to_rgb(const GrayImage& gray);

/// Copies `rect` out of `img`. Throws ImageError when the rect leaves the image.
RasterImage crop(const RasterImage& img, const PixelBox& rect);

/// Bilinear resampling with pixel-center alignment and clamped edges.
RasterImage resize_bilinear(const RasterImage& img, int width, int height);

/// Pads `src` by one pixel on every side, replicating the border.
template <typename Derived>
Plane<double> replicate_pad(const Eigen::ArrayBase<Derived>& src) {
  const Eigen::Index h = src.rows();
  const Eigen::Index w = src.cols();
  Plane<double> out(h + 2, w + 2);
  out.block(1, 1, h, w) = src.template cast<double>();
  out.block(0, 1, 1, w) = out.block(1, 1, 1, w);
  out.block(h + 1, 1, 1, w) = out.block(h, 1, 1, w);
  out.col(0) = out.col(1);
  out.col(w + 1) = out.col(w);
  return out;
}

/// Per-pixel Sobel gradient magnitude sqrt(Gx^2 + Gy^2) with edge replication.
template <typename Derived>
GradientField sobel_magnitude(const Eigen::ArrayBase<Derived>& gray) {
  const Eigen::Index h = gray.rows();
  const Eigen::Index w = gray.cols();
  if (h == 0 || w == 0) return GradientField(h, w);
  const Plane<double> p = replicate_pad(gray);
  auto at = [&](Eigen::Index dy, Eigen::Index dx) { return p.block(dy, dx, h, w); };
  const Plane<double> gx = (at(0, 2) + 2.0 * at(1, 2) + at(2, 2)) - (at(0, 0) + 2.0 * at(1, 0) + at(2, 0));
  const Plane<double> gy = (at(2, 0) + 2.0 * at(2, 1) + at(2, 2)) - (at(0, 0) + 2.0 * at(0, 1) + at(0, 2));
  return (gx.square() + gy.square()).sqrt();
}

}  // namespace slidegen::raster
