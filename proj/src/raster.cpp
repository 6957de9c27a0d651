#include "slidegen/raster.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>

namespace slidegen::raster {

RasterImage::RasterImage(int width, int height, Rgb fill) {
  if (width < 1 || height < 1) {
    throw ImageError("image dimensions must be positive, got " + std::to_string(width) + "x" +
                     std::to_string(height));
  }
  channels_[0] = Plane<std::uint8_t>::Constant(height, width, fill.r);
  channels_[1] = Plane<std::uint8_t>::Constant(height, width, fill.g);
  channels_[2] = Plane<std::uint8_t>::Constant(height, width, fill.b);
}

RasterImage RasterImage::from_interleaved(int width, int height, std::span<const std::uint8_t> rgb) {
  RasterImage img(width, height);
  if (rgb.size() != static_cast<std::size_t>(width) * height * 3) {
    throw ImageError("interleaved buffer has " + std::to_string(rgb.size()) + " bytes, expected " +
                     std::to_string(static_cast<std::size_t>(width) * height * 3));
  }
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const std::size_t o = (static_cast<std::size_t>(y) * width + x) * 3;
      img.set(x, y, {rgb[o], rgb[o + 1], rgb[o + 2]});
    }
  }
  return img;
}

void RasterImage::fill_rect(const PixelBox& box, Rgb c) {
  const int x0 = std::max(box.x, 0);
  const int y0 = std::max(box.y, 0);
  const int x1 = std::min(box.right(), width());
  const int y1 = std::min(box.bottom(), height());
  if (x1 <= x0 || y1 <= y0) return;
  channels_[0].block(y0, x0, y1 - y0, x1 - x0).setConstant(c.r);
  channels_[1].block(y0, x0, y1 - y0, x1 - x0).setConstant(c.g);
  channels_[2].block(y0, x0, y1 - y0, x1 - x0).setConstant(c.b);
}

std::vector<std::uint8_t> RasterImage::interleaved() const {
  std::vector<std::uint8_t> out(static_cast<std::size_t>(width()) * height() * 3);
  std::size_t o = 0;
  for (int y = 0; y < height(); ++y) {
    for (int x = 0; x < width(); ++x) {
      out[o++] = channels_[0](y, x);
      out[o++] = channels_[1](y, x);
      out[o++] = channels_[2](y, x);
    }
  }
  return out;
}

bool operator==(const RasterImage& a, const RasterImage& b) {
  if (a.width() != b.width() || a.height() != b.height()) return false;
  for (int c = 0; c < 3; ++c) {
    if ((a.channels_[c] != b.channels_[c]).any()) return false;
  }
  return true;
}

RasterImage load_image(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw ImageError("image file not found: " + path.string());
  }
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (png_image_begin_read_from_file(&image, path.c_str()) == 0) {
    throw ImageError("cannot decode PNG " + path.string() + ": " + image.message);
  }
  image.format = PNG_FORMAT_RGBA;
  std::vector<std::uint8_t> rgba(PNG_IMAGE_SIZE(image));
  if (png_image_finish_read(&image, nullptr, rgba.data(), 0, nullptr) == 0) {
    std::string msg = image.message;
    png_image_free(&image);
    throw ImageError("cannot decode PNG " + path.string() + ": " + msg);
  }
  const int w = static_cast<int>(image.width);
  const int h = static_cast<int>(image.height);
  png_image_free(&image);

  RasterImage img(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t o = (static_cast<std::size_t>(y) * w + x) * 4;
      const int a = rgba[o + 3];
      auto over_white = [a](int c) {
        return static_cast<std::uint8_t>((c * a + 255 * (255 - a) + 127) / 255);
      };
      img.set(x, y, {over_white(rgba[o]), over_white(rgba[o + 1]), over_white(rgba[o + 2])});
    }
  }
  return img;
}

void save_png(const RasterImage& img, const std::filesystem::path& path) {
  if (path.empty()) throw ImageError("empty output path");
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width());
  image.height = static_cast<png_uint_32>(img.height());
  image.format = PNG_FORMAT_RGB;
  const std::vector<std::uint8_t> rgb = img.interleaved();
  if (png_image_write_to_file(&image, path.c_str(), 0, rgb.data(), 0, nullptr) == 0) {
    std::string msg = image.message;
    png_image_free(&image);
    throw ImageError("cannot write PNG " + path.string() + ": " + msg);
  }
}

GrayImage to_grayscale(const RasterImage& img) {
  const Plane<double> luma = 0.299 * img.channel(0).cast<double>() + 0.587 * img.channel(1).cast<double>() +
                             0.114 * img.channel(2).cast<double>();
  return luma.round().max(0.0).min(255.0).cast<std::uint8_t>();
}

RasterImage gray_to_rgb(const GrayImage& gray) {
  RasterImage img(static_cast<int>(gray.cols()), static_cast<int>(gray.rows()));
  for (int c = 0; c < 3; ++c) img.channel(c) = gray;
  return img;
}

RasterImage crop(const RasterImage& img, const PixelBox& rect) {
  if (rect.w < 1 || rect.h < 1 || rect.x < 0 || rect.y < 0 || rect.right() > img.width() ||
      rect.bottom() > img.height()) {
    throw ImageError("crop rect (" + std::to_string(rect.x) + "," + std::to_string(rect.y) + "," +
                     std::to_string(rect.w) + "," + std::to_string(rect.h) + ") outside " +
                     std::to_string(img.width()) + "x" + std::to_string(img.height()) + " image");
  }
  RasterImage out(rect.w, rect.h);
  for (int c = 0; c < 3; ++c) {
    out.channel(c) = img.channel(c).block(rect.y, rect.x, rect.h, rect.w);
  }
  return out;
}

RasterImage resize_bilinear(const RasterImage& img, int width, int height) {
  if (width == img.width() && height == img.height()) return img;
  RasterImage out(width, height);
  const double sx = static_cast<double>(img.width()) / width;
  const double sy = static_cast<double>(img.height()) / height;
  for (int y = 0; y < height; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, img.height() - 1.0);
    const int y0 = static_cast<int>(std::floor(fy));
    const int y1 = std::min(y0 + 1, img.height() - 1);
    const double ty = fy - y0;
    for (int x = 0; x < width; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, img.width() - 1.0);
      const int x0 = static_cast<int>(std::floor(fx));
      const int x1 = std::min(x0 + 1, img.width() - 1);
      const double tx = fx - x0;
      for (int c = 0; c < 3; ++c) {
        const auto& p = img.channel(c);
        const double top = p(y0, x0) * (1 - tx) + p(y0, x1) * tx;
        const double bot = p(y1, x0) * (1 - tx) + p(y1, x1) * tx;
        out.channel(c)(y, x) = static_cast<std::uint8_t>(std::clamp(std::round(top * (1 - ty) + bot * ty), 0.0, 255.0));
      }
    }
  }
  return out;
}

}  // namespace slidegen::raster
