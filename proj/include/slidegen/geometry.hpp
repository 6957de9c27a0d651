#pragma once

#include <compare>

namespace slidegen {

inline constexpr double kEmuPerInch = 914400.0;
/// Width of a 16:9 deck, 12192000 EMU.
inline constexpr double kWideSlideWidthIn = 12192000.0 / kEmuPerInch;

/// Axis-aligned box in pixel units; (x, y) is the top-left corner.
struct PixelBox {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;

  int right() const { return x + w; }
  int bottom() const { return y + h; }
  bool contains(const PixelBox& o) const {
    return o.x >= x && o.y >= y && o.right() <= right() && o.bottom() <= bottom();
  }
  friend bool operator==(const PixelBox&, const PixelBox&) = default;
};

/// Axis-aligned box in slide inches.
struct InchBox {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  double center_x() const { return x + w / 2.0; }
  double center_y() const { return y + h / 2.0; }
  friend bool operator==(const InchBox&, const InchBox&) = default;
};

/// Physical slide size paired with the pixel size of its design image.
struct SlideGeometry {
  double slide_width_in = kWideSlideWidthIn;
  double slide_height_in = 7.5;
  int image_width_px = 1280;
  int image_height_px = 720;

  bool valid() const {
    return slide_width_in > 0 && slide_height_in > 0 && image_width_px > 0 && image_height_px > 0;
  }
};

}  // namespace slidegen
