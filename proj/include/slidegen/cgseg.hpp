#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <stdexcept>
#include <vector>

#include "slidegen/geometry.hpp"
#include "slidegen/raster.hpp"

// Recursive color-gradient segmentation of a slide image into blocks.
//
// Each level splits the image into a g x g grid, scores every cell by its mean
// Sobel magnitude, activates cells scoring strictly above T times the median,
// fills enclosed holes, and emits one region per 4-connected component. Every
// region is recursed into until the depth cap is reached.

namespace slidegen::cgseg {

using ScoreGrid = Eigen::Array<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using GridMask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

class SegmentationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CgsegConfig {
  int grid = 20;
  int max_depth = 2;
  double threshold = 1.5;

  /// Throws SegmentationError unless grid >= 2, max_depth >= 1, threshold > 0.
  void validate() const;
};

struct Region {
  PixelBox bbox;  // root-image frame
  int depth = 1;
  raster::RasterImage image;
};

/// Pixel span [begin, end) covered by grid index `i` along an axis of `extent` pixels.
inline std::pair<int, int> cell_span(int i, int extent, int grid) {
  return {static_cast<int>(static_cast<long long>(i) * extent / grid),
          static_cast<int>(static_cast<long long>(i + 1) * extent / grid)};
}

/// Mean gradient magnitude per grid cell. Throws if the field is smaller than the grid.
ScoreGrid cell_scores(const raster::GradientField& grad, int grid);

/// Median of all scores; mean of the two middle values for an even count.
double median(const ScoreGrid& scores);

/// Cells whose score is strictly greater than threshold * median.
GridMask activation_mask(const ScoreGrid& scores, double threshold);

/// Activates every inactive cell not 4-reachable from the border through inactive cells.
GridMask fill_mask(const GridMask& mask);

/// Pixel bounding boxes of the 4-connected active components, ordered by (y, x).
std::vector<PixelBox> connected_regions(const GridMask& mask, int width, int height);

/// Filled depth-0 mask for `img`.
GridMask filled_mask(const raster::RasterImage& img, const CgsegConfig& cfg);

/// Segments `img`. Parent regions precede their children; child boxes are in the root frame.
std::vector<Region> cgseg(const raster::RasterImage& img, const CgsegConfig& cfg, int start_depth = 0);

/// Fraction of active cells in the filled depth-0 mask.
double coverage_ratio(const raster::RasterImage& img, const CgsegConfig& cfg);

/// Renders activated cells tinted red and top-level region boxes outlined in blue.
raster::RasterImage debug_mask_image(const raster::RasterImage& img, const CgsegConfig& cfg);
void debug_mask_png(const raster::RasterImage& img, const CgsegConfig& cfg, const std::filesystem::path& path);

}  // namespace slidegen::cgseg
