#include "slidegen/cgseg.hpp"

#include <algorithm>
#include <deque>
#include <string>

namespace slidegen::cgseg {

void CgsegConfig::validate() const {
  if (grid < 2) throw SegmentationError("grid must be >= 2, got " + std::to_string(grid));
  if (max_depth < 1) throw SegmentationError("max_depth must be >= 1, got " + std::to_string(max_depth));
  if (!(threshold > 0.0)) throw SegmentationError("threshold must be positive");
}

ScoreGrid cell_scores(const raster::GradientField& grad, int grid) {
  const int h = static_cast<int>(grad.rows());
  const int w = static_cast<int>(grad.cols());
  if (grid < 1 || h < grid || w < grid) {
    throw SegmentationError("image " + std::to_string(w) + "x" + std::to_string(h) + " is smaller than a " +
                            std::to_string(grid) + "x" + std::to_string(grid) + " grid");
  }
  ScoreGrid scores(grid, grid);
  for (int i = 0; i < grid; ++i) {
    const auto [r0, r1] = cell_span(i, h, grid);
    for (int j = 0; j < grid; ++j) {
      const auto [c0, c1] = cell_span(j, w, grid);
      scores(i, j) = grad.block(r0, c0, r1 - r0, c1 - c0).mean();
    }
  }
  return scores;
}

double median(const ScoreGrid& scores) {
  std::vector<double> v(scores.data(), scores.data() + scores.size());
  if (v.empty()) return 0.0;
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double upper = v[mid];
  if (v.size() % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return (lower + upper) / 2.0;
}

GridMask activation_mask(const ScoreGrid& scores, double threshold) {
  return scores > threshold * median(scores);
}

GridMask fill_mask(const GridMask& mask) {
  const Eigen::Index rows = mask.rows();
  const Eigen::Index cols = mask.cols();
  GridMask outside = GridMask::Constant(rows, cols, false);
  std::deque<std::pair<Eigen::Index, Eigen::Index>> queue;
  auto seed = [&](Eigen::Index r, Eigen::Index c) {
    if (!mask(r, c) && !outside(r, c)) {
      outside(r, c) = true;
      queue.emplace_back(r, c);
    }
  };
  for (Eigen::Index r = 0; r < rows; ++r) {
    seed(r, 0);
    seed(r, cols - 1);
  }
  for (Eigen::Index c = 0; c < cols; ++c) {
    seed(0, c);
    seed(rows - 1, c);
  }
  while (!queue.empty()) {
    const auto [r, c] = queue.front();
    queue.pop_front();
    if (r > 0) seed(r - 1, c);
    if (r + 1 < rows) seed(r + 1, c);
    if (c > 0) seed(r, c - 1);
    if (c + 1 < cols) seed(r, c + 1);
  }
  return !outside;
}

std::vector<PixelBox> connected_regions(const GridMask& mask, int width, int height) {
  const int rows = static_cast<int>(mask.rows());
  const int cols = static_cast<int>(mask.cols());
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> seen =
      Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>::Constant(rows, cols, false);
  std::vector<PixelBox> boxes;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      if (!mask(r, c) || seen(r, c)) continue;
      int rmin = r, rmax = r, cmin = c, cmax = c;
      std::deque<std::pair<int, int>> queue{{r, c}};
      seen(r, c) = true;
      while (!queue.empty()) {
        const auto [cr, cc] = queue.front();
        queue.pop_front();
        rmin = std::min(rmin, cr);
        rmax = std::max(rmax, cr);
        cmin = std::min(cmin, cc);
        cmax = std::max(cmax, cc);
        const std::pair<int, int> nbrs[] = {{cr - 1, cc}, {cr + 1, cc}, {cr, cc - 1}, {cr, cc + 1}};
        for (const auto& [nr, nc] : nbrs) {
          if (nr < 0 || nc < 0 || nr >= rows || nc >= cols) continue;
          if (!mask(nr, nc) || seen(nr, nc)) continue;
          seen(nr, nc) = true;
          queue.emplace_back(nr, nc);
        }
      }
      const int y0 = cell_span(rmin, height, rows).first;
      const int y1 = cell_span(rmax, height, rows).second;
      const int x0 = cell_span(cmin, width, cols).first;
      const int x1 = cell_span(cmax, width, cols).second;
      boxes.push_back({x0, y0, x1 - x0, y1 - y0});
    }
  }
  std::stable_sort(boxes.begin(), boxes.end(), [](const PixelBox& a, const PixelBox& b) {
    return a.y != b.y ? a.y < b.y : a.x < b.x;
  });
  return boxes;
}

GridMask filled_mask(const raster::RasterImage& img, const CgsegConfig& cfg) {
  cfg.validate();
  const auto grad = raster::sobel_magnitude(raster::to_grayscale(img));
  return fill_mask(activation_mask(cell_scores(grad, cfg.grid), cfg.threshold));
}

namespace {

void segment_into(const raster::RasterImage& img, const CgsegConfig& cfg, int depth, int origin_x, int origin_y,
                  std::vector<Region>& out) {
  if (depth >= cfg.max_depth) return;
  if (img.width() < cfg.grid || img.height() < cfg.grid) return;
  const GridMask mask = filled_mask(img, cfg);
  for (const PixelBox& box : connected_regions(mask, img.width(), img.height())) {
    raster::RasterImage sub = raster::crop(img, box);
    const PixelBox root_box{box.x + origin_x, box.y + origin_y, box.w, box.h};
    out.push_back({root_box, depth + 1, sub});
    segment_into(sub, cfg, depth + 1, root_box.x, root_box.y, out);
  }
}

}  // namespace

std::vector<Region> cgseg(const raster::RasterImage& img, const CgsegConfig& cfg, int start_depth) {
  cfg.validate();
  std::vector<Region> out;
  segment_into(img, cfg, start_depth, 0, 0, out);
  return out;
}

double coverage_ratio(const raster::RasterImage& img, const CgsegConfig& cfg) {
  const GridMask mask = filled_mask(img, cfg);
  return static_cast<double>(mask.count()) / static_cast<double>(mask.size());
}

raster::RasterImage debug_mask_image(const raster::RasterImage& img, const CgsegConfig& cfg) {
  const GridMask mask = filled_mask(img, cfg);
  raster::RasterImage out = img;
  const int g = cfg.grid;
  for (int i = 0; i < g; ++i) {
    const auto [y0, y1] = cell_span(i, img.height(), g);
    for (int j = 0; j < g; ++j) {
      if (!mask(i, j)) continue;
      const auto [x0, x1] = cell_span(j, img.width(), g);
      auto red = out.channel(0).block(y0, x0, y1 - y0, x1 - x0);
      red = ((red.cast<int>() + 255) / 2).cast<std::uint8_t>();
      for (int c = 1; c < 3; ++c) {
        auto blk = out.channel(c).block(y0, x0, y1 - y0, x1 - x0);
        blk = (blk.cast<int>() / 2).cast<std::uint8_t>();
      }
    }
  }
  constexpr raster::Rgb kOutline{0, 0, 255};
  for (const PixelBox& b : connected_regions(mask, img.width(), img.height())) {
    out.fill_rect({b.x, b.y, b.w, 1}, kOutline);
    out.fill_rect({b.x, b.bottom() - 1, b.w, 1}, kOutline);
    out.fill_rect({b.x, b.y, 1, b.h}, kOutline);
    out.fill_rect({b.right() - 1, b.y, 1, b.h}, kOutline);
  }
  return out;
}

void debug_mask_png(const raster::RasterImage& img, const CgsegConfig& cfg, const std::filesystem::path& path) {
  if (path.empty()) throw SegmentationError("debug mask path is empty");
  raster::save_png(debug_mask_image(img, cfg), path);
}

}  // namespace slidegen::cgseg
