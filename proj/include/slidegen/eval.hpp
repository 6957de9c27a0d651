#pragma once

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "slidegen/inventory.hpp"
#include "slidegen/raster.hpp"

namespace slidegen::eval {

class EvalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SsimParams {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 255.0;
};

/// Normalized 1-D Gaussian taps.
Eigen::VectorXd gaussian_kernel(int size, double sigma);

/// Correlates `src` with the separable kernel k * k^T, keeping only fully covered positions.
raster::Plane<double> filter_valid(const raster::Plane<double>& src, const Eigen::VectorXd& k);

/// Mean SSIM of two equally sized luma planes over the valid window positions, clamped to [0, 1].
/// Planes smaller than the window use the largest odd window that fits.
double ssim_plane(const raster::Plane<double>& a, const raster::Plane<double>& b, const SsimParams& p = {});

/// SSIM after resampling `gen` to the reference size and converting both to luma.
double ssim(const raster::RasterImage& ref, const raster::RasterImage& gen, const SsimParams& p = {});

/// 2 * LCS / (|a| + |b|) over bytes; 1.0 when both are empty.
double text_similarity(std::string_view a, std::string_view b);

struct ShapePair {
  std::size_t ref = 0;
  std::size_t gen = 0;
};

struct Matching {
  std::vector<ShapePair> pairs;
  std::size_t ref_count = 0;
  std::size_t gen_count = 0;
};

/// Greedy one-to-one matching ranked by (same type, text similarity, center distance).
Matching match_shapes(std::span<const ShapeRecord> ref, std::span<const ShapeRecord> gen);

double content_similarity(const Matching& m, std::span<const ShapeRecord> ref, std::span<const ShapeRecord> gen);

/// Per pair 1 - (|dcx| + |dcy|) / (slide_w + slide_h), clamped; summed and divided by max(|ref|, |gen|).
double position_similarity(const Matching& m, std::span<const ShapeRecord> ref, std::span<const ShapeRecord> gen,
                           double slide_width_in, double slide_height_in);

struct SampleMetrics {
  std::string id;
  bool executed = false;
  std::optional<double> content;
  std::optional<double> position;
  std::optional<double> ssim;
  std::optional<double> clip;  // supplied externally

  /// Mean of the available metrics times 100; zero for failed samples.
  double contribution() const;
};

SampleMetrics score_sample(std::string id, std::span<const ShapeRecord> ref_shapes, const raster::RasterImage& ref_image,
                           std::span<const ShapeRecord> gen_shapes, const raster::RasterImage& gen_image,
                           double slide_width_in, double slide_height_in);

SampleMetrics failed_sample(std::string id);

struct BatchReport {
  std::size_t samples = 0;
  double execution_rate = 0.0;  // percent
  std::optional<double> mean_content;
  std::optional<double> mean_position;
  std::optional<double> mean_ssim;
  std::optional<double> mean_clip;
  double overall = 0.0;
  bool clip_included = false;
  std::vector<SampleMetrics> rows;

  nlohmann::json to_json() const;
  std::string table() const;
};

BatchReport batch_report(std::span<const SampleMetrics> samples);

/// Copies externally computed clip scores ({"id": score, ...}) onto executed samples.
void merge_clip(std::vector<SampleMetrics>& samples, const nlohmann::json& scores);

}  // namespace slidegen::eval
