#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "slidegen/cgseg.hpp"
#include "slidegen/inventory.hpp"
#include "slidegen/raster.hpp"

// Slide complexity scoring: per-slide features, cohort-wide sigmoid
// normalization, weighted aggregation, 1-D KMeans tiering and balanced sampling.

namespace slidegen::scm {

class ScmError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ComplexityFeatures {
  int element_count = 0;
  int type_count = 0;
  double coverage = 0.0;
};

enum class Tier { unassigned, simple, medium, complex };

std::string to_string(Tier t);

struct ComplexityRecord {
  std::string id;
  ComplexityFeatures features;
  Eigen::Vector3d normalized = Eigen::Vector3d::Zero();  // (element, type, coverage)
  double z = 0.0;
  Tier tier = Tier::unassigned;
};

struct ScmWeights {
  double alpha = 1.0 / 3.0;
  double beta = 1.0 / 3.0;
  double gamma = 1.0 / 3.0;
  double epsilon = 1e-6;

  void validate() const;
  Eigen::Vector3d vector() const { return {alpha, beta, gamma}; }
};

ComplexityFeatures features_from_inventory(std::span<const ShapeRecord> shapes, const raster::RasterImage& img,
                                           const cgseg::CgsegConfig& cfg);

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// sigmoid((x - mean) / (population_sd + eps)) for every element.
template <typename Derived>
Eigen::ArrayXd normalize(const Eigen::ArrayBase<Derived>& xs, double eps) {
  if (xs.size() == 0) throw ScmError("cannot normalize an empty list");
  const Eigen::ArrayXd v = xs.template cast<double>();
  if ((v == v(0)).all()) return Eigen::ArrayXd::Constant(v.size(), 0.5);
  const double mu = v.mean();
  const double sd = std::sqrt((v - mu).square().mean());
  return ((v - mu) / (sd + eps)).unaryExpr([](double t) { return sigmoid(t); });
}

/// Normalizes each feature over the whole cohort and fills `normalized` and `z`.
std::vector<ComplexityRecord> score_cohort(std::vector<ComplexityRecord> records, const ScmWeights& weights);

struct Tiering {
  std::vector<Tier> tiers;        // parallel to the input
  std::array<double, 3> centers;  // ascending
  int iterations = 0;
};

/// 1-D KMeans with k = 3: Lloyd iterations from the quartiles and from a farthest-point start,
/// keeping the run with the lower within-cluster sum of squares.
/// Throws ScmError when fewer than three distinct values are supplied.
Tiering kmeans_tier(std::span<const double> zs);

struct Selection {
  std::array<std::vector<std::string>, 3> ids;  // simple, medium, complex
  std::size_t size() const { return ids[0].size() + ids[1].size() + ids[2].size(); }
};

/// Seeded uniform sampling without replacement of `per_tier` ids from each tier.
Selection sample_tiers(std::span<const ComplexityRecord> records, std::size_t per_tier, std::uint64_t seed);

}  // namespace slidegen::scm
