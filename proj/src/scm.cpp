#include "slidegen/scm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

namespace slidegen::scm {

std::string to_string(Tier t) {
  switch (t) {
    case Tier::simple: return "simple";
    case Tier::medium: return "medium";
    case Tier::complex: return "complex";
    case Tier::unassigned: break;
  }
  return "unassigned";
}

void ScmWeights::validate() const {
  if (alpha < 0 || beta < 0 || gamma < 0) throw ScmError("weights must be non-negative");
  if (std::abs(alpha + beta + gamma - 1.0) > 1e-9) throw ScmError("weights must sum to 1");
  if (!(epsilon > 0)) throw ScmError("epsilon must be positive");
}

ComplexityFeatures features_from_inventory(std::span<const ShapeRecord> shapes, const raster::RasterImage& img,
                                           const cgseg::CgsegConfig& cfg) {
  std::set<std::string> types;
  for (const auto& s : shapes) types.insert(s.type_name);
  return {static_cast<int>(shapes.size()), static_cast<int>(types.size()), cgseg::coverage_ratio(img, cfg)};
}

std::vector<ComplexityRecord> score_cohort(std::vector<ComplexityRecord> records, const ScmWeights& weights) {
  if (records.empty()) throw ScmError("cannot score an empty cohort");
  weights.validate();
  const auto n = static_cast<Eigen::Index>(records.size());
  Eigen::ArrayX3d raw(n, 3);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& f = records[static_cast<std::size_t>(i)].features;
    raw.row(i) << f.element_count, f.type_count, f.coverage;
  }
  Eigen::MatrixX3d norm(n, 3);
  for (int d = 0; d < 3; ++d) norm.col(d) = normalize(raw.col(d), weights.epsilon).matrix();
  const Eigen::VectorXd z = norm * weights.vector();
  for (Eigen::Index i = 0; i < n; ++i) {
    auto& r = records[static_cast<std::size_t>(i)];
    r.normalized = norm.row(i).transpose();
    r.z = z(i);
  }
  return records;
}

namespace {

// Linear-interpolated quantile of sorted data.
double quantile(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

// Nearest center; equidistant points go to the lower index.
int nearest(double x, const std::array<double, 3>& centers) {
  int best = 0;
  for (int c = 1; c < 3; ++c) {
    if (std::abs(x - centers[c]) < std::abs(x - centers[best])) best = c;
  }
  return best;
}

}  // namespace

namespace {

struct LloydRun {
  std::array<double, 3> centers;
  std::vector<int> label;
  double sse = 0.0;
  int iterations = 0;
};

// Lloyd iterations over sorted values from the given starting centers.
LloydRun lloyd(const std::vector<double>& xs, std::array<double, 3> centers) {
  std::vector<int> label(xs.size(), 0);
  int iter = 0;
  for (; iter < 100; ++iter) {
    for (std::size_t i = 0; i < xs.size(); ++i) label[i] = nearest(xs[i], centers);

    std::array<double, 3> sum{};
    std::array<std::size_t, 3> count{};
    for (std::size_t i = 0; i < xs.size(); ++i) {
      sum[label[i]] += xs[i];
      ++count[label[i]];
    }
    // An empty cluster is reseeded at the point farthest from its current center.
    for (int c = 0; c < 3; ++c) {
      if (count[c] != 0) continue;
      std::size_t far = 0;
      double far_d = -1.0;
      for (std::size_t i = 0; i < xs.size(); ++i) {
        const double d = std::abs(xs[i] - centers[label[i]]);
        if (count[label[i]] > 1 && d > far_d) {
          far_d = d;
          far = i;
        }
      }
      sum[label[far]] -= xs[far];
      --count[label[far]];
      label[far] = c;
      sum[c] = xs[far];
      count[c] = 1;
    }

    double moved = 0.0;
    for (int c = 0; c < 3; ++c) {
      const double next = sum[c] / static_cast<double>(count[c]);
      moved = std::max(moved, std::abs(next - centers[c]));
      centers[c] = next;
    }
    if (moved < 1e-9) {
      ++iter;
      break;
    }
  }
  LloydRun run{centers, std::vector<int>(xs.size()), 0.0, iter};
  for (std::size_t i = 0; i < xs.size(); ++i) {
    run.label[i] = nearest(xs[i], centers);
    run.sse += (xs[i] - centers[run.label[i]]) * (xs[i] - centers[run.label[i]]);
  }
  return run;
}

// Minimum, maximum, then the value farthest from both (lowest on ties).
std::array<double, 3> farthest_point_centers(const std::vector<double>& xs) {
  const double lo = xs.front();
  const double hi = xs.back();
  double mid = lo;
  double best = -1.0;
  for (double x : xs) {
    const double d = std::min(x - lo, hi - x);
    if (d > best) {
      best = d;
      mid = x;
    }
  }
  return {lo, mid, hi};
}

}  // namespace

Tiering kmeans_tier(std::span<const double> zs) {
  if (std::set<double>(zs.begin(), zs.end()).size() < 3) {
    throw ScmError("tiering needs at least 3 distinct scores");
  }
  // Work on sorted values so the result cannot depend on input order.
  std::vector<std::size_t> order(zs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return zs[a] < zs[b]; });
  std::vector<double> xs(zs.size());
  for (std::size_t i = 0; i < order.size(); ++i) xs[i] = zs[order[i]];

  LloydRun run = lloyd(xs, {quantile(xs, 0.25), quantile(xs, 0.5), quantile(xs, 0.75)});
  LloydRun alt = lloyd(xs, farthest_point_centers(xs));
  if (alt.sse < run.sse) run = std::move(alt);

  std::array<int, 3> rank{0, 1, 2};
  std::sort(rank.begin(), rank.end(), [&](int a, int b) { return run.centers[a] < run.centers[b]; });
  std::array<int, 3> tier_of{};
  for (int r = 0; r < 3; ++r) tier_of[rank[r]] = r;

  Tiering out;
  out.tiers.resize(zs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    out.tiers[order[i]] = static_cast<Tier>(tier_of[run.label[i]] + 1);
  }
  for (int r = 0; r < 3; ++r) out.centers[r] = run.centers[rank[r]];
  out.iterations = run.iterations;
  return out;
}

Selection sample_tiers(std::span<const ComplexityRecord> records, std::size_t per_tier, std::uint64_t seed) {
  std::array<std::vector<std::string>, 3> members;
  for (const auto& r : records) {
    if (r.tier == Tier::unassigned) continue;
    members[static_cast<int>(r.tier) - 1].push_back(r.id);
  }
  std::mt19937_64 rng(seed);
  Selection sel;
  for (int t = 0; t < 3; ++t) {
    auto& pool = members[t];
    if (pool.size() < per_tier) {
      throw ScmError("tier '" + to_string(static_cast<Tier>(t + 1)) + "' has " + std::to_string(pool.size()) +
                     " members, fewer than the requested " + std::to_string(per_tier));
    }
    std::sort(pool.begin(), pool.end());
    std::sample(pool.begin(), pool.end(), std::back_inserter(sel.ids[t]), per_tier, rng);
  }
  return sel;
}

}  // namespace slidegen::scm
