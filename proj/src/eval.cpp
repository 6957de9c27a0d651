#include "slidegen/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <tuple>

namespace slidegen::eval {

using nlohmann::json;
using raster::Plane;

Eigen::VectorXd gaussian_kernel(int size, double sigma) {
  Eigen::VectorXd k(size);
  const double c = (size - 1) / 2.0;
  for (int i = 0; i < size; ++i) k(i) = std::exp(-((i - c) * (i - c)) / (2.0 * sigma * sigma));
  return k / k.sum();
}

Plane<double> filter_valid(const Plane<double>& src, const Eigen::VectorXd& k) {
  const auto n = k.size();
  const Eigen::Index rows = src.rows() - n + 1;
  const Eigen::Index cols = src.cols() - n + 1;
  Plane<double> horiz = Plane<double>::Zero(src.rows(), cols);
  for (Eigen::Index t = 0; t < n; ++t) horiz += k(t) * src.middleCols(t, cols);
  Plane<double> out = Plane<double>::Zero(rows, cols);
  for (Eigen::Index t = 0; t < n; ++t) out += k(t) * horiz.middleRows(t, rows);
  return out;
}

double ssim_plane(const Plane<double>& a, const Plane<double>& b, const SsimParams& p) {
  if (a.size() == 0 || b.size() == 0) throw EvalError("SSIM of an empty image");
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw EvalError("SSIM inputs differ in size");
  int win = static_cast<int>(std::min<Eigen::Index>({p.window, a.rows(), a.cols()}));
  if (win % 2 == 0) --win;
  const Eigen::VectorXd k = gaussian_kernel(win, p.sigma);
  const double c1 = std::pow(p.k1 * p.dynamic_range, 2);
  const double c2 = std::pow(p.k2 * p.dynamic_range, 2);

  const Plane<double> mu_a = filter_valid(a, k);
  const Plane<double> mu_b = filter_valid(b, k);
  const Plane<double> var_a = filter_valid(a * a, k) - mu_a.square();
  const Plane<double> var_b = filter_valid(b * b, k) - mu_b.square();
  const Plane<double> cov = filter_valid(a * b, k) - mu_a * mu_b;
  const Plane<double> map = ((2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)) /
                            ((mu_a.square() + mu_b.square() + c1) * (var_a + var_b + c2));
  return std::clamp(map.mean(), 0.0, 1.0);
}

double ssim(const raster::RasterImage& ref, const raster::RasterImage& gen, const SsimParams& p) {
  const raster::RasterImage resized = raster::resize_bilinear(gen, ref.width(), ref.height());
  return ssim_plane(raster::to_grayscale(ref).cast<double>(), raster::to_grayscale(resized).cast<double>(), p);
}

double text_similarity(std::string_view a, std::string_view b) {
  if (a.empty() && b.empty()) return 1.0;
  if (a.empty() || b.empty()) return 0.0;
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return 2.0 * static_cast<double>(prev[b.size()]) / static_cast<double>(a.size() + b.size());
}

Matching match_shapes(std::span<const ShapeRecord> ref, std::span<const ShapeRecord> gen) {
  struct Candidate {
    bool same_type;
    double text;
    double dist;
    std::size_t i, j;
  };
  std::vector<Candidate> cands;
  cands.reserve(ref.size() * gen.size());
  for (std::size_t i = 0; i < ref.size(); ++i) {
    for (std::size_t j = 0; j < gen.size(); ++j) {
      const double dx = ref[i].bbox.center_x() - gen[j].bbox.center_x();
      const double dy = ref[i].bbox.center_y() - gen[j].bbox.center_y();
      cands.push_back({ref[i].type_name == gen[j].type_name, text_similarity(ref[i].text, gen[j].text),
                       std::hypot(dx, dy), i, j});
    }
  }
  std::sort(cands.begin(), cands.end(), [](const Candidate& x, const Candidate& y) {
    return std::make_tuple(!x.same_type, -x.text, x.dist, x.i, x.j) <
           std::make_tuple(!y.same_type, -y.text, y.dist, y.i, y.j);
  });
  Matching m;
  m.ref_count = ref.size();
  m.gen_count = gen.size();
  std::vector<bool> used_ref(ref.size(), false), used_gen(gen.size(), false);
  for (const auto& c : cands) {
    if (used_ref[c.i] || used_gen[c.j]) continue;
    used_ref[c.i] = used_gen[c.j] = true;
    m.pairs.push_back({c.i, c.j});
  }
  return m;
}

double content_similarity(const Matching& m, std::span<const ShapeRecord> ref, std::span<const ShapeRecord> gen) {
  const std::size_t denom = std::max(m.ref_count, m.gen_count);
  if (denom == 0) return 1.0;
  double sum = 0.0;
  for (const auto& p : m.pairs) sum += text_similarity(ref[p.ref].text, gen[p.gen].text);
  return sum / static_cast<double>(denom);
}

double position_similarity(const Matching& m, std::span<const ShapeRecord> ref, std::span<const ShapeRecord> gen,
                           double slide_width_in, double slide_height_in) {
  if (!(slide_width_in > 0 && slide_height_in > 0)) throw EvalError("slide size must be positive");
  const std::size_t denom = std::max(m.ref_count, m.gen_count);
  if (denom == 0) return 1.0;
  double sum = 0.0;
  for (const auto& p : m.pairs) {
    const double d = std::abs(ref[p.ref].bbox.center_x() - gen[p.gen].bbox.center_x()) +
                     std::abs(ref[p.ref].bbox.center_y() - gen[p.gen].bbox.center_y());
    sum += std::clamp(1.0 - d / (slide_width_in + slide_height_in), 0.0, 1.0);
  }
  return sum / static_cast<double>(denom);
}

double SampleMetrics::contribution() const {
  if (!executed) return 0.0;
  double sum = 0.0;
  int n = 0;
  for (const auto& v : {content, position, ssim, clip}) {
    if (!v) continue;
    sum += *v;
    ++n;
  }
  return n == 0 ? 0.0 : 100.0 * sum / n;
}

SampleMetrics score_sample(std::string id, std::span<const ShapeRecord> ref_shapes, const raster::RasterImage& ref_image,
                           std::span<const ShapeRecord> gen_shapes, const raster::RasterImage& gen_image,
                           double slide_width_in, double slide_height_in) {
  const Matching m = match_shapes(ref_shapes, gen_shapes);
  SampleMetrics s;
  s.id = std::move(id);
  s.executed = true;
  s.content = content_similarity(m, ref_shapes, gen_shapes);
  s.position = position_similarity(m, ref_shapes, gen_shapes, slide_width_in, slide_height_in);
  s.ssim = ssim(ref_image, gen_image);
  return s;
}

SampleMetrics failed_sample(std::string id) {
  SampleMetrics s;
  s.id = std::move(id);
  return s;
}

BatchReport batch_report(std::span<const SampleMetrics> samples) {
  if (samples.empty()) throw EvalError("cannot report on an empty batch");
  BatchReport r;
  r.samples = samples.size();
  r.rows.assign(samples.begin(), samples.end());
  std::size_t executed = 0;
  double total = 0.0;
  auto mean_of = [&](std::optional<double> SampleMetrics::*field) -> std::optional<double> {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& s : samples) {
      if (s.executed && (s.*field)) {
        sum += *(s.*field);
        ++n;
      }
    }
    if (n == 0) return std::nullopt;
    return sum / static_cast<double>(n);
  };
  for (const auto& s : samples) {
    if (s.executed) ++executed;
    if (s.executed && s.clip) r.clip_included = true;
    total += s.contribution();
  }
  r.execution_rate = 100.0 * static_cast<double>(executed) / static_cast<double>(samples.size());
  r.mean_content = mean_of(&SampleMetrics::content);
  r.mean_position = mean_of(&SampleMetrics::position);
  r.mean_ssim = mean_of(&SampleMetrics::ssim);
  r.mean_clip = mean_of(&SampleMetrics::clip);
  r.overall = total / static_cast<double>(samples.size());
  return r;
}

namespace {

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::string cell(const std::optional<double>& v, double scale = 100.0) {
  if (!v) return "-";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", *v * scale);
  return buf;
}

}  // namespace

json BatchReport::to_json() const {
  json rows_j = json::array();
  for (const auto& s : rows) {
    rows_j.push_back({{"id", s.id},
                      {"executed", s.executed},
                      {"content", opt(s.content)},
                      {"position", opt(s.position)},
                      {"ssim", opt(s.ssim)},
                      {"clip", opt(s.clip)},
                      {"contribution", s.contribution()}});
  }
  return {{"samples", samples},
          {"execution_rate", execution_rate},
          {"mean_content", opt(mean_content)},
          {"mean_position", opt(mean_position)},
          {"mean_ssim", opt(mean_ssim)},
          {"mean_clip", opt(mean_clip)},
          {"overall", overall},
          {"metrics_in_overall", clip_included ? json::array({"content", "position", "ssim", "clip"})
                                               : json::array({"content", "position", "ssim"})},
          {"rows", rows_j}};
}

std::string BatchReport::table() const {
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof line, "%-24s %5s %8s %8s %8s %8s %8s\n", "sample", "exec", "content", "position", "ssim",
                "clip", "score");
  out << line;
  for (const auto& s : rows) {
    std::snprintf(line, sizeof line, "%-24s %5s %8s %8s %8s %8s %8.2f\n", s.id.c_str(), s.executed ? "yes" : "no",
                  cell(s.content).c_str(), cell(s.position).c_str(), cell(s.ssim).c_str(), cell(s.clip).c_str(),
                  s.contribution());
    out << line;
  }
  std::snprintf(line, sizeof line, "execution rate %.2f%%  overall %.2f  (%s)\n", execution_rate, overall,
                clip_included ? "content, position, ssim, clip" : "content, position, ssim");
  out << line;
  return out.str();
}

void merge_clip(std::vector<SampleMetrics>& samples, const json& scores) {
  if (!scores.is_object()) throw EvalError("clip scores must be an object keyed by sample id");
  for (auto& s : samples) {
    if (!s.executed || !scores.contains(s.id)) continue;
    const double v = scores.at(s.id).get<double>();
    if (v < 0.0 || v > 1.0) throw EvalError("clip score for '" + s.id + "' outside [0, 1]");
    s.clip = v;
  }
}

}  // namespace slidegen::eval
