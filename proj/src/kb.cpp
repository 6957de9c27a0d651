#include <cmath>
#include "slidegen/kb.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "http_util.hpp"
#include "slidegen/hash.hpp"

namespace slidegen::kb {

using nlohmann::json;

std::string to_string(EntryKind k) {
  return k == EntryKind::shape_type ? "shape_type" : "operation_function";
}

EntryKind parse_kind(std::string_view s) {
  if (s == "shape_type") return EntryKind::shape_type;
  if (s == "operation_function") return EntryKind::operation_function;
  throw KbError("unknown entry kind '" + std::string(s) + "'");
}

std::vector<KbEntry> parse_kb(std::string_view text, std::string_view source) {
  std::vector<KbEntry> out;
  std::set<std::string> seen;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); })) continue;
    const std::string where = std::string(source) + ":" + std::to_string(lineno);
    KbEntry e;
    try {
      const json j = json::parse(line);
      j.at("id").get_to(e.id);
      e.kind = parse_kind(j.at("kind").get<std::string>());
      j.at("name").get_to(e.name);
      e.body = j.value("body", std::string{});
    } catch (const json::exception& ex) {
      throw KbError(where + ": malformed entry: " + ex.what());
    } catch (const KbError& ex) {
      throw KbError(where + ": " + ex.what());
    }
    if (e.id.empty()) throw KbError(where + ": entry id is empty");
    if (e.name.empty()) throw KbError(where + ": entry '" + e.id + "' has an empty name");
    if (!seen.insert(e.id).second) throw KbError(where + ": duplicate entry id '" + e.id + "'");
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<KbEntry> load_kb(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw KbError("cannot open knowledge base " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_kb(ss.str(), path.string());
}

std::vector<KbEntry> all_entries(const std::vector<KbEntry>& kb, EntryKind kind) {
  std::vector<KbEntry> out;
  std::copy_if(kb.begin(), kb.end(), std::back_inserter(out), [kind](const KbEntry& e) { return e.kind == kind; });
  std::sort(out.begin(), out.end(), [](const KbEntry& a, const KbEntry& b) { return a.id < b.id; });
  return out;
}

MockEmbeddingProvider::MockEmbeddingProvider(int dimension, std::uint64_t seed) : dimension_(dimension), seed_(seed) {
  if (dimension < 1) throw KbError("embedding dimension must be positive");
}

std::string MockEmbeddingProvider::name() const {
  return "mock:" + std::to_string(dimension_) + ":" + std::to_string(seed_);
}

Eigen::VectorXd MockEmbeddingProvider::embed(std::string_view text) const {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(dimension_);
  const std::uint64_t basis = fnv1a64(std::to_string(seed_));
  auto add = [&](std::string_view token) {
    const std::uint64_t h = fnv1a64(token, basis);
    v(static_cast<Eigen::Index>(h % static_cast<std::uint64_t>(dimension_))) += ((h >> 32) & 1U) ? 1.0 : -1.0;
  };
  std::string token;
  for (const char c : text) {
    const auto u = static_cast<unsigned char>(c);
    if (std::isalnum(u) || c == '_') {
      token.push_back(static_cast<char>(std::tolower(u)));
    } else if (!token.empty()) {
      add(token);
      token.clear();
    }
  }
  if (!token.empty()) add(token);
  // Texts without tokens, or whose tokens cancel out, still need a direction.
  if (v.norm() == 0.0) {
    const std::uint64_t h = fnv1a64(text, basis ^ 0x9e3779b97f4a7c15ULL);
    v(static_cast<Eigen::Index>(h % static_cast<std::uint64_t>(dimension_))) = 1.0;
  }
  return v.normalized();
}

HttpEmbeddingProvider::HttpEmbeddingProvider(HttpEmbeddingConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.endpoint.empty() || cfg_.model.empty()) throw KbError("http embedding provider needs endpoint and model");
  if (cfg_.dimension < 1) throw KbError("http embedding provider needs a positive dimension");
}

Eigen::VectorXd HttpEmbeddingProvider::embed(std::string_view text) const {
  std::map<std::string, std::string> headers;
  if (!cfg_.api_key_env.empty()) {
    const char* key = std::getenv(cfg_.api_key_env.c_str());
    if (key == nullptr || *key == '\0') throw KbError("environment variable " + cfg_.api_key_env + " is not set");
    headers["Authorization"] = std::string("Bearer ") + key;
  }
  const json body = {{"model", cfg_.model}, {"input", std::string(text)}};
  const auto res = detail::post_json(cfg_.endpoint, body.dump(), headers, cfg_.timeout_s);
  if (res.failure != detail::HttpFailure::none) throw KbError("embedding request failed: " + res.failure_message);
  if (res.status != 200) throw KbError("embedding request returned HTTP " + std::to_string(res.status));
  std::vector<double> values;
  try {
    const json reply = json::parse(res.body);
    const json& arr = reply.contains("data") ? reply.at("data").at(0).at("embedding") : reply.at("embedding");
    values = arr.get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw KbError(std::string("malformed embedding reply: ") + e.what());
  }
  if (static_cast<int>(values.size()) != cfg_.dimension) {
    throw KbError("embedding has dimension " + std::to_string(values.size()) + ", expected " +
                  std::to_string(cfg_.dimension));
  }
  return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

VectorIndex::VectorIndex(int dimension, EntryKind kind, std::vector<std::string> ids, Eigen::MatrixXd vectors)
    : dimension_(dimension), kind_(kind), ids_(std::move(ids)), vectors_(std::move(vectors)) {
  if (dimension_ < 1) throw KbError("index dimension must be positive");
  if (vectors_.rows() != static_cast<Eigen::Index>(ids_.size()) || (vectors_.rows() > 0 && vectors_.cols() != dimension_)) {
    throw KbError("index vectors do not match ids/dimension");
  }
  if (vectors_.rows() == 0) vectors_.resize(0, dimension_);
  for (Eigen::Index i = 0; i < vectors_.rows(); ++i) {
    if (std::abs(vectors_.row(i).norm() - 1.0) > 1e-6) {
      throw KbError("vector for '" + ids_[static_cast<std::size_t>(i)] + "' is not unit norm");
    }
  }
}

namespace {
double tie_key(double score) { return std::round(score * 1e12); }
}  // namespace

std::vector<ScoredEntry> VectorIndex::search(const Eigen::VectorXd& query, std::size_t k) const {
  if (query.size() != dimension_) {
    throw KbError("query has dimension " + std::to_string(query.size()) + ", index has " + std::to_string(dimension_));
  }
  const double qn = query.norm();
  if (ids_.empty() || k == 0) return {};
  const Eigen::VectorXd scores = qn > 0 ? Eigen::VectorXd(vectors_ * (query / qn)) : Eigen::VectorXd::Zero(vectors_.rows());
  std::vector<std::size_t> order(ids_.size());
  std::iota(order.begin(), order.end(), 0);
  const std::size_t n = std::min(k, order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      const double sa = tie_key(scores(static_cast<Eigen::Index>(a)));
                      const double sb = tie_key(scores(static_cast<Eigen::Index>(b)));
                      return sa != sb ? sa > sb : ids_[a] < ids_[b];
                    });
  std::vector<ScoredEntry> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back({ids_[order[i]], scores(static_cast<Eigen::Index>(order[i]))});
  return out;
}

void VectorIndex::save(const std::filesystem::path& path, std::string_view provider_name) const {
  json entries = json::array();
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    const Eigen::VectorXd row = vectors_.row(static_cast<Eigen::Index>(i)).transpose();
    entries.push_back({{"id", ids_[i]}, {"vector", std::vector<double>(row.data(), row.data() + row.size())}});
  }
  const json doc = {{"dimension", dimension_}, {"kind", to_string(kind_)}, {"provider", std::string(provider_name)},
                    {"entries", entries}};
  std::ofstream out(path);
  if (!out) throw KbError("cannot write index " + path.string());
  out << doc.dump(1) << "\n";
}

VectorIndex VectorIndex::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw KbError("cannot open index " + path.string());
  try {
    const json doc = json::parse(in);
    const int dim = doc.at("dimension").get<int>();
    const EntryKind kind = parse_kind(doc.at("kind").get<std::string>());
    const json& entries = doc.at("entries");
    std::vector<std::string> ids;
    Eigen::MatrixXd vectors(static_cast<Eigen::Index>(entries.size()), dim);
    for (std::size_t i = 0; i < entries.size(); ++i) {
      ids.push_back(entries[i].at("id").get<std::string>());
      const auto v = entries[i].at("vector").get<std::vector<double>>();
      if (static_cast<int>(v.size()) != dim) throw KbError("vector for '" + ids.back() + "' has wrong dimension");
      vectors.row(static_cast<Eigen::Index>(i)) = Eigen::Map<const Eigen::RowVectorXd>(v.data(), dim);
    }
    return VectorIndex(dim, kind, std::move(ids), std::move(vectors));
  } catch (const json::exception& e) {
    throw KbError("malformed index " + path.string() + ": " + e.what());
  }
}

VectorIndex build_index(const std::vector<KbEntry>& entries, const EmbeddingProvider& provider, EntryKind kind) {
  const std::vector<KbEntry> selected = all_entries(entries, kind);
  Eigen::MatrixXd vectors(static_cast<Eigen::Index>(selected.size()), provider.dimension());
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < selected.size(); ++i) {
    Eigen::VectorXd v;
    try {
      v = provider.embed(selected[i].embedding_text());
    } catch (const std::exception& e) {
      throw KbError("embedding entry '" + selected[i].id + "' failed: " + e.what());
    }
    if (v.size() != provider.dimension() || v.norm() == 0.0) {
      throw KbError("embedding entry '" + selected[i].id + "' returned an unusable vector");
    }
    vectors.row(static_cast<Eigen::Index>(i)) = v.normalized().transpose();
    ids.push_back(selected[i].id);
  }
  return VectorIndex(provider.dimension(), kind, std::move(ids), std::move(vectors));
}

std::vector<ScoredEntry> retrieve_top_k(const VectorIndex& index, std::string_view query, std::size_t k,
                                        const EmbeddingProvider& provider) {
  if (k < 1) throw KbError("k must be at least 1");
  if (index.size() == 0) return {};
  return index.search(provider.embed(query), k);
}

std::vector<KbEntry> resolve(const std::vector<KbEntry>& kb, const std::vector<ScoredEntry>& hits) {
  std::vector<KbEntry> out;
  for (const auto& h : hits) {
    auto it = std::find_if(kb.begin(), kb.end(), [&](const KbEntry& e) { return e.id == h.id; });
    if (it == kb.end()) throw KbError("index refers to unknown entry '" + h.id + "'");
    out.push_back(*it);
  }
  return out;
}

}  // namespace slidegen::kb
