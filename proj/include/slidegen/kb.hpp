#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

// Knowledge bases of python-pptx shape types and operation functions, with
// embedding-backed top-k cosine retrieval.

namespace slidegen::kb {

class KbError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class EntryKind { shape_type, operation_function };

std::string to_string(EntryKind k);
EntryKind parse_kind(std::string_view s);

struct KbEntry {
  std::string id;
  EntryKind kind = EntryKind::shape_type;
  std::string name;
  std::string body;
  std::optional<Eigen::VectorXd> embedding;

  /// Text handed to the embedding provider.
  std::string embedding_text() const { return name + "\n" + body; }
};

/// Reads line-delimited JSON entries {id, kind, name, body}. Blank lines are skipped.
std::vector<KbEntry> load_kb(const std::filesystem::path& path);
std::vector<KbEntry> parse_kb(std::string_view text, std::string_view source = "<memory>");

/// Entries of `kind` in ascending id order.
std::vector<KbEntry> all_entries(const std::vector<KbEntry>& kb, EntryKind kind = EntryKind::shape_type);

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual int dimension() const = 0;
  virtual Eigen::VectorXd embed(std::string_view text) const = 0;
  virtual std::string name() const = 0;
};

/// Deterministic signed feature hashing of lower-cased word tokens.
class MockEmbeddingProvider final : public EmbeddingProvider {
 public:
  explicit MockEmbeddingProvider(int dimension = 256, std::uint64_t seed = 0);
  int dimension() const override { return dimension_; }
  Eigen::VectorXd embed(std::string_view text) const override;
  std::string name() const override;

 private:
  int dimension_;
  std::uint64_t seed_;
};

struct HttpEmbeddingConfig {
  std::string endpoint;  // e.g. http://host:port/v1/embeddings
  std::string model;
  std::string api_key_env;  // empty: no Authorization header
  int dimension = 0;
  double timeout_s = 30.0;
};

/// Posts {"model", "input"} and reads data[0].embedding (or a top-level "embedding").
class HttpEmbeddingProvider final : public EmbeddingProvider {
 public:
  explicit HttpEmbeddingProvider(HttpEmbeddingConfig cfg);
  int dimension() const override { return cfg_.dimension; }
  Eigen::VectorXd embed(std::string_view text) const override;
  std::string name() const override { return "http:" + cfg_.model; }

 private:
  HttpEmbeddingConfig cfg_;
};

struct ScoredEntry {
  std::string id;
  double score = 0.0;
};

/// Write-once matrix of unit-norm embeddings, one row per entry.
class VectorIndex {
 public:
  VectorIndex(int dimension, EntryKind kind, std::vector<std::string> ids, Eigen::MatrixXd vectors);

  int dimension() const { return dimension_; }
  EntryKind kind() const { return kind_; }
  std::size_t size() const { return ids_.size(); }
  const std::vector<std::string>& ids() const { return ids_; }
  const Eigen::MatrixXd& vectors() const { return vectors_; }

  /// Top min(k, size) entries by cosine score, ties broken by ascending id.
  /// Scores that agree to 12 decimal places count as tied.
  std::vector<ScoredEntry> search(const Eigen::VectorXd& query, std::size_t k) const;

  void save(const std::filesystem::path& path, std::string_view provider_name) const;
  static VectorIndex load(const std::filesystem::path& path);

 private:
  int dimension_;
  EntryKind kind_;
  std::vector<std::string> ids_;
  Eigen::MatrixXd vectors_;
};

/// Embeds every entry of `kind` and L2-normalizes the vectors.
VectorIndex build_index(const std::vector<KbEntry>& entries, const EmbeddingProvider& provider, EntryKind kind);

std::vector<ScoredEntry> retrieve_top_k(const VectorIndex& index, std::string_view query, std::size_t k,
                                        const EmbeddingProvider& provider);

/// Resolves scored ids back to entries, preserving rank order.
std::vector<KbEntry> resolve(const std::vector<KbEntry>& kb, const std::vector<ScoredEntry>& hits);

}  // namespace slidegen::kb
