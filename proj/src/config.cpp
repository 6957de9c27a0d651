#include "slidegen/config.hpp"

#include <fstream>
#include <set>

namespace slidegen {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.contains(key)) throw ConfigError("unknown config key '" + where + "." + key + "'");
  }
}

fs::path resolve(const json& v, const fs::path& base) {
  fs::path p = v.get<std::string>();
  if (p.empty() || p.is_absolute()) return p;
  return base / p;
}

template <typename T>
void read(const json& obj, const char* key, T& out) {
  if (obj.contains(key)) obj.at(key).get_to(out);
}

}  // namespace

void RunConfig::validate() const {
  try {
    cgseg.validate();
    weights.validate();
    backend.validate();
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  if (!(slide_width_in > 0 && slide_height_in > 0)) throw ConfigError("slide geometry must be positive");
  if (top_k < 1) throw ConfigError("top_k must be at least 1");
  if (max_refine < 1) throw ConfigError("max_refine must be at least 1");
  if (parallelism < 1) throw ConfigError("parallelism must be at least 1");
  if (embedding.dimension < 1) throw ConfigError("embedding dimension must be positive");
  if (embedding.kind == EmbeddingConfig::Kind::http && (embedding.http.endpoint.empty() || embedding.http.model.empty())) {
    throw ConfigError("http embedding provider requires endpoint and model");
  }
  if ((runner.check_snippets || runner.check_program) && runner.command.empty()) {
    throw ConfigError("runner.command is required unless both runner checks are disabled");
  }
  if (!(runner.timeout_s > 0)) throw ConfigError("runner.timeout_s must be positive");
}

RunConfig parse_config(const json& doc, const fs::path& base) {
  RunConfig c;
  try {
    reject_unknown(doc,
                   {"design", "pictures_dir", "output_dir", "kb", "embedding", "backend", "cgseg", "scm", "geometry",
                    "top_k", "max_refine", "parallelism", "seed", "runner"},
                   "config");
    if (doc.contains("design")) c.design = resolve(doc["design"], base);
    if (doc.contains("pictures_dir")) c.pictures_dir = resolve(doc["pictures_dir"], base);
    if (doc.contains("output_dir")) c.output_dir = resolve(doc["output_dir"], base);
    if (doc.contains("kb")) {
      const json& k = doc["kb"];
      reject_unknown(k, {"shape_types", "operation_functions"}, "kb");
      if (k.contains("shape_types")) c.shape_types_kb = resolve(k["shape_types"], base);
      if (k.contains("operation_functions")) c.operation_functions_kb = resolve(k["operation_functions"], base);
    }
    if (doc.contains("embedding")) {
      const json& e = doc["embedding"];
      reject_unknown(e, {"kind", "dimension", "seed", "endpoint", "model", "api_key_env", "timeout_s"}, "embedding");
      const std::string kind = e.value("kind", std::string("mock"));
      if (kind != "mock" && kind != "http") throw ConfigError("embedding.kind must be mock or http");
      c.embedding.kind = kind == "http" ? EmbeddingConfig::Kind::http : EmbeddingConfig::Kind::mock;
      read(e, "dimension", c.embedding.dimension);
      read(e, "seed", c.embedding.seed);
      read(e, "endpoint", c.embedding.http.endpoint);
      read(e, "model", c.embedding.http.model);
      read(e, "api_key_env", c.embedding.http.api_key_env);
      read(e, "timeout_s", c.embedding.http.timeout_s);
      c.embedding.http.dimension = c.embedding.dimension;
    }
    if (doc.contains("backend")) {
      const json& b = doc["backend"];
      reject_unknown(b, {"kind", "endpoint", "model", "api_key_env", "timeout_s", "retries", "backoff_base_s", "script"},
                     "backend");
      const std::string kind = b.value("kind", std::string("mock"));
      if (kind != "mock" && kind != "http") throw ConfigError("backend.kind must be mock or http");
      c.backend.kind = kind == "http" ? llm::BackendConfig::Kind::http : llm::BackendConfig::Kind::mock;
      read(b, "endpoint", c.backend.endpoint);
      read(b, "model", c.backend.model);
      read(b, "api_key_env", c.backend.api_key_env);
      read(b, "timeout_s", c.backend.timeout_s);
      read(b, "retries", c.backend.retries);
      read(b, "backoff_base_s", c.backend.backoff_base_s);
      if (b.contains("script")) c.backend.script_path = resolve(b["script"], base).string();
    }
    if (doc.contains("cgseg")) {
      const json& g = doc["cgseg"];
      reject_unknown(g, {"grid", "max_depth", "threshold"}, "cgseg");
      read(g, "grid", c.cgseg.grid);
      read(g, "max_depth", c.cgseg.max_depth);
      read(g, "threshold", c.cgseg.threshold);
    }
    if (doc.contains("scm")) {
      const json& s = doc["scm"];
      reject_unknown(s, {"alpha", "beta", "gamma", "epsilon"}, "scm");
      read(s, "alpha", c.weights.alpha);
      read(s, "beta", c.weights.beta);
      read(s, "gamma", c.weights.gamma);
      read(s, "epsilon", c.weights.epsilon);
    }
    if (doc.contains("geometry")) {
      const json& g = doc["geometry"];
      reject_unknown(g, {"slide_width_in", "slide_height_in"}, "geometry");
      read(g, "slide_width_in", c.slide_width_in);
      read(g, "slide_height_in", c.slide_height_in);
    }
    read(doc, "top_k", c.top_k);
    read(doc, "max_refine", c.max_refine);
    read(doc, "parallelism", c.parallelism);
    read(doc, "seed", c.seed);
    if (doc.contains("runner")) {
      const json& r = doc["runner"];
      reject_unknown(r, {"command", "timeout_s", "check_snippets", "check_program"}, "runner");
      read(r, "command", c.runner.command);
      read(r, "timeout_s", c.runner.timeout_s);
      read(r, "check_snippets", c.runner.check_snippets);
      read(r, "check_program", c.runner.check_program);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid config value: ") + e.what());
  }
  c.validate();
  return c;
}

RunConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("malformed config " + path.string() + ": " + e.what());
  }
  return parse_config(doc, path.parent_path());
}

std::unique_ptr<kb::EmbeddingProvider> make_embedding_provider(const EmbeddingConfig& cfg) {
  if (cfg.kind == EmbeddingConfig::Kind::http) {
    kb::HttpEmbeddingConfig http = cfg.http;
    http.dimension = cfg.dimension;
    return std::make_unique<kb::HttpEmbeddingProvider>(http);
  }
  return std::make_unique<kb::MockEmbeddingProvider>(cfg.dimension, cfg.seed);
}

}  // namespace slidegen
