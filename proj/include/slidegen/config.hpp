#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "slidegen/cgseg.hpp"
#include "slidegen/kb.hpp"
#include "slidegen/llm.hpp"
#include "slidegen/scm.hpp"

namespace slidegen {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EmbeddingConfig {
  enum class Kind { mock, http };
  Kind kind = Kind::mock;
  int dimension = 256;
  std::uint64_t seed = 0;
  kb::HttpEmbeddingConfig http;
};

struct RunnerConfig {
  std::vector<std::string> command{"slidegen-runner"};  // argv of the runner process
  double timeout_s = 60.0;
  bool check_snippets = true;  // false: every snippet passes
  bool check_program = true;   // false: every program passes
};

/// Everything a command needs. Relative paths are resolved against the config file's directory.
struct RunConfig {
  std::filesystem::path design;
  std::filesystem::path pictures_dir;
  std::filesystem::path output_dir = "out";
  std::filesystem::path shape_types_kb;
  std::filesystem::path operation_functions_kb;
  EmbeddingConfig embedding;
  llm::BackendConfig backend;
  cgseg::CgsegConfig cgseg;
  scm::ScmWeights weights;
  double slide_width_in = kWideSlideWidthIn;
  double slide_height_in = 7.5;
  std::size_t top_k = 5;
  int max_refine = 3;
  int parallelism = 1;
  std::uint64_t seed = 0;
  RunnerConfig runner;

  /// Throws ConfigError on out-of-range values.
  void validate() const;
};

/// Parses a config document. Unknown keys are rejected.
RunConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir);
RunConfig load_config(const std::filesystem::path& path);

std::unique_ptr<kb::EmbeddingProvider> make_embedding_provider(const EmbeddingConfig& cfg);

}  // namespace slidegen
