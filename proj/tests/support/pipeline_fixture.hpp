#pragma once

// The mock-scripted end-to-end fixture shared by the unit and acceptance suites.

#include <fstream>
#include <memory>

#include "slidegen/config.hpp"
#include "slidegen/kb.hpp"
#include "slidegen/llm.hpp"
#include "slidegen/pipeline.hpp"
#include "test_support.hpp"

namespace slidegen::testing {

/// Rejects code whose parentheses do not balance, reporting the first offending line.
inline CheckResult paren_check(const std::string& code) {
  int depth = 0;
  int line = 1;
  int open_line = 1;
  for (char c : code) {
    if (c == '\n') ++line;
    if (c == '(' && depth++ == 0) open_line = line;
    if (c == ')' && --depth < 0) return {false, "line " + std::to_string(line) + ": unmatched ')'"};
  }
  if (depth != 0) return {false, "line " + std::to_string(open_line) + ": '(' was never closed"};
  return {true, ""};
}

struct PipelineFixture {
  std::vector<kb::KbEntry> shape_types;
  std::vector<kb::KbEntry> operations;
  kb::MockEmbeddingProvider provider{256, 0};
  std::unique_ptr<kb::VectorIndex> index;
  std::unique_ptr<llm::MockBackend> backend;
  FunctionChecker snippet_checker{paren_check};
  FunctionChecker program_checker{[](const std::string& code) {
    return code.find("prs.save(") != std::string::npos ? CheckResult{true, ""}
                                                        : CheckResult{false, "no deck was saved"};
  }};
  pipeline::PipelineConfig config;

  PipelineFixture() {
    shape_types = kb::load_kb(data_dir() / "kb/shape_types.jsonl");
    operations = kb::load_kb(data_dir() / "kb/operation_functions.jsonl");
    index = std::make_unique<kb::VectorIndex>(kb::build_index(operations, provider, kb::EntryKind::operation_function));
    std::ifstream in(fixtures_dir() / "pipeline/script.json");
    backend = std::make_unique<llm::MockBackend>(llm::script_from_json(nlohmann::json::parse(in)));
  }

  pipeline::PipelineContext context() {
    pipeline::PipelineContext ctx;
    ctx.backend = backend.get();
    ctx.shape_types = &shape_types;
    ctx.grammar = {&operations, index.get(), &provider, config.top_k};
    ctx.snippet_checker = &snippet_checker;
    ctx.program_checker = &program_checker;
    return ctx;
  }

  pipeline::PipelineResult run(const fs::path& out, const fs::path& design = fixtures_dir() / "pipeline/design.png") {
    return pipeline::run_pipeline(design, {fixtures_dir() / "pipeline/logo.png"}, config, context(), out, "fixture");
  }
};

inline fs::path golden_trace_path() { return fixtures_dir() / "pipeline/golden_trace.json"; }

/// Sum of attempts over every snippet and the assembly.
inline std::size_t attempt_total(const pipeline::PipelineResult& r) {
  std::size_t n = r.program.attempts.size();
  for (const auto& s : r.snippets) n += s.attempts.size();
  return n;
}

}  // namespace slidegen::testing
