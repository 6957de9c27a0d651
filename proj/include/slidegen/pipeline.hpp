#pragma once

#include <nlohmann/json.hpp>

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "slidegen/cgseg.hpp"
#include "slidegen/checker.hpp"
#include "slidegen/geometry.hpp"
#include "slidegen/kb.hpp"
#include "slidegen/llm.hpp"

// Describer / Coder / Assembler orchestration with retrieval-augmented
// prompts, layout-aware assembly and bounded self-refinement.

namespace slidegen::pipeline {

class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A segmented region with a stable id and the crop written to disk.
struct Block {
  std::string id;
  PixelBox bbox;
  int depth = 1;
  std::filesystem::path image_path;
};

struct Descriptions {
  std::string overall;
  std::vector<std::pair<std::string, std::string>> per_block;  // (block id, text)
};

struct Attempt {
  std::string code;
  std::optional<std::string> error;  // nullopt when the check passed
};

enum class SnippetStatus { ok, dropped };
enum class ProgramStatus { ok, execution_failure };

struct CodeSnippet {
  std::string block_id;
  std::string code;  // the first passing attempt; empty when dropped
  std::vector<Attempt> attempts;
  SnippetStatus status = SnippetStatus::dropped;
};

struct AssembledProgram {
  std::string code;
  std::vector<Attempt> attempts;
  ProgramStatus status = ProgramStatus::execution_failure;
};

struct CallRecord {
  std::string stage;  // describe_overall, describe_block, coder, assembler
  std::string block_id;
  llm::ChatRequest request;
  std::string response;
  std::string error;
};

using CallLog = std::vector<CallRecord>;

/// Top-k operation-function retrieval over a built index.
struct Retriever {
  const std::vector<kb::KbEntry>* kb = nullptr;
  const kb::VectorIndex* index = nullptr;
  const kb::EmbeddingProvider* provider = nullptr;
  std::size_t k = 5;

  std::vector<kb::KbEntry> operator()(const std::string& query) const;
};

struct PipelineConfig {
  cgseg::CgsegConfig cgseg;
  double slide_width_in = kWideSlideWidthIn;
  double slide_height_in = 7.5;
  std::size_t top_k = 5;
  int max_refine = 3;
  int parallelism = 1;
};

/// Collaborators that outlive a run.
struct PipelineContext {
  llm::Backend* backend = nullptr;
  const std::vector<kb::KbEntry>* shape_types = nullptr;
  Retriever grammar;
  Checker* snippet_checker = nullptr;
  Checker* program_checker = nullptr;
};

Descriptions describe(const std::filesystem::path& design, const std::vector<Block>& blocks,
                      const std::vector<kb::KbEntry>& shape_types, llm::Backend& backend, CallLog& log);

/// Describer requests without sending them, in call order.
std::vector<llm::ChatRequest> describe_requests(const std::filesystem::path& design, const std::vector<Block>& blocks,
                                                const std::vector<kb::KbEntry>& shape_types);

CodeSnippet gen_snippet(const Block& block, const std::string& description, const Retriever& grammar,
                        llm::Backend& backend, Checker& checker, int max_refine, CallLog& log);

InchBox scale_position(const PixelBox& bbox, const SlideGeometry& geom);
InchBox unscale_position(const InchBox& box, const SlideGeometry& geom);

/// Inch box as "left=…, top=…, width=…, height=…" with three decimals.
std::string format_position(const InchBox& box);

struct PositionedSnippet {
  std::string block_id;
  std::string code;
  InchBox position;
};

struct LayoutInputs {
  std::string design_ref;
  std::string overall;
  std::vector<PositionedSnippet> snippets;
  std::vector<kb::KbEntry> grammar;
  std::vector<std::string> pictures;  // paths relative to the program directory
  SlideGeometry geometry;
};

std::string build_layout_prompt(const LayoutInputs& in);

/// Passing snippets paired with their scaled positions, in block order.
std::vector<PositionedSnippet> positioned_snippets(const std::vector<Block>& blocks,
                                                   const std::vector<CodeSnippet>& snippets, const SlideGeometry& geom);

/// Relative destination of each picture inside the program directory.
std::vector<std::string> picture_destinations(const std::vector<std::filesystem::path>& pictures);

AssembledProgram assemble(const std::string& prompt, const std::filesystem::path& design,
                          const std::vector<std::filesystem::path>& pictures, const std::filesystem::path& workdir,
                          llm::Backend& backend, Checker& checker, int max_refine, CallLog& log);

struct PipelineResult {
  std::string sample_id;
  std::string status;  // ok | execution_failure | input_error | backend_failure
  std::string error;
  SlideGeometry geometry;
  std::vector<Block> blocks;
  Descriptions descriptions;
  std::vector<CodeSnippet> snippets;
  AssembledProgram program;
  CallLog calls;
  std::map<std::string, double> timing_ms;

  std::size_t backend_calls() const { return calls.size(); }
  /// Deterministic trace; paths are written relative to `root`.
  nlohmann::json trace(const std::filesystem::path& root) const;
};

/// Segments the design and writes block crops under out_dir/blocks.
std::vector<Block> segment_blocks(const raster::RasterImage& design, const cgseg::CgsegConfig& cfg,
                                  const std::filesystem::path& out_dir);

/// Runs every stage. Stage failures are recorded in the result rather than thrown;
/// only unreadable inputs raise InputError. Writes trace.json, timing.json and
/// program/program.py under out_dir.
PipelineResult run_pipeline(const std::filesystem::path& design, const std::vector<std::filesystem::path>& pictures,
                            const PipelineConfig& cfg, const PipelineContext& ctx,
                            const std::filesystem::path& out_dir, const std::string& sample_id = "sample");

}  // namespace slidegen::pipeline
