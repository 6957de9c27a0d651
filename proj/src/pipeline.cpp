#include "slidegen/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <thread>

#include "slidegen/prompts.hpp"

namespace slidegen::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<kb::KbEntry> Retriever::operator()(const std::string& query) const {
  if (kb == nullptr || index == nullptr || provider == nullptr) return {};
  return kb::resolve(*kb, kb::retrieve_top_k(*index, query, k, *provider));
}

namespace {

std::string box_text(const PixelBox& b) {
  return "(x=" + std::to_string(b.x) + ", y=" + std::to_string(b.y) + ", w=" + std::to_string(b.w) +
         ", h=" + std::to_string(b.h) + ")";
}

llm::ChatRequest make_request(const std::string& system, const fs::path& image, const std::string& text) {
  llm::ChatRequest req;
  req.system = system;
  req.parts = {llm::ContentPart::image(image.string()), llm::ContentPart::text(text)};
  return req;
}

std::string call_backend(llm::Backend& backend, const llm::ChatRequest& req, const std::string& stage,
                         const std::string& block_id, CallLog& log) {
  try {
    const std::string text = backend.complete(req).text;
    log.push_back({stage, block_id, req, text, ""});
    return text;
  } catch (const std::exception& e) {
    log.push_back({stage, block_id, req, "", e.what()});
    throw;
  }
}

// Shared self-refinement loop for Coder and Assembler.
std::vector<Attempt> refine_loop(const std::string& system, const fs::path& image, const std::string& base_prompt,
                                 const std::string& stage, const std::string& block_id, llm::Backend& backend,
                                 Checker& checker, int max_refine, CallLog& log, std::optional<std::string>& passed) {
  std::vector<Attempt> attempts;
  for (int n = 1; n <= max_refine; ++n) {
    std::string text = base_prompt;
    if (n > 1) {
      const Attempt& prev = attempts.back();
      text = prompts::refinement().render({{"BASE_PROMPT", base_prompt},
                                           {"ATTEMPT", std::to_string(n)},
                                           {"PREVIOUS_CODE", prev.code},
                                           {"ERROR", prev.error.value_or("")}});
    }
    std::string reply;
    try {
      reply = call_backend(backend, make_request(system, image, text), stage, block_id, log);
    } catch (const std::exception& e) {
      attempts.push_back({"", std::string("backend error: ") + e.what()});
      continue;
    }
    const std::string code = prompts::extract_code(reply);
    const CheckResult res = checker.check(code);
    if (res.ok) {
      attempts.push_back({code, std::nullopt});
      passed = code;
      return attempts;
    }
    attempts.push_back({code, res.error.empty() ? std::string("check failed") : res.error});
  }
  return attempts;
}

double elapsed_ms(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since).count();
}

std::string fmt3(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

}  // namespace

std::vector<llm::ChatRequest> describe_requests(const fs::path& design, const std::vector<Block>& blocks,
                                                const std::vector<kb::KbEntry>& shape_types) {
  const std::string listing = prompts::format_shape_types(kb::all_entries(shape_types, kb::EntryKind::shape_type));
  const std::string system = prompts::describer_system().render({});
  std::vector<llm::ChatRequest> out;
  out.push_back(make_request(system, design, prompts::describe_overall().render({{"SHAPE_TYPES", listing}})));
  for (const auto& b : blocks) {
    out.push_back(make_request(
        system, b.image_path,
        prompts::describe_block().render({{"BLOCK_ID", b.id}, {"BLOCK_BOX", box_text(b.bbox)}, {"SHAPE_TYPES", listing}})));
  }
  return out;
}

Descriptions describe(const fs::path& design, const std::vector<Block>& blocks,
                      const std::vector<kb::KbEntry>& shape_types, llm::Backend& backend, CallLog& log) {
  const auto requests = describe_requests(design, blocks, shape_types);
  Descriptions out;
  out.overall = call_backend(backend, requests[0], "describe_overall", "", log);
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    out.per_block.emplace_back(blocks[i].id, call_backend(backend, requests[i + 1], "describe_block", blocks[i].id, log));
  }
  return out;
}

CodeSnippet gen_snippet(const Block& block, const std::string& description, const Retriever& grammar,
                        llm::Backend& backend, Checker& checker, int max_refine, CallLog& log) {
  const std::string base = prompts::coder().render({{"BLOCK_ID", block.id},
                                                    {"DESCRIPTION", description},
                                                    {"GRAMMAR", prompts::format_grammar(grammar(description))}});
  CodeSnippet out;
  out.block_id = block.id;
  std::optional<std::string> passed;
  out.attempts = refine_loop(prompts::coder_system().render({}), block.image_path, base, "coder", block.id, backend,
                             checker, max_refine, log, passed);
  if (passed) {
    out.code = *passed;
    out.status = SnippetStatus::ok;
  }
  return out;
}

InchBox scale_position(const PixelBox& bbox, const SlideGeometry& geom) {
  const double sx = geom.slide_width_in / geom.image_width_px;
  const double sy = geom.slide_height_in / geom.image_height_px;
  return {bbox.x * sx, bbox.y * sy, bbox.w * sx, bbox.h * sy};
}

InchBox unscale_position(const InchBox& box, const SlideGeometry& geom) {
  const double sx = geom.image_width_px / geom.slide_width_in;
  const double sy = geom.image_height_px / geom.slide_height_in;
  return {box.x * sx, box.y * sy, box.w * sx, box.h * sy};
}

std::string format_position(const InchBox& b) {
  return "left=" + fmt3(b.x) + ", top=" + fmt3(b.y) + ", width=" + fmt3(b.w) + ", height=" + fmt3(b.h);
}

std::string build_layout_prompt(const LayoutInputs& in) {
  std::string snippets;
  std::string positions;
  for (const auto& s : in.snippets) {
    if (!snippets.empty()) snippets += "\n\n";
    snippets += "### " + s.block_id + " (Position*: " + format_position(s.position) + ")\n```python\n" + s.code +
                "\n```";
    if (!positions.empty()) positions += "\n";
    positions += "- " + s.block_id + ": " + format_position(s.position);
  }
  std::string pictures;
  for (const auto& p : in.pictures) {
    if (!pictures.empty()) pictures += "\n";
    pictures += "- " + p;
  }
  return prompts::layout().render({
      {"DESIGN", in.design_ref},
      {"OVERALL_DESCRIPTION", in.overall},
      {"CODE_SNIPPETS", snippets.empty() ? "(none)" : snippets},
      {"SLIDE_SIZE", fmt3(in.geometry.slide_width_in) + " x " + fmt3(in.geometry.slide_height_in) + " inches"},
      {"POSITIONS", positions.empty() ? "(none)" : positions},
      {"GRAMMAR", prompts::format_grammar(in.grammar)},
      {"PICTURES", pictures.empty() ? "(none)" : pictures},
  });
}

std::vector<PositionedSnippet> positioned_snippets(const std::vector<Block>& blocks,
                                                   const std::vector<CodeSnippet>& snippets, const SlideGeometry& geom) {
  std::vector<PositionedSnippet> out;
  for (const auto& b : blocks) {
    auto it = std::find_if(snippets.begin(), snippets.end(), [&](const CodeSnippet& s) { return s.block_id == b.id; });
    if (it == snippets.end() || it->status != SnippetStatus::ok) continue;
    out.push_back({b.id, it->code, scale_position(b.bbox, geom)});
  }
  return out;
}

std::vector<std::string> picture_destinations(const std::vector<fs::path>& pictures) {
  std::vector<std::string> out;
  for (const auto& p : pictures) out.push_back((fs::path("assets") / p.filename()).generic_string());
  return out;
}

AssembledProgram assemble(const std::string& prompt, const fs::path& design, const std::vector<fs::path>& pictures,
                          const fs::path& workdir, llm::Backend& backend, Checker& checker, int max_refine,
                          CallLog& log) {
  const auto dests = picture_destinations(pictures);
  for (std::size_t i = 0; i < pictures.size(); ++i) {
    if (prompt.find(dests[i]) == std::string::npos) {
      throw InputError("layout prompt does not reference picture " + dests[i]);
    }
    const fs::path target = workdir / dests[i];
    fs::create_directories(target.parent_path());
    fs::copy_file(pictures[i], target, fs::copy_options::overwrite_existing);
  }
  AssembledProgram out;
  std::optional<std::string> passed;
  out.attempts = refine_loop(prompts::assembler_system().render({}), design, prompt, "assembler", "", backend, checker,
                             max_refine, log, passed);
  if (passed) {
    out.code = *passed;
    out.status = ProgramStatus::ok;
  }
  return out;
}

std::vector<Block> segment_blocks(const raster::RasterImage& design, const cgseg::CgsegConfig& cfg,
                                  const fs::path& out_dir) {
  std::vector<Block> blocks;
  const fs::path dir = out_dir / "blocks";
  fs::create_directories(dir);
  if (design.width() < cfg.grid || design.height() < cfg.grid) return blocks;
  const auto regions = cgseg::cgseg(design, cfg);
  for (std::size_t i = 0; i < regions.size(); ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "block_%02zu", i);
    const fs::path path = dir / (std::string(id) + ".png");
    raster::save_png(regions[i].image, path);
    blocks.push_back({id, regions[i].bbox, regions[i].depth, path});
  }
  return blocks;
}

namespace {

std::string rel(const fs::path& p, const fs::path& root) {
  if (p.empty()) return {};
  const fs::path r = p.lexically_relative(root);
  return (r.empty() ? p : r).generic_string();
}

std::string prompt_text(const llm::ChatRequest& req) {
  std::string out;
  for (const auto& p : req.parts) {
    if (p.kind != llm::ContentPart::Kind::text) continue;
    if (!out.empty()) out += "\n";
    out += p.value;
  }
  return out;
}

json attempts_json(const std::vector<Attempt>& attempts) {
  json out = json::array();
  for (const auto& a : attempts) out.push_back({{"code", a.code}, {"error", a.error ? json(*a.error) : json(nullptr)}});
  return out;
}

}  // namespace

json PipelineResult::trace(const fs::path& root) const {
  json blocks_j = json::array();
  for (const auto& b : blocks) {
    const InchBox pos = scale_position(b.bbox, geometry);
    blocks_j.push_back({{"id", b.id},
                        {"bbox_px", {{"x", b.bbox.x}, {"y", b.bbox.y}, {"w", b.bbox.w}, {"h", b.bbox.h}}},
                        {"depth", b.depth},
                        {"image", rel(b.image_path, root)},
                        {"position_in", format_position(pos)}});
  }
  json per_block = json::array();
  for (const auto& [id, text] : descriptions.per_block) per_block.push_back({{"id", id}, {"text", text}});
  json snippets_j = json::array();
  for (const auto& s : snippets) {
    snippets_j.push_back({{"block_id", s.block_id},
                          {"status", s.status == SnippetStatus::ok ? "ok" : "dropped"},
                          {"code", s.code},
                          {"attempts", attempts_json(s.attempts)}});
  }
  json calls_j = json::array();
  for (const auto& c : calls) {
    json images = json::array();
    for (const auto& img : c.request.image_paths()) images.push_back(rel(img, root));
    calls_j.push_back({{"stage", c.stage},
                       {"block_id", c.block_id},
                       {"fingerprint", llm::fingerprint(c.request)},
                       {"system", c.request.system},
                       {"prompt", prompt_text(c.request)},
                       {"images", images},
                       {"max_tokens", c.request.max_tokens},
                       {"temperature", c.request.temperature},
                       {"response", c.response},
                       {"error", c.error}});
  }
  return {{"sample_id", sample_id},
          {"status", status},
          {"error", error},
          {"geometry",
           {{"slide_width_in", geometry.slide_width_in},
            {"slide_height_in", geometry.slide_height_in},
            {"image_width_px", geometry.image_width_px},
            {"image_height_px", geometry.image_height_px}}},
          {"blocks", blocks_j},
          {"descriptions", {{"overall", descriptions.overall}, {"blocks", per_block}}},
          {"snippets", snippets_j},
          {"program",
           {{"status", program.status == ProgramStatus::ok ? "ok" : "execution_failure"},
            {"code", program.code},
            {"attempts", attempts_json(program.attempts)}}},
          {"calls", calls_j}};
}

PipelineResult run_pipeline(const fs::path& design_path, const std::vector<fs::path>& pictures,
                            const PipelineConfig& cfg, const PipelineContext& ctx, const fs::path& out_dir,
                            const std::string& sample_id) {
  if (ctx.backend == nullptr || ctx.shape_types == nullptr || ctx.snippet_checker == nullptr ||
      ctx.program_checker == nullptr) {
    throw InputError("pipeline context is incomplete");
  }
  if (cfg.max_refine < 1) throw InputError("max_refine must be at least 1");
  for (const auto& p : pictures) {
    if (!fs::is_regular_file(p)) throw InputError("picture not found: " + p.string());
  }
  raster::RasterImage design = [&] {
    try {
      return raster::load_image(design_path);
    } catch (const raster::ImageError& e) {
      throw InputError(e.what());
    }
  }();

  PipelineResult res;
  res.sample_id = sample_id;
  res.geometry = {cfg.slide_width_in, cfg.slide_height_in, design.width(), design.height()};
  if (!res.geometry.valid()) throw InputError("slide geometry must be positive");
  fs::create_directories(out_dir);
  const fs::path design_copy = out_dir / "design.png";
  raster::save_png(design, design_copy);

  auto finish = [&]() -> PipelineResult {
    std::ofstream(out_dir / "trace.json") << res.trace(out_dir).dump(2) << "\n";
    json timing = res.timing_ms;
    std::ofstream(out_dir / "timing.json") << timing.dump(2) << "\n";
    return res;
  };

  auto t0 = std::chrono::steady_clock::now();
  res.blocks = segment_blocks(design, cfg.cgseg, out_dir);
  res.timing_ms["segment"] = elapsed_ms(t0);

  t0 = std::chrono::steady_clock::now();
  try {
    res.descriptions = describe(design_copy, res.blocks, *ctx.shape_types, *ctx.backend, res.calls);
  } catch (const std::exception& e) {
    res.status = "backend_failure";
    res.error = std::string("describer failed: ") + e.what();
    return finish();
  }
  res.timing_ms["describe"] = elapsed_ms(t0);

  // Blocks are generated concurrently; each keeps its own call log, merged in block order.
  t0 = std::chrono::steady_clock::now();
  res.snippets.resize(res.blocks.size());
  std::vector<CallLog> logs(res.blocks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < res.blocks.size(); i = next++) {
      res.snippets[i] = gen_snippet(res.blocks[i], res.descriptions.per_block[i].second, ctx.grammar, *ctx.backend,
                                    *ctx.snippet_checker, cfg.max_refine, logs[i]);
    }
  };
  const int nthreads = std::clamp(cfg.parallelism, 1, static_cast<int>(std::max<std::size_t>(res.blocks.size(), 1)));
  if (nthreads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int i = 0; i < nthreads; ++i) pool.emplace_back(worker);
  }
  for (auto& l : logs) res.calls.insert(res.calls.end(), l.begin(), l.end());
  res.timing_ms["code"] = elapsed_ms(t0);

  t0 = std::chrono::steady_clock::now();
  const auto placed = positioned_snippets(res.blocks, res.snippets, res.geometry);
  std::string query;
  for (const auto& s : placed) query += s.code + "\n";
  if (query.empty()) query = res.descriptions.overall;
  const fs::path workdir = out_dir / "program";
  fs::create_directories(workdir);
  try {
    const std::string prompt = build_layout_prompt({rel(design_copy, out_dir), res.descriptions.overall, placed,
                                                    ctx.grammar(query), picture_destinations(pictures), res.geometry});
    res.program = assemble(prompt, design_copy, pictures, workdir, *ctx.backend, *ctx.program_checker,
                           cfg.max_refine, res.calls);
  } catch (const std::exception& e) {
    res.status = "execution_failure";
    res.error = std::string("assembly failed: ") + e.what();
    return finish();
  }
  res.timing_ms["assemble"] = elapsed_ms(t0);

  if (res.program.status == ProgramStatus::ok) {
    res.status = "ok";
    std::ofstream(workdir / "program.py") << res.program.code << "\n";
  } else {
    res.status = "execution_failure";
    res.error = "no assembly attempt passed the execution check";
  }
  return finish();
}

}  // namespace slidegen::pipeline
