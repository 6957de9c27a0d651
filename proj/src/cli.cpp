#include "slidegen/cli.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>

#include "slidegen/cgseg.hpp"
#include "slidegen/config.hpp"
#include "slidegen/eval.hpp"
#include "slidegen/inventory.hpp"
#include "slidegen/kb.hpp"
#include "slidegen/llm.hpp"
#include "slidegen/pipeline.hpp"
#include "slidegen/raster.hpp"
#include "slidegen/runner_client.hpp"
#include "slidegen/scm.hpp"

namespace slidegen::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Input problems map to exit 1, everything after inputs validated maps to exit 2.
struct InputProblem : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

raster::RasterImage load_input_image(const fs::path& p) {
  try {
    return raster::load_image(p);
  } catch (const raster::ImageError& e) {
    throw InputProblem(e.what());
  }
}

std::vector<ShapeRecord> load_input_inventory(const fs::path& p) {
  try {
    return load_inventory(p);
  } catch (const std::exception& e) {
    throw InputProblem(e.what());
  }
}

// ---- segment -------------------------------------------------------------

struct SegmentArgs {
  std::string image;
  cgseg::CgsegConfig cfg;
  std::string out;
  std::string debug_mask;
};

int cmd_segment(const SegmentArgs& a, std::ostream& out) {
  const raster::RasterImage img = load_input_image(a.image);
  try {
    a.cfg.validate();
  } catch (const std::exception& e) {
    throw InputProblem(e.what());
  }
  if (img.width() < a.cfg.grid || img.height() < a.cfg.grid) {
    throw InputProblem("image is smaller than the segmentation grid");
  }
  json regions = json::array();
  for (const auto& r : cgseg::cgseg(img, a.cfg)) regions.push_back({{"bbox", r.bbox}, {"depth", r.depth}});
  const json doc = {{"image", {{"width", img.width()}, {"height", img.height()}}},
                    {"config", {{"grid", a.cfg.grid}, {"max_depth", a.cfg.max_depth}, {"threshold", a.cfg.threshold}}},
                    {"coverage", cgseg::coverage_ratio(img, a.cfg)},
                    {"regions", regions}};
  if (a.out.empty()) {
    out << doc.dump(2) << "\n";
  } else {
    write_text(a.out, doc.dump(2) + "\n");
  }
  if (!a.debug_mask.empty()) cgseg::debug_mask_png(img, a.cfg, a.debug_mask);
  return kExitOk;
}

// ---- complexity ----------------------------------------------------------

struct ComplexityArgs {
  std::string corpus;
  std::string config;
  scm::ScmWeights weights;
  cgseg::CgsegConfig cfg;
  bool tier = false;
  std::size_t sample = 0;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_complexity(ComplexityArgs a, std::ostream& out) {
  if (!a.config.empty()) {
    const RunConfig rc = load_config(a.config);
    a.weights = rc.weights;
    a.cfg = rc.cgseg;
    a.seed = rc.seed;
  }
  try {
    a.weights.validate();
    a.cfg.validate();
  } catch (const std::exception& e) {
    throw InputProblem(e.what());
  }
  if (!fs::is_directory(a.corpus)) throw InputProblem("corpus directory not found: " + a.corpus);
  if (a.sample > 0 && !a.tier) throw InputProblem("--sample requires --tier");

  std::vector<fs::path> inventories;
  for (const auto& e : fs::directory_iterator(a.corpus)) {
    if (e.is_regular_file() && e.path().extension() == ".json") inventories.push_back(e.path());
  }
  std::sort(inventories.begin(), inventories.end());
  if (inventories.empty()) throw InputProblem("corpus contains no inventory files");

  std::vector<scm::ComplexityRecord> records;
  for (const auto& inv : inventories) {
    fs::path png = inv;
    png.replace_extension(".png");
    const auto shapes = load_input_inventory(inv);
    const auto img = load_input_image(png);
    scm::ComplexityRecord r;
    r.id = inv.stem().string();
    r.features = scm::features_from_inventory(shapes, img, a.cfg);
    records.push_back(std::move(r));
  }
  records = scm::score_cohort(std::move(records), a.weights);

  json summary = {{"samples", records.size()}};
  if (a.tier) {
    std::vector<double> zs;
    for (const auto& r : records) zs.push_back(r.z);
    scm::Tiering t;
    try {
      t = scm::kmeans_tier(zs);
    } catch (const scm::ScmError& e) {
      throw InputProblem(e.what());
    }
    std::array<std::size_t, 3> counts{};
    for (std::size_t i = 0; i < records.size(); ++i) {
      records[i].tier = t.tiers[i];
      ++counts[static_cast<int>(t.tiers[i]) - 1];
    }
    summary["centers"] = t.centers;
    for (int k = 0; k < 3; ++k) {
      const std::string name = scm::to_string(static_cast<scm::Tier>(k + 1));
      summary["tiers"][name] = {{"count", counts[k]},
                                {"proportion", static_cast<double>(counts[k]) / static_cast<double>(records.size())}};
    }
  }

  json cohort = json::array();
  std::string csv = "id,element_count,type_count,coverage,norm_element,norm_type,norm_coverage,z,tier\n";
  for (const auto& r : records) {
    cohort.push_back({{"id", r.id},
                      {"element_count", r.features.element_count},
                      {"type_count", r.features.type_count},
                      {"coverage", r.features.coverage},
                      {"normalized", {r.normalized(0), r.normalized(1), r.normalized(2)}},
                      {"z", r.z},
                      {"tier", scm::to_string(r.tier)}});
    char line[512];
    std::snprintf(line, sizeof line, "%s,%d,%d,%.17g,%.17g,%.17g,%.17g,%.17g,%s\n", r.id.c_str(),
                  r.features.element_count, r.features.type_count, r.features.coverage, r.normalized(0),
                  r.normalized(1), r.normalized(2), r.z, scm::to_string(r.tier).c_str());
    csv += line;
  }

  json selection;
  if (a.sample > 0) {
    try {
      const scm::Selection sel = scm::sample_tiers(records, a.sample, a.seed);
      for (int k = 0; k < 3; ++k) selection[scm::to_string(static_cast<scm::Tier>(k + 1))] = sel.ids[k];
    } catch (const scm::ScmError& e) {
      throw InputProblem(e.what());
    }
  }

  const json doc = {{"weights", {{"alpha", a.weights.alpha}, {"beta", a.weights.beta}, {"gamma", a.weights.gamma},
                                 {"epsilon", a.weights.epsilon}}},
                    {"cohort", cohort},
                    {"summary", summary}};
  if (!a.out.empty()) {
    write_text(fs::path(a.out) / "cohort.json", doc.dump(2) + "\n");
    write_text(fs::path(a.out) / "cohort.csv", csv);
    if (!selection.is_null()) write_text(fs::path(a.out) / "selection.json", selection.dump(2) + "\n");
    out << summary.dump(2) << "\n";
  } else {
    json all = doc;
    if (!selection.is_null()) all["selection"] = selection;
    out << all.dump(2) << "\n";
  }
  return kExitOk;
}

// ---- generate ------------------------------------------------------------

struct GenerateArgs {
  std::string config;
  std::string design;
  std::vector<std::string> pictures;
  std::string pictures_dir;
  std::string out;
  std::string id = "sample";
  bool dry_run = false;
};

class AcceptAll final : public Checker {
 public:
  CheckResult check(const std::string&) override { return {true, ""}; }
};

int cmd_generate(const GenerateArgs& a, std::ostream& out, std::ostream& err) {
  RunConfig rc = load_config(a.config);
  if (!a.design.empty()) rc.design = a.design;
  if (!a.pictures_dir.empty()) rc.pictures_dir = a.pictures_dir;
  if (!a.out.empty()) rc.output_dir = a.out;

  if (rc.shape_types_kb.empty() || rc.operation_functions_kb.empty()) {
    throw ConfigError("config must name both knowledge bases (kb.shape_types, kb.operation_functions)");
  }
  std::vector<kb::KbEntry> entries;
  for (const auto& path : {rc.shape_types_kb, rc.operation_functions_kb}) {
    auto loaded = kb::load_kb(path);
    entries.insert(entries.end(), loaded.begin(), loaded.end());
  }
  if (rc.design.empty()) throw InputProblem("no design image given");
  if (!fs::is_regular_file(rc.design)) throw InputProblem("design image not found: " + rc.design.string());

  std::vector<fs::path> pictures(a.pictures.begin(), a.pictures.end());
  if (!rc.pictures_dir.empty()) {
    if (!fs::is_directory(rc.pictures_dir)) throw InputProblem("pictures directory not found: " + rc.pictures_dir.string());
    std::vector<fs::path> found;
    for (const auto& e : fs::directory_iterator(rc.pictures_dir)) {
      if (e.is_regular_file()) found.push_back(e.path());
    }
    std::sort(found.begin(), found.end());
    pictures.insert(pictures.end(), found.begin(), found.end());
  }
  for (const auto& p : pictures) {
    if (!fs::is_regular_file(p)) throw InputProblem("picture not found: " + p.string());
  }

  if (a.dry_run) {
    const raster::RasterImage design = load_input_image(rc.design);
    fs::create_directories(rc.output_dir);
    const fs::path design_copy = rc.output_dir / "design.png";
    raster::save_png(design, design_copy);
    const auto blocks = pipeline::segment_blocks(design, rc.cgseg, rc.output_dir);
    const auto requests = pipeline::describe_requests(design_copy, blocks, entries);
    json listing = json::array();
    for (std::size_t i = 0; i < requests.size(); ++i) {
      char name[64];
      std::snprintf(name, sizeof name, "prompts/%02zu_%s.txt", i, i == 0 ? "describe_overall" : blocks[i - 1].id.c_str());
      write_text(rc.output_dir / name, requests[i].text() + "\n");
      listing.push_back({{"file", name}, {"fingerprint", llm::fingerprint(requests[i])}});
    }
    out << json({{"dry_run", true}, {"blocks", blocks.size()}, {"prompts", listing}, {"backend_calls", 0}}).dump(2)
        << "\n";
    return kExitOk;
  }

  const auto provider = make_embedding_provider(rc.embedding);
  const kb::VectorIndex index = kb::build_index(entries, *provider, kb::EntryKind::operation_function);
  std::unique_ptr<llm::Backend> backend;
  try {
    backend = llm::make_backend(rc.backend);
  } catch (const llm::BackendError& e) {
    if (e.kind() != llm::ErrorKind::config) throw;
    throw ConfigError(e.what());
  }

  std::unique_ptr<runner::RunnerClient> client;
  if (rc.runner.check_snippets || rc.runner.check_program) client = std::make_unique<runner::RunnerClient>(rc.runner.command);
  AcceptAll accept;
  std::unique_ptr<Checker> snippet_checker;
  std::unique_ptr<Checker> program_checker;
  if (rc.runner.check_snippets) snippet_checker = std::make_unique<runner::SyntaxChecker>(*client, rc.runner.timeout_s);
  if (rc.runner.check_program) {
    program_checker =
        std::make_unique<runner::ExecutionChecker>(*client, fs::absolute(rc.output_dir / "program"), rc.runner.timeout_s);
  }

  pipeline::PipelineConfig pc;
  pc.cgseg = rc.cgseg;
  pc.slide_width_in = rc.slide_width_in;
  pc.slide_height_in = rc.slide_height_in;
  pc.top_k = rc.top_k;
  pc.max_refine = rc.max_refine;
  pc.parallelism = rc.parallelism;

  pipeline::PipelineContext ctx;
  ctx.backend = backend.get();
  ctx.shape_types = &entries;
  ctx.grammar = {&entries, &index, provider.get(), rc.top_k};
  ctx.snippet_checker = snippet_checker ? snippet_checker.get() : &accept;
  ctx.program_checker = program_checker ? program_checker.get() : &accept;

  pipeline::PipelineResult res;
  try {
    res = pipeline::run_pipeline(rc.design, pictures, pc, ctx, rc.output_dir, a.id);
  } catch (const pipeline::InputError& e) {
    throw InputProblem(e.what());
  }
  std::size_t dropped = 0;
  for (const auto& s : res.snippets) dropped += s.status == pipeline::SnippetStatus::dropped;
  out << json({{"sample_id", res.sample_id},
               {"status", res.status},
               {"blocks", res.blocks.size()},
               {"dropped_blocks", dropped},
               {"backend_calls", res.backend_calls()},
               {"trace", (rc.output_dir / "trace.json").string()}})
             .dump(2)
      << "\n";
  if (res.status != "ok") {
    err << "generation failed: " << res.error << "\n";
    return kExitFailure;
  }
  return kExitOk;
}

// ---- evaluate ------------------------------------------------------------

struct EvaluateArgs {
  std::string ref_inventory;
  std::string ref_image;
  std::string gen_inventory;
  std::string gen_image;
  std::string trace;
  std::string id = "sample";
  std::string manifest;
  std::string clip;
  double slide_width = kWideSlideWidthIn;
  double slide_height = 7.5;
  std::string out;
};

struct SampleInputs {
  std::string id;
  fs::path ref_inventory, ref_image, gen_inventory, gen_image, trace;
};

eval::SampleMetrics evaluate_one(const SampleInputs& s, double sw, double sh) {
  if (!s.trace.empty()) {
    std::ifstream in(s.trace);
    if (!in) throw InputProblem("cannot open trace " + s.trace.string());
    json t;
    try {
      t = json::parse(in);
    } catch (const json::exception& e) {
      throw InputProblem("malformed trace " + s.trace.string() + ": " + e.what());
    }
    if (t.value("status", std::string{}) != "ok") return eval::failed_sample(s.id);
  }
  if (s.gen_inventory.empty() || s.gen_image.empty()) {
    throw InputProblem("sample '" + s.id + "' executed but has no generated inventory and image");
  }
  const auto ref_shapes = load_input_inventory(s.ref_inventory);
  const auto gen_shapes = load_input_inventory(s.gen_inventory);
  const auto ref_img = load_input_image(s.ref_image);
  const auto gen_img = load_input_image(s.gen_image);
  return eval::score_sample(s.id, ref_shapes, ref_img, gen_shapes, gen_img, sw, sh);
}

int cmd_evaluate(const EvaluateArgs& a, std::ostream& out) {
  std::vector<SampleInputs> inputs;
  if (!a.manifest.empty()) {
    std::ifstream in(a.manifest);
    if (!in) throw InputProblem("cannot open manifest " + a.manifest);
    const fs::path base = fs::path(a.manifest).parent_path();
    auto path_of = [&](const json& j, const char* key) -> fs::path {
      if (!j.contains(key)) return {};
      const fs::path p = j.at(key).get<std::string>();
      return p.is_absolute() ? p : base / p;
    };
    try {
      const json m = json::parse(in);
      for (const auto& s : m.at("samples")) {
        inputs.push_back({s.at("id").get<std::string>(), path_of(s, "ref_inventory"), path_of(s, "ref_image"),
                          path_of(s, "gen_inventory"), path_of(s, "gen_image"), path_of(s, "trace")});
      }
    } catch (const json::exception& e) {
      throw InputProblem("malformed manifest: " + std::string(e.what()));
    }
  } else {
    if (a.ref_inventory.empty() || a.ref_image.empty()) {
      throw InputProblem("--ref-inventory and --ref-image are required without --manifest");
    }
    inputs.push_back({a.id, a.ref_inventory, a.ref_image, a.gen_inventory, a.gen_image, a.trace});
  }
  if (inputs.empty()) throw InputProblem("no samples to evaluate");

  std::vector<eval::SampleMetrics> samples;
  for (const auto& s : inputs) samples.push_back(evaluate_one(s, a.slide_width, a.slide_height));
  if (!a.clip.empty()) {
    std::ifstream in(a.clip);
    if (!in) throw InputProblem("cannot open clip scores " + a.clip);
    try {
      eval::merge_clip(samples, json::parse(in));
    } catch (const std::exception& e) {
      throw InputProblem(e.what());
    }
  }
  const eval::BatchReport report = eval::batch_report(samples);
  if (!a.out.empty()) write_text(a.out, report.to_json().dump(2) + "\n");
  out << report.table();
  return kExitOk;
}

// ---- kb-index ------------------------------------------------------------

struct KbIndexArgs {
  std::string kb;
  std::string kind = "operation_function";
  std::string out;
  std::string provider = "mock";
  int dimension = 256;
  std::uint64_t seed = 0;
  std::string endpoint;
  std::string model;
  std::string api_key_env;
  std::string query;
  std::size_t k = 5;
};

int cmd_kb_index(const KbIndexArgs& a, std::ostream& out) {
  std::vector<kb::KbEntry> entries;
  kb::EntryKind kind;
  try {
    entries = kb::load_kb(a.kb);
    kind = kb::parse_kind(a.kind);
  } catch (const kb::KbError& e) {
    throw InputProblem(e.what());
  }
  EmbeddingConfig ec;
  ec.kind = a.provider == "http" ? EmbeddingConfig::Kind::http : EmbeddingConfig::Kind::mock;
  ec.dimension = a.dimension;
  ec.seed = a.seed;
  ec.http = {a.endpoint, a.model, a.api_key_env, a.dimension, 30.0};
  std::unique_ptr<kb::EmbeddingProvider> provider;
  try {
    provider = make_embedding_provider(ec);
  } catch (const kb::KbError& e) {
    throw InputProblem(e.what());
  }
  const kb::VectorIndex index = kb::build_index(entries, *provider, kind);
  index.save(a.out, provider->name());

  json doc = {{"index", a.out}, {"kind", kb::to_string(kind)}, {"entries", index.size()}, {"dimension", index.dimension()}};
  if (!a.query.empty()) {
    const kb::VectorIndex reloaded = kb::VectorIndex::load(a.out);
    json hits = json::array();
    for (const auto& h : kb::retrieve_top_k(reloaded, a.query, a.k, *provider)) {
      hits.push_back({{"id", h.id}, {"score", h.score}});
    }
    doc["hits"] = hits;
  }
  out << doc.dump(2) << "\n";
  return kExitOk;
}

void add_cgseg_options(CLI::App* cmd, cgseg::CgsegConfig& cfg) {
  cmd->add_option("--grid", cfg.grid, "Grid cells per side")->capture_default_str();
  cmd->add_option("--max-depth", cfg.max_depth, "Maximum recursion depth")->capture_default_str();
  cmd->add_option("--threshold", cfg.threshold, "Activation multiplier over the median")->capture_default_str();
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"slidegen: slide image to python-pptx code generation and benchmarking"};
  app.require_subcommand(1);

  SegmentArgs seg;
  auto* segment = app.add_subcommand("segment", "Segment a slide image into blocks");
  segment->add_option("image", seg.image, "PNG image")->required();
  add_cgseg_options(segment, seg.cfg);
  segment->add_option("--out", seg.out, "Write region JSON here instead of stdout");
  segment->add_option("--debug-mask", seg.debug_mask, "Write a PNG visualizing the mask and regions");

  ComplexityArgs cx;
  auto* complexity = app.add_subcommand("complexity", "Score and tier a corpus of slides");
  complexity->add_option("corpus", cx.corpus, "Directory of <id>.json inventories with <id>.png images")->required();
  complexity->add_option("--config", cx.config, "Config file supplying weights, cgseg params and seed");
  complexity->add_option("--alpha", cx.weights.alpha, "Element-count weight")->capture_default_str();
  complexity->add_option("--beta", cx.weights.beta, "Type-count weight")->capture_default_str();
  complexity->add_option("--gamma", cx.weights.gamma, "Coverage weight")->capture_default_str();
  complexity->add_option("--epsilon", cx.weights.epsilon, "Normalization stabilizer")->capture_default_str();
  add_cgseg_options(complexity, cx.cfg);
  complexity->add_flag("--tier", cx.tier, "Assign simple/medium/complex tiers with 1-D KMeans");
  complexity->add_option("--sample", cx.sample, "Sample this many ids per tier");
  complexity->add_option("--seed", cx.seed, "Sampling seed")->capture_default_str();
  complexity->add_option("--out", cx.out, "Output directory for cohort.json/csv");

  GenerateArgs gen;
  auto* generate = app.add_subcommand("generate", "Generate python-pptx code for a slide design");
  generate->add_option("--config", gen.config, "Run config (JSON)")->required();
  generate->add_option("--design", gen.design, "Design image (overrides config)");
  generate->add_option("--pictures", gen.pictures, "Picture assets");
  generate->add_option("--pictures-dir", gen.pictures_dir, "Directory of picture assets (overrides config)");
  generate->add_option("--out", gen.out, "Output directory (overrides config)");
  generate->add_option("--id", gen.id, "Sample id recorded in the trace")->capture_default_str();
  generate->add_flag("--dry-run", gen.dry_run, "Write Describer prompts and stop before any backend call");

  EvaluateArgs ev;
  auto* evaluate = app.add_subcommand("evaluate", "Score generated slides against references");
  evaluate->add_option("--ref-inventory", ev.ref_inventory, "Reference shape inventory JSON");
  evaluate->add_option("--ref-image", ev.ref_image, "Reference slide image");
  evaluate->add_option("--gen-inventory", ev.gen_inventory, "Generated shape inventory JSON");
  evaluate->add_option("--gen-image", ev.gen_image, "Generated slide image");
  evaluate->add_option("--trace", ev.trace, "Pipeline trace; a failed run scores zero");
  evaluate->add_option("--id", ev.id, "Sample id")->capture_default_str();
  evaluate->add_option("--manifest", ev.manifest, "Batch manifest {\"samples\": [...]}");
  evaluate->add_option("--clip", ev.clip, "External clip scores keyed by sample id");
  evaluate->add_option("--slide-width", ev.slide_width, "Slide width in inches")->capture_default_str();
  evaluate->add_option("--slide-height", ev.slide_height, "Slide height in inches")->capture_default_str();
  evaluate->add_option("--out", ev.out, "Write the JSON report here");

  KbIndexArgs ki;
  auto* kb_index = app.add_subcommand("kb-index", "Embed a knowledge base and persist the index");
  kb_index->add_option("kb", ki.kb, "Line-delimited JSON knowledge base")->required();
  kb_index->add_option("--kind", ki.kind, "shape_type or operation_function")->capture_default_str();
  kb_index->add_option("--out", ki.out, "Index file to write")->required();
  kb_index->add_option("--provider", ki.provider, "mock or http")->check(CLI::IsMember({"mock", "http"}))->capture_default_str();
  kb_index->add_option("--dimension", ki.dimension, "Embedding dimension")->capture_default_str();
  kb_index->add_option("--seed", ki.seed, "Mock provider seed")->capture_default_str();
  kb_index->add_option("--endpoint", ki.endpoint, "HTTP embedding endpoint");
  kb_index->add_option("--model", ki.model, "HTTP embedding model");
  kb_index->add_option("--api-key-env", ki.api_key_env, "Environment variable holding the API key");
  kb_index->add_option("--query", ki.query, "Retrieve against the saved index after writing it");
  kb_index->add_option("--k", ki.k, "Number of hits for --query")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (*segment) return cmd_segment(seg, out);
    if (*complexity) return cmd_complexity(cx, out);
    if (*generate) return cmd_generate(gen, out, err);
    if (*evaluate) return cmd_evaluate(ev, out);
    if (*kb_index) return cmd_kb_index(ki, out);
  } catch (const InputProblem& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitInput;
  } catch (const kb::KbError& e) {
    err << "knowledge base error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    err << "failed: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitInput;
}

}  // namespace slidegen::cli
