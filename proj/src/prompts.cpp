#include "slidegen/prompts.hpp"

#include <algorithm>
#include <set>

namespace slidegen::prompts {

namespace {

constexpr std::string_view kOpen = "<<";
constexpr std::string_view kClose = ">>";

bool is_name_char(char c) { return (c >= 'A' && c <= 'Z') || c == '_' || (c >= '0' && c <= '9'); }

// Finds the next well-formed placeholder at or after `from`: returns (start, name).
std::pair<std::size_t, std::string> next_placeholder(const std::string& s, std::size_t from) {
  for (auto open = s.find(kOpen, from); open != std::string::npos; open = s.find(kOpen, open + 1)) {
    const auto close = s.find(kClose, open + kOpen.size());
    if (close == std::string::npos) break;
    const std::string name = s.substr(open + kOpen.size(), close - open - kOpen.size());
    if (!name.empty() && std::all_of(name.begin(), name.end(), is_name_char)) return {open, name};
  }
  return {std::string::npos, {}};
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

Template::Template(std::string text) : text_(std::move(text)) {
  std::set<std::string> seen;
  for (auto [pos, name] = next_placeholder(text_, 0); pos != std::string::npos;
       std::tie(pos, name) = next_placeholder(text_, pos + 1)) {
    if (seen.insert(name).second) names_.push_back(name);
  }
}

std::string Template::render(const std::map<std::string, std::string>& values) const {
  for (const auto& [k, v] : values) {
    if (std::find(names_.begin(), names_.end(), k) == names_.end()) {
      throw PromptError("template has no placeholder <<" + k + ">>");
    }
  }
  std::string out;
  std::size_t last = 0;
  for (auto [pos, name] = next_placeholder(text_, 0); pos != std::string::npos;
       std::tie(pos, name) = next_placeholder(text_, last)) {
    const auto it = values.find(name);
    if (it == values.end()) throw PromptError("placeholder <<" + name + ">> left unfilled");
    out.append(text_, last, pos - last);
    out += it->second;
    last = pos + kOpen.size() + name.size() + kClose.size();
  }
  out.append(text_, last);
  return out;
}

const Template& describer_system() {
  static const Template t(
      "You are the Describer in a slide-to-code pipeline. You describe slide designs precisely so that another "
      "agent can rebuild them with python-pptx. Always name elements with the python-pptx object types you are "
      "given.");
  return t;
}

const Template& describe_overall() {
  static const Template t(
      "[Describer] Overall description\n"
      "The attached image is the complete slide design. Describe the overall layout, the background, the color "
      "scheme and every visible element with its approximate location. Name each element with one of the "
      "python-pptx object types below.\n"
      "\n"
      "Shape types:\n"
      "<<SHAPE_TYPES>>\n");
  return t;
}

const Template& describe_block() {
  static const Template t(
      "[Describer] Block description for <<BLOCK_ID>>\n"
      "The attached image is block <<BLOCK_ID>>, cropped from the slide design at pixel box <<BLOCK_BOX>>. "
      "Describe every element inside it: text content, font size and color, fills, lines and pictures. Name each "
      "element with one of the python-pptx object types below.\n"
      "\n"
      "Shape types:\n"
      "<<SHAPE_TYPES>>\n");
  return t;
}

const Template& coder_system() {
  static const Template t(
      "You are the Coder in a slide-to-code pipeline. You write python-pptx code fragments for single blocks of a "
      "slide.");
  return t;
}

const Template& coder() {
  static const Template t(
      "[Coder] Code snippet for <<BLOCK_ID>>\n"
      "Write python-pptx code that reproduces the block shown in the attached image. The code is a fragment: a "
      "variable `slide` holding a pptx.slide.Slide is already in scope. Do not create a Presentation and do not "
      "save a file.\n"
      "\n"
      "Block description:\n"
      "<<DESCRIPTION>>\n"
      "\n"
      "Relevant python-pptx API:\n"
      "<<GRAMMAR>>\n"
      "\n"
      "Return only the code in a single ```python block.\n");
  return t;
}

const Template& refinement() {
  static const Template t(
      "<<BASE_PROMPT>>\n"
      "[Refinement attempt <<ATTEMPT>>] The previous code failed the check.\n"
      "Previous code:\n"
      "```python\n"
      "<<PREVIOUS_CODE>>\n"
      "```\n"
      "Fix the following error and return the corrected code:\n"
      "<<ERROR>>\n");
  return t;
}

const Template& assembler_system() {
  static const Template t(
      "You are the Assembler in a slide-to-code pipeline. You merge code snippets into one complete, executable "
      "python-pptx program.");
  return t;
}

const Template& layout() {
  static const Template t(
      "[Assembler] Layout-aware slide assembly\n"
      "\n"
      "<Design>\n"
      "The attached image <<DESIGN>> is the target slide design.\n"
      "\n"
      "<Overall description.>\n"
      "<<OVERALL_DESCRIPTION>>\n"
      "\n"
      "<Code Snippets>\n"
      "<<CODE_SNIPPETS>>\n"
      "\n"
      "<Position*>\n"
      "Slide size: <<SLIDE_SIZE>>. Block positions in inches (left, top, width, height):\n"
      "<<POSITIONS>>\n"
      "\n"
      "<Grammar>\n"
      "<<GRAMMAR>>\n"
      "\n"
      "<Pictures>\n"
      "<<PICTURES>>\n"
      "\n"
      "Requirements:\n"
      "1. Each block must appear in the correct position given by <Position*>.\n"
      "2. The program must have no syntax errors and no context conflicts between merged snippets, such as "
      "repeated Presentation objects or clashing variable names.\n"
      "Write one complete python-pptx program that creates a Presentation whose slide width and height equal the "
      "slide size, adds a single slide, places every block, and saves the deck as \"output.pptx\". Return only the "
      "code in a single ```python block.\n");
  return t;
}

std::string format_shape_types(const std::vector<kb::KbEntry>& entries) {
  if (entries.empty()) return "(none)";
  std::string out;
  for (const auto& e : entries) {
    if (!out.empty()) out += "\n";
    out += "- " + e.name + ": " + e.body;
  }
  return out;
}

std::string format_grammar(const std::vector<kb::KbEntry>& entries) {
  if (entries.empty()) return "(none)";
  std::string out;
  for (const auto& e : entries) {
    if (!out.empty()) out += "\n\n";
    out += "## " + e.name + "\n" + e.body;
  }
  return out;
}

std::string extract_code(const std::string& reply) {
  const auto open = reply.find("```");
  if (open == std::string::npos) return trim(reply);
  const auto body = reply.find('\n', open);
  if (body == std::string::npos) return trim(reply);
  const auto close = reply.find("```", body + 1);
  return trim(reply.substr(body + 1, close == std::string::npos ? std::string::npos : close - body - 1));
}

}  // namespace slidegen::prompts
