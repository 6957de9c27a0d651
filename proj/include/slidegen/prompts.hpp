#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "slidegen/kb.hpp"

namespace slidegen::prompts {

class PromptError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Text with <<NAME>> placeholders. Rendering fails on any missing or unknown value.
class Template {
 public:
  explicit Template(std::string text);

  const std::string& text() const { return text_; }
  const std::vector<std::string>& placeholders() const { return names_; }
  std::string render(const std::map<std::string, std::string>& values) const;

 private:
  std::string text_;
  std::vector<std::string> names_;  // in order of first appearance
};

const Template& describer_system();
const Template& describe_overall();
const Template& describe_block();
const Template& coder_system();
const Template& coder();
const Template& refinement();
const Template& assembler_system();
const Template& layout();

/// Shape-type listing: one "- name: body" line per entry.
std::string format_shape_types(const std::vector<kb::KbEntry>& entries);

/// Operation-function listing with full bodies, separated by blank lines.
std::string format_grammar(const std::vector<kb::KbEntry>& entries);

/// Pulls the first fenced code block out of a reply, or returns the trimmed reply.
std::string extract_code(const std::string& reply);

}  // namespace slidegen::prompts
