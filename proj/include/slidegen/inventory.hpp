#pragma once

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>
#include <vector>

#include "slidegen/geometry.hpp"

namespace slidegen {

/// One shape extracted from a deck: the comparable content of a slide.
struct ShapeRecord {
  std::string type_name;
  InchBox bbox;
  std::string text;
  nlohmann::json style = nlohmann::json::object();
};

void to_json(nlohmann::json& j, const ShapeRecord& s);
void from_json(const nlohmann::json& j, ShapeRecord& s);

void to_json(nlohmann::json& j, const InchBox& b);
void from_json(const nlohmann::json& j, InchBox& b);
void to_json(nlohmann::json& j, const PixelBox& b);
void from_json(const nlohmann::json& j, PixelBox& b);

/// Parses an inventory document: either a bare array of shapes or {"shapes": [...]}.
std::vector<ShapeRecord> parse_inventory(const nlohmann::json& doc);
std::vector<ShapeRecord> load_inventory(const std::filesystem::path& path);

}  // namespace slidegen
