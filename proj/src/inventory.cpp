#include "slidegen/inventory.hpp"

#include <fstream>
#include <stdexcept>

namespace slidegen {

void to_json(nlohmann::json& j, const InchBox& b) { j = {{"x", b.x}, {"y", b.y}, {"w", b.w}, {"h", b.h}}; }

void from_json(const nlohmann::json& j, InchBox& b) {
  if (j.is_array()) {
    if (j.size() != 4) throw std::invalid_argument("bbox array must have 4 elements");
    b = {j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
    return;
  }
  j.at("x").get_to(b.x);
  j.at("y").get_to(b.y);
  j.at("w").get_to(b.w);
  j.at("h").get_to(b.h);
}

void to_json(nlohmann::json& j, const PixelBox& b) { j = {{"x", b.x}, {"y", b.y}, {"w", b.w}, {"h", b.h}}; }

void from_json(const nlohmann::json& j, PixelBox& b) {
  j.at("x").get_to(b.x);
  j.at("y").get_to(b.y);
  j.at("w").get_to(b.w);
  j.at("h").get_to(b.h);
}

void to_json(nlohmann::json& j, const ShapeRecord& s) {
  j = {{"type_name", s.type_name}, {"bbox", s.bbox}, {"text", s.text}, {"style", s.style}};
}

void from_json(const nlohmann::json& j, ShapeRecord& s) {
  j.at("type_name").get_to(s.type_name);
  j.at("bbox").get_to(s.bbox);
  s.text = j.value("text", std::string{});
  s.style = j.value("style", nlohmann::json::object());
  if (s.bbox.w < 0 || s.bbox.h < 0) {
    throw std::invalid_argument("shape '" + s.type_name + "' has negative extent");
  }
}

std::vector<ShapeRecord> parse_inventory(const nlohmann::json& doc) {
  const nlohmann::json& shapes = doc.is_object() ? doc.at("shapes") : doc;
  if (!shapes.is_array()) throw std::invalid_argument("inventory must be an array of shapes");
  return shapes.get<std::vector<ShapeRecord>>();
}

std::vector<ShapeRecord> load_inventory(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open inventory " + path.string());
  try {
    return parse_inventory(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("malformed inventory " + path.string() + ": " + e.what());
  }
}

}  // namespace slidegen
