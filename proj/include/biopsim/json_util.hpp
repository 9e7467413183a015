#pragma once

#include "biopsim/geometry.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>

namespace biopsim {

using Json = nlohmann::ordered_json;

inline Json to_json(const Vec3& v) { return Json::array({v.x(), v.y(), v.z()}); }

/// Throws BadInput unless j is a 3-element numeric array.
Vec3 vec3_from_json(const Json& j, const char* what);

Json read_json_file(const std::filesystem::path& path);

/// Writes via a temporary sibling and rename so readers never see partial files.
void write_text_atomic(const std::filesystem::path& path, const std::string& text);
void write_json_atomic(const std::filesystem::path& path, const Json& j);

}  // namespace biopsim
