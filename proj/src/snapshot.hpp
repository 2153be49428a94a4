#pragma once

#include <string>

#include <json.hpp>

#include "geometry.hpp"

namespace grf {

// JSON document: mesh, algebra constants, time, and each field's values in storage order.
nlohmann::json state_to_json(const GeometryState& s);
GeometryState state_from_json(const nlohmann::json& j, const std::string& origin);

void write_state(const GeometryState& s, const std::string& path);
GeometryState read_state(const std::string& path);

nlohmann::json read_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace grf
