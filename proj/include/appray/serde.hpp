#pragma once

#include <string>

#include <json.hpp>

#include "appray/explore_types.hpp"
#include "appray/ui.hpp"

namespace appray {

using Json = nlohmann::json;

Json rect_to_json(const ui::Rect& r);
ui::Rect rect_from_json(const Json& j);

Json action_to_json(const explore::Action& a);
explore::Action action_from_json(const Json& j);

// File helpers; throw IoFailure on failure.
std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);
Json read_json_file(const std::string& path);

}  // namespace appray
