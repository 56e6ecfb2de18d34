#include "appray/serde.hpp"

#include <fstream>
#include <sstream>

#include "appray/common.hpp"

namespace appray {

using explore::Action;
using explore::ActionKind;
using explore::ActionTarget;

Json rect_to_json(const ui::Rect& r) {
  return Json::array({r.x1, r.y1, r.x2, r.y2});
}

ui::Rect rect_from_json(const Json& j) {
  if (!j.is_array() || j.size() != 4)
    throw AppError(ErrorKind::MalformedInput, "rect must be [x1,y1,x2,y2]");
  return ui::Rect{j[0].get<int>(), j[1].get<int>(), j[2].get<int>(),
                  j[3].get<int>()};
}

Json action_to_json(const Action& a) {
  Json j;
  j["kind"] = explore::action_kind_name(a.kind);
  if (a.target) {
    j["target"] = {{"leaf_index", a.target->leaf_index},
                   {"resource_id", a.target->resource_id},
                   {"label", a.target->label},
                   {"bounds", rect_to_json(a.target->bounds)},
                   {"checkable", a.target->checkable}};
  }
  if (a.direction) j["direction"] = explore::direction_name(*a.direction);
  if (a.text) j["text"] = *a.text;
  return j;
}

Action action_from_json(const Json& j) {
  Action a;
  a.kind = explore::action_kind_from_name(j.at("kind").get<std::string>());
  if (j.contains("target")) {
    const Json& t = j["target"];
    ActionTarget tgt;
    tgt.leaf_index = t.value("leaf_index", -1);
    tgt.resource_id = t.value("resource_id", "");
    tgt.label = t.value("label", "");
    if (t.contains("bounds")) tgt.bounds = rect_from_json(t["bounds"]);
    tgt.checkable = t.value("checkable", false);
    a.target = tgt;
  }
  if (j.contains("direction"))
    a.direction = explore::direction_from_name(j["direction"].get<std::string>());
  if (j.contains("text")) a.text = j["text"].get<std::string>();
  return a;
}

std::string read_text_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw AppError(ErrorKind::IoFailure, "cannot open " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw AppError(ErrorKind::IoFailure, "cannot write " + path);
  f << content;
  if (!f) throw AppError(ErrorKind::IoFailure, "short write to " + path);
}

Json read_json_file(const std::string& path) {
  const std::string text = read_text_file(path);
  Json j = Json::parse(text, nullptr, false);
  if (j.is_discarded())
    throw AppError(ErrorKind::MalformedInput, "invalid JSON in " + path);
  return j;
}

}  // namespace appray
