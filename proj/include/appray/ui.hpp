#pragma once

#include <memory>
#include <string>
#include <vector>

#include "appray/common.hpp"

namespace appray::ui {

struct Rect {
  int x1 = 0, y1 = 0, x2 = 0, y2 = 0;

  int width() const { return x2 - x1; }
  int height() const { return y2 - y1; }
  long long area() const {
    return static_cast<long long>(width()) * height();
  }
  bool contains(const Rect& o) const {
    return x1 <= o.x1 && y1 <= o.y1 && x2 >= o.x2 && y2 >= o.y2;
  }
  int center_x() const { return x1 + width() / 2; }
  int center_y() const { return y1 + height() / 2; }
  bool operator==(const Rect&) const = default;
};

Rect rect_union(const Rect& a, const Rect& b);
double rect_iou(const Rect& a, const Rect& b);

struct UiElement {
  std::string class_name;
  std::string resource_id;
  std::string text;
  std::string content_desc;
  bool clickable = false;
  bool scrollable = false;
  bool checked = false;
  bool checkable = false;
  bool enabled = false;
  bool visible = false;
  Rect bounds;
  std::vector<UiElement> children;

  bool is_leaf() const { return children.empty(); }
  bool operator==(const UiElement&) const = default;
};

enum class Source { kRandom, kLlm, kScripted, kFixture };
const char* source_name(Source s);
Source source_from_name(const std::string& s);

struct UiTree {
  UiElement root;
  std::string activity;
  Source source = Source::kFixture;
  bool operator==(const UiTree&) const = default;
};

// "[x1,y1][x2,y2]" -> Rect. Throws MalformedInput on any deviation,
// including inverted corners.
Rect parse_bounds(const std::string& s);
std::string format_bounds(const Rect& r);

// Parses an Android-style UI dump. The document element may be a <hierarchy>
// wrapper (activity/source attributes honored) holding exactly one node, or a
// bare node element. Missing attributes default to empty string / false.
UiTree parse_hierarchy(const std::string& xml_text);

// Serializes back to the dump dialect; parse_hierarchy(serialize_tree(t)) == t.
std::string serialize_tree(const UiTree& tree);

inline constexpr int kMinLeafSizePx = 5;

// Leaf elements with visible=true and width/height >= min_size, document order.
std::vector<const UiElement*> visible_leaves(const UiTree& tree,
                                             int min_size = kMinLeafSizePx);
std::vector<const UiElement*> all_leaves(const UiTree& tree);

// text if non-empty, else content_desc, else "".
const std::string& element_label(const UiElement& e);

}  // namespace appray::ui
