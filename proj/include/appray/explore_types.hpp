#pragma once

#include <optional>
#include <string>

#include "appray/ui.hpp"

namespace appray::explore {

enum class ActionKind { kTap, kScroll, kType, kBack, kStop };
const char* action_kind_name(ActionKind k);
ActionKind action_kind_from_name(const std::string& s);

enum class ScrollDirection { kUp, kDown, kLeft, kRight };
const char* direction_name(ScrollDirection d);
ScrollDirection direction_from_name(const std::string& s);

// Snapshot of the element an action was aimed at; taken at decision time so
// traces stay self-describing after the UI moves on.
struct ActionTarget {
  int leaf_index = -1;  // index into visible_leaves of the decision tree
  std::string resource_id;
  std::string label;
  ui::Rect bounds;
  bool checkable = false;
  bool operator==(const ActionTarget&) const = default;
};

struct Action {
  ActionKind kind = ActionKind::kStop;
  std::optional<ActionTarget> target;        // tap/type
  std::optional<ScrollDirection> direction;  // scroll
  std::optional<std::string> text;           // type

  static Action tap(ActionTarget t) {
    return Action{ActionKind::kTap, std::move(t), std::nullopt, std::nullopt};
  }
  static Action scroll(ScrollDirection d) {
    return Action{ActionKind::kScroll, std::nullopt, d, std::nullopt};
  }
  static Action type_text(ActionTarget t, std::string s) {
    return Action{ActionKind::kType, std::move(t), std::nullopt, std::move(s)};
  }
  static Action back() {
    return Action{ActionKind::kBack, std::nullopt, std::nullopt, std::nullopt};
  }
  static Action stop() { return Action{}; }
  bool operator==(const Action&) const = default;
};

std::string action_to_string(const Action& a);

}  // namespace appray::explore
