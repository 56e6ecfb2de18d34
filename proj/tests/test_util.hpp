#pragma once

#include <filesystem>
#include <string>

#include "appray/common.hpp"
#include "appray/ui.hpp"

namespace testutil {

inline std::string source_root() { return APPRAY_SOURCE_ROOT; }
inline std::string asset(const std::string& name) {
  return source_root() + "/tests/assets/" + name;
}
inline std::string data_dir() { return source_root() + "/data"; }

// Unique temp dir per call; removed by the caller when it cares.
inline std::string temp_dir(const std::string& tag) {
  static int counter = 0;
  const auto dir = std::filesystem::temp_directory_path() /
                   ("appray_test_" + tag + "_" + std::to_string(::getpid()) +
                    "_" + std::to_string(counter++));
  std::filesystem::create_directories(dir);
  return dir.string();
}

inline appray::ui::UiElement random_element(appray::Rng& rng, int depth) {
  using appray::ui::UiElement;
  static const char* kClasses[] = {
      "android.widget.TextView", "android.widget.Button",
      "android.widget.CheckBox", "android.widget.ImageView",
      "android.widget.FrameLayout"};
  static const char* kTexts[] = {"", "OK", "a&b<c>\"d'", "Subscribe now",
                                 "hello world", "42"};
  UiElement e;
  e.class_name = kClasses[rng.uniform_int(5)];
  e.resource_id = rng.bernoulli(0.3) ? "" : "id_" + std::to_string(rng.uniform_int(40));
  e.text = kTexts[rng.uniform_int(6)];
  e.content_desc = kTexts[rng.uniform_int(6)];
  e.clickable = rng.bernoulli(0.4);
  e.scrollable = rng.bernoulli(0.1);
  e.checkable = rng.bernoulli(0.2);
  e.checked = e.checkable && rng.bernoulli(0.5);
  e.enabled = rng.bernoulli(0.9);
  e.visible = rng.bernoulli(0.8);
  const int x1 = static_cast<int>(rng.uniform_int(900));
  const int y1 = static_cast<int>(rng.uniform_int(1700));
  e.bounds = {x1, y1, x1 + static_cast<int>(rng.uniform_int(200)),
              y1 + static_cast<int>(rng.uniform_int(200))};
  if (depth > 0) {
    const int n = static_cast<int>(rng.uniform_int(3));
    for (int i = 0; i < n; ++i)
      e.children.push_back(random_element(rng, depth - 1));
  }
  return e;
}

inline appray::ui::UiTree random_tree(appray::Rng& rng) {
  appray::ui::UiTree t;
  t.root = random_element(rng, 3);
  t.root.bounds = {0, 0, 1080, 1920};
  t.root.visible = true;
  t.activity = "Act" + std::to_string(rng.uniform_int(5));
  return t;
}

}  // namespace testutil
