#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>
#include <set>

#include "appray/grouping.hpp"
#include "test_util.hpp"

using namespace appray;
using namespace appray::group;
using ui::Rect;
using ui::UiElement;
using ui::UiTree;

namespace {

UiElement el(const std::string& cls, const std::string& id, const Rect& b,
             const std::string& text = "") {
  UiElement e;
  e.class_name = cls;
  e.resource_id = id;
  e.text = text;
  e.visible = true;
  e.enabled = true;
  e.bounds = b;
  return e;
}

UiTree screen(std::vector<UiElement> leaves) {
  UiTree t;
  t.activity = "A";
  t.root = el("android.widget.FrameLayout", "root", {0, 0, 1000, 1000});
  for (auto& l : leaves) t.root.children.push_back(std::move(l));
  return t;
}

}  // namespace

TEST_CASE("role derivation from class suffix") {
  CHECK(element_role(el("android.widget.CheckBox", "", {0, 0, 1, 1})) ==
        Role::kCheckbox);
  CHECK(element_role(el("androidx.appcompat.widget.SwitchCompat", "",
                        {0, 0, 1, 1})) == Role::kSwitch);
  CHECK(element_role(el("android.widget.ImageButton", "", {0, 0, 1, 1})) ==
        Role::kButton);
  CHECK(element_role(el("android.widget.EditText", "", {0, 0, 1, 1})) ==
        Role::kInput);
  CHECK(element_role(el("android.widget.TextView", "", {0, 0, 1, 1})) ==
        Role::kText);
  CHECK(element_role(el("android.widget.LinearLayout", "", {0, 0, 1, 1})) ==
        Role::kContainer);
  CHECK(element_role(el("com.custom.Widget", "", {0, 0, 1, 1})) == Role::kOther);
}

TEST_CASE("extract_properties: uniform and extreme contrast crops") {
  UiTree t = screen({el("android.widget.TextView", "a", {0, 0, 50, 50}),
                     el("android.widget.TextView", "b", {50, 0, 100, 50})});
  ui::Raster img(100, 50, 0, 0, 0);  // uniform black
  // white text block on black inside leaf b
  img.fill_rect({60, 10, 90, 40}, 255, 255, 255);

  const auto props = extract_properties(t, img);
  REQUIRE(props.size() == 2);
  CHECK(props[0].dominant_color == Rgb{0, 0, 0});
  CHECK(props[0].text_contrast == doctest::Approx(1.0));
  CHECK(props[1].text_contrast == doctest::Approx(21.0).epsilon(0.5 / 21.0));
  CHECK(props[0].area_fraction == doctest::Approx(0.5));
}

TEST_CASE("extract_properties matches an independent quantized count") {
  Rng rng(9);
  UiTree t = screen({el("android.widget.ImageView", "x", {0, 0, 64, 64})});
  ui::Raster img(64, 64);
  for (auto& px : img.pixels) px = static_cast<uint8_t>(rng.uniform_int(256));

  const auto props = extract_properties(t, img);
  REQUIRE(props.size() == 1);

  // independent recount with its own quantization bookkeeping
  std::map<std::array<int, 3>, int> counts;
  for (size_t i = 0; i + 2 < img.pixels.size(); i += 3)
    counts[{img.pixels[i] / 16, img.pixels[i + 1] / 16, img.pixels[i + 2] / 16}]++;
  std::array<int, 3> best{};
  int best_n = -1;
  for (const auto& [key, n] : counts)
    if (n > best_n) {
      best = key;
      best_n = n;
    }
  CHECK(props[0].dominant_color ==
        Rgb{static_cast<uint8_t>(best[0] * 17),
            static_cast<uint8_t>(best[1] * 17),
            static_cast<uint8_t>(best[2] * 17)});
}

TEST_CASE("checkbox pairs with nearest in-range text") {
  // checkbox with adjacent label
  UiTree t1 = screen({
      el("android.widget.CheckBox", "cb", {10, 100, 50, 140}),
      el("android.widget.TextView", "lbl", {60, 105, 400, 135},
         "Subscribe to newsletter"),
  });
  auto groups = group_checkbox_text(t1);
  REQUIRE(groups.size() == 1);
  CHECK(groups[0].members.size() == 2);
  CHECK(groups[0].kind == ComponentKind::kCheckboxGroup);
  CHECK(groups[0].bbox == Rect{10, 100, 400, 140});

  // two stacked rows stay disjoint
  UiTree t2 = screen({
      el("android.widget.CheckBox", "cb1", {10, 100, 50, 140}),
      el("android.widget.TextView", "l1", {60, 105, 400, 135}, "One"),
      el("android.widget.CheckBox", "cb2", {10, 200, 50, 240}),
      el("android.widget.TextView", "l2", {60, 205, 400, 235}, "Two"),
  });
  groups = group_checkbox_text(t2);
  REQUIRE(groups.size() == 2);
  CHECK(groups[0].members.size() == 2);
  CHECK(groups[1].members.size() == 2);
  std::set<const UiElement*> seen;
  for (const auto& g : groups)
    for (const UiElement* m : g.members) CHECK(seen.insert(m).second);

  // no text in range -> singleton (gap beyond 10% of screen width)
  UiTree t3 = screen({
      el("android.widget.CheckBox", "cb", {10, 100, 50, 140}),
      el("android.widget.TextView", "far", {700, 105, 900, 135}, "Far away"),
  });
  groups = group_checkbox_text(t3);
  REQUIRE(groups.size() == 1);
  CHECK(groups[0].members.size() == 1);
}

TEST_CASE("modal detection: size and centering gates") {
  // 40% centered dialog with 4 leaves
  UiTree t;
  t.activity = "A";
  t.root = el("android.widget.FrameLayout", "root", {0, 0, 1000, 1000});
  UiElement dialog = el("android.widget.LinearLayout", "dialog",
                        {200, 250, 800, 750});
  dialog.children.push_back(el("android.widget.TextView", "m1",
                               {220, 270, 780, 330}, "Are you sure"));
  dialog.children.push_back(el("android.widget.TextView", "m2",
                               {220, 350, 780, 410}, "Details"));
  dialog.children.push_back(
      el("android.widget.Button", "m3", {220, 600, 480, 700}, "Yes"));
  dialog.children.push_back(
      el("android.widget.Button", "m4", {520, 600, 780, 700}, "No"));
  t.root.children.push_back(std::move(dialog));

  ui::Raster img(1000, 1000);
  auto modal = group_modal(t, img);
  REQUIRE(modal.has_value());
  CHECK(modal->members.size() == 4);
  CHECK(modal->bbox == Rect{200, 250, 800, 750});

  // full-screen root only: 100% > 90%
  UiTree full = screen({el("android.widget.TextView", "x", {0, 0, 1000, 1000})});
  CHECK_FALSE(group_modal(full, img).has_value());

  // bottom-anchored banner: center outside the middle third
  UiTree banner;
  banner.activity = "A";
  banner.root = el("android.widget.FrameLayout", "root", {0, 0, 1000, 1000});
  UiElement strip = el("android.widget.LinearLayout", "strip",
                       {100, 700, 900, 1000});
  strip.children.push_back(
      el("android.widget.TextView", "b1", {120, 720, 880, 980}, "ad"));
  banner.root.children.push_back(std::move(strip));
  CHECK_FALSE(group_modal(banner, img).has_value());
}

TEST_CASE("candidate components: composition and partition") {
  ui::Raster img(1000, 1000);

  // a single button -> exactly one singleton
  UiTree t1 = screen({el("android.widget.Button", "b", {10, 10, 200, 60}, "Go")});
  auto comps = candidate_components(t1, img);
  REQUIRE(comps.size() == 1);
  CHECK(comps[0].kind == ComponentKind::kSingle);

  // dialog fixture: one modal, nothing left over inside it
  UiTree t2;
  t2.activity = "A";
  t2.root = el("android.widget.FrameLayout", "root", {0, 0, 1000, 1000});
  UiElement dialog = el("android.widget.LinearLayout", "dialog",
                        {200, 250, 800, 750});
  dialog.children.push_back(el("android.widget.TextView", "m1",
                               {220, 270, 780, 330}, "Title"));
  dialog.children.push_back(
      el("android.widget.Button", "m2", {220, 600, 480, 700}, "Yes"));
  t2.root.children.push_back(std::move(dialog));
  comps = candidate_components(t2, img);
  REQUIRE(comps.size() == 1);
  CHECK(comps[0].kind == ComponentKind::kModal);

  // settings fixture: 3 checkbox rows + 2 buttons -> 5 candidates
  UiTree t3 = screen({
      el("android.widget.CheckBox", "c1", {10, 100, 50, 140}),
      el("android.widget.TextView", "l1", {60, 105, 400, 135}, "One"),
      el("android.widget.CheckBox", "c2", {10, 200, 50, 240}),
      el("android.widget.TextView", "l2", {60, 205, 400, 235}, "Two"),
      el("android.widget.CheckBox", "c3", {10, 300, 50, 340}),
      el("android.widget.TextView", "l3", {60, 305, 400, 335}, "Three"),
      el("android.widget.Button", "b1", {10, 500, 300, 560}, "Save"),
      el("android.widget.Button", "b2", {10, 600, 300, 660}, "Reset"),
  });
  comps = candidate_components(t3, img);
  CHECK(comps.size() == 5);

  // ad-slot kind from the resource id lexicon
  UiTree t4 = screen(
      {el("android.widget.ImageView", "native_ad_banner", {0, 0, 500, 100})});
  comps = candidate_components(t4, img);
  REQUIRE(comps.size() == 1);
  CHECK(comps[0].kind == ComponentKind::kAdSlot);
}

TEST_CASE("membership partition and bbox union hold on random screens") {
  Rng rng(41);
  ui::Raster img(1080, 1920);
  for (int i = 0; i < 25; ++i) {
    const UiTree t = testutil::random_tree(rng);
    const auto comps = candidate_components(t, img);
    std::set<const UiElement*> seen;
    for (const auto& c : comps) {
      REQUIRE_FALSE(c.members.empty());
      for (const UiElement* m : c.members) {
        CHECK(seen.insert(m).second);  // no element in two components
        CHECK(c.bbox.contains(m->bounds));
      }
    }
  }
}

TEST_CASE("candidates are stable under raster-only perturbation") {
  UiTree t = screen({
      el("android.widget.Button", "b", {10, 10, 200, 60}, "Go"),
      el("android.widget.TextView", "x", {10, 100, 300, 160}, "Hi"),
  });
  ui::Raster img1(1000, 1000, 10, 10, 10);
  ui::Raster img2(1000, 1000, 12, 12, 12);  // same quantization bucket
  const auto c1 = candidate_components(t, img1);
  const auto c2 = candidate_components(t, img2);
  REQUIRE(c1.size() == c2.size());
  for (size_t i = 0; i < c1.size(); ++i) {
    CHECK(c1[i].kind == c2[i].kind);
    CHECK(c1[i].bbox == c2[i].bbox);
  }
}
