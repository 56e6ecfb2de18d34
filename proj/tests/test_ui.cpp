#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <functional>

#include "appray/raster.hpp"
#include "appray/serde.hpp"
#include "appray/ui.hpp"
#include "test_util.hpp"

using namespace appray;
using namespace appray::ui;

TEST_CASE("parse_bounds accepts the bracketed two-point format") {
  const Rect r = parse_bounds("[0,0][1080,1920]");
  CHECK(r == Rect{0, 0, 1080, 1920});
  CHECK(r.width() == 1080);

  const Rect zero = parse_bounds("[10,20][10,20]");
  CHECK(zero.area() == 0);
  CHECK(zero.width() == 0);
}

TEST_CASE("parse_bounds rejects deviations") {
  CHECK_THROWS_AS(parse_bounds("[20,10][10,20]"), AppError);  // x1 > x2
  CHECK_THROWS_AS(parse_bounds("0,0 1080,1920"), AppError);
  CHECK_THROWS_AS(parse_bounds("[0,0][1080,1920] "), AppError);
  CHECK_THROWS_AS(parse_bounds("[0,0][1080,]"), AppError);
  try {
    parse_bounds("[5,5][4,9]");
    CHECK(false);
  } catch (const AppError& e) {
    CHECK(e.kind() == ErrorKind::MalformedInput);
  }
}

TEST_CASE("parse_hierarchy on a single-node dump") {
  const UiTree t = parse_hierarchy(
      "<node class='android.widget.View' bounds='[0,0][1080,1920]' />");
  CHECK(t.root.class_name == "android.widget.View");
  CHECK(t.root.bounds.width() == 1080);
  CHECK(t.root.children.empty());
}

TEST_CASE("attribute mapping with defaults") {
  const UiTree t = parse_hierarchy(
      "<node class='c' clickable='true' checked='false' "
      "bounds='[0,0][10,10]'/>");
  CHECK(t.root.clickable);
  CHECK_FALSE(t.root.checked);
  // absent attributes default to false / empty
  CHECK_FALSE(t.root.visible);
  CHECK_FALSE(t.root.scrollable);
  CHECK(t.root.text.empty());
  CHECK(t.root.resource_id.empty());
}

TEST_CASE("three-level fixture dump: 7 elements, depth 3") {
  const UiTree t = parse_hierarchy(read_text_file(testutil::asset("fixture_3level.xml")));
  int count = 0, max_depth = 0;
  std::function<void(const UiElement&, int)> walk = [&](const UiElement& e,
                                                        int depth) {
    ++count;
    max_depth = std::max(max_depth, depth);
    for (const auto& c : e.children) walk(c, depth + 1);
  };
  walk(t.root, 1);
  CHECK(count == 7);
  CHECK(max_depth == 3);
  CHECK(t.activity == "FixtureActivity");
}

TEST_CASE("parse errors carry node paths and kinds") {
  try {
    parse_hierarchy("<hierarchy><node class='a' bounds='[0,0][9,9]'>"
                    "<node class='b'/></node></hierarchy>");
    CHECK(false);
  } catch (const AppError& e) {
    CHECK(e.kind() == ErrorKind::MissingBounds);
    CHECK(std::string(e.what()).find("/node[0]/node[0]") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_hierarchy("not xml at all"), AppError);
  CHECK_THROWS_AS(parse_hierarchy("<a bounds='[0,0][1,1]'><b bounds='[0,0][1,1]'></a>"),
                  AppError);
}

TEST_CASE("visible_leaves filters size and visibility") {
  // the only leaf is 4px wide -> empty
  const UiTree narrow = parse_hierarchy(
      "<node class='c' visible-to-users='true' bounds='[0,0][4,100]'/>");
  CHECK(visible_leaves(narrow).empty());

  const UiTree t = parse_hierarchy(read_text_file(testutil::asset("fixture_3level.xml")));
  const auto leaves = visible_leaves(t);
  REQUIRE(leaves.size() == 3);  // manual walk: b1, t1, img
  CHECK(leaves[0]->resource_id == "b1");
  CHECK(leaves[1]->resource_id == "t1");
  CHECK(leaves[2]->resource_id == "img");
}

TEST_CASE("visible_leaves: 3 visible + 1 invisible") {
  const UiTree t = parse_hierarchy(
      "<node class='root' visible-to-users='true' bounds='[0,0][100,400]'>"
      "<node class='a' visible-to-users='true' bounds='[0,0][100,100]'/>"
      "<node class='b' visible-to-users='true' bounds='[0,100][100,200]'/>"
      "<node class='c' visible-to-users='false' bounds='[0,200][100,300]'/>"
      "<node class='d' visible-to-users='true' bounds='[0,300][100,400]'/>"
      "</node>");
  CHECK(visible_leaves(t).size() == 3);
}

TEST_CASE("visible_leaves threshold is monotone") {
  Rng rng(11);
  for (int i = 0; i < 40; ++i) {
    const UiTree t = testutil::random_tree(rng);
    const auto big = visible_leaves(t, 8);
    const auto small = visible_leaves(t, 3);
    const auto all = all_leaves(t);
    CHECK(big.size() <= small.size());
    CHECK(small.size() <= all.size());
    // subset relation
    for (const UiElement* e : big)
      CHECK(std::find(small.begin(), small.end(), e) != small.end());
  }
}

TEST_CASE("element_label precedence") {
  UiElement e;
  e.text = "OK";
  e.content_desc = "confirm";
  CHECK(element_label(e) == "OK");
  e.text = "";
  e.content_desc = "close ad";
  CHECK(element_label(e) == "close ad");
  e.content_desc = "";
  CHECK(element_label(e).empty());
}

TEST_CASE("serialize/parse round trip equals the original tree") {
  Rng rng(7);
  for (int i = 0; i < 60; ++i) {
    UiTree t = testutil::random_tree(rng);
    const UiTree back = parse_hierarchy(serialize_tree(t));
    CHECK(back == t);
  }
}

TEST_CASE("format_bounds/parse_bounds identity") {
  Rng rng(13);
  for (int i = 0; i < 200; ++i) {
    const int x1 = static_cast<int>(rng.uniform_int(2000));
    const int y1 = static_cast<int>(rng.uniform_int(2000));
    const Rect r{x1, y1, x1 + static_cast<int>(rng.uniform_int(500)),
                 y1 + static_cast<int>(rng.uniform_int(500))};
    CHECK(parse_bounds(format_bounds(r)) == r);
  }
}

TEST_CASE("entity escapes survive the round trip") {
  UiTree t;
  t.root.class_name = "c";
  t.root.text = "a&b<c>\"quote\" 'tick'";
  t.root.content_desc = "<&>";
  t.root.bounds = {0, 0, 10, 10};
  const UiTree back = parse_hierarchy(serialize_tree(t));
  CHECK(back.root.text == t.root.text);
  CHECK(back.root.content_desc == t.root.content_desc);
}

TEST_CASE("raster crop clips to bounds") {
  Raster img(10, 10, 255, 0, 0);
  img.fill_rect({5, 5, 10, 10}, 0, 255, 0);
  const Raster c = crop(img, {5, 5, 20, 20});
  CHECK(c.width == 5);
  CHECK(c.height == 5);
  CHECK(c.at(0, 0)[1] == 255);
  const Raster empty = crop(img, {20, 20, 30, 30});
  CHECK(empty.width == 0);
}

TEST_CASE("png round trip preserves pixels") {
  Rng rng(3);
  Raster img(33, 17);
  for (auto& px : img.pixels) px = static_cast<uint8_t>(rng.uniform_int(256));
  const auto bytes = encode_png_bytes(img);
  const Raster back = decode_png_bytes(bytes);
  CHECK(back == img);
  CHECK_THROWS_AS(decode_png_bytes({1, 2, 3, 4}), AppError);
}
