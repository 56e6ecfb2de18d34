#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>

#include "appray/serde.hpp"
#include "appray/trace.hpp"
#include "test_util.hpp"

using namespace appray;
using namespace appray::trace;

namespace {

ui::UiTree leaf_tree(const std::vector<std::tuple<std::string, std::string, bool>>& leaves,
                     const std::string& activity = "Act") {
  ui::UiTree t;
  t.activity = activity;
  t.root.class_name = "android.widget.FrameLayout";
  t.root.visible = true;
  t.root.bounds = {0, 0, 540, 960};
  int y = 0;
  for (const auto& [cls, rid, checked] : leaves) {
    ui::UiElement e;
    e.class_name = cls;
    e.resource_id = rid;
    e.checked = checked;
    e.visible = true;
    e.enabled = true;
    e.bounds = {0, y, 540, y + 50};
    y += 50;
    t.root.children.push_back(std::move(e));
  }
  return t;
}

UiState make_state(const ui::UiTree& tree, int w = 0, int h = 0,
                   uint8_t shade = 0) {
  UiState s;
  s.tree = tree;
  s.activity = tree.activity;
  s.signature = state_signature(tree);
  if (w > 0) s.screenshot = ui::Raster(w, h, shade, shade, shade);
  return s;
}

Trace one_state_trace(const ui::UiTree& tree, ui::Source src,
                      uint8_t shade = 0) {
  Trace t;
  t.source = src;
  TraceState ts;
  ts.tree = tree;
  ts.activity = tree.activity;
  ts.screenshot = ui::Raster(8, 8, shade, shade, shade);
  t.states.push_back(std::move(ts));
  return t;
}

// Independent first-match dedup oracle: pairwise comparisons only, same
// first-match rule as merge is specified to use.
std::vector<int> brute_force_canon(const std::vector<UiState>& states) {
  std::vector<int> canon(states.size(), -1);
  std::vector<size_t> reps;
  for (size_t i = 0; i < states.size(); ++i) {
    int found = -1;
    for (size_t k = 0; k < reps.size(); ++k) {
      const UiState& a = states[i];
      const UiState& b = states[reps[k]];
      const bool pix = a.screenshot.width == b.screenshot.width &&
                       a.screenshot.height == b.screenshot.height &&
                       a.screenshot.width > 0 &&
                       a.screenshot.pixels == b.screenshot.pixels;
      bool sig = a.signature.entries.size() == b.signature.entries.size();
      if (sig)
        for (size_t j = 0; j < a.signature.entries.size(); ++j)
          if (!(a.signature.entries[j] == b.signature.entries[j])) {
            sig = false;
            break;
          }
      if (pix || sig) {
        found = static_cast<int>(k);
        break;
      }
    }
    if (found < 0) {
      reps.push_back(i);
      canon[i] = static_cast<int>(reps.size()) - 1;
    } else {
      canon[i] = found;
    }
  }
  return canon;
}

}  // namespace

TEST_CASE("signature keeps class, resource-id and checked only") {
  auto t1 = leaf_tree({{"android.widget.TextView", "title", false}});
  auto t2 = t1;
  t2.root.children[0].text = "different text";
  t2.root.children[0].bounds = {10, 10, 300, 44};
  CHECK(state_signature(t1) == state_signature(t2));

  auto t3 = t1;
  t3.root.children[0].checked = true;
  CHECK_FALSE(state_signature(t1) == state_signature(t3));

  ui::UiTree empty;
  empty.root.class_name = "c";
  empty.root.visible = false;
  empty.root.bounds = {0, 0, 100, 100};
  CHECK(state_signature(empty).entries.empty());
}

TEST_CASE("signature ignores text and bounds mutations (property)") {
  Rng rng(5);
  for (int i = 0; i < 30; ++i) {
    ui::UiTree t = testutil::random_tree(rng);
    ui::UiTree mutated = t;
    std::function<void(ui::UiElement&)> mutate = [&](ui::UiElement& e) {
      e.text += "x";
      e.bounds.x2 += 3;
      e.bounds.y2 += 7;
      for (auto& c : e.children) mutate(c);
    };
    mutate(mutated.root);
    // growing bounds can promote leaves over the 5px threshold, so compare
    // only when the leaf sets align
    if (ui::visible_leaves(t).size() == ui::visible_leaves(mutated).size())
      CHECK(state_signature(t) == state_signature(mutated));
  }
}

TEST_CASE("is_duplicate: either measure suffices") {
  const auto base = leaf_tree({{"a", "x", false}, {"b", "y", true}});
  UiState s1 = make_state(base, 8, 8, 10);
  CHECK(is_duplicate(s1, s1));

  // same signature, different screenshots (dynamic list content)
  UiState s2 = make_state(base, 8, 8, 200);
  CHECK(is_duplicate(s1, s2));

  // identical pixels, different hierarchies
  UiState s3 = make_state(leaf_tree({{"c", "z", false}}), 8, 8, 10);
  CHECK(is_duplicate(s1, s3));

  // both differ
  UiState s4 = make_state(leaf_tree({{"c", "z", false}}), 8, 8, 99);
  CHECK_FALSE(is_duplicate(s1, s4));

  // size mismatch with different signatures is not an error
  UiState s5 = make_state(leaf_tree({{"d", "w", false}}), 4, 4, 10);
  CHECK_FALSE(is_duplicate(s1, s5));
}

TEST_CASE("is_duplicate is reflexive and symmetric") {
  Rng rng(17);
  std::vector<UiState> states;
  for (int i = 0; i < 12; ++i)
    states.push_back(make_state(testutil::random_tree(rng), 6, 6,
                                static_cast<uint8_t>(rng.uniform_int(3))));
  for (const auto& a : states) {
    CHECK(is_duplicate(a, a));
    for (const auto& b : states) CHECK(is_duplicate(a, b) == is_duplicate(b, a));
  }
}

TEST_CASE("merging a trace with itself keeps the state count") {
  const auto tree = leaf_tree({{"a", "x", false}});
  const Trace t = one_state_trace(tree, ui::Source::kRandom);
  const UiGraph once = merge({t});
  const UiGraph twice = merge({t, t});
  CHECK(once.states.size() == 1);
  CHECK(twice.states.size() == 1);
}

TEST_CASE("two traces sharing exactly one state overlap once") {
  const auto shared = leaf_tree({{"a", "x", false}}, "A");
  const auto only1 = leaf_tree({{"b", "y", false}}, "B");
  const auto only2 = leaf_tree({{"c", "z", false}}, "C");

  Trace t1 = one_state_trace(shared, ui::Source::kRandom, 1);
  {
    TraceState ts;
    ts.tree = only1;
    ts.activity = "B";
    ts.screenshot = ui::Raster(8, 8, 30, 0, 0);
    t1.states.push_back(ts);
    t1.steps.push_back({0, explore::Action::back(), 1});
  }
  Trace t2 = one_state_trace(shared, ui::Source::kLlm, 2);
  {
    TraceState ts;
    ts.tree = only2;
    ts.activity = "C";
    ts.screenshot = ui::Raster(8, 8, 60, 0, 0);
    t2.states.push_back(ts);
    t2.steps.push_back({0, explore::Action::back(), 1});
  }

  const UiGraph g = merge({t1, t2});
  CHECK(g.states.size() == 3);
  const CoverageReport r = coverage_stats(g);
  CHECK(r.per_source_unique.at("random") == 1);
  CHECK(r.per_source_unique.at("llm") == 1);
  CHECK(r.overlap_pct == doctest::Approx(100.0 / 3.0));
}

TEST_CASE("merge equals the brute-force first-match oracle") {
  Rng rng(23);
  // randomly perturbed states: some share signatures, some share pixels
  std::vector<ui::UiTree> trees;
  for (int i = 0; i < 8; ++i)
    trees.push_back(leaf_tree({{"cls" + std::to_string(i), "id", false},
                               {"row", "r" + std::to_string(i % 3), false}},
                              "A" + std::to_string(i % 4)));
  std::vector<Trace> traces;
  std::vector<UiState> flat;
  for (int tr = 0; tr < 6; ++tr) {
    Trace t;
    t.source = tr % 2 ? ui::Source::kRandom : ui::Source::kLlm;
    const int n = 3 + static_cast<int>(rng.uniform_int(4));
    for (int i = 0; i < n; ++i) {
      const auto& tree = trees[rng.uniform_int(trees.size())];
      TraceState ts;
      ts.tree = tree;
      ts.activity = tree.activity;
      ts.screenshot =
          ui::Raster(8, 8, static_cast<uint8_t>(rng.uniform_int(4) * 50), 0, 0);
      flat.push_back(make_state(ts.tree));
      flat.back().screenshot = ts.screenshot;
      t.states.push_back(std::move(ts));
      if (i > 0) t.steps.push_back({i - 1, explore::Action::back(), i});
    }
    traces.push_back(std::move(t));
  }
  const UiGraph g = merge(traces);
  const std::vector<int> canon = brute_force_canon(flat);
  const int oracle_unique = 1 + *std::max_element(canon.begin(), canon.end());
  CHECK(static_cast<int>(g.states.size()) == oracle_unique);
  // canonical ids assigned in first-seen order must agree exactly
  size_t flat_idx = 0;
  for (const Trace& t : g.remapped_traces) {
    for (size_t si = 0; si < t.steps.size() + 1 && flat_idx < canon.size();
         ++si, ++flat_idx) {
      const int expect = canon[flat_idx];
      const int got = si == 0 ? t.steps.empty() ? -1 : t.steps[0].from
                              : t.steps[si - 1].to;
      if (got >= 0) CHECK(got == expect);
    }
  }
}

TEST_CASE("permuting input traces keeps the unique count (signature-only)") {
  std::vector<Trace> traces;
  for (int i = 0; i < 5; ++i) {
    const auto tree =
        leaf_tree({{"cls" + std::to_string(i % 3), "id", false}}, "A");
    traces.push_back(one_state_trace(tree, ui::Source::kRandom));
    traces.back().states[0].screenshot = ui::Raster();  // no pixels
  }
  const size_t n1 = merge(traces).states.size();
  std::reverse(traces.begin(), traces.end());
  const size_t n2 = merge(traces).states.size();
  CHECK(n1 == n2);
}

TEST_CASE("coverage stats") {
  CHECK(coverage_stats(UiGraph{}).unique_states == 0);
  CHECK(coverage_stats(UiGraph{}).unique_activities == 0);
  CHECK(coverage_stats(UiGraph{}).overlap_pct == 0.0);

  // 10 states over 3 activities
  std::vector<Trace> traces;
  for (int i = 0; i < 10; ++i) {
    const auto tree = leaf_tree({{"c" + std::to_string(i), "x", false}},
                                "Act" + std::to_string(i % 3));
    traces.push_back(one_state_trace(tree, ui::Source::kRandom,
                                     static_cast<uint8_t>(i)));
  }
  const CoverageReport r = coverage_stats(merge(traces));
  CHECK(r.unique_states == 10);
  CHECK(r.unique_activities == 3);

  // disjoint five-state sets from two sources: overlap 0%
  std::vector<Trace> disjoint;
  for (int i = 0; i < 10; ++i) {
    const auto tree = leaf_tree({{"d" + std::to_string(i), "x", false}}, "A");
    disjoint.push_back(one_state_trace(
        tree, i < 5 ? ui::Source::kRandom : ui::Source::kScripted,
        static_cast<uint8_t>(i)));
  }
  CHECK(coverage_stats(merge(disjoint)).overlap_pct == 0.0);
}

TEST_CASE("store round trip") {
  // empty graph
  const std::string dir0 = testutil::temp_dir("store_empty");
  save(UiGraph{}, dir0);
  CHECK(load(dir0).states.empty());

  // populated graph
  std::vector<Trace> traces;
  Rng rng(31);
  for (int i = 0; i < 6; ++i) {
    auto tree = leaf_tree({{"c" + std::to_string(i), "id&<>'", i % 2 == 0}},
                          "Act" + std::to_string(i));
    Trace t = one_state_trace(tree, ui::Source::kScripted,
                              static_cast<uint8_t>(i * 40));
    t.task_id = "T" + std::to_string(i);
    traces.push_back(std::move(t));
  }
  const UiGraph g = merge(traces);
  const std::string dir = testutil::temp_dir("store_rt");
  save(g, dir);
  const UiGraph back = load(dir);
  REQUIRE(back.states.size() == g.states.size());
  for (size_t i = 0; i < g.states.size(); ++i) {
    CHECK(back.states[i].tree == g.states[i].tree);
    CHECK(back.states[i].screenshot == g.states[i].screenshot);
    CHECK(back.states[i].signature == g.states[i].signature);
    CHECK(back.states[i].activity == g.states[i].activity);
  }
  CHECK(back.edges.size() == g.edges.size());
  CHECK(back.visits == g.visits);
  REQUIRE(back.remapped_traces.size() == g.remapped_traces.size());
  for (size_t i = 0; i < g.remapped_traces.size(); ++i) {
    CHECK(back.remapped_traces[i].task_id == g.remapped_traces[i].task_id);
    CHECK(back.remapped_traces[i].steps.size() ==
          g.remapped_traces[i].steps.size());
  }

  // corrupting a state file must fail the checksum
  {
    std::ofstream f(std::filesystem::path(dir) / "states" / "0.xml",
                    std::ios::trunc);
    f << "<node";
  }
  CHECK_THROWS_AS(load(dir), AppError);
  try {
    load(dir);
  } catch (const AppError& e) {
    CHECK(e.kind() == ErrorKind::CorruptStore);
  }
}

TEST_CASE("truncated manifest is a corrupt store") {
  const std::string dir = testutil::temp_dir("store_trunc");
  save(UiGraph{}, dir);
  const auto manifest = std::filesystem::path(dir) / "manifest.json";
  std::string text = read_text_file(manifest.string());
  {
    std::ofstream f(manifest, std::ios::trunc);
    f << text.substr(0, text.size() / 2);
  }
  try {
    load(dir);
    CHECK(false);
  } catch (const AppError& e) {
    CHECK(e.kind() == ErrorKind::CorruptStore);
  }
}
