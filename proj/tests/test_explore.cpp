#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>
#include <sstream>

#include "appray/explore.hpp"
#include "appray/serde.hpp"
#include "test_util.hpp"

using namespace appray;
using namespace appray::explore;

namespace {

const std::string kFixtureApp = testutil::data_dir() + "/fixture_app";

ui::UiTree two_leaf_tree() {
  return ui::parse_hierarchy(
      "<hierarchy activity='A'>"
      "<node class='r' visible-to-users='true' bounds='[0,0][540,960]'>"
      "<node class='android.widget.Button' resource-id='ok' text='OK' "
      "clickable='true' enabled='true' visible-to-users='true' "
      "bounds='[0,0][100,50]'/>"
      "<node class='android.widget.TextView' resource-id='hint' "
      "text='Tap OK' visible-to-users='true' bounds='[0,60][200,110]'/>"
      "</node></hierarchy>");
}

// deterministic in-memory device: a line of states 0..n-1, tap moves right,
// back moves left
class LineDevice : public Device {
 public:
  explicit LineDevice(int n) : n_(n) {}
  ui::UiTree current_tree() override {
    ui::UiTree t;
    t.activity = "Line" + std::to_string(pos_);
    t.root.class_name = "android.widget.FrameLayout";
    t.root.visible = true;
    t.root.bounds = {0, 0, 540, 960};
    ui::UiElement next;
    next.class_name = "android.widget.Button";
    next.resource_id = "next_" + std::to_string(pos_);
    next.text = "Next";
    next.clickable = true;
    next.enabled = true;
    next.visible = true;
    next.bounds = {0, 0, 200, 80};
    t.root.children.push_back(std::move(next));
    return t;
  }
  ui::Raster screenshot() override {
    return ui::Raster(4, 4, static_cast<uint8_t>(pos_ * 16), 0, 0);
  }
  bool perform(const Action& a) override {
    if (a.kind == ActionKind::kTap && pos_ + 1 < n_) ++pos_;
    else if (a.kind == ActionKind::kBack && pos_ > 0) --pos_;
    return true;
  }
  bool app_alive() override { return true; }

 private:
  int n_;
  int pos_ = 0;
};

class AlwaysTapPolicy : public Policy {
 public:
  Action next_action(const Task&, const std::vector<HistoryEntry>&,
                     const ui::UiTree& tree) override {
    const auto leaves = ui::visible_leaves(tree);
    ui::UiElement e = *leaves.front();
    return Action::tap(ActionTarget{0, e.resource_id, ui::element_label(e),
                                    e.bounds, e.checkable});
  }
};

class StopPolicy : public Policy {
 public:
  Action next_action(const Task&, const std::vector<HistoryEntry>&,
                     const ui::UiTree&) override {
    return Action::stop();
  }
};

}  // namespace

TEST_CASE("action_point: center, floored") {
  ui::UiElement e;
  e.bounds = {0, 0, 100, 50};
  CHECK(action_point(e) == std::pair<int, int>{50, 25});
  e.bounds = {10, 10, 11, 11};
  CHECK(action_point(e) == std::pair<int, int>{10, 10});
  e.bounds = {5, 5, 5, 9};
  CHECK_THROWS_AS(action_point(e), AppError);
}

TEST_CASE("build_prompt: fixed sections") {
  Task t{"T3", "Go to setting page, go through all notification related pages",
         20, Task::Kind::kGeneral};
  const ui::UiTree tree = two_leaf_tree();

  const std::string empty_hist = build_prompt(t, {}, tree);
  CHECK(empty_hist.find(kNoHistorySentinel) != std::string::npos);
  CHECK(empty_hist.find("Go to setting page") != std::string::npos);

  // section order: instruction < output < examples < task < history < UI
  const size_t p_instr = empty_hist.find("# Instruction");
  const size_t p_out = empty_hist.find("# Output format");
  const size_t p_ex = empty_hist.find("# Examples");
  const size_t p_task = empty_hist.find("# Task");
  const size_t p_hist = empty_hist.find("# History");
  const size_t p_ui = empty_hist.find(kUiSectionHeader + std::string("\n"));
  CHECK(p_instr < p_out);
  CHECK(p_out < p_ex);
  CHECK(p_ex < p_task);
  CHECK(p_task < p_hist);
  CHECK(p_hist < p_ui);

  // exactly one UI line per visible leaf
  const std::string ui_section = empty_hist.substr(p_ui);
  int ui_lines = 0;
  std::istringstream is(ui_section);
  std::string line;
  while (std::getline(is, line))
    if (!line.empty() && std::isdigit(static_cast<unsigned char>(line[0])) &&
        line.find(": class=") != std::string::npos)
      ++ui_lines;
  CHECK(ui_lines == 2);

  // history serialization keeps the last 10 entries
  std::vector<HistoryEntry> hist;
  for (int i = 0; i < 14; ++i)
    hist.push_back({"d", Action::scroll(ScrollDirection::kDown)});
  const std::string with_hist = build_prompt(t, hist, tree);
  CHECK(with_hist.find(kNoHistorySentinel) == std::string::npos);
  CHECK(with_hist.find("5. scroll down") != std::string::npos);
  CHECK(with_hist.find("\n4. scroll down") == std::string::npos);  // truncated
}

TEST_CASE("parse_action: schema, prose tolerance, errors") {
  const ui::UiTree tree = two_leaf_tree();
  CHECK(parse_action(R"({"action":"stop"})", tree).kind == ActionKind::kStop);
  CHECK(parse_action(R"(I think {"action":"back"} is best)", tree).kind ==
        ActionKind::kBack);

  const Action tap =
      parse_action(R"(Sure! {"action":"tap","target_index":1})", tree);
  CHECK(tap.kind == ActionKind::kTap);
  REQUIRE(tap.target.has_value());
  CHECK(tap.target->resource_id == "hint");

  const Action typed = parse_action(
      R"({"action":"type","target_index":0,"text":"hi"})", tree);
  CHECK(typed.text == "hi");

  const Action scroll =
      parse_action(R"({"action":"scroll","direction":"left"})", tree);
  CHECK(scroll.direction == ScrollDirection::kLeft);

  try {
    parse_action(R"({"action":"tap","target_index":9})", tree);
    CHECK(false);
  } catch (const AppError& e) {
    CHECK(e.kind() == ErrorKind::BadTarget);
  }
  try {
    parse_action("no json here", tree);
    CHECK(false);
  } catch (const AppError& e) {
    CHECK(e.kind() == ErrorKind::UnparseableAction);
  }
  CHECK_THROWS_AS(parse_action(R"({"action":"fly"})", tree), AppError);
  CHECK_THROWS_AS(parse_action(R"({"action":"scroll"})", tree), AppError);
  CHECK_THROWS_AS(parse_action(R"({"action":"tap"})", tree), AppError);
}

TEST_CASE("run_task: immediate stop gives an empty, completed trace") {
  LineDevice dev(3);
  StopPolicy policy;
  Task t{"T", "noop", 5, Task::Kind::kGeneral};
  const TaskOutcome out = run_task(dev, policy, t);
  CHECK(out.stop_reason == StopReason::kPolicyStop);
  CHECK(out.completed);
  CHECK(out.steps_used == 0);
  CHECK(out.trace.steps.empty());
  CHECK(out.trace.states.size() == 1);  // the initial observation
}

TEST_CASE("run_task: scripted walk matches the transition table") {
  LineDevice dev(4);
  AlwaysTapPolicy policy;
  Task t{"T", "walk", 3, Task::Kind::kGeneral};
  const TaskOutcome out = run_task(dev, policy, t);
  CHECK(out.steps_used == 3);
  CHECK(out.trace.steps.size() == 3);
  // every step's from equals the previous step's to
  for (size_t i = 1; i < out.trace.steps.size(); ++i)
    CHECK(out.trace.steps[i].from == out.trace.steps[i - 1].to);
  CHECK(out.trace.states.back().activity == "Line3");
}

TEST_CASE("run_task: max_steps against a never-stopping policy") {
  LineDevice dev(10);
  AlwaysTapPolicy policy;
  Task t{"T", "walk", 2, Task::Kind::kGeneral};
  const TaskOutcome out = run_task(dev, policy, t);
  CHECK(out.stop_reason == StopReason::kMaxSteps);
  CHECK(out.steps_used == 2);
  CHECK_FALSE(out.completed);
}

TEST_CASE("random policy: only legal moves, deterministic under seed") {
  // no clickable or scrollable elements -> back is the only legal move
  const ui::UiTree bare = ui::parse_hierarchy(
      "<node class='r' visible-to-users='true' bounds='[0,0][100,100]'/>");
  auto policy = random_policy(3);
  Task t{"T", "walk", 50, Task::Kind::kGeneral};
  for (int i = 0; i < 5; ++i)
    CHECK(policy->next_action(t, {}, bare).kind == ActionKind::kBack);

  // determinism: identical seeds, identical decisions
  const ui::UiTree tree = two_leaf_tree();
  auto p1 = random_policy(7);
  auto p2 = random_policy(7);
  for (int i = 0; i < 30; ++i)
    CHECK(p1->next_action(t, {}, tree) == p2->next_action(t, {}, tree));
}

TEST_CASE("random policy: target frequencies within 5% of expectation") {
  // two clickable leaves, nothing scrollable: P(back)=0.1, each tap 0.45
  ui::UiTree tree = ui::parse_hierarchy(
      "<node class='r' visible-to-users='true' bounds='[0,0][540,960]'>"
      "<node class='b' resource-id='a' clickable='true' enabled='true' "
      "visible-to-users='true' bounds='[0,0][100,50]'/>"
      "<node class='b' resource-id='b' clickable='true' enabled='true' "
      "visible-to-users='true' bounds='[0,60][100,110]'/>"
      "</node>");
  auto policy = random_policy(99);
  Task t{"T", "walk", 1 << 20, Task::Kind::kGeneral};
  std::map<std::string, int> freq;
  const int draws = 1000;
  for (int i = 0; i < draws; ++i) {
    const Action a = policy->next_action(t, {}, tree);
    if (a.kind == ActionKind::kBack) freq["back"]++;
    else freq[a.target->resource_id]++;
  }
  CHECK(std::abs(freq["a"] / 1000.0 - 0.45) < 0.05);
  CHECK(std::abs(freq["b"] / 1000.0 - 0.45) < 0.05);
  CHECK(std::abs(freq["back"] / 1000.0 - 0.10) < 0.05);
}

TEST_CASE("llm policy: scripted stop completes") {
  LineDevice dev(3);
  MockChatClient mock({R"({"action":"stop"})"});
  std::vector<TranscriptEntry> transcripts;
  auto policy = llm_policy(mock, &transcripts);
  Task t{"T", "do nothing", 5, Task::Kind::kGeneral};
  const TaskOutcome out = run_task(dev, *policy, t);
  CHECK(out.completed);
  CHECK(transcripts.size() == 1);
  CHECK(transcripts[0].request.find("# Task") != std::string::npos);
}

TEST_CASE("llm policy: unparseable output retries once then falls back to back") {
  LineDevice dev(3);
  MockChatClient mock({"gibberish", "more gibberish", R"({"action":"stop"})"});
  std::vector<TranscriptEntry> transcripts;
  auto policy = llm_policy(mock, &transcripts);
  Task t{"T", "walk", 5, Task::Kind::kGeneral};
  const TaskOutcome out = run_task(dev, *policy, t);
  // first decision consumed two responses and became back, second stopped
  CHECK(out.steps_used == 1);
  CHECK(out.trace.steps[0].action.kind == ActionKind::kBack);
  CHECK(out.stop_reason == StopReason::kPolicyStop);
  CHECK(transcripts.size() == 3);
}

TEST_CASE("llm policy: transport failure exhausts retries into an error outcome") {
  LineDevice dev(3);
  MockChatClient mock({"__timeout__", "__timeout__", "__timeout__"});
  auto policy = llm_policy(mock, nullptr, /*client_retries=*/3);
  Task t{"T", "walk", 5, Task::Kind::kGeneral};
  const TaskOutcome out = run_task(dev, *policy, t);
  CHECK(out.stop_reason == StopReason::kError);
  CHECK_FALSE(out.completed);
  CHECK(out.error_message.find("ClientFailure") != std::string::npos);
}

TEST_CASE("fixture device: transitions, back stack, completion predicates") {
  FixtureDevice dev(kFixtureApp);
  CHECK(dev.state_count() == 18);
  CHECK(dev.current_state_name() == "home");

  auto tap_id = [&](const std::string& rid) {
    const ui::UiTree tree = dev.current_tree();
    const auto leaves = ui::visible_leaves(tree);
    for (size_t i = 0; i < leaves.size(); ++i)
      if (leaves[i]->resource_id == rid)
        return dev.perform(Action::tap(ActionTarget{
            static_cast<int>(i), leaves[i]->resource_id,
            ui::element_label(*leaves[i]), leaves[i]->bounds,
            leaves[i]->checkable}));
    return false;
  };

  CHECK(tap_id("btn_settings"));
  CHECK(dev.current_state_name() == "settings");
  CHECK(tap_id("row_privacy"));
  CHECK(dev.current_state_name() == "privacy_settings");
  CHECK(dev.perform(Action::back()));
  CHECK(dev.current_state_name() == "settings");
  CHECK(dev.perform(Action::back()));
  CHECK(dev.current_state_name() == "home");
  CHECK(dev.perform(Action::back()));  // back at root stays put
  CHECK(dev.current_state_name() == "home");

  auto done = dev.completion_for("T4");
  REQUIRE(done);
  CHECK(done());  // privacy_settings was visited
  auto not_done = dev.completion_for("T6");
  REQUIRE(not_done);
  CHECK_FALSE(not_done());

  // unmatched taps stay put
  CHECK(dev.perform(Action::scroll(ScrollDirection::kDown)));
  CHECK(dev.current_state_name() == "home");
}

TEST_CASE("llm mock walks the trial-and-error path to the notification page") {
  FixtureDevice dev(kFixtureApp);
  const Json mock_json =
      read_json_file(kFixtureApp + "/mock_responses.json");
  std::vector<std::string> responses;
  for (const Json& r : mock_json.at("T3")) responses.push_back(r.get<std::string>());
  MockChatClient mock(responses);
  auto policy = llm_policy(mock, nullptr);
  Task t{"T3", "Go to setting page, go through all notification related pages",
         20, Task::Kind::kGeneral};
  RunOptions opts;
  opts.source = ui::Source::kLlm;
  opts.completion = dev.completion_for("T3");
  const TaskOutcome out = run_task(dev, *policy, t, opts);
  CHECK(out.completed);
  // the detour: settings first, then back, then the inbox route
  REQUIRE(out.trace.steps.size() == 4);
  CHECK(out.trace.states[1].activity == "SettingsActivity");
  CHECK(out.trace.steps[1].action.kind == ActionKind::kBack);
  CHECK(out.trace.states.back().activity == "NotifActivity");
}

TEST_CASE("scripted policy resolves target ids and replays identically") {
  const Json scripts = read_json_file(kFixtureApp + "/scripts.json");
  Task t{"T6", "checkout", 20, Task::Kind::kFeature};

  auto run_once = [&]() {
    FixtureDevice dev(kFixtureApp);
    auto policy = scripted_policy(scripts.at("T6").dump());
    RunOptions opts;
    opts.source = ui::Source::kScripted;
    opts.completion = dev.completion_for("T6");
    return run_task(dev, *policy, t, opts);
  };
  const TaskOutcome a = run_once();
  const TaskOutcome b = run_once();
  CHECK(a.completed);
  REQUIRE(a.trace.steps.size() == b.trace.steps.size());
  for (size_t i = 0; i < a.trace.steps.size(); ++i) {
    CHECK(a.trace.steps[i].action == b.trace.steps[i].action);
    CHECK(ui::serialize_tree(a.trace.states[i].tree) ==
          ui::serialize_tree(b.trace.states[i].tree));
    CHECK(a.trace.states[i].screenshot == b.trace.states[i].screenshot);
  }
}

TEST_CASE("task definitions load and match Table-style ids") {
  const auto tasks = explore::tasks_from_json(
      read_text_file(testutil::data_dir() + "/tasks.json"));
  REQUIRE(tasks.size() == 7);
  CHECK(tasks[0].id == "T1");
  CHECK(tasks[0].description == "Register an account");
  CHECK(tasks[2].description.find("notification") != std::string::npos);
  CHECK(tasks[5].kind == Task::Kind::kFeature);
  CHECK_THROWS_AS(explore::tasks_from_json("[{\"id\":\"x\",\"description\":\"\"}]"),
                  AppError);
}
