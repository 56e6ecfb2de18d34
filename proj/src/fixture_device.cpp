#include <algorithm>
#include <filesystem>
#include <map>

#include "appray/corpus.hpp"
#include "appray/explore.hpp"
#include "appray/serde.hpp"

namespace appray::explore {

namespace fs = std::filesystem;

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

struct TransitionMatch {
  ActionKind kind = ActionKind::kTap;
  std::string target;  // resource id, or case-insensitive label substring
  std::optional<ScrollDirection> direction;
};

struct Transition {
  std::string from;
  TransitionMatch on;
  std::string to;
};

}  // namespace

struct FixtureDevice::Impl {
  std::string dir;
  std::string initial;
  std::map<std::string, ui::UiTree> trees;
  std::map<std::string, ui::Raster> shots;
  std::vector<Transition> transitions;
  std::map<std::string, std::string> completion;  // task id -> state to reach

  std::string current;
  std::vector<std::string> back_stack;
  std::set<std::string> visited;
  bool alive = true;

  bool matches(const Transition& t, const Action& a) const {
    if (t.from != current || t.on.kind != a.kind) return false;
    if (a.kind == ActionKind::kScroll) {
      return !t.on.direction || (a.direction && *t.on.direction == *a.direction);
    }
    if (a.kind == ActionKind::kTap || a.kind == ActionKind::kType) {
      if (t.on.target.empty()) return true;
      if (!a.target) return false;
      if (a.target->resource_id == t.on.target) return true;
      const std::string label = lower(a.target->label);
      return !t.on.target.empty() &&
             label.find(lower(t.on.target)) != std::string::npos;
    }
    return true;  // back with explicit transition
  }

  void go(const std::string& to, bool push) {
    if (to == "__dead__") {
      alive = false;
      return;
    }
    if (push && to != current) back_stack.push_back(current);
    current = to;
    visited.insert(current);
  }
};

FixtureDevice::FixtureDevice(const std::string& app_dir)
    : impl_(std::make_unique<Impl>()) {
  impl_->dir = app_dir;
  const Json app = read_json_file((fs::path(app_dir) / "app.json").string());
  impl_->initial = app.at("initial").get<std::string>();
  for (const auto& [name, js] : app.at("states").items()) {
    const std::string xml_rel = js.at("xml").get<std::string>();
    ui::UiTree tree =
        ui::parse_hierarchy(read_text_file((fs::path(app_dir) / xml_rel).string()));
    if (js.contains("activity")) tree.activity = js["activity"].get<std::string>();
    if (tree.activity.empty()) tree.activity = name;
    if (js.contains("png")) {
      impl_->shots[name] = ui::decode_png(
          (fs::path(app_dir) / js["png"].get<std::string>()).string());
    } else {
      // no raster asset: render the hierarchy deterministically
      impl_->shots[name] = corpus::render(tree, corpus::Palette::standard());
    }
    impl_->trees[name] = std::move(tree);
  }
  for (const Json& jt : app.value("transitions", Json::array())) {
    Transition t;
    t.from = jt.at("from").get<std::string>();
    t.to = jt.at("to").get<std::string>();
    const Json& on = jt.at("on");
    t.on.kind = action_kind_from_name(on.at("kind").get<std::string>());
    t.on.target = on.value("target", "");
    if (on.contains("direction"))
      t.on.direction = direction_from_name(on["direction"].get<std::string>());
    impl_->transitions.push_back(std::move(t));
  }
  if (app.contains("completion"))
    for (const auto& [task, jc] : app["completion"].items())
      impl_->completion[task] = jc.at("reach").get<std::string>();
  if (!impl_->trees.count(impl_->initial))
    throw AppError(ErrorKind::MalformedInput,
                   "initial state '" + impl_->initial + "' not defined");
  for (const Transition& t : impl_->transitions)
    if (!impl_->trees.count(t.from) ||
        (t.to != "__dead__" && !impl_->trees.count(t.to)))
      throw AppError(ErrorKind::MalformedInput,
                     "transition references unknown state");
  reset();
}

FixtureDevice::~FixtureDevice() = default;

void FixtureDevice::reset() {
  impl_->current = impl_->initial;
  impl_->back_stack.clear();
  impl_->visited = {impl_->initial};
  impl_->alive = true;
}

ui::UiTree FixtureDevice::current_tree() {
  if (!impl_->alive)
    throw AppError(ErrorKind::DeviceUnresponsive, "app not running");
  return impl_->trees.at(impl_->current);
}

ui::Raster FixtureDevice::screenshot() {
  if (!impl_->alive)
    throw AppError(ErrorKind::DeviceUnresponsive, "app not running");
  return impl_->shots.at(impl_->current);
}

bool FixtureDevice::perform(const Action& a) {
  if (!impl_->alive) return false;
  if (a.kind == ActionKind::kStop) return true;  // no-op on the device
  for (const Transition& t : impl_->transitions) {
    if (impl_->matches(t, a)) {
      impl_->go(t.to, a.kind != ActionKind::kBack);
      return true;
    }
  }
  if (a.kind == ActionKind::kBack) {
    if (!impl_->back_stack.empty()) {
      impl_->current = impl_->back_stack.back();
      impl_->back_stack.pop_back();
      impl_->visited.insert(impl_->current);
    }
    return true;  // back at the root stays put
  }
  return true;  // unmatched tap/scroll/type leaves the state unchanged
}

bool FixtureDevice::app_alive() { return impl_->alive; }

const std::string& FixtureDevice::current_state_name() const {
  return impl_->current;
}

const std::set<std::string>& FixtureDevice::visited() const {
  return impl_->visited;
}

int FixtureDevice::state_count() const {
  return static_cast<int>(impl_->trees.size());
}

std::function<bool()> FixtureDevice::completion_for(const std::string& task_id) {
  auto it = impl_->completion.find(task_id);
  if (it == impl_->completion.end()) return nullptr;
  const std::string want = it->second;
  Impl* impl = impl_.get();
  return [impl, want]() { return impl->visited.count(want) > 0; };
}

}  // namespace appray::explore
