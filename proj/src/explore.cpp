#include "appray/explore.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "appray/serde.hpp"

namespace appray::explore {

const char* action_kind_name(ActionKind k) {
  switch (k) {
    case ActionKind::kTap: return "tap";
    case ActionKind::kScroll: return "scroll";
    case ActionKind::kType: return "type";
    case ActionKind::kBack: return "back";
    case ActionKind::kStop: return "stop";
  }
  return "stop";
}

ActionKind action_kind_from_name(const std::string& s) {
  if (s == "tap") return ActionKind::kTap;
  if (s == "scroll") return ActionKind::kScroll;
  if (s == "type") return ActionKind::kType;
  if (s == "back") return ActionKind::kBack;
  if (s == "stop") return ActionKind::kStop;
  throw AppError(ErrorKind::UnparseableAction, "unknown action kind '" + s + "'");
}

const char* direction_name(ScrollDirection d) {
  switch (d) {
    case ScrollDirection::kUp: return "up";
    case ScrollDirection::kDown: return "down";
    case ScrollDirection::kLeft: return "left";
    case ScrollDirection::kRight: return "right";
  }
  return "down";
}

ScrollDirection direction_from_name(const std::string& s) {
  if (s == "up") return ScrollDirection::kUp;
  if (s == "down") return ScrollDirection::kDown;
  if (s == "left") return ScrollDirection::kLeft;
  if (s == "right") return ScrollDirection::kRight;
  throw AppError(ErrorKind::UnparseableAction, "unknown direction '" + s + "'");
}

std::string action_to_string(const Action& a) {
  std::ostringstream os;
  os << action_kind_name(a.kind);
  if (a.kind == ActionKind::kScroll && a.direction)
    os << " " << direction_name(*a.direction);
  if (a.target) os << " \"" << (a.target->label.empty() ? a.target->resource_id
                                                        : a.target->label)
                   << "\"";
  if (a.text) os << " text=\"" << *a.text << "\"";
  return os.str();
}

const char* stop_reason_name(StopReason r) {
  switch (r) {
    case StopReason::kPolicyStop: return "policy_stop";
    case StopReason::kMaxSteps: return "max_steps";
    case StopReason::kDeviceDead: return "device_dead";
    case StopReason::kError: return "error";
  }
  return "error";
}

std::vector<Task> tasks_from_json(const std::string& json_text) {
  Json j = Json::parse(json_text, nullptr, false);
  if (j.is_discarded() || !j.is_array())
    throw AppError(ErrorKind::MalformedInput, "task file must be a JSON array");
  std::vector<Task> tasks;
  for (const Json& jt : j) {
    Task t;
    t.id = jt.at("id").get<std::string>();
    t.description = jt.at("description").get<std::string>();
    if (t.description.empty())
      throw AppError(ErrorKind::MalformedInput,
                     "task " + t.id + " has empty description");
    t.max_steps = jt.value("max_steps", 20);
    if (t.max_steps <= 0)
      throw AppError(ErrorKind::MalformedInput,
                     "task " + t.id + " max_steps must be positive");
    t.kind = jt.value("kind", std::string("general")) == "feature"
                 ? Task::Kind::kFeature
                 : Task::Kind::kGeneral;
    tasks.push_back(std::move(t));
  }
  return tasks;
}

std::vector<Task> default_tasks() {
  auto task = [](const char* id, const char* desc, Task::Kind kind) {
    return Task{id, desc, 20, kind};
  };
  return {
      task("T1", "Register an account", Task::Kind::kGeneral),
      task("T2", "Sign in", Task::Kind::kGeneral),
      task("T3", "Go to setting page, go through all notification related pages",
           Task::Kind::kGeneral),
      task("T4", "Go to setting page, go through all privacy related setting",
           Task::Kind::kGeneral),
      task("T5",
           "Check if we can subscribe to premium account, if so, read through "
           "all contents on the subscription page",
           Task::Kind::kGeneral),
      task("T6",
           "(Optional) Select any product you like with proper attributes "
           "(like size), add to cart, proceed to checkout",
           Task::Kind::kFeature),
      task("T7", "Sign out the app", Task::Kind::kGeneral),
  };
}

std::pair<int, int> action_point(const ui::UiElement& e) {
  if (e.bounds.width() <= 0 || e.bounds.height() <= 0)
    throw AppError(ErrorKind::DegenerateBounds,
                   "zero-area bounds " + ui::format_bounds(e.bounds));
  return {e.bounds.x1 + e.bounds.width() / 2,
          e.bounds.y1 + e.bounds.height() / 2};
}

namespace {

std::string flags_string(const ui::UiElement& e) {
  std::string s;
  auto add = [&](bool v, const char* name) {
    if (!v) return;
    if (!s.empty()) s += ',';
    s += name;
  };
  add(e.clickable, "clickable");
  add(e.scrollable, "scrollable");
  add(e.checkable, "checkable");
  add(e.checked, "checked");
  add(e.enabled, "enabled");
  return s.empty() ? "-" : s;
}

}  // namespace

std::string build_prompt(const Task& task,
                         const std::vector<HistoryEntry>& history,
                         const ui::UiTree& tree) {
  std::ostringstream os;
  os << "# Instruction\n"
        "You are operating a mobile app on behalf of an end user. Given the "
        "task, the actions taken so far and the current screen, choose the "
        "single next action that makes progress on the task. When the task "
        "is finished, stop. Reply with exactly one JSON object and nothing "
        "else.\n\n";
  os << "# Output format\n"
        "{\"action\": \"tap\"|\"scroll\"|\"type\"|\"back\"|\"stop\", "
        "\"target_index\": <index of a UI line, required for tap and type>, "
        "\"direction\": \"up\"|\"down\"|\"left\"|\"right\" (required for "
        "scroll), \"text\": \"<text to enter>\" (required for type)}\n\n";
  os << "# Examples\n"
        "Screen has: 0: class=android.widget.Button id=login_btn label=\"Log "
        "in\" -> {\"action\":\"tap\",\"target_index\":0}\n"
        "Screen is a long list and the target is below the fold -> "
        "{\"action\":\"scroll\",\"direction\":\"down\"}\n"
        "Screen has: 2: class=android.widget.EditText id=email label=\"Email\" "
        "-> {\"action\":\"type\",\"target_index\":2,\"text\":"
        "\"user@example.com\"}\n"
        "Screen is an irrelevant page opened by mistake -> "
        "{\"action\":\"back\"}\n"
        "The task goal is already satisfied on this screen -> "
        "{\"action\":\"stop\"}\n\n";
  os << "# Task\n" << task.description << "\n\n";
  os << "# History\n";
  if (history.empty()) {
    os << kNoHistorySentinel << "\n";
  } else {
    const size_t start = history.size() > 10 ? history.size() - 10 : 0;
    for (size_t i = start; i < history.size(); ++i)
      os << (i + 1) << ". " << action_to_string(history[i].action) << "\n";
  }
  os << "\n" << kUiSectionHeader << "\n";
  const auto leaves = ui::visible_leaves(tree);
  for (size_t i = 0; i < leaves.size(); ++i) {
    const ui::UiElement& e = *leaves[i];
    os << i << ": class=" << e.class_name << " id=" << e.resource_id
       << " label=\"" << ui::element_label(e) << "\" flags=" << flags_string(e)
       << " bounds=" << ui::format_bounds(e.bounds) << "\n";
  }
  return os.str();
}

namespace {

// First substring that parses as a JSON object, scanning brace-balanced
// candidates and tolerating surrounding prose.
std::optional<Json> extract_json_object(const std::string& s) {
  for (size_t start = s.find('{'); start != std::string::npos;
       start = s.find('{', start + 1)) {
    int depth = 0;
    bool in_string = false;
    for (size_t i = start; i < s.size(); ++i) {
      const char c = s[i];
      if (in_string) {
        if (c == '\\') ++i;
        else if (c == '"') in_string = false;
        continue;
      }
      if (c == '"') in_string = true;
      else if (c == '{') ++depth;
      else if (c == '}') {
        if (--depth == 0) {
          Json j = Json::parse(s.substr(start, i - start + 1), nullptr, false);
          if (!j.is_discarded() && j.is_object()) return j;
          break;
        }
      }
    }
  }
  return std::nullopt;
}

ActionTarget target_from_leaf(const std::vector<const ui::UiElement*>& leaves,
                              int index) {
  const ui::UiElement& e = *leaves[static_cast<size_t>(index)];
  return ActionTarget{index, e.resource_id, ui::element_label(e), e.bounds,
                      e.checkable};
}

}  // namespace

Action parse_action(const std::string& response, const ui::UiTree& tree) {
  const auto obj = extract_json_object(response);
  if (!obj)
    throw AppError(ErrorKind::UnparseableAction,
                   "no JSON object in response");
  const Json& j = *obj;
  if (!j.contains("action") || !j["action"].is_string())
    throw AppError(ErrorKind::UnparseableAction, "missing action field");
  ActionKind kind;
  try {
    kind = action_kind_from_name(j["action"].get<std::string>());
  } catch (const AppError&) {
    throw AppError(ErrorKind::UnparseableAction,
                   "unknown action kind '" + j["action"].get<std::string>() +
                       "'");
  }
  switch (kind) {
    case ActionKind::kStop: return Action::stop();
    case ActionKind::kBack: return Action::back();
    case ActionKind::kScroll: {
      if (!j.contains("direction") || !j["direction"].is_string())
        throw AppError(ErrorKind::UnparseableAction, "scroll needs direction");
      try {
        return Action::scroll(
            direction_from_name(j["direction"].get<std::string>()));
      } catch (const AppError&) {
        throw AppError(ErrorKind::UnparseableAction, "bad scroll direction");
      }
    }
    case ActionKind::kTap:
    case ActionKind::kType: {
      if (!j.contains("target_index") ||
          !j["target_index"].is_number_integer())
        throw AppError(ErrorKind::UnparseableAction,
                       "tap/type needs target_index");
      const auto leaves = ui::visible_leaves(tree);
      const int idx = j["target_index"].get<int>();
      if (idx < 0 || idx >= static_cast<int>(leaves.size()))
        throw AppError(ErrorKind::BadTarget,
                       "target_index " + std::to_string(idx) + " out of range " +
                           "(have " + std::to_string(leaves.size()) +
                           " leaves)");
      ActionTarget t = target_from_leaf(leaves, idx);
      if (kind == ActionKind::kTap) return Action::tap(std::move(t));
      return Action::type_text(std::move(t), j.value("text", std::string()));
    }
  }
  throw AppError(ErrorKind::UnparseableAction, "unreachable");
}

TaskOutcome run_task(Device& device, Policy& policy, const Task& task,
                     const RunOptions& opts) {
  TaskOutcome out;
  out.trace.source = opts.source;
  out.trace.task_id = task.id;

  auto capture = [&]() -> int {
    trace::TraceState s;
    s.tree = device.current_tree();
    s.tree.source = opts.source;
    s.screenshot = device.screenshot();
    s.activity = s.tree.activity;
    out.trace.states.push_back(std::move(s));
    return static_cast<int>(out.trace.states.size() - 1);
  };

  std::vector<HistoryEntry> history;
  try {
    int cur = capture();
    for (;;) {
      if (out.steps_used >= task.max_steps) {
        out.stop_reason = StopReason::kMaxSteps;
        break;
      }
      const ui::UiTree& tree = out.trace.states[static_cast<size_t>(cur)].tree;
      Action action = policy.next_action(task, history, tree);
      if (action.kind == ActionKind::kStop) {
        out.stop_reason = StopReason::kPolicyStop;
        break;
      }
      bool ok = false;
      for (int attempt = 0; attempt <= opts.perform_retries && !ok; ++attempt)
        ok = device.perform(action);
      if (!ok) {
        out.stop_reason = StopReason::kError;
        out.error_message = "DeviceUnresponsive: perform failed after " +
                            std::to_string(opts.perform_retries) + " retries";
        break;
      }
      ++out.steps_used;
      if (!device.app_alive()) {
        out.stop_reason = StopReason::kDeviceDead;
        break;
      }
      const std::string digest = trace::signature_digest(
          trace::state_signature(tree));
      const int post = capture();
      out.trace.steps.push_back({cur, action, post});
      history.push_back({digest, action});
      cur = post;
    }
  } catch (const AppError& e) {
    out.stop_reason = e.kind() == ErrorKind::DeviceUnresponsive
                          ? StopReason::kError
                          : StopReason::kError;
    out.error_message = e.what();
  }
  out.completed = out.stop_reason == StopReason::kPolicyStop &&
                  (!opts.completion || opts.completion());
  return out;
}

// --- policies ---

namespace {

class RandomPolicy final : public Policy {
 public:
  explicit RandomPolicy(uint64_t seed) : rng_(seed) {}

  Action next_action(const Task& task, const std::vector<HistoryEntry>& history,
                     const ui::UiTree& tree) override {
    if (static_cast<int>(history.size()) >= task.max_steps)
      return Action::stop();
    const auto leaves = ui::visible_leaves(tree);
    std::vector<int> clickable;
    for (size_t i = 0; i < leaves.size(); ++i)
      if (leaves[i]->clickable && leaves[i]->enabled)
        clickable.push_back(static_cast<int>(i));
    bool any_scrollable = false;
    std::vector<const ui::UiElement*> stack{&tree.root};
    while (!stack.empty() && !any_scrollable) {
      const ui::UiElement* e = stack.back();
      stack.pop_back();
      if (e->scrollable) any_scrollable = true;
      for (const auto& c : e->children) stack.push_back(&c);
    }
    if (rng_.bernoulli(kRandomBackProbability)) return Action::back();
    const size_t n_moves = clickable.size() + (any_scrollable ? 4 : 0);
    if (n_moves == 0) return Action::back();
    const size_t pick = rng_.uniform_int(n_moves);
    if (pick < clickable.size())
      return Action::tap(target_from_leaf(leaves, clickable[pick]));
    static constexpr ScrollDirection kDirs[4] = {
        ScrollDirection::kUp, ScrollDirection::kDown, ScrollDirection::kLeft,
        ScrollDirection::kRight};
    return Action::scroll(kDirs[pick - clickable.size()]);
  }

 private:
  Rng rng_;
};

class LlmPolicy final : public Policy {
 public:
  LlmPolicy(ChatClient& client, std::vector<TranscriptEntry>* transcripts,
            int client_retries)
      : client_(client), transcripts_(transcripts), retries_(client_retries) {}

  Action next_action(const Task& task, const std::vector<HistoryEntry>& history,
                     const ui::UiTree& tree) override {
    if (static_cast<int>(history.size()) >= task.max_steps)
      return Action::stop();
    const std::string prompt = build_prompt(task, history, tree);
    // one retry on unparseable output, then fall back to back
    for (int attempt = 0; attempt < 2; ++attempt) {
      const std::string response = chat_with_retries(prompt);
      record(task, static_cast<int>(history.size()), prompt, response);
      try {
        return parse_action(response, tree);
      } catch (const AppError& e) {
        if (e.kind() != ErrorKind::UnparseableAction &&
            e.kind() != ErrorKind::BadTarget)
          throw;
      }
    }
    return Action::back();
  }

 private:
  std::string chat_with_retries(const std::string& prompt) {
    const std::vector<ChatMessage> messages{{"user", prompt}};
    for (int attempt = 1;; ++attempt) {
      try {
        return client_.chat(messages);
      } catch (const AppError& e) {
        if (e.kind() != ErrorKind::ClientFailure || attempt >= retries_) throw;
      }
    }
  }

  void record(const Task& task, int step, const std::string& req,
              const std::string& resp) {
    if (transcripts_) transcripts_->push_back({task.id, step, req, resp});
  }

  ChatClient& client_;
  std::vector<TranscriptEntry>* transcripts_;
  int retries_;
};

class ScriptedPolicy final : public Policy {
 public:
  explicit ScriptedPolicy(const std::string& script_json) {
    Json j = Json::parse(script_json, nullptr, false);
    if (j.is_discarded() || !j.is_array())
      throw AppError(ErrorKind::MalformedInput,
                     "script must be a JSON array of action objects");
    for (const Json& je : j) script_.push_back(je);
  }

  Action next_action(const Task& task, const std::vector<HistoryEntry>& history,
                     const ui::UiTree& tree) override {
    if (static_cast<int>(history.size()) >= task.max_steps)
      return Action::stop();
    if (next_ >= script_.size()) return Action::stop();
    const Json& j = script_[next_++];
    // "target_id" resolves a resource id against the current leaves; otherwise
    // the entry follows the LLM response schema.
    if (j.contains("target_id")) {
      const auto leaves = ui::visible_leaves(tree);
      const std::string want = j["target_id"].get<std::string>();
      for (size_t i = 0; i < leaves.size(); ++i) {
        if (leaves[i]->resource_id == want) {
          Json resolved = j;
          resolved.erase("target_id");
          resolved["target_index"] = static_cast<int>(i);
          return parse_action(resolved.dump(), tree);
        }
      }
      throw AppError(ErrorKind::BadTarget,
                     "script target_id '" + want + "' not on screen");
    }
    return parse_action(j.dump(), tree);
  }

 private:
  std::vector<Json> script_;
  size_t next_ = 0;
};

}  // namespace

std::unique_ptr<Policy> random_policy(uint64_t seed) {
  return std::make_unique<RandomPolicy>(seed);
}

std::unique_ptr<Policy> llm_policy(ChatClient& client,
                                   std::vector<TranscriptEntry>* transcripts,
                                   int client_retries) {
  return std::make_unique<LlmPolicy>(client, transcripts, client_retries);
}

std::unique_ptr<Policy> scripted_policy(const std::string& script_json) {
  return std::make_unique<ScriptedPolicy>(script_json);
}

MockChatClient::MockChatClient(std::vector<std::string> responses)
    : responses_(std::move(responses)) {}

std::string MockChatClient::chat(const std::vector<ChatMessage>&) {
  if (next_ >= responses_.size()) return R"({"action":"stop"})";
  const std::string r = responses_[next_++];
  if (r == "__timeout__")
    throw AppError(ErrorKind::ClientFailure, "scripted timeout");
  return r;
}

}  // namespace appray::explore
