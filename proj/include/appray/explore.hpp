#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "appray/common.hpp"
#include "appray/explore_types.hpp"
#include "appray/raster.hpp"
#include "appray/trace.hpp"
#include "appray/ui.hpp"

namespace appray::explore {

struct Task {
  std::string id;
  std::string description;
  int max_steps = 20;
  enum class Kind { kGeneral, kFeature } kind = Kind::kGeneral;
};

std::vector<Task> tasks_from_json(const std::string& json_text);
// The seven built-in exploration tasks.
std::vector<Task> default_tasks();

class Device {
 public:
  virtual ~Device() = default;
  virtual ui::UiTree current_tree() = 0;
  virtual ui::Raster screenshot() = 0;
  virtual bool perform(const Action& a) = 0;
  virtual bool app_alive() = 0;
};

struct HistoryEntry {
  std::string digest;  // pre-state digest
  Action action;
};

class Policy {
 public:
  virtual ~Policy() = default;
  virtual Action next_action(const Task& task,
                             const std::vector<HistoryEntry>& history,
                             const ui::UiTree& tree) = 0;
};

enum class StopReason { kPolicyStop, kMaxSteps, kDeviceDead, kError };
const char* stop_reason_name(StopReason r);

struct TaskOutcome {
  trace::Trace trace;
  bool completed = false;
  int steps_used = 0;
  StopReason stop_reason = StopReason::kError;
  std::string error_message;
};

struct RunOptions {
  int perform_retries = 3;
  ui::Source source = ui::Source::kScripted;
  // Optional fixture-defined completion predicate, consulted on policy stop.
  std::function<bool()> completion;
};

TaskOutcome run_task(Device& device, Policy& policy, const Task& task,
                     const RunOptions& opts = {});

// Center of the element bounds, integer-floored.
std::pair<int, int> action_point(const ui::UiElement& e);

// Prompt sections in fixed order: instruction, output schema, one few-shot
// example per action kind, task, history (last 10), one line per visible leaf.
std::string build_prompt(const Task& task,
                         const std::vector<HistoryEntry>& history,
                         const ui::UiTree& tree);
inline constexpr const char* kUiSectionHeader = "# UI";
inline constexpr const char* kNoHistorySentinel = "(no prior actions)";

// Extracts the first JSON object from the model reply and resolves it against
// the tree's visible leaves. Throws UnparseableAction / BadTarget.
Action parse_action(const std::string& response, const ui::UiTree& tree);

struct ChatMessage {
  std::string role;
  std::string content;
};

class ChatClient {
 public:
  virtual ~ChatClient() = default;
  // Throws ClientFailure on transport errors.
  virtual std::string chat(const std::vector<ChatMessage>& messages) = 0;
};

// POSTs {model, messages:[...]} to <base_url>/v1/chat/completions. The API key
// is read from APPRAY_API_KEY.
class HttpChatClient : public ChatClient {
 public:
  HttpChatClient(std::string base_url, std::string model,
                 int timeout_seconds = 60);
  std::string chat(const std::vector<ChatMessage>& messages) override;

 private:
  std::string base_url_;
  std::string model_;
  int timeout_seconds_;
};

// Scripted responses consumed in order. A "__timeout__" entry simulates a
// transport failure; an exhausted script answers stop.
class MockChatClient : public ChatClient {
 public:
  explicit MockChatClient(std::vector<std::string> responses);
  std::string chat(const std::vector<ChatMessage>& messages) override;
  size_t calls() const { return next_; }

 private:
  std::vector<std::string> responses_;
  size_t next_ = 0;
};

struct TranscriptEntry {
  std::string task_id;
  int step = 0;
  std::string request;
  std::string response;
};

std::unique_ptr<Policy> random_policy(uint64_t seed);
inline constexpr double kRandomBackProbability = 0.1;

// Composes build_prompt -> client -> parse_action with one retry on
// unparseable output, then falls back to back. Client transport failures are
// retried up to client_retries before surfacing ClientFailure.
std::unique_ptr<Policy> llm_policy(ChatClient& client,
                                   std::vector<TranscriptEntry>* transcripts,
                                   int client_retries = 3);

// Fixed action list (JSON action objects resolved per step); stops when
// exhausted.
std::unique_ptr<Policy> scripted_policy(const std::string& script_json);

// Simulated app backed by app.json + XML (and optional PNG) assets.
class FixtureDevice : public Device {
 public:
  explicit FixtureDevice(const std::string& app_dir);
  ~FixtureDevice() override;

  ui::UiTree current_tree() override;
  ui::Raster screenshot() override;
  bool perform(const Action& a) override;
  bool app_alive() override;

  void reset();
  const std::string& current_state_name() const;
  const std::set<std::string>& visited() const;
  int state_count() const;
  // Completion predicate from app.json ("completion": {task_id: {"reach": s}}).
  std::function<bool()> completion_for(const std::string& task_id);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Thin adb wrapper; requires adb in PATH with a connected device. Exercised
// manually only, every hermetic path uses FixtureDevice.
class AdbDevice : public Device {
 public:
  explicit AdbDevice(std::string serial = "", int settle_ms = 1500);
  ui::UiTree current_tree() override;
  ui::Raster screenshot() override;
  bool perform(const Action& a) override;
  bool app_alive() override;

 private:
  std::string run(const std::string& args) const;
  std::string serial_;
  int settle_ms_;
};

}  // namespace appray::explore
