#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "appray/explore_types.hpp"
#include "appray/lexicons.hpp"
#include "appray/trace.hpp"
#include "appray/ui.hpp"

namespace appray::refine {

struct Evidence {
  int from = -1;
  explore::Action action;
  int to = -1;
  std::string note;
};

struct Detection {
  std::string label;
  double score = 1.0;
  std::vector<int> state_ids;          // canonical graph ids, non-empty
  std::map<int, ui::Rect> bboxes;      // per state, optional
  enum class Provenance { kClassifier, kRule } provenance = Provenance::kClassifier;
  std::optional<std::string> suppressed_by;
  std::string rule_id;                 // set on rule additions
  std::vector<Evidence> evidence;      // >= 1 edge for rule additions
};

struct RefinerConfig {
  int window_edges = 3;
  Lexicons lexicons = Lexicons::defaults();
  std::set<std::string> disabled_rules;
  double roach_asymmetry_factor = 2.0;
  int roach_optin_max_steps = 2;
  int nagging_min_repetitions = 2;
};

// Per-state annotations from the detection pipeline (e.g. "ad_slot").
using StateFlags = std::map<int, std::set<std::string>>;

inline constexpr const char* kRuleNaggingContext = "nagging_context";
inline constexpr const char* kRuleNaggingRepetition = "nagging_repetition";
inline constexpr const char* kRuleBaitAndSwitch = "bait_and_switch";
inline constexpr const char* kRuleSneakIntoBasket = "sneak_into_basket";
inline constexpr const char* kRuleRoachMotel = "roach_motel";
inline constexpr const char* kRulePreselectionFirstVisit =
    "preselection_first_visit";

// Registry order; each entry names the rule and its window (0 = whole trace).
std::vector<std::pair<std::string, int>> rule_registry(
    const RefinerConfig& cfg);

// Applies the registry in order. Suppressed detections are kept with
// suppressed_by set; additions carry provenance=rule, a rule_id and at least
// one evidence edge. Idempotent.
std::vector<Detection> refine(std::vector<Detection> detections,
                              const trace::UiGraph& graph,
                              const std::vector<trace::Trace>& traces,
                              const StateFlags& flags = {},
                              const RefinerConfig& cfg = {});

// Single-rule evaluation over one trace (used by rule unit tests and the
// locality property).
std::vector<Detection> apply_rule(const std::string& rule_id,
                                  std::vector<Detection> detections,
                                  const trace::UiGraph& graph,
                                  const trace::Trace& trace,
                                  const StateFlags& flags = {},
                                  const RefinerConfig& cfg = {});

}  // namespace appray::refine
