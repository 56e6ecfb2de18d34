#include "appray/refiner.hpp"

#include <algorithm>

#include "appray/grouping.hpp"

namespace appray::refine {

using explore::Action;
using explore::ActionKind;
using trace::Step;
using trace::Trace;
using trace::UiGraph;
using trace::UiState;

namespace {

struct Context {
  const UiGraph* graph;
  const StateFlags* flags;
  const RefinerConfig* cfg;
  std::vector<Detection>* dets;
  // classifier detections indexed by state id (index into dets)
  std::map<int, std::vector<size_t>> by_state;

  const UiState* state(int id) const {
    if (id < 0 || id >= static_cast<int>(graph->states.size())) return nullptr;
    return &graph->states[static_cast<size_t>(id)];
  }

  bool state_has_flag(int id, const std::string& f) const {
    auto it = flags->find(id);
    return it != flags->end() && it->second.count(f) > 0;
  }

  std::vector<size_t> classifier_dets(int id, const std::string& label) const {
    std::vector<size_t> out;
    auto it = by_state.find(id);
    if (it == by_state.end()) return out;
    for (size_t idx : it->second)
      if ((*dets)[idx].label == label) out.push_back(idx);
    return out;
  }

  void suppress(size_t idx, const char* rule) {
    Detection& det = (*dets)[idx];
    if (!det.suppressed_by) det.suppressed_by = rule;  // first rule wins
  }
};

bool target_matches(const Action& a, const std::vector<std::string>& lexicon) {
  if (!a.target) return false;
  return lexicon_match(lexicon, a.target->label) ||
         lexicon_match(lexicon, a.target->resource_id);
}

bool is_requesting_tap(const Action& a, const RefinerConfig& cfg) {
  return a.kind == ActionKind::kTap && target_matches(a, cfg.lexicons.rate_intent);
}

// First numeric cart badge on the state, by document order.
std::optional<long long> cart_badge(const UiState* s,
                                    const RefinerConfig& cfg) {
  if (!s) return std::nullopt;
  for (const ui::UiElement* e : ui::visible_leaves(s->tree)) {
    if (!lexicon_match(cfg.lexicons.cart_ids, e->resource_id)) continue;
    const std::string& t = e->text;
    if (t.empty()) continue;
    char* end = nullptr;
    const long long v = std::strtoll(t.c_str(), &end, 10);
    if (end && *end == '\0' && v >= 0) return v;
  }
  return std::nullopt;
}

bool state_text_matches(const UiState* s,
                        const std::vector<std::string>& lexicon) {
  if (!s) return false;
  for (const ui::UiElement* e : ui::visible_leaves(s->tree)) {
    if (lexicon_match(lexicon, ui::element_label(*e))) return true;
    if (lexicon_match(lexicon, e->resource_id)) return true;
  }
  return false;
}

bool same_addition(const Detection& a, const Detection& b) {
  return a.rule_id == b.rule_id && a.label == b.label &&
         a.state_ids == b.state_ids;
}

void add_detection(Context& ctx, std::vector<Detection>& additions,
                   Detection det) {
  std::sort(det.state_ids.begin(), det.state_ids.end());
  det.state_ids.erase(std::unique(det.state_ids.begin(), det.state_ids.end()),
                      det.state_ids.end());
  for (const Detection& existing : *ctx.dets)
    if (existing.provenance == Detection::Provenance::kRule &&
        same_addition(existing, det))
      return;
  for (const Detection& existing : additions)
    if (same_addition(existing, det)) return;
  additions.push_back(std::move(det));
}

// --- rules; each sees a step window (whole trace when the rule is global) ---

void rule_nagging_context(Context& ctx, const Trace&,
                          const std::vector<Step>& window,
                          std::vector<Detection>&) {
  for (const Step& s : window) {
    if (!is_requesting_tap(s.action, *ctx.cfg)) continue;
    for (size_t idx : ctx.classifier_dets(s.to, "Nagging"))
      ctx.suppress(idx, kRuleNaggingContext);
  }
}

void rule_nagging_repetition(Context& ctx, const Trace& trace,
                             const std::vector<Step>& window,
                             std::vector<Detection>& additions) {
  (void)window;  // whole-trace rule
  // occurrences of nagging-flagged states keyed by signature, with a
  // non-requesting incoming action
  std::map<std::string, std::vector<const Step*>> groups;
  for (const Step& s : trace.steps) {
    if (is_requesting_tap(s.action, *ctx.cfg)) continue;
    if (ctx.classifier_dets(s.to, "Nagging").empty()) continue;
    const UiState* st = ctx.state(s.to);
    if (!st) continue;
    groups[trace::signature_digest(st->signature)].push_back(&s);
  }
  for (const auto& [sig, occurrences] : groups) {
    (void)sig;
    if (static_cast<int>(occurrences.size()) < ctx.cfg->nagging_min_repetitions)
      continue;
    Detection det;
    det.label = "Nagging";
    det.provenance = Detection::Provenance::kRule;
    det.rule_id = kRuleNaggingRepetition;
    for (const Step* s : occurrences) {
      det.state_ids.push_back(s->to);
      det.evidence.push_back({s->from, s->action, s->to,
                              "interstitial recurred without being requested"});
    }
    add_detection(ctx, additions, std::move(det));
  }
}

void rule_bait_and_switch(Context& ctx, const Trace&,
                          const std::vector<Step>& window,
                          std::vector<Detection>& additions) {
  for (const Step& s : window) {
    if (s.action.kind != ActionKind::kTap) continue;
    if (s.from == s.to) continue;
    if (!target_matches(s.action, ctx.cfg->lexicons.outcome_verbs)) continue;
    const bool ad_like =
        !ctx.classifier_dets(s.to, "Disguised Ads").empty() ||
        !ctx.classifier_dets(s.to, "Nagging").empty() ||
        ctx.state_has_flag(s.to, "ad_slot");
    if (!ad_like) continue;
    Detection det;
    det.label = "Bait And Switch";
    det.provenance = Detection::Provenance::kRule;
    det.rule_id = kRuleBaitAndSwitch;
    det.state_ids = {s.from, s.to};
    if (s.action.target) det.bboxes[s.from] = s.action.target->bounds;
    det.evidence.push_back(
        {s.from, s.action, s.to, "outcome-promising tap led to an ad state"});
    add_detection(ctx, additions, std::move(det));
  }
}

void rule_sneak_into_basket(Context& ctx, const Trace&,
                            const std::vector<Step>& window,
                            std::vector<Detection>& additions) {
  for (const Step& s : window) {
    const auto before = cart_badge(ctx.state(s.from), *ctx.cfg);
    const auto after = cart_badge(ctx.state(s.to), *ctx.cfg);
    if (!before || !after || *after <= *before) continue;
    if (s.action.kind == ActionKind::kTap &&
        target_matches(s.action, ctx.cfg->lexicons.add_to_cart))
      continue;
    Detection det;
    det.label = "Sneak into Basket";
    det.provenance = Detection::Provenance::kRule;
    det.rule_id = kRuleSneakIntoBasket;
    det.state_ids = {s.from, s.to};
    det.evidence.push_back({s.from, s.action, s.to,
                            "cart badge rose " + std::to_string(*before) +
                                " -> " + std::to_string(*after) +
                                " without an add-to-cart action"});
    add_detection(ctx, additions, std::move(det));
  }
}

void rule_roach_motel(Context& ctx, const Trace& trace,
                      const std::vector<Step>& window,
                      std::vector<Detection>& additions) {
  (void)window;  // whole-trace rule
  int opt_in_step = -1;
  for (size_t i = 0; i < trace.steps.size(); ++i) {
    const Step& s = trace.steps[i];
    if (s.action.kind == ActionKind::kTap &&
        target_matches(s.action, ctx.cfg->lexicons.subscribe)) {
      opt_in_step = static_cast<int>(i);
      break;
    }
  }
  if (opt_in_step < 0) return;
  const int opt_in_len = opt_in_step + 1;
  if (opt_in_len > ctx.cfg->roach_optin_max_steps) return;

  // forward distance from the opt-in completion state to the first state
  // showing cancel/opt-out vocabulary
  int cancel_len = -1;
  for (size_t i = static_cast<size_t>(opt_in_step); i < trace.steps.size();
       ++i) {
    if (state_text_matches(ctx.state(trace.steps[i].to),
                           ctx.cfg->lexicons.cancel)) {
      cancel_len = static_cast<int>(i) - opt_in_step;
      break;
    }
  }
  const bool absent = cancel_len < 0;
  const bool too_long =
      !absent && cancel_len > ctx.cfg->roach_asymmetry_factor * opt_in_len;
  if (!absent && !too_long) return;

  const Step& s = trace.steps[static_cast<size_t>(opt_in_step)];
  Detection det;
  det.label = "Roach Motel";
  det.provenance = Detection::Provenance::kRule;
  det.rule_id = kRuleRoachMotel;
  det.state_ids = {s.from, s.to};
  det.evidence.push_back(
      {s.from, s.action, s.to,
       absent ? "opt-in in " + std::to_string(opt_in_len) +
                    " step(s); no opt-out vocabulary anywhere in the trace"
              : "opt-in in " + std::to_string(opt_in_len) +
                    " step(s); opt-out only after " +
                    std::to_string(cancel_len) + " more step(s)"});
  add_detection(ctx, additions, std::move(det));
}

void rule_preselection_first_visit(Context& ctx, const Trace& trace,
                                   const std::vector<Step>& window,
                                   std::vector<Detection>&) {
  (void)window;  // whole-trace rule
  if (trace.steps.empty()) return;
  // first position of each state in this trace and its incoming action
  std::map<int, const Step*> first_incoming;
  std::set<int> seen{trace.steps.front().from};
  for (const Step& s : trace.steps) {
    if (!seen.count(s.to)) {
      seen.insert(s.to);
      first_incoming[s.to] = &s;
    }
  }
  for (const auto& [sid, step] : first_incoming) {
    const Action& a = step->action;
    const bool toggle_tap =
        a.kind == ActionKind::kTap && a.target && a.target->checkable;
    if (!toggle_tap) continue;
    // the checked state was produced by the user's own toggle
    for (size_t idx : ctx.classifier_dets(sid, "Preselection"))
      ctx.suppress(idx, kRulePreselectionFirstVisit);
  }
}

using RuleFn = void (*)(Context&, const Trace&, const std::vector<Step>&,
                        std::vector<Detection>&);

struct RuleEntry {
  const char* id;
  bool whole_trace;
  RuleFn fn;
};

const RuleEntry kRules[] = {
    {kRuleNaggingContext, false, rule_nagging_context},
    {kRulePreselectionFirstVisit, true, rule_preselection_first_visit},
    {kRuleNaggingRepetition, true, rule_nagging_repetition},
    {kRuleBaitAndSwitch, false, rule_bait_and_switch},
    {kRuleSneakIntoBasket, false, rule_sneak_into_basket},
    {kRuleRoachMotel, true, rule_roach_motel},
};

void run_rule(const RuleEntry& rule, Context& ctx, const Trace& trace,
              const RefinerConfig& cfg, std::vector<Detection>& additions) {
  if (rule.whole_trace) {
    rule.fn(ctx, trace, trace.steps, additions);
    return;
  }
  const size_t w = static_cast<size_t>(std::max(1, cfg.window_edges));
  if (trace.steps.empty()) return;
  // stride-1 sliding; per-edge conditions plus addition dedup keep repeats
  // harmless
  for (size_t start = 0; start < trace.steps.size(); ++start) {
    const size_t end = std::min(trace.steps.size(), start + w);
    std::vector<Step> window(trace.steps.begin() + static_cast<long>(start),
                             trace.steps.begin() + static_cast<long>(end));
    rule.fn(ctx, trace, window, additions);
  }
}

}  // namespace

std::vector<std::pair<std::string, int>> rule_registry(
    const RefinerConfig& cfg) {
  std::vector<std::pair<std::string, int>> out;
  for (const RuleEntry& r : kRules)
    out.emplace_back(r.id, r.whole_trace ? 0 : cfg.window_edges);
  return out;
}

std::vector<Detection> refine(std::vector<Detection> detections,
                              const trace::UiGraph& graph,
                              const std::vector<trace::Trace>& traces,
                              const StateFlags& flags,
                              const RefinerConfig& cfg) {
  Context ctx;
  ctx.graph = &graph;
  ctx.flags = &flags;
  ctx.cfg = &cfg;
  ctx.dets = &detections;
  for (size_t i = 0; i < detections.size(); ++i)
    if (detections[i].provenance == Detection::Provenance::kClassifier)
      for (int sid : detections[i].state_ids) ctx.by_state[sid].push_back(i);

  for (const RuleEntry& rule : kRules) {
    if (cfg.disabled_rules.count(rule.id)) continue;
    std::vector<Detection> additions;
    for (const Trace& t : traces) run_rule(rule, ctx, t, cfg, additions);
    for (Detection& d : additions) detections.push_back(std::move(d));
  }
  return detections;
}

std::vector<Detection> apply_rule(const std::string& rule_id,
                                  std::vector<Detection> detections,
                                  const trace::UiGraph& graph,
                                  const trace::Trace& trace,
                                  const StateFlags& flags,
                                  const RefinerConfig& cfg) {
  Context ctx;
  ctx.graph = &graph;
  ctx.flags = &flags;
  ctx.cfg = &cfg;
  ctx.dets = &detections;
  for (size_t i = 0; i < detections.size(); ++i)
    if (detections[i].provenance == Detection::Provenance::kClassifier)
      for (int sid : detections[i].state_ids) ctx.by_state[sid].push_back(i);

  for (const RuleEntry& rule : kRules) {
    if (rule_id != rule.id) continue;
    std::vector<Detection> additions;
    run_rule(rule, ctx, trace, cfg, additions);
    for (Detection& d : additions) detections.push_back(std::move(d));
    return detections;
  }
  throw AppError(ErrorKind::BadArgs, "unknown rule '" + rule_id + "'");
}

}  // namespace appray::refine
