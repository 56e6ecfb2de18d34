#include "appray/pipeline.hpp"

#include "appray/kernels.hpp"

namespace appray::pipeline {

DetectResult detect_graph(const trace::UiGraph& graph,
                          const model::TrainedModel& tm,
                          const DetectOptions& opts) {
  const model::Taxonomy& tax = model::Taxonomy::standard();
  const double threshold =
      opts.threshold >= 0.0 ? opts.threshold : tm.hyperparams.threshold;

  struct PerState {
    std::vector<refine::Detection> dets;
    bool ad_slot = false;
  };
  std::vector<PerState> results(graph.states.size());

  kernels::parallel_for(
      static_cast<int64_t>(graph.states.size()), [&](int64_t si) {
        const trace::UiState& state = graph.states[static_cast<size_t>(si)];
        PerState& out = results[static_cast<size_t>(si)];
        auto comps = group::candidate_components(state.tree, state.screenshot,
                                                 opts.grouping);
        for (group::Component& c : comps) {
          c.state_id = state.id;
          if (c.kind == group::ComponentKind::kAdSlot) out.ad_slot = true;
          model::Sample sample = model::featurize(c, state.screenshot);
          const auto preds = model::predict(tm.model, sample, threshold);
          for (const auto& [label_idx, score] : preds) {
            refine::Detection det;
            det.label = tax.classifier_labels()[static_cast<size_t>(label_idx)];
            det.score = score;
            det.state_ids = {state.id};
            det.bboxes[state.id] = c.bbox;
            det.provenance = refine::Detection::Provenance::kClassifier;
            out.dets.push_back(std::move(det));
          }
        }
      });

  DetectResult result;
  for (size_t si = 0; si < results.size(); ++si) {
    for (refine::Detection& d : results[si].dets)
      result.detections.push_back(std::move(d));
    if (results[si].ad_slot)
      result.flags[graph.states[si].id].insert("ad_slot");
  }
  if (opts.run_refiner)
    result.detections =
        refine::refine(std::move(result.detections), graph,
                       graph.remapped_traces, result.flags, opts.refiner);
  return result;
}

Json report_to_json(const DetectResult& result, const trace::UiGraph& graph,
                    uint64_t config_hash) {
  Json report;
  report["format_version"] = "1";
  report["tool_version"] = kVersion;
  report["config_hash"] = hex64(config_hash);

  Json states = Json::array();
  for (const trace::UiState& s : graph.states) {
    Json js;
    js["id"] = s.id;
    js["activity"] = s.activity;
    auto it = result.flags.find(s.id);
    if (it != result.flags.end())
      js["flags"] = std::vector<std::string>(it->second.begin(),
                                             it->second.end());
    states.push_back(js);
  }
  report["states"] = states;

  Json dets = Json::array();
  for (const refine::Detection& d : result.detections) {
    Json jd;
    jd["label"] = d.label;
    jd["score"] = d.score;
    jd["state_ids"] = d.state_ids;
    Json boxes = Json::object();
    for (const auto& [sid, box] : d.bboxes)
      boxes[std::to_string(sid)] = rect_to_json(box);
    jd["bboxes"] = boxes;
    jd["provenance"] =
        d.provenance == refine::Detection::Provenance::kRule ? "rule"
                                                             : "classifier";
    if (d.suppressed_by) jd["suppressed_by"] = *d.suppressed_by;
    if (!d.rule_id.empty()) jd["rule_id"] = d.rule_id;
    Json ev = Json::array();
    for (const refine::Evidence& e : d.evidence)
      ev.push_back({{"from", e.from},
                    {"action", action_to_json(e.action)},
                    {"to", e.to},
                    {"note", e.note}});
    jd["evidence"] = ev;
    dets.push_back(jd);
  }
  report["detections"] = dets;
  return report;
}

std::vector<refine::Detection> detections_from_report(const Json& report) {
  std::vector<refine::Detection> out;
  for (const Json& jd : report.at("detections")) {
    refine::Detection d;
    d.label = jd.at("label").get<std::string>();
    d.score = jd.at("score").get<double>();
    d.state_ids = jd.at("state_ids").get<std::vector<int>>();
    if (jd.contains("bboxes"))
      for (const auto& [sid, box] : jd["bboxes"].items())
        d.bboxes[std::stoi(sid)] = rect_from_json(box);
    d.provenance = jd.value("provenance", std::string("classifier")) == "rule"
                       ? refine::Detection::Provenance::kRule
                       : refine::Detection::Provenance::kClassifier;
    if (jd.contains("suppressed_by"))
      d.suppressed_by = jd["suppressed_by"].get<std::string>();
    d.rule_id = jd.value("rule_id", "");
    if (jd.contains("evidence"))
      for (const Json& je : jd["evidence"])
        d.evidence.push_back({je.at("from").get<int>(),
                              action_from_json(je.at("action")),
                              je.at("to").get<int>(),
                              je.value("note", "")});
    out.push_back(std::move(d));
  }
  return out;
}

}  // namespace appray::pipeline
