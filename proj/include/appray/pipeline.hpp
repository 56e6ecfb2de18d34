#pragma once

#include <string>
#include <vector>

#include "appray/grouping.hpp"
#include "appray/metrics.hpp"
#include "appray/model.hpp"
#include "appray/refiner.hpp"
#include "appray/serde.hpp"
#include "appray/trace.hpp"

namespace appray::pipeline {

struct DetectOptions {
  double threshold = -1.0;  // < 0: use the checkpoint's threshold
  group::GroupingConfig grouping;
  refine::RefinerConfig refiner;
  bool run_refiner = true;
};

struct DetectResult {
  std::vector<refine::Detection> detections;  // classifier + rule, refined
  refine::StateFlags flags;
};

// grouping -> classifier -> refiner over a merged graph.
DetectResult detect_graph(const trace::UiGraph& graph,
                          const model::TrainedModel& tm,
                          const DetectOptions& opts = {});

// Versioned report.json payload; round-trips via detections_from_report.
Json report_to_json(const DetectResult& result, const trace::UiGraph& graph,
                    uint64_t config_hash);
std::vector<refine::Detection> detections_from_report(const Json& report);

}  // namespace appray::pipeline
