#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "appray/refiner.hpp"
#include "appray/taxonomy.hpp"
#include "appray/ui.hpp"

namespace appray::report {

struct GroundTruth {
  std::string label;
  bool dynamic = false;
  int state_id = -1;            // static labels
  ui::Rect bbox;                // static labels
  std::vector<int> state_set;   // dynamic labels
};

struct LabelCounts {
  int64_t tp = 0, fp = 0, fn = 0;
  int64_t gt_count = 0;
};

// Greedy matching by descending score. A prediction matches an unmatched
// ground truth of the same label when its bbox IoU on the same state reaches
// iou_min; dynamic labels match on state-id-set equality instead. Suppressed
// predictions are ignored. label_universe seeds zero rows so macro averaging
// has a fixed denominator.
std::map<std::string, LabelCounts> match_detections(
    const std::vector<refine::Detection>& preds,
    const std::vector<GroundTruth>& gts, double iou_min,
    const model::Taxonomy& taxonomy,
    const std::vector<std::string>& label_universe = {});

struct LabelMetrics {
  double precision = 0.0, recall = 0.0, f1 = 0.0;
  int64_t gt_count = 0, tp = 0, fp = 0, fn = 0;
  bool zero_denominator = false;
};

struct MetricsReport {
  std::map<std::string, LabelMetrics> per_label;
  double micro_precision = 0.0, micro_recall = 0.0, micro_f1 = 0.0;
  double macro_precision = 0.0, macro_recall = 0.0, macro_f1 = 0.0;
  double benign_fp_rate = -1.0;  // < 0 when not applicable
};

MetricsReport compute_metrics(const std::map<std::string, LabelCounts>& counts);

// Fraction of the given states carrying >= 1 unsuppressed detection.
double benign_fp_rate(const std::vector<refine::Detection>& detections,
                      const std::vector<int>& benign_state_ids);

std::string metrics_to_table(const MetricsReport& r);
}  // namespace appray::report
