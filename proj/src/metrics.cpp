#include "appray/metrics.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace appray::report {

std::map<std::string, LabelCounts> match_detections(
    const std::vector<refine::Detection>& preds,
    const std::vector<GroundTruth>& gts, double iou_min,
    const model::Taxonomy& taxonomy,
    const std::vector<std::string>& label_universe) {
  if (iou_min <= 0.0 || iou_min > 1.0)
    throw AppError(ErrorKind::BadArgs, "iou_min must be in (0, 1]");

  std::map<std::string, LabelCounts> counts;
  for (const std::string& l : label_universe) counts[l];
  for (const GroundTruth& g : gts) {
    counts[g.label].gt_count += 1;
  }

  // score-descending greedy order, stable on ties
  std::vector<size_t> order;
  for (size_t i = 0; i < preds.size(); ++i)
    if (!preds[i].suppressed_by) order.push_back(i);
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return preds[a].score > preds[b].score;
  });

  std::vector<bool> gt_used(gts.size(), false);
  for (size_t pi : order) {
    const refine::Detection& p = preds[pi];
    counts[p.label];
    const bool dynamic = taxonomy.is_dynamic(p.label);
    int best = -1;
    double best_iou = 0.0;
    for (size_t gi = 0; gi < gts.size(); ++gi) {
      if (gt_used[gi] || gts[gi].label != p.label) continue;
      const GroundTruth& g = gts[gi];
      if (dynamic || g.dynamic) {
        std::vector<int> a = p.state_ids, b = g.state_set;
        std::sort(a.begin(), a.end());
        a.erase(std::unique(a.begin(), a.end()), a.end());
        std::sort(b.begin(), b.end());
        b.erase(std::unique(b.begin(), b.end()), b.end());
        if (a == b && best < 0) {
          best = static_cast<int>(gi);
          best_iou = 1.0;
        }
        continue;
      }
      if (p.state_ids.empty() || p.state_ids.front() != g.state_id) continue;
      auto it = p.bboxes.find(g.state_id);
      if (it == p.bboxes.end()) continue;
      const double iou = ui::rect_iou(it->second, g.bbox);
      if (iou >= iou_min && iou > best_iou) {
        best = static_cast<int>(gi);
        best_iou = iou;
      }
    }
    if (best >= 0) {
      gt_used[static_cast<size_t>(best)] = true;
      counts[p.label].tp += 1;
    } else {
      counts[p.label].fp += 1;
    }
  }
  for (size_t gi = 0; gi < gts.size(); ++gi)
    if (!gt_used[gi]) counts[gts[gi].label].fn += 1;
  return counts;
}

MetricsReport compute_metrics(const std::map<std::string, LabelCounts>& counts) {
  MetricsReport r;
  int64_t TP = 0, FP = 0, FN = 0;
  double psum = 0.0, rsum = 0.0, fsum = 0.0;
  for (const auto& [label, c] : counts) {
    LabelMetrics m;
    m.tp = c.tp;
    m.fp = c.fp;
    m.fn = c.fn;
    m.gt_count = c.gt_count;
    if (c.tp + c.fp == 0) {
      m.zero_denominator = true;
      m.precision = 0.0;
    } else {
      m.precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
    }
    if (c.tp + c.fn == 0) {
      m.zero_denominator = true;
      m.recall = 0.0;
    } else {
      m.recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
    }
    m.f1 = (m.precision + m.recall) == 0.0
               ? 0.0
               : 2.0 * m.precision * m.recall / (m.precision + m.recall);
    TP += c.tp;
    FP += c.fp;
    FN += c.fn;
    psum += m.precision;
    rsum += m.recall;
    fsum += m.f1;
    r.per_label[label] = m;
  }
  const size_t n = counts.size();
  if (n > 0) {
    r.macro_precision = psum / static_cast<double>(n);
    r.macro_recall = rsum / static_cast<double>(n);
    r.macro_f1 = fsum / static_cast<double>(n);
  }
  r.micro_precision = TP + FP == 0 ? 0.0
                                   : static_cast<double>(TP) /
                                         static_cast<double>(TP + FP);
  r.micro_recall =
      TP + FN == 0 ? 0.0 : static_cast<double>(TP) / static_cast<double>(TP + FN);
  r.micro_f1 = (r.micro_precision + r.micro_recall) == 0.0
                   ? 0.0
                   : 2.0 * r.micro_precision * r.micro_recall /
                         (r.micro_precision + r.micro_recall);
  return r;
}

double benign_fp_rate(const std::vector<refine::Detection>& detections,
                      const std::vector<int>& benign_state_ids) {
  if (benign_state_ids.empty())
    throw AppError(ErrorKind::BadArgs, "benign set is empty");
  std::set<int> flagged;
  for (const refine::Detection& d : detections) {
    if (d.suppressed_by) continue;
    for (int sid : d.state_ids) flagged.insert(sid);
  }
  int64_t hit = 0;
  for (int sid : benign_state_ids)
    if (flagged.count(sid)) ++hit;
  return static_cast<double>(hit) /
         static_cast<double>(benign_state_ids.size());
}

std::string metrics_to_table(const MetricsReport& r) {
  std::ostringstream os;
  char line[256];
  std::snprintf(line, sizeof(line), "%-36s %6s %6s %6s %5s %5s %5s %5s\n",
                "label", "prec", "rec", "f1", "gt", "tp", "fp", "fn");
  os << line;
  for (const auto& [label, m] : r.per_label) {
    std::snprintf(line, sizeof(line),
                  "%-36s %6.3f %6.3f %6.3f %5lld %5lld %5lld %5lld%s\n",
                  label.c_str(), m.precision, m.recall, m.f1,
                  static_cast<long long>(m.gt_count),
                  static_cast<long long>(m.tp), static_cast<long long>(m.fp),
                  static_cast<long long>(m.fn),
                  m.zero_denominator ? "  (zero denom)" : "");
    os << line;
  }
  std::snprintf(line, sizeof(line), "%-36s %6.3f %6.3f %6.3f\n", "micro avg",
                r.micro_precision, r.micro_recall, r.micro_f1);
  os << line;
  std::snprintf(line, sizeof(line), "%-36s %6.3f %6.3f %6.3f\n", "macro avg",
                r.macro_precision, r.macro_recall, r.macro_f1);
  os << line;
  if (r.benign_fp_rate >= 0.0) {
    std::snprintf(line, sizeof(line), "benign UI false-positive rate: %.4f\n",
                  r.benign_fp_rate);
    os << line;
  }
  return os.str();
}

}  // namespace appray::report
