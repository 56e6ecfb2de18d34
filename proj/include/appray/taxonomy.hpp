#pragma once

#include <optional>
#include <string>
#include <vector>

namespace appray::model {

enum class Strategy {
  kNagging,
  kObstruction,
  kSneaking,
  kForcedAction,
  kInterfaceInterference
};
const char* strategy_name(Strategy s);

// static: identifiable from one page; in_between: spans pages but guessable
// from one; dynamic: requires multi-page context.
enum class TemporalClass { kStatic, kInBetween, kDynamic };
const char* temporal_class_name(TemporalClass t);

struct LabelDef {
  std::string name;
  Strategy strategy;
  TemporalClass temporal;
  bool classifier = true;  // false: refiner-only label
};

class Taxonomy {
 public:
  // The 16 classifier classes plus the refiner-only labels.
  static const Taxonomy& standard();
  static Taxonomy from_json_text(const std::string& text);

  const std::vector<LabelDef>& labels() const { return labels_; }
  // Classifier head order; size 16 for the standard taxonomy.
  const std::vector<std::string>& classifier_labels() const {
    return classifier_names_;
  }
  int classifier_size() const {
    return static_cast<int>(classifier_names_.size());
  }
  std::optional<int> classifier_index(const std::string& name) const;
  const LabelDef* find(const std::string& name) const;
  bool is_dynamic(const std::string& name) const;

  explicit Taxonomy(std::vector<LabelDef> labels);

 private:
  std::vector<LabelDef> labels_;
  std::vector<std::string> classifier_names_;
};

}  // namespace appray::model
