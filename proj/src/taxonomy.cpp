#include "appray/taxonomy.hpp"

#include <set>

#include "appray/common.hpp"
#include "appray/serde.hpp"

namespace appray::model {

const char* strategy_name(Strategy s) {
  switch (s) {
    case Strategy::kNagging: return "Nagging";
    case Strategy::kObstruction: return "Obstruction";
    case Strategy::kSneaking: return "Sneaking";
    case Strategy::kForcedAction: return "Forced Action";
    case Strategy::kInterfaceInterference: return "Interface Interference";
  }
  return "Nagging";
}

const char* temporal_class_name(TemporalClass t) {
  switch (t) {
    case TemporalClass::kStatic: return "static";
    case TemporalClass::kInBetween: return "in_between";
    case TemporalClass::kDynamic: return "dynamic";
  }
  return "static";
}

namespace {
Strategy strategy_from_name(const std::string& s) {
  if (s == "Nagging") return Strategy::kNagging;
  if (s == "Obstruction") return Strategy::kObstruction;
  if (s == "Sneaking") return Strategy::kSneaking;
  if (s == "Forced Action") return Strategy::kForcedAction;
  if (s == "Interface Interference") return Strategy::kInterfaceInterference;
  throw AppError(ErrorKind::MalformedInput, "unknown strategy '" + s + "'");
}

TemporalClass temporal_from_name(const std::string& s) {
  if (s == "static") return TemporalClass::kStatic;
  if (s == "in_between") return TemporalClass::kInBetween;
  if (s == "dynamic") return TemporalClass::kDynamic;
  throw AppError(ErrorKind::MalformedInput, "unknown temporal class '" + s + "'");
}
}  // namespace

Taxonomy::Taxonomy(std::vector<LabelDef> labels) : labels_(std::move(labels)) {
  std::set<std::string> seen;
  for (const LabelDef& l : labels_) {
    if (!seen.insert(l.name).second)
      throw AppError(ErrorKind::MalformedInput,
                     "duplicate taxonomy label '" + l.name + "'");
    if (l.classifier) classifier_names_.push_back(l.name);
  }
}

const Taxonomy& Taxonomy::standard() {
  static const Taxonomy tax = [] {
    using S = Strategy;
    using T = TemporalClass;
    std::vector<LabelDef> defs = {
        // classifier head order
        {"Nagging", S::kNagging, T::kInBetween, true},
        {"Bait And Switch", S::kSneaking, T::kDynamic, true},
        {"Forced Continuity", S::kSneaking, T::kInBetween, true},
        {"Roach Motel", S::kObstruction, T::kDynamic, true},
        {"Intermediate Currency", S::kObstruction, T::kStatic, true},
        {"Social Pyramid", S::kForcedAction, T::kStatic, true},
        {"Privacy Zuckering", S::kForcedAction, T::kStatic, true},
        {"Gamification", S::kForcedAction, T::kStatic, true},
        {"ForcedAction-General", S::kForcedAction, T::kStatic, true},
        {"Preselection", S::kInterfaceInterference, T::kInBetween, true},
        {"Hidden Information", S::kInterfaceInterference, T::kStatic, true},
        {"Toying with Emotion", S::kInterfaceInterference, T::kStatic, true},
        {"False Hierarchy", S::kInterfaceInterference, T::kStatic, true},
        {"Disguised Ads", S::kInterfaceInterference, T::kStatic, true},
        {"Tricked Questions", S::kInterfaceInterference, T::kStatic, true},
        {"Interface Interference - General", S::kInterfaceInterference,
         T::kStatic, true},
        // refiner-only labels
        {"Sneak into Basket", S::kSneaking, T::kDynamic, false},
        {"Hidden Costs", S::kSneaking, T::kDynamic, false},
        {"Price Comparison Prevention", S::kObstruction, T::kDynamic, false},
    };
    return Taxonomy(std::move(defs));
  }();
  return tax;
}

Taxonomy Taxonomy::from_json_text(const std::string& text) {
  Json j = Json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_array())
    throw AppError(ErrorKind::MalformedInput,
                   "taxonomy file must be a JSON array");
  std::vector<LabelDef> defs;
  for (const Json& je : j) {
    LabelDef d;
    d.name = je.at("name").get<std::string>();
    d.strategy = strategy_from_name(je.at("strategy").get<std::string>());
    d.temporal = temporal_from_name(je.at("temporal").get<std::string>());
    d.classifier = je.value("classifier", true);
    defs.push_back(std::move(d));
  }
  return Taxonomy(std::move(defs));
}

std::optional<int> Taxonomy::classifier_index(const std::string& name) const {
  for (size_t i = 0; i < classifier_names_.size(); ++i)
    if (classifier_names_[i] == name) return static_cast<int>(i);
  return std::nullopt;
}

const LabelDef* Taxonomy::find(const std::string& name) const {
  for (const LabelDef& l : labels_)
    if (l.name == name) return &l;
  return nullptr;
}

bool Taxonomy::is_dynamic(const std::string& name) const {
  const LabelDef* l = find(name);
  return l && l->temporal == TemporalClass::kDynamic;
}

}  // namespace appray::model
