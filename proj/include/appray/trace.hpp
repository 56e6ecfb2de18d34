#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "appray/explore_types.hpp"
#include "appray/raster.hpp"
#include "appray/ui.hpp"

namespace appray::trace {

using ui::Raster;
using ui::Source;
using ui::UiTree;

// One (class, resource-id, checked) triple per visible leaf, document order.
struct StateSignature {
  struct Entry {
    std::string class_name;
    std::string resource_id;
    bool checked = false;
    bool operator==(const Entry&) const = default;
  };
  std::vector<Entry> entries;
  bool operator==(const StateSignature&) const = default;
};

StateSignature state_signature(const UiTree& tree);
// Compact digest used in prompts and logs.
std::string signature_digest(const StateSignature& sig);

struct UiState {
  int id = 0;
  UiTree tree;
  Raster screenshot;
  StateSignature signature;
  std::string activity;
  Source first_seen_source = Source::kFixture;
};

// Duplicate iff the screenshots are pixel-identical or the signatures match.
bool is_duplicate(const UiState& a, const UiState& b);

// A state snapshot local to one trace. Local ids are indices into
// Trace::states.
struct TraceState {
  UiTree tree;
  Raster screenshot;
  std::string activity;
};

struct Step {
  int from = 0;  // local or canonical state id, per context
  explore::Action action;
  int to = 0;
};

struct Trace {
  std::vector<TraceState> states;
  std::vector<Step> steps;
  std::optional<std::string> task_id;
  Source source = Source::kFixture;
};

struct Edge {
  int from = 0;
  explore::Action action;
  int to = 0;
};

struct MergeNote {
  int canonical_id = 0;
  std::string matched_by;  // "pixels", "signature", "both", "pixels_only"
};

struct UiGraph {
  std::vector<UiState> states;  // id == index
  std::vector<Edge> edges;      // multiset, insertion order
  std::map<int, std::set<Source>> visits;
  std::vector<MergeNote> merge_notes;
  // Input traces with steps remapped to canonical state ids.
  std::vector<Trace> remapped_traces;
};

// Deduplicates states across traces (first occurrence canonical, first-match
// scan in id order) and remaps all edges.
UiGraph merge(const std::vector<Trace>& traces);

struct CoverageReport {
  int unique_states = 0;
  int unique_activities = 0;
  std::map<std::string, int> per_source_unique;  // visited by that source only
  double overlap_pct = 0.0;  // states visited by >= 2 sources, in percent
};

CoverageReport coverage_stats(const UiGraph& g);
std::string coverage_to_string(const CoverageReport& r);

// Directory store: manifest.json + states/<id>.xml + states/<id>.png +
// traces.jsonl. Format version "1". Throws IoFailure / CorruptStore.
void save(const UiGraph& g, const std::string& dir);
UiGraph load(const std::string& dir);

}  // namespace appray::trace
