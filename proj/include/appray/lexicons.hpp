#pragma once

#include <string>
#include <vector>

namespace appray {

// Editable vocabularies used by grouping and the refiner rules. Built-in
// defaults below; data/lexicons.json overrides them when loaded.
struct Lexicons {
  std::vector<std::string> rate_intent;    // actions that legitimately open pop-ups
  std::vector<std::string> outcome_verbs;  // labels promising a concrete outcome
  std::vector<std::string> cart_ids;       // resource-id fragments of cart badges
  std::vector<std::string> add_to_cart;    // labels/ids that add items
  std::vector<std::string> subscribe;      // opt-in vocabulary
  std::vector<std::string> cancel;         // opt-out vocabulary
  std::vector<std::string> ad_ids;         // resource-id fragments of ad slots

  static const Lexicons& defaults();
  static Lexicons from_json_text(const std::string& text);
};

// True iff any lexicon token appears in s (lowercase token containment).
bool lexicon_match(const std::vector<std::string>& lexicon,
                   const std::string& s);

std::string to_lower(const std::string& s);

}  // namespace appray
