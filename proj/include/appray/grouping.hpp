#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "appray/lexicons.hpp"
#include "appray/raster.hpp"
#include "appray/ui.hpp"

namespace appray::group {

using ui::Raster;
using ui::Rect;
using ui::UiElement;
using ui::UiTree;

enum class Role {
  kButton,
  kText,
  kImage,
  kCheckbox,
  kSwitch,
  kInput,
  kContainer,
  kOther
};
const char* role_name(Role r);

// Derived from the class name suffix; unknown classes are kOther.
Role element_role(const UiElement& e);

using Rgb = std::array<uint8_t, 3>;

struct ElementProps {
  const UiElement* element = nullptr;
  Role role = Role::kOther;
  Rgb dominant_color{0, 0, 0};
  Rgb secondary_color{0, 0, 0};
  double text_contrast = 1.0;  // WCAG relative-luminance ratio, >= 1
  double area_fraction = 0.0;
};

// WCAG contrast ratio between two colors, in [1, 21].
double contrast_ratio(const Rgb& a, const Rgb& b);

// One record per visible leaf. Colors use 16-level per-channel quantization;
// contrast compares the two most frequent quantized colors of the crop.
std::vector<ElementProps> extract_properties(const UiTree& tree,
                                             const Raster& raster);

enum class ComponentKind { kSingle, kCheckboxGroup, kModal, kAdSlot, kListItem };
const char* component_kind_name(ComponentKind k);

struct Component {
  int id = 0;
  ComponentKind kind = ComponentKind::kSingle;
  std::vector<const UiElement*> members;
  Rect bbox;          // union of member bounds
  int state_id = -1;  // filled by the detection pipeline
};

struct GroupingConfig {
  int min_leaf_size = ui::kMinLeafSizePx;
  double modal_min_area = 0.20;  // fraction of screen area
  double modal_max_area = 0.90;
  double checkbox_max_gap = 0.10;  // fraction of screen width
  Lexicons lexicons = Lexicons::defaults();
};

// Pairs each checkbox/switch leaf with the nearest text leaf whose vertical
// center falls within the checkbox's vertical span and whose horizontal gap is
// within the configured fraction of screen width. Unpaired boxes stay
// singletons.
std::vector<Component> group_checkbox_text(const UiTree& tree,
                                           const GroupingConfig& cfg = {});

// Largest container covering 20-90% of the screen with its center inside the
// middle third (both axes); members are its visible leaves.
std::optional<Component> group_modal(const UiTree& tree, const Raster& raster,
                                     const GroupingConfig& cfg = {});

// Modal + checkbox groups + singletons for the remaining visible leaves with
// role in {button, text, image, switch}; membership is a partition,
// deterministic order by document position of the first member.
std::vector<Component> candidate_components(const UiTree& tree,
                                            const Raster& raster,
                                            const GroupingConfig& cfg = {});

}  // namespace appray::group
