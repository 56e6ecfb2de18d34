#include "appray/grouping.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace appray::group {

const char* role_name(Role r) {
  switch (r) {
    case Role::kButton: return "button";
    case Role::kText: return "text";
    case Role::kImage: return "image";
    case Role::kCheckbox: return "checkbox";
    case Role::kSwitch: return "switch";
    case Role::kInput: return "input";
    case Role::kContainer: return "container";
    case Role::kOther: return "other";
  }
  return "other";
}

namespace {
bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}
}  // namespace

Role element_role(const UiElement& e) {
  const std::string& c = e.class_name;
  if (ends_with(c, "CheckBox") || ends_with(c, "RadioButton"))
    return Role::kCheckbox;
  if (ends_with(c, "Switch") || ends_with(c, "SwitchCompat") ||
      ends_with(c, "ToggleButton"))
    return Role::kSwitch;
  if (ends_with(c, "EditText") || ends_with(c, "AutoCompleteTextView") ||
      ends_with(c, "SearchView"))
    return Role::kInput;
  if (ends_with(c, "Button")) return Role::kButton;
  if (ends_with(c, "TextView")) return Role::kText;
  if (ends_with(c, "ImageView")) return Role::kImage;
  if (ends_with(c, "Layout") || ends_with(c, "ViewGroup") ||
      ends_with(c, "RecyclerView") || ends_with(c, "ListView") ||
      ends_with(c, "ScrollView") || ends_with(c, "GridView") ||
      ends_with(c, "ViewPager") || ends_with(c, "CardView"))
    return Role::kContainer;
  return Role::kOther;
}

namespace {

double channel_lin(uint8_t c) {
  const double s = c / 255.0;
  return s <= 0.03928 ? s / 12.92 : std::pow((s + 0.055) / 1.055, 2.4);
}

double relative_luminance(const Rgb& c) {
  return 0.2126 * channel_lin(c[0]) + 0.7152 * channel_lin(c[1]) +
         0.0722 * channel_lin(c[2]);
}

// 16 levels per channel; representative value q*17 keeps 0 and 255 exact.
int quantize_key(const uint8_t* px) {
  return ((px[0] >> 4) << 8) | ((px[1] >> 4) << 4) | (px[2] >> 4);
}

Rgb key_to_rgb(int key) {
  return Rgb{static_cast<uint8_t>(((key >> 8) & 0xF) * 17),
             static_cast<uint8_t>(((key >> 4) & 0xF) * 17),
             static_cast<uint8_t>((key & 0xF) * 17)};
}

}  // namespace

double contrast_ratio(const Rgb& a, const Rgb& b) {
  double la = relative_luminance(a), lb = relative_luminance(b);
  if (la < lb) std::swap(la, lb);
  return (la + 0.05) / (lb + 0.05);
}

std::vector<ElementProps> extract_properties(const UiTree& tree,
                                             const Raster& raster) {
  std::vector<ElementProps> out;
  const double screen_area =
      std::max(1.0, static_cast<double>(raster.width) * raster.height);
  for (const UiElement* e : ui::visible_leaves(tree)) {
    ElementProps p;
    p.element = e;
    p.role = element_role(*e);
    p.area_fraction =
        std::min(1.0, static_cast<double>(e->bounds.area()) / screen_area);

    const Raster c = crop(raster, e->bounds);
    std::map<int, int> counts;
    for (size_t i = 0; i + 2 < c.pixels.size(); i += 3)
      counts[quantize_key(&c.pixels[i])] += 1;
    if (counts.empty()) {
      out.push_back(p);  // degenerate crop: black, contrast 1.0
      continue;
    }
    int best_key = -1, best_n = -1, second_key = -1, second_n = -1;
    for (const auto& [key, n] : counts) {  // keys ascend: ties pick lower key
      if (n > best_n) {
        second_key = best_key;
        second_n = best_n;
        best_key = key;
        best_n = n;
      } else if (n > second_n) {
        second_key = key;
        second_n = n;
      }
    }
    p.dominant_color = key_to_rgb(best_key);
    if (second_key >= 0) {
      p.secondary_color = key_to_rgb(second_key);
      p.text_contrast = contrast_ratio(p.dominant_color, p.secondary_color);
    } else {
      p.secondary_color = p.dominant_color;
      p.text_contrast = 1.0;
    }
    out.push_back(p);
  }
  return out;
}

const char* component_kind_name(ComponentKind k) {
  switch (k) {
    case ComponentKind::kSingle: return "single";
    case ComponentKind::kCheckboxGroup: return "checkbox_group";
    case ComponentKind::kModal: return "modal";
    case ComponentKind::kAdSlot: return "ad_slot";
    case ComponentKind::kListItem: return "list_item";
  }
  return "single";
}

namespace {

Rect members_bbox(const std::vector<const UiElement*>& members) {
  Rect b = members.front()->bounds;
  for (const UiElement* m : members) b = ui::rect_union(b, m->bounds);
  return b;
}

int horizontal_gap(const Rect& a, const Rect& b) {
  if (a.x2 <= b.x1) return b.x1 - a.x2;
  if (b.x2 <= a.x1) return a.x1 - b.x2;
  return 0;
}

std::vector<Component> checkbox_pass(
    const UiTree& tree, const GroupingConfig& cfg,
    std::set<const UiElement*>* claimed) {
  std::vector<Component> out;
  const auto leaves = ui::visible_leaves(tree, cfg.min_leaf_size);
  const int screen_w = tree.root.bounds.width();
  const double max_gap = cfg.checkbox_max_gap * screen_w;

  std::vector<const UiElement*> boxes, texts;
  for (const UiElement* e : leaves) {
    if (claimed && claimed->count(e)) continue;
    const Role r = element_role(*e);
    if (r == Role::kCheckbox || r == Role::kSwitch) boxes.push_back(e);
    else if (r == Role::kText) texts.push_back(e);
  }
  std::set<const UiElement*> used_texts;
  for (const UiElement* box : boxes) {
    const UiElement* best = nullptr;
    int best_gap = 0;
    for (const UiElement* t : texts) {
      if (used_texts.count(t)) continue;
      const int cy = t->bounds.center_y();
      if (cy < box->bounds.y1 || cy > box->bounds.y2) continue;
      const int gap = horizontal_gap(box->bounds, t->bounds);
      if (gap > max_gap) continue;
      if (!best || gap < best_gap) {
        best = t;
        best_gap = gap;
      }
    }
    Component comp;
    comp.kind = ComponentKind::kCheckboxGroup;
    if (best) {
      used_texts.insert(best);
      // members in document order
      bool box_first = false;
      for (const UiElement* e : leaves) {
        if (e == box) {
          box_first = true;
          break;
        }
        if (e == best) break;
      }
      if (box_first) comp.members = {box, best};
      else comp.members = {best, box};
    } else {
      comp.members = {box};
    }
    comp.bbox = members_bbox(comp.members);
    if (claimed)
      for (const UiElement* m : comp.members) claimed->insert(m);
    out.push_back(std::move(comp));
  }
  return out;
}

void collect_containers(const UiElement& e,
                        std::vector<const UiElement*>& out) {
  if (!e.is_leaf()) out.push_back(&e);
  for (const auto& c : e.children) collect_containers(c, out);
}

void leaves_under(const UiElement& e, int min_size,
                  std::vector<const UiElement*>& out) {
  if (e.is_leaf()) {
    if (e.visible && e.bounds.width() >= min_size &&
        e.bounds.height() >= min_size)
      out.push_back(&e);
    return;
  }
  for (const auto& c : e.children) leaves_under(c, min_size, out);
}

}  // namespace

std::vector<Component> group_checkbox_text(const UiTree& tree,
                                           const GroupingConfig& cfg) {
  return checkbox_pass(tree, cfg, nullptr);
}

std::optional<Component> group_modal(const UiTree& tree, const Raster&,
                                     const GroupingConfig& cfg) {
  const Rect screen = tree.root.bounds;
  const double screen_area = static_cast<double>(screen.area());
  if (screen_area <= 0) return std::nullopt;

  std::vector<const UiElement*> containers;
  collect_containers(tree.root, containers);

  const UiElement* best = nullptr;
  for (const UiElement* c : containers) {
    const double frac = static_cast<double>(c->bounds.area()) / screen_area;
    if (frac < cfg.modal_min_area || frac > cfg.modal_max_area) continue;
    const int cx = c->bounds.center_x(), cy = c->bounds.center_y();
    if (cx < screen.x1 + screen.width() / 3 ||
        cx > screen.x1 + 2 * screen.width() / 3)
      continue;
    if (cy < screen.y1 + screen.height() / 3 ||
        cy > screen.y1 + 2 * screen.height() / 3)
      continue;
    std::vector<const UiElement*> members;
    leaves_under(*c, cfg.min_leaf_size, members);
    if (members.empty()) continue;
    if (!best || c->bounds.area() > best->bounds.area()) best = c;
  }
  if (!best) return std::nullopt;

  Component comp;
  comp.kind = ComponentKind::kModal;
  leaves_under(*best, cfg.min_leaf_size, comp.members);
  comp.bbox = best->bounds;
  return comp;
}

std::vector<Component> candidate_components(const UiTree& tree,
                                            const Raster& raster,
                                            const GroupingConfig& cfg) {
  const auto leaves = ui::visible_leaves(tree, cfg.min_leaf_size);
  std::map<const UiElement*, size_t> doc_index;
  for (size_t i = 0; i < leaves.size(); ++i) doc_index[leaves[i]] = i;

  std::vector<Component> out;
  std::set<const UiElement*> claimed;

  if (auto modal = group_modal(tree, raster, cfg)) {
    for (const UiElement* m : modal->members) claimed.insert(m);
    out.push_back(std::move(*modal));
  }
  for (Component& c : checkbox_pass(tree, cfg, &claimed))
    out.push_back(std::move(c));

  for (const UiElement* e : leaves) {
    if (claimed.count(e)) continue;
    const Role r = element_role(*e);
    if (r != Role::kButton && r != Role::kText && r != Role::kImage &&
        r != Role::kSwitch)
      continue;
    Component comp;
    comp.kind = lexicon_match(cfg.lexicons.ad_ids, e->resource_id)
                    ? ComponentKind::kAdSlot
                    : ComponentKind::kSingle;
    comp.members = {e};
    comp.bbox = e->bounds;
    out.push_back(std::move(comp));
  }

  std::stable_sort(out.begin(), out.end(),
                   [&](const Component& a, const Component& b) {
                     size_t ia = leaves.size(), ib = leaves.size();
                     for (const UiElement* m : a.members)
                       ia = std::min(ia, doc_index.count(m) ? doc_index[m] : ia);
                     for (const UiElement* m : b.members)
                       ib = std::min(ib, doc_index.count(m) ? doc_index[m] : ib);
                     return ia < ib;
                   });
  for (size_t i = 0; i < out.size(); ++i) out[i].id = static_cast<int>(i);
  return out;
}

}  // namespace appray::group
