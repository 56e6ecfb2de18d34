#include "appray/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>
#include <sstream>

#include "appray/kernels.hpp"
#include "appray/serde.hpp"

namespace appray::corpus {

namespace fs = std::filesystem;
using group::Rgb;
using ui::UiElement;

namespace {

constexpr int kCanvasW = 540;
constexpr int kCanvasH = 960;

bool id_has(const UiElement& e, const char* tag) {
  return e.resource_id.find(tag) != std::string::npos;
}

struct Style {
  Rgb fill;
  Rgb glyph;
  bool glyphs = false;
  bool border = false;
};

Style style_for(const UiElement& e, const Palette& p) {
  const group::Role role = group::element_role(e);
  Style s;
  switch (role) {
    case group::Role::kButton:
      s.fill = p.button;
      s.glyph = p.button_glyph;
      s.glyphs = true;
      break;
    case group::Role::kInput:
      s.fill = p.surface;
      s.glyph = p.border;
      s.glyphs = false;
      s.border = true;
      break;
    case group::Role::kImage:
      s.fill = p.accent;
      s.border = true;
      s.glyph = p.border;
      break;
    case group::Role::kCheckbox:
    case group::Role::kSwitch:
      s.fill = p.surface;
      s.glyph = p.glyph;
      s.border = true;
      break;
    default:
      s.fill = p.surface;
      s.glyph = p.glyph;
      s.glyphs = !ui::element_label(e).empty();
      break;
  }
  if (id_has(e, "low_contrast")) {
    s.fill = p.surface;
    // one quantization step away from white: ratio ~1.36, under the 1.5 bar
    s.glyph = Rgb{221, 221, 221};
    s.glyphs = true;
  } else if (id_has(e, "high_contrast")) {
    s.fill = Rgb{17, 17, 17};
    s.glyph = Rgb{255, 255, 255};
    s.glyphs = true;
  }
  return s;
}

void draw_border(Raster& img, const ui::Rect& r, const Rgb& c) {
  img.fill_rect({r.x1, r.y1, r.x2, r.y1 + 2}, c[0], c[1], c[2]);
  img.fill_rect({r.x1, r.y2 - 2, r.x2, r.y2}, c[0], c[1], c[2]);
  img.fill_rect({r.x1, r.y1, r.x1 + 2, r.y2}, c[0], c[1], c[2]);
  img.fill_rect({r.x2 - 2, r.y1, r.x2, r.y2}, c[0], c[1], c[2]);
}

// Hash-driven block pattern standing in for rendered text; coverage stays
// under half the crop so the fill remains the dominant color.
void draw_glyphs(Raster& img, const UiElement& e, const Rgb& color) {
  const ui::Rect r = e.bounds;
  const int pad = 6;
  const uint64_t base = fnv1a(e.text.empty() ? e.content_desc : e.text);
  int line = 0;
  for (int y = r.y1 + pad; y + 8 <= r.y2 - pad; y += 16, ++line) {
    const uint64_t line_h = fnv1a(&line, sizeof(line), base);
    const int max_w = r.x2 - pad - (r.x1 + pad);
    const int line_w = max_w * static_cast<int>(55 + line_h % 40) / 100;
    int col = 0;
    for (int x = r.x1 + pad; x + 8 <= r.x1 + pad + line_w; x += 11, ++col) {
      const int key = line * 131 + col;
      if (fnv1a(&key, sizeof(key), base) % 10 < 6)
        img.fill_rect({x, y, x + 8, y + 8}, color[0], color[1], color[2]);
    }
  }
}

void draw_leaf(Raster& img, const UiElement& e, const Palette& p) {
  const Style s = style_for(e, p);
  img.fill_rect(e.bounds, s.fill[0], s.fill[1], s.fill[2]);
  if (s.border) draw_border(img, e.bounds, p.border);
  const group::Role role = group::element_role(e);
  if (role == group::Role::kCheckbox || role == group::Role::kSwitch) {
    draw_border(img, e.bounds, s.glyph);
    if (e.checked) {
      const ui::Rect b = e.bounds;
      const int inset = std::max(4, b.width() / 4);
      img.fill_rect({b.x1 + inset, b.y1 + inset, b.x2 - inset, b.y2 - inset},
                    s.glyph[0], s.glyph[1], s.glyph[2]);
    }
    return;
  }
  if (s.glyphs) draw_glyphs(img, e, s.glyph);
}

void collect_visible_leaves(const UiElement& e,
                            std::vector<const UiElement*>& out) {
  if (e.is_leaf()) {
    if (e.visible) out.push_back(&e);
    return;
  }
  for (const auto& c : e.children) collect_visible_leaves(c, out);
}

}  // namespace

Raster render(const UiTree& tree, const Palette& palette) {
  const ui::Rect rb = tree.root.bounds;
  Raster img(std::max(1, rb.width()), std::max(1, rb.height()),
             palette.background[0], palette.background[1],
             palette.background[2]);
  std::vector<const UiElement*> leaves;
  collect_visible_leaves(tree.root, leaves);
  // containers with an id render as surface panels behind their leaves
  std::vector<const UiElement*> stack{&tree.root};
  std::vector<const UiElement*> panels;
  while (!stack.empty()) {
    const UiElement* e = stack.back();
    stack.pop_back();
    if (!e->is_leaf() && e != &tree.root && id_has(*e, "dlg"))
      panels.push_back(e);
    for (const auto& c : e->children) stack.push_back(&c);
  }
  std::sort(panels.begin(), panels.end(),
            [](const UiElement* a, const UiElement* b) {
              return a->bounds.area() > b->bounds.area();
            });
  for (const UiElement* e : panels) {
    img.fill_rect(e->bounds, palette.surface[0], palette.surface[1],
                  palette.surface[2]);
    draw_border(img, e->bounds, palette.border);
  }
  for (const UiElement* e : leaves) draw_leaf(img, *e, palette);
  return img;
}

// --- screen construction ---

namespace {

UiElement make_el(const std::string& cls, const std::string& id,
                  const std::string& text, const ui::Rect& b,
                  bool clickable = false) {
  UiElement e;
  e.class_name = cls;
  e.resource_id = id;
  e.text = text;
  e.clickable = clickable;
  e.enabled = true;
  e.visible = true;
  e.bounds = b;
  return e;
}

UiElement make_checkbox(const std::string& id, const ui::Rect& b,
                        bool checked) {
  UiElement e = make_el("android.widget.CheckBox", id, "", b, true);
  e.checkable = true;
  e.checked = checked;
  return e;
}

struct ScreenBuilder {
  UiTree tree;
  UiElement* content = nullptr;
  int next_y = 120;

  explicit ScreenBuilder(const std::string& activity,
                         const std::string& title) {
    tree.activity = activity;
    tree.root = make_el("android.widget.FrameLayout", "root", "",
                        {0, 0, kCanvasW, kCanvasH});
    tree.root.children.push_back(make_el(
        "android.widget.TextView", "header", title, {16, 24, 524, 72}));
    // full-bleed so the scroll body never competes with dialog containers in
    // modal detection (> 90% of the screen)
    UiElement body = make_el("android.widget.LinearLayout", "content", "",
                             {0, 0, kCanvasW, kCanvasH});
    body.scrollable = true;
    tree.root.children.push_back(std::move(body));
    content = &tree.root.children.back();
  }

  UiElement& add(UiElement e) {
    content->children.push_back(std::move(e));
    return content->children.back();
  }

  ui::Rect slot(int height, int width = kCanvasW - 80) {
    const ui::Rect r{40, next_y, 40 + width, next_y + height};
    next_y += height + 14;
    return r;
  }
};

const char* kBenignHeadlines[] = {
    "Morning briefing what to know today",
    "City council approves new park plan",
    "Local team wins the weekend match",
    "Weather cooler with light rain later",
    "Five simple recipes for busy nights",
    "Library hours extended through spring",
    "Weekend deals at the farmers market",
    "Top stories this evening roundup",
    "New podcast episode available now",
    "Your weekly reading list is ready",
};

const char* kBenignSettings[] = {
    "Enable dark theme at night",
    "Autoplay videos on wifi only",
    "Compact layout for lists",
    "Show thumbnails in feed",
    "Download over wifi only",
    "Use larger reading font",
};

const char* kBenignButtons[] = {"Save changes", "Search", "Refresh feed",
                                "Apply filters", "Continue"};

// Confusable classes deliberately share vocabulary (offers/updates,
// premium/ads, watch/continue, earn/rewards) so the classifier has to use
// more than one giveaway token.
std::string pool_text(std::initializer_list<const char*> pool, Rng& rng) {
  return *(pool.begin() + rng.uniform_int(pool.size()));
}

// Some instances carry only generic text; the crop and page context have to
// carry the class signal for these.
std::string degradable(std::initializer_list<const char*> pool,
                       std::initializer_list<const char*> generic, Rng& rng,
                       double p_degrade = 0.3) {
  if (rng.bernoulli(p_degrade)) return pool_text(generic, rng);
  return pool_text(pool, rng);
}

int jitter(Rng& rng, int spread) {
  return static_cast<int>(rng.uniform_int(static_cast<uint64_t>(2 * spread + 1))) -
         spread;
}

void add_benign_rows(ScreenBuilder& sb, int kind, Rng& rng) {
  switch (kind % 3) {
    case 0: {  // article rows
      const int n = 2 + static_cast<int>(rng.uniform_int(2));
      for (int i = 0; i < n; ++i) {
        const size_t pick = rng.uniform_int(std::size(kBenignHeadlines));
        sb.add(make_el("android.widget.TextView",
                       "row_text_" + std::to_string(i), kBenignHeadlines[pick],
                       sb.slot(56)));
      }
      break;
    }
    case 1: {  // unchecked settings rows
      const int n = 2 + static_cast<int>(rng.uniform_int(2));
      for (int i = 0; i < n; ++i) {
        const size_t pick = rng.uniform_int(std::size(kBenignSettings));
        const ui::Rect r = sb.slot(44);
        sb.add(make_checkbox("cb_opt_" + std::to_string(i),
                             {r.x1, r.y1, r.x1 + 40, r.y1 + 40}, false));
        sb.add(make_el("android.widget.TextView", "txt_opt_" + std::to_string(i),
                       kBenignSettings[pick],
                       {r.x1 + 56, r.y1 + 2, r.x2, r.y1 + 38}));
      }
      break;
    }
    default: {  // form
      sb.add(make_el("android.widget.TextView", "lbl_name", "Display name",
                     sb.slot(36)));
      sb.add(make_el("android.widget.EditText", "in_name", "", sb.slot(52)));
      const size_t pick = rng.uniform_int(std::size(kBenignButtons));
      sb.add(make_el("android.widget.Button", "btn_save", kBenignButtons[pick],
                     sb.slot(56, 220), true));
      break;
    }
  }
}

std::string slugify(const std::string& label) {
  std::string out;
  for (char c : label) {
    if (std::isalnum(static_cast<unsigned char>(c)))
      out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    else if (!out.empty() && out.back() != '_')
      out += '_';
  }
  while (!out.empty() && out.back() == '_') out.pop_back();
  return out;
}

}  // namespace

std::vector<std::string> injectable_types() {
  std::vector<std::string> out;
  for (const std::string& l : model::Taxonomy::standard().classifier_labels())
    out.push_back(l);
  return out;
}

Injection inject(const std::string& type, const UiTree& screen, Rng& rng) {
  Injection out;
  out.screen = screen;
  out.label = type;
  UiTree& t = out.screen;

  UiElement* content = nullptr;
  for (auto& c : t.root.children)
    if (c.resource_id == "content") content = &c;
  if (!content) content = &t.root;

  const int y = 380 + static_cast<int>(rng.uniform_int(8)) * 14;
  const int jw = jitter(rng, 30);  // per-instance width jitter
  auto add_leaf = [&](UiElement e) -> UiElement& {
    content->children.push_back(std::move(e));
    return content->children.back();
  };

  if (type == "Nagging") {
    UiElement dlg = make_el("android.widget.LinearLayout", "dlg_nag", "",
                            {70, 290, 470, 670});
    dlg.children.push_back(make_el(
        "android.widget.TextView", "dlg_title",
        pool_text({"Special offer just for you", "Limited offer for members",
                   "One time deal today"},
                  rng),
        {86, 310, 454, 360}));
    dlg.children.push_back(make_el(
        "android.widget.TextView", "dlg_body",
        degradable({"Go premium to remove ads and unlock everything",
                    "Upgrade to premium and continue without ads",
                    "Get the premium plan for an ad free experience"},
                   {"A special message for you", "Something new is waiting"},
                   rng),
        {86, 380, 454, 470}));
    dlg.children.push_back(make_el("android.widget.Button",
                                   "btn_upgrade_high_contrast", "Upgrade now",
                                   {86, 500, 454, 580}, true));
    dlg.children.push_back(make_el("android.widget.Button", "btn_close", "X",
                                   {418, 296, 446, 324}, true));
    t.root.children.push_back(std::move(dlg));
    out.bbox = {70, 290, 470, 670};
    return out;
  }
  if (type == "False Hierarchy") {
    UiElement dlg = make_el("android.widget.LinearLayout", "dlg_confirm", "",
                            {60, 300, 480, 660});
    dlg.children.push_back(make_el(
        "android.widget.TextView", "dlg_title",
        pool_text({"Allow notifications from this app",
                   "Turn on notifications to continue",
                   "Enable alerts and notifications"},
                  rng),
        {80, 320, 460, 370}));
    dlg.children.push_back(make_el("android.widget.Button",
                                   "btn_accept_high_contrast",
                                   "Yes allow all notifications",
                                   {80, 420, 460, 520}, true));
    dlg.children.push_back(make_el("android.widget.TextView",
                                   "txt_decline_low_contrast", "no thanks",
                                   {200, 580, 340, 615}, true));
    t.root.children.push_back(std::move(dlg));
    out.bbox = {60, 300, 480, 660};
    return out;
  }
  if (type == "Forced Continuity") {
    const ui::Rect r{40, y, 500 + jw, y + 66 + jitter(rng, 6)};
    add_leaf(make_el(
        "android.widget.TextView", "txt_renewal",
        pool_text({"Free for 7 days then 9 99 per month renews automatically",
                   "Trial converts to a monthly plan that renews automatically",
                   "Your plan renews each month automatically after the trial"},
                  rng),
        r));
    out.bbox = r;
    return out;
  }
  if (type == "Roach Motel") {
    const ui::Rect r{40, y, 460 + jw, y + 76 + jitter(rng, 8)};
    add_leaf(make_el("android.widget.Button", "btn_trial_high_contrast",
                     pool_text({"Start free trial subscribe in one tap",
                                "Subscribe now one tap sign up",
                                "Join premium in one tap"},
                               rng),
                     r, true));
    out.bbox = r;
    return out;
  }
  if (type == "Intermediate Currency") {
    const ui::Rect r{40, y, 320 + jw, y + 60 + jitter(rng, 8)};
    add_leaf(make_el("android.widget.Button", "btn_coins",
                     pool_text({"Buy 500 coins for 4 99",
                                "Get the 1200 gems bundle for 9 99",
                                "Buy the token pack for 2 99"},
                               rng),
                     r, true));
    out.bbox = r;
    return out;
  }
  if (type == "Social Pyramid") {
    const ui::Rect r{40, y, 430 + jw, y + 60 + jitter(rng, 8)};
    add_leaf(make_el("android.widget.Button", "btn_invite",
                     pool_text({"Invite 3 friends to unlock free rewards",
                                "Share with friends to earn bonus rewards",
                                "Refer a friend and you both earn rewards"},
                               rng),
                     r, true));
    out.bbox = r;
    return out;
  }
  if (type == "Privacy Zuckering") {
    const ui::Rect box{40, y, 80, y + 40};
    const ui::Rect txt{96, y + 2, 500, y + 38};
    add_leaf(make_checkbox("cb_share_data", box, true));
    add_leaf(make_el(
        "android.widget.TextView", "txt_share_data",
        degradable({"Share my contacts and location to get personal offers",
                    "Allow partners to use my data for tailored offers",
                    "Share my activity data to improve recommendations"},
                   {"Keep me posted about news and deals",
                    "Stay in the loop with updates"},
                   rng),
        txt));
    out.bbox = ui::rect_union(box, txt);
    return out;
  }
  if (type == "Gamification") {
    const ui::Rect r{40, y, 490 + jw, y + 54 + jitter(rng, 6)};
    add_leaf(make_el(
        "android.widget.TextView", "txt_streak",
        pool_text({"Daily streak day 4 of 7 watch videos to earn points",
                   "Complete 3 tasks today to keep your streak alive",
                   "Earn points every day to level up your streak"},
                  rng),
        r));
    out.bbox = r;
    return out;
  }
  if (type == "ForcedAction-General") {
    const ui::Rect r{40, y, 450 + jw, y + 66 + jitter(rng, 8)};
    add_leaf(make_el("android.widget.Button", "btn_watch_ad",
                     pool_text({"Watch an ad to continue reading",
                                "Watch a short video to unlock this story",
                                "View an ad to continue"},
                               rng),
                     r, true));
    out.bbox = r;
    return out;
  }
  if (type == "Preselection") {
    const ui::Rect box{40, y, 80, y + 40};
    const ui::Rect txt{96, y + 2, 480, y + 38};
    add_leaf(make_checkbox("cb_newsletter", box, true));
    add_leaf(make_el(
        "android.widget.TextView", "txt_newsletter",
        degradable({"Email me weekly offers and product updates",
                    "Send me the newsletter with offers and updates",
                    "Keep me subscribed to deal alerts and updates"},
                   {"Keep me posted about news and deals",
                    "Stay in the loop with updates"},
                   rng),
        txt));
    out.bbox = ui::rect_union(box, txt);
    return out;
  }
  if (type == "Hidden Information") {
    const ui::Rect r{40, y, 500 + jw, y + 48 + jitter(rng, 5)};
    add_leaf(make_el(
        "android.widget.TextView", "txt_terms_low_contrast",
        pool_text({"By continuing you agree to automatic charges",
                   "Additional service fees apply at checkout",
                   "Usage data may be shared with third parties"},
                  rng),
        r));
    out.bbox = r;
    return out;
  }
  if (type == "Toying with Emotion") {
    const ui::Rect r{40, y, 500 + jw, y + 52 + jitter(rng, 6)};
    add_leaf(make_el(
        "android.widget.TextView", "txt_urgency",
        pool_text({"Last chance dont miss out this deal ends in 02 13",
                   "Hurry only 2 left at this price",
                   "Offer ends tonight dont lose your spot"},
                  rng),
        r));
    out.bbox = r;
    return out;
  }
  if (type == "Disguised Ads") {
    const char* rows[3] = {nullptr, nullptr, nullptr};
    rows[0] = kBenignHeadlines[rng.uniform_int(std::size(kBenignHeadlines))];
    rows[2] = kBenignHeadlines[rng.uniform_int(std::size(kBenignHeadlines))];
    ui::Rect ad_rect;
    int ry = y;
    for (int i = 0; i < 3; ++i) {
      const ui::Rect r{40, ry, 500, ry + 56};
      if (i == 1) {
        add_leaf(make_el(
            "android.widget.TextView", "native_ad_row",
            pool_text({"Top deals nearby download our partner app",
                       "Best offers this week from our sponsor",
                       "Hot picks for you install the partner app"},
                      rng),
            r, true));
        ad_rect = r;
      } else {
        add_leaf(make_el("android.widget.TextView",
                         "feed_row_" + std::to_string(i), rows[i], r, true));
      }
      ry += 64;
    }
    out.bbox = ad_rect;
    return out;
  }
  if (type == "Tricked Questions") {
    const ui::Rect box{40, y, 80, y + 40};
    const ui::Rect txt{96, y + 2, 500, y + 38};
    add_leaf(make_checkbox("cb_trick", box, false));
    add_leaf(make_el(
        "android.widget.TextView", "txt_trick",
        pool_text({"Do not uncheck if you would not like to stop offers",
                   "Uncheck this box to not stop receiving updates",
                   "Do not untick unless you do not want deal alerts"},
                  rng),
        txt));
    out.bbox = ui::rect_union(box, txt);
    return out;
  }
  if (type == "Bait And Switch") {
    const ui::Rect r{40, y, 330 + jw, y + 66 + jitter(rng, 8)};
    add_leaf(make_el("android.widget.Button", "btn_play",
                     pool_text({"Play video now", "Watch the full episode",
                                "Open the photo gallery"},
                               rng),
                     r, true));
    out.bbox = r;
    return out;
  }
  if (type == "Interface Interference - General") {
    const ui::Rect r{0, y, kCanvasW, y + 84};
    add_leaf(make_el("android.widget.ImageView", "promo_banner", "", r, true));
    // close target too small to ever be a candidate, still rendered
    add_leaf(make_el("android.widget.Button", "btn_banner_close", "x",
                     {kCanvasW - 10, y + 2, kCanvasW - 6, y + 6}, true));
    out.bbox = r;
    return out;
  }
  throw AppError(ErrorKind::UnsupportedType, "no template for '" + type + "'");
}

// --- corpus generation ---

AppSpec AppSpec::defaults() {
  AppSpec s;
  for (const std::string& l : injectable_types()) s.quotas[l] = 16;
  s.quotas["Tricked Questions"] = 5;
  s.quotas["Roach Motel"] = 5;
  s.quotas["Gamification"] = 6;
  s.quotas["Social Pyramid"] = 6;
  return s;
}

AppSpec AppSpec::from_json_text(const std::string& text) {
  Json j = Json::parse(text, nullptr, false);
  if (j.is_discarded())
    throw AppError(ErrorKind::MalformedInput, "corpus spec is not valid JSON");
  AppSpec s = defaults();
  s.seed = j.value("seed", s.seed);
  s.n_apps = j.value("n_apps", s.n_apps);
  s.n_folds = j.value("n_folds", s.n_folds);
  s.benign_fraction = j.value("benign_fraction", s.benign_fraction);
  s.benign_samples_per_screen =
      j.value("benign_samples_per_screen", s.benign_samples_per_screen);
  s.dynamic_fixtures = j.value("dynamic_fixtures", s.dynamic_fixtures);
  if (j.contains("quota_per_type")) {
    const int q = j["quota_per_type"].get<int>();
    for (auto& [k, v] : s.quotas) {
      (void)k;
      v = q;
    }
  }
  if (j.contains("quotas"))
    for (const auto& [k, v] : j["quotas"].items()) s.quotas[k] = v.get<int>();
  return s;
}

namespace {

void add_nav_row(ScreenBuilder& home, const std::string& screen,
                 const std::string& title, int idx) {
  const int ny = 120 + idx * 58;
  home.tree.root.children[1].children.push_back(
      make_el("android.widget.TextView", "nav_" + screen, title,
              {40, ny, 500, ny + 48}, true));
}

}  // namespace

GeneratedCorpus generate_corpus(const AppSpec& spec) {
  int total_quota = 0;
  Rng probe_rng(1);
  for (const auto& [type, q] : spec.quotas) {
    if (q < 0)
      throw AppError(ErrorKind::QuotaUnsatisfiable,
                     "negative quota for '" + type + "'");
    total_quota += q;
    if (q > 0) {
      // template existence probe; throws UnsupportedType on unknown types
      UiTree probe;
      probe.root = make_el("android.widget.FrameLayout", "root", "",
                           {0, 0, kCanvasW, kCanvasH});
      probe.activity = "probe";
      inject(type, probe, probe_rng);
    }
  }
  if (spec.benign_fraction >= 1.0 && total_quota > 0)
    throw AppError(ErrorKind::QuotaUnsatisfiable,
                   "benign_fraction 1.0 leaves no room for injections");
  if (spec.n_apps <= 0)
    throw AppError(ErrorKind::QuotaUnsatisfiable, "need at least one app");

  GeneratedCorpus gc;
  gc.spec = spec;
  for (int i = 0; i < spec.n_apps; ++i) {
    GeneratedApp app;
    char buf[16];
    std::snprintf(buf, sizeof(buf), "app%03d", i);
    app.id = buf;
    app.fold = i % std::max(1, spec.n_folds);
    gc.apps.push_back(std::move(app));
  }

  Rng rng(spec.seed);
  std::vector<Rng> app_rngs;
  for (int i = 0; i < spec.n_apps; ++i) app_rngs.push_back(rng.fork());

  // distribute injections round-robin with a per-type offset so every app and
  // every fold sees a spread of classes
  std::vector<std::string> types;
  for (const auto& [type, q] : spec.quotas)
    if (q > 0) types.push_back(type);
  std::sort(types.begin(), types.end());
  for (size_t ti = 0; ti < types.size(); ++ti) {
    const std::string& type = types[ti];
    const int quota = spec.quotas.at(type);
    for (int j = 0; j < quota; ++j) {
      const int ai =
          static_cast<int>((j + ti * 3) % static_cast<size_t>(spec.n_apps));
      GeneratedApp& app = gc.apps[static_cast<size_t>(ai)];
      Rng& arng = app_rngs[static_cast<size_t>(ai)];
      const std::string name =
          "s" + std::to_string(app.screens.size()) + "_" + slugify(type);
      ScreenBuilder sb(name, "Screen");
      add_benign_rows(sb, static_cast<int>(arng.uniform_int(3)), arng);
      Injection inj = inject(type, sb.tree, arng);
      inj.screen.activity = name;
      ScreenSpec ss;
      ss.name = name;
      ss.tree = std::move(inj.screen);
      ss.gt.push_back({inj.label, inj.bbox});
      gc.apps[static_cast<size_t>(ai)].screens.push_back(std::move(ss));
    }
  }

  // benign screens
  for (size_t ai = 0; ai < gc.apps.size(); ++ai) {
    GeneratedApp& app = gc.apps[ai];
    Rng& arng = app_rngs[ai];
    const double f = std::clamp(spec.benign_fraction, 0.0, 1.0);
    int n_benign =
        f >= 1.0 ? 4
                 : static_cast<int>(std::ceil(
                       f / (1.0 - f) *
                       std::max<size_t>(1, app.screens.size())));
    n_benign = std::max(1, std::min(6, n_benign));
    for (int b = 0; b < n_benign; ++b) {
      const std::string name =
          "s" + std::to_string(app.screens.size()) + "_benign";
      ScreenBuilder sb(name, "Screen");
      add_benign_rows(sb, static_cast<int>(arng.uniform_int(3)), arng);
      add_benign_rows(sb, static_cast<int>(arng.uniform_int(3)), arng);
      ScreenSpec ss;
      ss.name = name;
      ss.tree = sb.tree;
      ss.tree.activity = name;
      app.screens.push_back(std::move(ss));
    }
  }

  // dynamic fixtures: one flavor per app, cycling
  if (spec.dynamic_fixtures) {
    for (size_t ai = 0; ai < gc.apps.size(); ++ai) {
      GeneratedApp& app = gc.apps[ai];
      switch (ai % 4) {
        case 0: {  // bait-and-switch: play button on home -> interstitial
          const std::string dest = "dyn_ad_inter";
          ScreenBuilder sb(dest, "Advertisement");
          sb.add(make_el("android.widget.ImageView", "fullscreen_ad_view", "",
                         {20, 140, 520, 820}, true));
          sb.add(make_el("android.widget.Button", "btn_skip_ad", "Skip in 5",
                         {420, 120, 520, 160}, true));
          ScreenSpec ss;
          ss.name = dest;
          ss.tree = sb.tree;
          ss.sample_source = false;
          app.screens.push_back(std::move(ss));
          app.transitions.emplace_back("home", "tap", "btn_dyn_play", dest);
          app.dynamic_gt.push_back({"Bait And Switch", {"home", dest}});
          break;
        }
        case 1: {  // sneak-into-basket: badge grows across checkout
          ScreenBuilder sa("dyn_shop", "Shop");
          sa.add(make_el("android.widget.TextView", "cart_badge", "1",
                         {480, 110, 528, 150}));
          sa.add(make_el("android.widget.TextView", "item_row",
                         "Canvas tote bag 12 99", sa.slot(56)));
          sa.add(make_el("android.widget.Button", "btn_checkout",
                         "Proceed to checkout", sa.slot(60, 280), true));
          ScreenBuilder sb2("dyn_checkout", "Checkout");
          sb2.add(make_el("android.widget.TextView", "cart_badge", "2",
                          {480, 110, 528, 150}));
          sb2.add(make_el("android.widget.TextView", "order_summary",
                          "Order summary two items", sb2.slot(56)));
          ScreenSpec s1{"dyn_shop", sa.tree, {}, true};
          ScreenSpec s2{"dyn_checkout", sb2.tree, {}, true};
          s1.tree.activity = "dyn_shop";
          s2.tree.activity = "dyn_checkout";
          app.screens.push_back(std::move(s1));
          app.screens.push_back(std::move(s2));
          app.transitions.emplace_back("dyn_shop", "tap", "btn_checkout",
                                       "dyn_checkout");
          app.dynamic_gt.push_back(
              {"Sneak into Basket", {"dyn_shop", "dyn_checkout"}});
          break;
        }
        case 2: {  // roach motel: one-tap trial, no opt-out anywhere after
          ScreenBuilder sb3("dyn_subscribed", "Premium");
          sb3.add(make_el("android.widget.TextView", "txt_thanks",
                          "Welcome to premium enjoy your benefits",
                          sb3.slot(60)));
          ScreenSpec ss{"dyn_subscribed", sb3.tree, {}, true};
          ss.tree.activity = "dyn_subscribed";
          app.screens.push_back(std::move(ss));
          app.transitions.emplace_back("home", "tap", "btn_dyn_trial",
                                       "dyn_subscribed");
          app.dynamic_gt.push_back({"Roach Motel", {"home", "dyn_subscribed"}});
          break;
        }
        default: {  // preselection toggled by the user, then revisited
          ScreenBuilder su("dyn_prefs_off", "Preferences");
          su.add(make_checkbox("cb_mkt", {40, 420, 80, 460}, false));
          su.add(make_el("android.widget.TextView", "txt_mkt",
                         "Email me special offers",
                         {96, 422, 460, 458}));
          ScreenBuilder sc("dyn_prefs_on", "Preferences");
          sc.add(make_checkbox("cb_mkt", {40, 420, 80, 460}, true));
          sc.add(make_el("android.widget.TextView", "txt_mkt",
                         "Email me special offers",
                         {96, 422, 460, 458}));
          ScreenSpec off{"dyn_prefs_off", su.tree, {}, true};
          ScreenSpec on{"dyn_prefs_on", sc.tree, {}, false};
          off.tree.activity = "dyn_prefs_off";
          on.tree.activity = "dyn_prefs_on";
          app.screens.push_back(std::move(off));
          app.screens.push_back(std::move(on));
          app.transitions.emplace_back("dyn_prefs_off", "tap", "cb_mkt",
                                       "dyn_prefs_on");
          break;
        }
      }
    }
  }

  // home screens with navigation to everything reachable
  for (GeneratedApp& app : gc.apps) {
    ScreenBuilder home("home", "Home");
    int idx = 0;
    for (const ScreenSpec& s : app.screens) {
      if (s.name.rfind("dyn_ad_inter", 0) == 0 ||
          s.name.rfind("dyn_checkout", 0) == 0 ||
          s.name.rfind("dyn_prefs_on", 0) == 0 ||
          s.name.rfind("dyn_subscribed", 0) == 0)
        continue;  // reached through their own transitions
      if (idx >= 12) break;
      add_nav_row(home, s.name, "Open " + s.name, idx);
      ++idx;
    }
    bool wants_play = false, wants_trial = false;
    for (const auto& [from, kind, target, to] : app.transitions) {
      (void)kind;
      (void)to;
      if (from == "home" && target == "btn_dyn_play") wants_play = true;
      if (from == "home" && target == "btn_dyn_trial") wants_trial = true;
    }
    if (wants_play)
      home.tree.root.children[1].children.push_back(
          make_el("android.widget.Button", "btn_dyn_play", "Play video now",
                  {40, 840, 280, 900}, true));
    if (wants_trial)
      home.tree.root.children[1].children.push_back(
          make_el("android.widget.Button", "btn_dyn_trial",
                  "Start free trial now", {40, 840, 320, 900}, true));
    ScreenSpec hs{"home", home.tree, {}, true};
    hs.tree.activity = "home";
    // nav transitions
    for (const ScreenSpec& s : app.screens) {
      bool navigable = true;
      for (const char* hidden :
           {"dyn_ad_inter", "dyn_checkout", "dyn_prefs_on", "dyn_subscribed"})
        if (s.name == hidden) navigable = false;
      if (navigable)
        app.transitions.emplace_back("home", "tap", "nav_" + s.name, s.name);
    }
    app.screens.insert(app.screens.begin(), std::move(hs));
  }
  return gc;
}

void write_corpus(const GeneratedCorpus& gc, const std::string& dir) {
  std::error_code ec;
  fs::create_directories(fs::path(dir) / "apps", ec);
  if (ec) throw AppError(ErrorKind::IoFailure, "cannot create " + dir);

  std::ostringstream labels;
  Json folds = Json::object();
  for (const GeneratedApp& app : gc.apps) {
    const fs::path app_dir = fs::path(dir) / "apps" / app.id;
    fs::create_directories(app_dir, ec);
    Json aj;
    aj["initial"] = "home";
    Json states = Json::object();
    for (const ScreenSpec& s : app.screens) {
      const std::string xml_rel = s.name + ".xml";
      write_text_file((app_dir / xml_rel).string(), ui::serialize_tree(s.tree));
      states[s.name] = {{"xml", xml_rel},
                        {"activity", s.name},
                        {"samples", s.sample_source}};
      for (const GtLabel& gt : s.gt) {
        Json line;
        line["app"] = app.id;
        line["screen"] = s.name;
        line["label"] = gt.label;
        line["bbox"] = rect_to_json(gt.bbox);
        labels << line.dump() << "\n";
      }
    }
    aj["states"] = states;
    Json transitions = Json::array();
    for (const auto& [from, kind, target, to] : app.transitions) {
      Json jt;
      jt["from"] = from;
      jt["to"] = to;
      jt["on"] = kind == "scroll" ? Json{{"kind", kind}, {"direction", target}}
                                  : Json{{"kind", kind}, {"target", target}};
      transitions.push_back(jt);
    }
    aj["transitions"] = transitions;
    write_text_file((app_dir / "app.json").string(), aj.dump(2) + "\n");

    for (const DynamicGt& d : app.dynamic_gt) {
      Json line;
      line["app"] = app.id;
      line["label"] = d.label;
      line["screens"] = d.screens;
      line["dynamic"] = true;
      labels << line.dump() << "\n";
    }
    folds[app.id] = app.fold;
  }
  write_text_file((fs::path(dir) / "labels.jsonl").string(), labels.str());

  Json meta;
  meta["format_version"] = "1";
  meta["seed"] = gc.spec.seed;
  meta["n_apps"] = gc.spec.n_apps;
  meta["n_folds"] = gc.spec.n_folds;
  meta["folds"] = folds;
  write_text_file((fs::path(dir) / "corpus_meta.json").string(),
                  meta.dump(2) + "\n");
}

namespace {

void screen_to_samples(const std::string& app_id, const ScreenSpec& s,
                       int benign_cap, double iou_min,
                       const model::Taxonomy& tax,
                       std::vector<model::Sample>& out) {
  if (!s.sample_source) return;
  const Raster shot = render(s.tree, Palette::standard());
  const auto comps = group::candidate_components(s.tree, shot);
  std::vector<model::Sample> positives;
  std::vector<model::Sample> benign;
  for (const group::Component& c : comps) {
    model::Sample sample = model::featurize(c, shot);
    sample.app_id = app_id;
    sample.labels.assign(
        static_cast<size_t>(tax.classifier_size()), 0.0f);
    bool positive = false;
    for (const GtLabel& gt : s.gt) {
      if (ui::rect_iou(c.bbox, gt.bbox) < iou_min) continue;
      if (auto idx = tax.classifier_index(gt.label)) {
        sample.labels[static_cast<size_t>(*idx)] = 1.0f;
        positive = true;
      }
    }
    (positive ? positives : benign).push_back(std::move(sample));
  }
  for (model::Sample& p : positives) out.push_back(std::move(p));
  // spread the kept benign candidates across the screen so buttons and rows
  // near the bottom are represented, not just headers
  const size_t kept = std::min<size_t>(benign.size(),
                                       static_cast<size_t>(benign_cap));
  if (kept == 0) return;
  if (kept == benign.size()) {
    for (model::Sample& b : benign) out.push_back(std::move(b));
    return;
  }
  for (size_t k = 0; k < kept; ++k) {
    const size_t idx = k * (benign.size() - 1) / std::max<size_t>(1, kept - 1);
    out.push_back(std::move(benign[idx]));
  }
}

}  // namespace

model::Corpus build_training_corpus(const GeneratedCorpus& gc, double iou_min) {
  const model::Taxonomy& tax = model::Taxonomy::standard();
  model::Corpus corpus;
  corpus.n_folds = gc.spec.n_folds;
  std::vector<std::vector<model::Sample>> per_app(gc.apps.size());
  kernels::parallel_for(static_cast<int64_t>(gc.apps.size()), [&](int64_t ai) {
    const GeneratedApp& app = gc.apps[static_cast<size_t>(ai)];
    // screen-name order keeps the sample sequence identical between the
    // in-memory path and a corpus reloaded from disk
    std::vector<const ScreenSpec*> ordered;
    for (const ScreenSpec& s : app.screens) ordered.push_back(&s);
    std::sort(ordered.begin(), ordered.end(),
              [](const ScreenSpec* a, const ScreenSpec* b) {
                return a->name < b->name;
              });
    for (const ScreenSpec* s : ordered)
      screen_to_samples(app.id, *s, gc.spec.benign_samples_per_screen, iou_min,
                        tax, per_app[static_cast<size_t>(ai)]);
  });
  for (size_t ai = 0; ai < gc.apps.size(); ++ai) {
    corpus.app_fold[gc.apps[ai].id] = gc.apps[ai].fold;
    for (model::Sample& s : per_app[ai]) corpus.samples.push_back(std::move(s));
  }
  return corpus;
}

model::Corpus load_training_corpus(const std::string& dir, double iou_min) {
  const Json meta = read_json_file((fs::path(dir) / "corpus_meta.json").string());
  GeneratedCorpus gc;
  gc.spec.n_folds = meta.value("n_folds", 5);

  std::map<std::string, std::map<std::string, std::vector<GtLabel>>> gt;
  {
    const std::string raw =
        read_text_file((fs::path(dir) / "labels.jsonl").string());
    std::istringstream lines(raw);
    std::string line;
    while (std::getline(lines, line)) {
      if (line.empty()) continue;
      Json j = Json::parse(line, nullptr, false);
      if (j.is_discarded())
        throw AppError(ErrorKind::MalformedInput, "bad labels.jsonl line");
      if (j.value("dynamic", false)) continue;
      gt[j.at("app")][j.at("screen")].push_back(
          {j.at("label").get<std::string>(), rect_from_json(j.at("bbox"))});
    }
  }
  for (const auto& [app_id, fold] : meta.at("folds").items()) {
    GeneratedApp app;
    app.id = app_id;
    app.fold = fold.get<int>();
    const fs::path app_dir = fs::path(dir) / "apps" / app_id;
    const Json aj = read_json_file((app_dir / "app.json").string());
    for (const auto& [name, js] : aj.at("states").items()) {
      ScreenSpec ss;
      ss.name = name;
      ss.tree = ui::parse_hierarchy(
          read_text_file((app_dir / js.at("xml").get<std::string>()).string()));
      ss.sample_source = js.value("samples", true);
      auto ait = gt.find(app_id);
      if (ait != gt.end()) {
        auto sit = ait->second.find(name);
        if (sit != ait->second.end()) ss.gt = sit->second;
      }
      app.screens.push_back(std::move(ss));
    }
    gc.apps.push_back(std::move(app));
  }
  return build_training_corpus(gc, iou_min);
}

std::vector<trace::Trace> generate_benign_traces(uint64_t seed, int n_apps,
                                                 int sequences_per_app) {
  Rng rng(seed ^ 0xbe419ULL);
  std::vector<trace::Trace> traces;
  for (int a = 0; a < n_apps; ++a) {
    Rng arng = rng.fork();
    // a small pool of benign screens per app
    std::vector<UiTree> pool;
    for (int k = 0; k < 4; ++k) {
      const std::string name =
          "b" + std::to_string(a) + "_" + std::to_string(k);
      ScreenBuilder sb(name, "Screen");
      add_benign_rows(sb, k, arng);
      add_benign_rows(sb, static_cast<int>(arng.uniform_int(3)), arng);
      sb.tree.activity = name;
      pool.push_back(sb.tree);
    }
    for (int q = 0; q < sequences_per_app; ++q) {
      trace::Trace t;
      t.source = ui::Source::kScripted;
      t.task_id = "benign_seq";
      int prev = -1;
      for (int p = 0; p < 3; ++p) {
        int pick = static_cast<int>(arng.uniform_int(pool.size()));
        if (pick == prev) pick = (pick + 1) % static_cast<int>(pool.size());
        prev = pick;
        trace::TraceState st;
        st.tree = pool[static_cast<size_t>(pick)];
        st.activity = st.tree.activity;
        st.screenshot = render(st.tree, Palette::standard());
        t.states.push_back(std::move(st));
        if (p > 0) {
          // a neutral tap links consecutive screens
          explore::ActionTarget tgt;
          tgt.leaf_index = 0;
          tgt.resource_id = "row_text_0";
          tgt.label = "Morning briefing what to know today";
          tgt.bounds = {40, 120, 500, 176};
          t.steps.push_back({p - 1, explore::Action::tap(tgt), p});
        }
      }
      traces.push_back(std::move(t));
    }
  }
  return traces;
}

}  // namespace appray::corpus
