// Authors the bundled fixture app, its mock LLM responses and scripted-policy
// scripts, plus the editable data files (tasks, taxonomy, lexicons, synonyms).
// Run from the repo root: build/tools/make_fixture data

#include <cstdio>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "appray/explore.hpp"
#include "appray/lexicons.hpp"
#include "appray/model.hpp"
#include "appray/serde.hpp"
#include "appray/taxonomy.hpp"
#include "appray/ui.hpp"

namespace fs = std::filesystem;
using namespace appray;
using ui::Rect;
using ui::UiElement;
using ui::UiTree;

namespace {

UiElement el(const std::string& cls, const std::string& id,
             const std::string& text, const Rect& b, bool clickable = false) {
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

UiElement checkbox(const std::string& id, const Rect& b, bool checked) {
  UiElement e = el("android.widget.CheckBox", id, "", b, true);
  e.checkable = true;
  e.checked = checked;
  return e;
}

struct App {
  std::map<std::string, UiTree> states;
  Json transitions = Json::array();
  Json completion = Json::object();

  UiTree& add_state(const std::string& name, const std::string& activity) {
    UiTree t;
    t.activity = activity;
    t.root = el("android.widget.FrameLayout", "root", "", {0, 0, 540, 960});
    states[name] = std::move(t);
    return states[name];
  }

  void tap(const std::string& from, const std::string& target,
           const std::string& to) {
    transitions.push_back(
        {{"from", from}, {"on", {{"kind", "tap"}, {"target", target}}}, {"to", to}});
  }
};

int leaf_index(const UiTree& tree, const std::string& resource_id) {
  const auto leaves = ui::visible_leaves(tree);
  for (size_t i = 0; i < leaves.size(); ++i)
    if (leaves[i]->resource_id == resource_id) return static_cast<int>(i);
  std::fprintf(stderr, "no leaf '%s'\n", resource_id.c_str());
  std::exit(1);
}

}  // namespace

int main(int argc, char** argv) {
  const std::string out_root = argc > 1 ? argv[1] : "data";
  const fs::path app_dir = fs::path(out_root) / "fixture_app";
  fs::create_directories(app_dir);

  App app;

  {
    UiTree& t = app.add_state("home", "MainActivity");
    auto& r = t.root.children;
    r.push_back(el("android.widget.TextView", "header", "My App", {16, 24, 524, 72}));
    r.push_back(el("android.widget.Button", "btn_signup", "Sign up", {40, 120, 500, 176}, true));
    r.push_back(el("android.widget.Button", "btn_login", "Log in", {40, 190, 500, 246}, true));
    r.push_back(el("android.widget.TextView", "btn_settings", "Settings", {40, 260, 500, 316}, true));
    r.push_back(el("android.widget.TextView", "btn_inbox", "Inbox", {40, 330, 500, 386}, true));
    r.push_back(el("android.widget.TextView", "btn_shop", "Shop", {40, 400, 500, 456}, true));
    r.push_back(el("android.widget.TextView", "btn_premium", "Go Premium", {40, 470, 500, 526}, true));
    r.push_back(el("android.widget.TextView", "btn_profile", "Profile", {40, 540, 500, 596}, true));
    r.push_back(el("android.widget.Button", "tile_play", "Play video now", {40, 620, 300, 690}, true));
    r.push_back(el("android.widget.ImageView", "home_banner_ad", "", {0, 860, 540, 950}, true));
  }
  {
    UiTree& t = app.add_state("register", "RegisterActivity");
    auto& r = t.root.children;
    r.push_back(el("android.widget.TextView", "header", "Create account", {16, 24, 524, 72}));
    r.push_back(el("android.widget.EditText", "in_user", "", {40, 140, 500, 196}));
    r.push_back(el("android.widget.EditText", "in_email", "", {40, 210, 500, 266}));
    r.push_back(checkbox("cb_news", {40, 290, 80, 330}, true));
    r.push_back(el("android.widget.TextView", "txt_news", "Email me weekly deals and offers", {96, 292, 500, 328}));
    r.push_back(el("android.widget.Button", "btn_create", "Create account", {40, 360, 500, 430}, true));
  }
  {
    UiTree& t = app.add_state("registered", "WelcomeActivity");
    auto& r = t.root.children;
    r.push_back(el("android.widget.TextView", "txt_welcome", "Welcome aboard your account is ready", {40, 200, 500, 280}));
    r.push_back(el("android.widget.Button", "btn_continue", "Continue", {40, 320, 500, 390}, true));
  }
  {
    UiTree& t = app.add_state("login", "LoginActivity");
    auto& r = t.root.children;
    r.push_back(el("android.widget.TextView", "header", "Sign in", {16, 24, 524, 72}));
    r.push_back(el("android.widget.EditText", "in_user2", "", {40, 140, 500, 196}));
    r.push_back(el("android.widget.EditText", "in_pass", "", {40, 210, 500, 266}));
    r.push_back(el("android.widget.Button", "btn_dologin", "Log in", {40, 300, 500, 370}, true));
  }
  {
    UiTree& t = app.add_state("settings", "SettingsActivity");
    auto& r = t.root.children;
    r.push_back(el("android.widget.TextView", "header", "Settings", {16, 24, 524, 72}));
    r.push_back(el("android.widget.TextView", "row_account", "Account", {40, 120, 500, 176}, true));
    r.push_back(el("android.widget.TextView", "row_display", "Display", {40, 190, 500, 246}, true));
    r.push_back(el("android.widget.TextView", "row_privacy", "Privacy", {40, 260, 500, 316}, true));
    r.push_back(el("android.widget.TextView", "row_about", "About", {40, 330, 500, 386}, true));
  }
  {
    UiTree& t = app.add_state("privacy_settings", "PrivacyActivity");
    auto& r = t.root.children;
    r.push_back(el("android.widget.TextView", "header", "Privacy", {16, 24, 524, 72}));
    r.push_back(checkbox("cb_share", {40, 120, 80, 160}, true));
    r.push_back(el("android.widget.TextView", "txt_share", "Share usage data to improve the app", {96, 122, 500, 158}));
    r.push_back(checkbox("cb_personalized", {40, 180, 80, 220}, true));
    r.push_back(el("android.widget.TextView", "txt_personalized", "Personalized recommendations", {96, 182, 500, 218}));
  }
  {
    UiTree& t = app.add_state("about", "AboutActivity");
    auto& r = t.root.children;
    r.push_back(el("android.widget.TextView", "txt_about", "A tiny demo application", {40, 140, 500, 196}));
    r.push_back(el("android.widget.TextView", "txt_version", "Version 1 2 3", {40, 210, 500, 250}));
  }
  {
    UiTree& t = app.add_state("inbox", "InboxActivity");
    auto& r = t.root.children;
    r.push_back(el("android.widget.TextView", "header", "Inbox", {16, 24, 524, 72}));
    r.push_back(el("android.widget.TextView", "row_messages", "Messages", {40, 120, 500, 176}, true));
    r.push_back(el("android.widget.TextView", "row_notifications", "Notifications", {40, 190, 500, 246}, true));
  }
  {
    UiTree& t = app.add_state("notif_settings", "NotifActivity");
    auto& r = t.root.children;
    r.push_back(el("android.widget.TextView", "header", "Notifications", {16, 24, 524, 72}));
    r.push_back(checkbox("cb_push", {40, 120, 80, 160}, true));
    r.push_back(el("android.widget.TextView", "txt_push", "Push notifications", {96, 122, 500, 158}));
    r.push_back(checkbox("cb_email", {40, 180, 80, 220}, true));
    r.push_back(el("android.widget.TextView", "txt_email", "Email notifications", {96, 182, 500, 218}));
  }
  {
    UiTree& t = app.add_state("premium", "PremiumActivity");
    auto& r = t.root.children;
    r.push_back(el("android.widget.TextView", "txt_pitch", "Go premium for an ad free experience", {40, 140, 500, 220}));
    r.push_back(el("android.widget.Button", "btn_trial", "Start free trial", {40, 260, 500, 330}, true));
    r.push_back(el("android.widget.TextView", "txt_fineprint_low_contrast", "Renews automatically each month", {40, 360, 500, 400}));
  }
  {
    UiTree& t = app.add_state("premium_sub", "PremiumActivity");
    t.root.children.push_back(el("android.widget.TextView", "txt_subbed", "You are premium now enjoy", {40, 200, 500, 260}));
  }
  {
    UiTree& t = app.add_state("shop", "ShopActivity");
    auto& r = t.root.children;
    r.push_back(el("android.widget.TextView", "cart_badge", "0", {470, 110, 520, 150}));
    r.push_back(el("android.widget.TextView", "row_tote", "Canvas tote bag 12 99", {40, 180, 500, 236}));
    r.push_back(el("android.widget.Button", "btn_add", "Add to cart", {40, 260, 500, 330}, true));
  }
  {
    UiTree& t = app.add_state("shop_added", "ShopActivity");
    auto& r = t.root.children;
    r.push_back(el("android.widget.TextView", "cart_badge", "1", {470, 110, 520, 150}));
    r.push_back(el("android.widget.TextView", "row_tote", "Canvas tote bag 12 99", {40, 180, 500, 236}));
    r.push_back(el("android.widget.Button", "btn_checkout", "Proceed to checkout", {40, 260, 500, 330}, true));
  }
  {
    UiTree& t = app.add_state("checkout", "CheckoutActivity");
    auto& r = t.root.children;
    r.push_back(el("android.widget.TextView", "cart_badge", "2", {470, 110, 520, 150}));
    r.push_back(el("android.widget.TextView", "txt_total", "Total 31 98", {40, 180, 500, 236}));
    r.push_back(el("android.widget.Button", "btn_pay", "Pay now", {40, 260, 500, 330}, true));
  }
  {
    UiTree& t = app.add_state("profile", "ProfileActivity");
    auto& r = t.root.children;
    r.push_back(el("android.widget.TextView", "txt_name", "Alex Example", {40, 140, 500, 196}));
    r.push_back(el("android.widget.Button", "btn_signout", "Sign out", {40, 240, 500, 310}, true));
  }
  {
    UiTree& t = app.add_state("confirm_signout", "ProfileActivity");
    auto& r = t.root.children;
    r.push_back(el("android.widget.TextView", "txt_confirm", "Are you sure you want to sign out", {60, 320, 480, 380}));
    r.push_back(el("android.widget.Button", "btn_confirm_signout", "Yes sign out", {60, 420, 480, 490}, true));
    r.push_back(el("android.widget.Button", "btn_cancel_signout", "Stay signed in", {60, 510, 480, 580}, true));
  }
  {
    UiTree& t = app.add_state("signed_out", "MainActivity");
    auto& r = t.root.children;
    r.push_back(el("android.widget.TextView", "txt_signedout", "You are signed out", {40, 200, 500, 260}));
    r.push_back(el("android.widget.Button", "btn_home", "Back to home", {40, 320, 500, 390}, true));
  }
  {
    UiTree& t = app.add_state("ad_interstitial", "AdActivity");
    auto& r = t.root.children;
    r.push_back(el("android.widget.ImageView", "interstitial_ad_view", "", {20, 140, 520, 820}, true));
    r.push_back(el("android.widget.Button", "btn_skip", "Skip ad", {420, 90, 520, 130}, true));
  }

  app.tap("home", "btn_signup", "register");
  app.tap("home", "btn_login", "login");
  app.tap("home", "btn_settings", "settings");
  app.tap("home", "btn_inbox", "inbox");
  app.tap("home", "btn_shop", "shop");
  app.tap("home", "btn_premium", "premium");
  app.tap("home", "btn_profile", "profile");
  app.tap("home", "tile_play", "ad_interstitial");
  app.tap("home", "home_banner_ad", "ad_interstitial");
  app.tap("register", "btn_create", "registered");
  app.tap("registered", "btn_continue", "home");
  app.tap("login", "btn_dologin", "profile");
  app.tap("settings", "row_privacy", "privacy_settings");
  app.tap("settings", "row_about", "about");
  app.tap("inbox", "row_notifications", "notif_settings");
  app.tap("premium", "btn_trial", "premium_sub");
  app.tap("shop", "btn_add", "shop_added");
  app.tap("shop_added", "btn_checkout", "checkout");
  app.tap("profile", "btn_signout", "confirm_signout");
  app.tap("confirm_signout", "btn_confirm_signout", "signed_out");
  app.tap("confirm_signout", "btn_cancel_signout", "profile");
  app.tap("signed_out", "btn_home", "home");
  app.tap("ad_interstitial", "btn_skip", "home");

  app.completion = {{"T1", {{"reach", "registered"}}},
                    {"T2", {{"reach", "profile"}}},
                    {"T3", {{"reach", "notif_settings"}}},
                    {"T4", {{"reach", "privacy_settings"}}},
                    {"T5", {{"reach", "premium"}}},
                    {"T6", {{"reach", "checkout"}}},
                    {"T7", {{"reach", "signed_out"}}}};

  // write app.json + per-state xml
  Json aj;
  aj["initial"] = "home";
  Json states = Json::object();
  for (const auto& [name, tree] : app.states) {
    const std::string xml_rel = name + ".xml";
    write_text_file((app_dir / xml_rel).string(), ui::serialize_tree(tree));
    states[name] = {{"xml", xml_rel}, {"activity", tree.activity}};
  }
  aj["states"] = states;
  aj["transitions"] = app.transitions;
  aj["completion"] = app.completion;
  write_text_file((app_dir / "app.json").string(), aj.dump(2) + "\n");

  // mock LLM responses, target_index resolved against each step's screen
  auto tap_resp = [&](const std::string& state, const std::string& id,
                      const std::string& prose = "") {
    Json j = {{"action", "tap"}, {"target_index", leaf_index(app.states[state], id)}};
    return prose.empty() ? j.dump() : prose + " " + j.dump();
  };
  auto type_resp = [&](const std::string& state, const std::string& id,
                       const std::string& text) {
    Json j = {{"action", "type"},
              {"target_index", leaf_index(app.states[state], id)},
              {"text", text}};
    return j.dump();
  };
  const std::string stop = R"({"action":"stop"})";
  const std::string back = R"({"action":"back"})";
  const std::string scroll_down = R"({"action":"scroll","direction":"down"})";

  Json mock;
  mock["T1"] = {tap_resp("home", "btn_signup", "Sure, starting registration."),
                type_resp("register", "in_user", "alex"),
                type_resp("register", "in_email", "alex@example.com"),
                tap_resp("register", "btn_create"), stop};
  mock["T2"] = {tap_resp("home", "btn_login"),
                type_resp("login", "in_user2", "alex"),
                type_resp("login", "in_pass", "hunter2"),
                tap_resp("login", "btn_dologin"), stop};
  // trial and error: settings first, nothing there, back out, try the inbox
  mock["T3"] = {tap_resp("home", "btn_settings"), back,
                tap_resp("home", "btn_inbox"),
                tap_resp("inbox", "row_notifications"), stop};
  mock["T4"] = {tap_resp("home", "btn_settings"),
                tap_resp("settings", "row_privacy"), stop};
  mock["T5"] = {tap_resp("home", "btn_premium"), scroll_down, stop};
  mock["T6"] = {tap_resp("home", "btn_shop"), tap_resp("shop", "btn_add"),
                tap_resp("shop_added", "btn_checkout"), stop};
  mock["T7"] = {tap_resp("home", "btn_profile"),
                tap_resp("profile", "btn_signout"),
                tap_resp("confirm_signout", "btn_confirm_signout"), stop};
  write_text_file((app_dir / "mock_responses.json").string(),
                  mock.dump(2) + "\n");

  // scripted-policy scripts, resolved by resource id at run time
  auto tap_id = [](const std::string& id) {
    return Json{{"action", "tap"}, {"target_id", id}};
  };
  Json scripts;
  scripts["T1"] = {tap_id("btn_signup"),
                   Json{{"action", "type"}, {"target_id", "in_user"}, {"text", "alex"}},
                   tap_id("btn_create")};
  scripts["T2"] = {tap_id("btn_login"), tap_id("btn_dologin")};
  scripts["T3"] = {tap_id("btn_inbox"), tap_id("row_notifications")};
  scripts["T4"] = {tap_id("btn_settings"), tap_id("row_privacy")};
  scripts["T5"] = {tap_id("btn_premium")};
  scripts["T6"] = {tap_id("btn_shop"), tap_id("btn_add"), tap_id("btn_checkout")};
  scripts["T7"] = {tap_id("btn_profile"), tap_id("btn_signout"),
                   tap_id("btn_confirm_signout")};
  write_text_file((app_dir / "scripts.json").string(), scripts.dump(2) + "\n");

  // the seven exploration tasks
  Json tasks = Json::array();
  for (const explore::Task& t : explore::default_tasks())
    tasks.push_back({{"id", t.id},
                     {"description", t.description},
                     {"max_steps", t.max_steps},
                     {"kind", t.kind == explore::Task::Kind::kFeature
                                  ? "feature"
                                  : "general"}});
  write_text_file((fs::path(out_root) / "tasks.json").string(),
                  tasks.dump(2) + "\n");

  // editable taxonomy and lexicons mirroring the built-in defaults
  Json tax = Json::array();
  for (const model::LabelDef& l : model::Taxonomy::standard().labels())
    tax.push_back({{"name", l.name},
                   {"strategy", model::strategy_name(l.strategy)},
                   {"temporal", model::temporal_class_name(l.temporal)},
                   {"classifier", l.classifier}});
  write_text_file((fs::path(out_root) / "taxonomy.json").string(),
                  tax.dump(2) + "\n");

  const Lexicons& lex = Lexicons::defaults();
  Json jl;
  jl["rate_intent"] = lex.rate_intent;
  jl["outcome_verbs"] = lex.outcome_verbs;
  jl["cart_ids"] = lex.cart_ids;
  jl["add_to_cart"] = lex.add_to_cart;
  jl["subscribe"] = lex.subscribe;
  jl["cancel"] = lex.cancel;
  jl["ad_ids"] = lex.ad_ids;
  write_text_file((fs::path(out_root) / "lexicons.json").string(),
                  jl.dump(2) + "\n");

  Json syn = Json::object();
  for (const auto& [k, v] : model::synonym_lexicon()) syn[k] = v;
  write_text_file((fs::path(out_root) / "synonyms.json").string(),
                  syn.dump(2) + "\n");

  std::printf("fixture app (%zu states) and data files written under %s\n",
              app.states.size(), out_root.c_str());
  return 0;
}
