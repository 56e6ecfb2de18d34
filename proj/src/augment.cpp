#include <algorithm>
#include <cmath>
#include <sstream>

#include "appray/model.hpp"

namespace appray::model {

AugmentationSpec AugmentationSpec::defaults() {
  AugmentationSpec s;
  s.image_ops = {{AugmentationSpec::Op::kGrayscale, 0.15},
                 {AugmentationSpec::Op::kRotate90, 0.15},
                 {AugmentationSpec::Op::kHorizontalFlip, 0.4},
                 {AugmentationSpec::Op::kColorJitter, 0.6}};
  s.text_ops = {{AugmentationSpec::Op::kSynonymReplacement, 0.5},
                {AugmentationSpec::Op::kRandomInsertion, 0.25},
                {AugmentationSpec::Op::kRandomSwap, 0.25}};
  return s;
}

const std::map<std::string, std::string>& synonym_lexicon() {
  static const std::map<std::string, std::string> lex = {
      {"buy", "purchase"}, {"purchase", "buy"}, {"cheap", "inexpensive"},
      {"deal", "offer"}, {"offer", "deal"}, {"discount", "markdown"},
      {"sale", "promotion"}, {"promotion", "sale"}, {"price", "cost"},
      {"cost", "price"}, {"free", "complimentary"}, {"premium", "pro"},
      {"pro", "premium"}, {"upgrade", "improve"}, {"subscribe", "enroll"},
      {"subscription", "membership"}, {"membership", "subscription"},
      {"cancel", "stop"}, {"stop", "halt"}, {"start", "begin"},
      {"begin", "start"}, {"continue", "proceed"}, {"proceed", "continue"},
      {"skip", "dismiss"}, {"dismiss", "skip"}, {"close", "shut"},
      {"open", "launch"}, {"launch", "open"}, {"now", "immediately"},
      {"today", "now"}, {"limited", "restricted"}, {"exclusive", "special"},
      {"special", "exclusive"}, {"save", "keep"}, {"earn", "gain"},
      {"gain", "earn"}, {"win", "earn"}, {"reward", "prize"},
      {"prize", "reward"}, {"bonus", "extra"}, {"extra", "additional"},
      {"coins", "credits"}, {"credits", "coins"}, {"gems", "tokens"},
      {"tokens", "gems"}, {"points", "credits"}, {"unlock", "access"},
      {"access", "unlock"}, {"feature", "function"}, {"function", "feature"},
      {"account", "profile"}, {"profile", "account"}, {"register", "enroll"},
      {"signup", "register"}, {"login", "signin"}, {"signin", "login"},
      {"signout", "logout"}, {"logout", "signout"}, {"password", "passcode"},
      {"email", "mail"}, {"mail", "email"}, {"phone", "mobile"},
      {"mobile", "phone"}, {"number", "digits"}, {"verify", "confirm"},
      {"confirm", "verify"}, {"accept", "agree"}, {"agree", "accept"},
      {"decline", "refuse"}, {"refuse", "decline"}, {"deny", "decline"},
      {"allow", "permit"}, {"permit", "allow"}, {"share", "send"},
      {"send", "share"}, {"invite", "refer"}, {"refer", "invite"},
      {"friends", "contacts"}, {"contacts", "friends"}, {"follow", "track"},
      {"notification", "alert"}, {"alert", "notification"},
      {"notifications", "alerts"}, {"alerts", "notifications"},
      {"message", "note"}, {"messages", "notes"}, {"settings", "preferences"},
      {"preferences", "settings"}, {"setting", "preference"},
      {"privacy", "confidentiality"}, {"data", "information"},
      {"information", "data"}, {"location", "position"},
      {"enabled", "active"}, {"disabled", "inactive"}, {"on", "enabled"},
      {"off", "disabled"}, {"default", "preset"}, {"newsletter", "digest"},
      {"updates", "news"}, {"news", "updates"}, {"ads", "advertisements"},
      {"ad", "advertisement"}, {"advertisement", "ad"},
      {"advertisements", "ads"}, {"sponsored", "promoted"},
      {"promoted", "sponsored"}, {"banner", "billboard"}, {"video", "clip"},
      {"clip", "video"}, {"play", "watch"}, {"watch", "view"},
      {"view", "see"}, {"download", "fetch"}, {"fetch", "download"},
      {"install", "setup"}, {"setup", "install"}, {"app", "application"},
      {"application", "app"}, {"game", "title"}, {"shop", "store"},
      {"store", "shop"}, {"cart", "basket"}, {"basket", "cart"},
      {"checkout", "payment"}, {"payment", "checkout"}, {"order", "purchase"},
      {"item", "product"}, {"product", "item"}, {"items", "products"},
      {"products", "items"}, {"shipping", "delivery"},
      {"delivery", "shipping"}, {"fee", "charge"}, {"charge", "fee"},
      {"fees", "charges"}, {"tax", "levy"}, {"total", "sum"}, {"sum", "total"},
      {"trial", "test"}, {"test", "trial"}, {"expires", "ends"},
      {"ends", "expires"}, {"ending", "expiring"}, {"hurry", "rush"},
      {"rush", "hurry"}, {"miss", "lose"}, {"lose", "miss"},
      {"last", "final"}, {"final", "last"}, {"chance", "opportunity"},
      {"opportunity", "chance"}, {"only", "just"}, {"just", "only"},
      {"left", "remaining"}, {"remaining", "left"}, {"stock", "inventory"},
      {"best", "top"}, {"top", "best"}, {"new", "fresh"}, {"fresh", "new"},
      {"hot", "trending"}, {"trending", "popular"}, {"popular", "trending"},
      {"rate", "review"}, {"review", "rate"}, {"stars", "rating"},
      {"rating", "stars"}, {"feedback", "review"}, {"later", "afterwards"},
      {"never", "not ever"}, {"yes", "sure"}, {"sure", "yes"}, {"no", "nope"},
      {"ok", "okay"}, {"okay", "ok"}, {"next", "following"},
      {"following", "next"}, {"back", "return"}, {"return", "back"},
      {"exit", "quit"}, {"quit", "exit"}, {"remove", "delete"},
      {"delete", "remove"}, {"restore", "recover"}, {"recover", "restore"},
      {"terms", "conditions"}, {"conditions", "terms"}, {"policy", "rules"},
      {"rules", "policy"}, {"agreement", "contract"},
      {"contract", "agreement"}, {"daily", "everyday"},
      {"everyday", "daily"}, {"weekly", "every week"}, {"streak", "run"},
      {"level", "tier"}, {"tier", "level"}, {"unlimited", "endless"},
      {"endless", "unlimited"}, {"forever", "permanently"},
      {"instant", "immediate"}, {"immediate", "instant"},
  };
  return lex;
}

namespace {

using Raster = ui::Raster;

Raster grayscale(const Raster& in) {
  Raster out = in;
  for (size_t i = 0; i + 2 < out.pixels.size(); i += 3) {
    const int y = (299 * out.pixels[i] + 587 * out.pixels[i + 1] +
                   114 * out.pixels[i + 2] + 500) /
                  1000;
    out.pixels[i] = out.pixels[i + 1] = out.pixels[i + 2] =
        static_cast<uint8_t>(y);
  }
  return out;
}

// 90 degrees clockwise.
Raster rotate90(const Raster& in) {
  Raster out;
  out.width = in.height;
  out.height = in.width;
  out.pixels.resize(in.pixels.size());
  for (int y = 0; y < out.height; ++y)
    for (int x = 0; x < out.width; ++x) {
      const uint8_t* src = in.at(y, in.height - 1 - x);
      uint8_t* dst = out.at(x, y);
      dst[0] = src[0];
      dst[1] = src[1];
      dst[2] = src[2];
    }
  return out;
}

Raster hflip(const Raster& in) {
  Raster out = in;
  for (int y = 0; y < in.height; ++y)
    for (int x = 0; x < in.width; ++x) {
      const uint8_t* src = in.at(in.width - 1 - x, y);
      uint8_t* dst = out.at(x, y);
      dst[0] = src[0];
      dst[1] = src[1];
      dst[2] = src[2];
    }
  return out;
}

Raster jitter(const Raster& in, const double f[3]) {
  Raster out = in;
  for (size_t i = 0; i + 2 < out.pixels.size(); i += 3)
    for (int c = 0; c < 3; ++c) {
      const double v = std::round(out.pixels[i + static_cast<size_t>(c)] * f[c]);
      out.pixels[i + static_cast<size_t>(c)] =
          static_cast<uint8_t>(std::clamp(v, 0.0, 255.0));
    }
  return out;
}

std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  std::string w;
  while (is >> w) out.push_back(w);
  return out;
}

std::string join_ws(const std::vector<std::string>& words) {
  std::string out;
  for (const std::string& w : words) {
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

std::string lookup_synonym(const std::map<std::string, std::string>& dict,
                           const std::string& word) {
  std::string low;
  for (char c : word)
    low += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  auto it = dict.find(low);
  return it == dict.end() ? std::string() : it->second;
}

}  // namespace

Sample augment(const Sample& s, const AugmentationSpec& spec, Rng& rng) {
  Sample out = s;
  for (const auto& entry : spec.image_ops) {
    if (!rng.bernoulli(entry.prob)) continue;
    switch (entry.op) {
      case AugmentationSpec::Op::kGrayscale:
        out.crop = grayscale(out.crop);
        out.full_ui = grayscale(out.full_ui);
        break;
      case AugmentationSpec::Op::kRotate90:
        out.crop = rotate90(out.crop);
        out.full_ui = rotate90(out.full_ui);
        break;
      case AugmentationSpec::Op::kHorizontalFlip:
        out.crop = hflip(out.crop);
        out.full_ui = hflip(out.full_ui);
        break;
      case AugmentationSpec::Op::kColorJitter: {
        // one factor triple per op application, shared by both images
        const double f[3] = {rng.uniform(0.8, 1.2), rng.uniform(0.8, 1.2),
                             rng.uniform(0.8, 1.2)};
        out.crop = jitter(out.crop, f);
        out.full_ui = jitter(out.full_ui, f);
        break;
      }
      default:
        break;
    }
  }
  if (out.text == kNoTextSentinel) return out;  // sentinel stays untouched
  const auto& dict = spec.synonyms.empty() ? synonym_lexicon() : spec.synonyms;
  for (const auto& entry : spec.text_ops) {
    if (!rng.bernoulli(entry.prob)) continue;
    std::vector<std::string> words = split_ws(out.text);
    if (words.empty()) break;
    switch (entry.op) {
      case AugmentationSpec::Op::kSynonymReplacement:
        for (std::string& w : words) {
          const std::string syn = lookup_synonym(dict, w);
          if (!syn.empty()) w = syn;
        }
        break;
      case AugmentationSpec::Op::kRandomInsertion: {
        const size_t src = rng.uniform_int(words.size());
        std::string ins = lookup_synonym(dict, words[src]);
        if (ins.empty()) ins = words[src];
        const size_t pos = rng.uniform_int(words.size() + 1);
        words.insert(words.begin() + static_cast<long>(pos), ins);
        break;
      }
      case AugmentationSpec::Op::kRandomSwap: {
        if (words.size() >= 2) {
          const size_t i = rng.uniform_int(words.size());
          const size_t j = rng.uniform_int(words.size());
          std::swap(words[i], words[j]);
        }
        break;
      }
      default:
        break;
    }
    out.text = join_ws(words);
  }
  return out;
}

}  // namespace appray::model
