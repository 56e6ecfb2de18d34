#include "appray/lexicons.hpp"

#include <algorithm>
#include <cctype>

#include "appray/common.hpp"
#include "appray/serde.hpp"

namespace appray {

std::string to_lower(const std::string& s) {
  std::string out = s;
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

bool lexicon_match(const std::vector<std::string>& lexicon,
                   const std::string& s) {
  const std::string low = to_lower(s);
  for (const std::string& tok : lexicon)
    if (!tok.empty() && low.find(tok) != std::string::npos) return true;
  return false;
}

const Lexicons& Lexicons::defaults() {
  static const Lexicons lex = [] {
    Lexicons l;
    l.rate_intent = {"rate",   "review",  "stars",   "feedback",
                     "upgrade", "premium", "go pro",  "remove ads",
                     "ad-free", "consent", "personalized ads"};
    l.outcome_verbs = {"play", "open", "download", "close", "watch",
                       "start", "view", "continue", "skip", "next"};
    l.cart_ids = {"cart", "basket", "bag_count", "cart_badge", "basket_badge"};
    l.add_to_cart = {"add to cart", "add to basket", "add_to_cart",
                     "add item", "buy now"};
    l.subscribe = {"subscribe", "sign up", "signup", "join now", "opt in",
                   "opt-in", "register", "start free trial", "create account"};
    l.cancel = {"cancel", "unsubscribe", "sign out", "log out", "logout",
                "opt out", "opt-out", "delete account", "turn off"};
    l.ad_ids = {"ad_", "_ad", "ads", "advert", "banner_ad", "ad_view",
                "native_ad", "sponsored"};
    return l;
  }();
  return lex;
}

Lexicons Lexicons::from_json_text(const std::string& text) {
  Json j = Json::parse(text, nullptr, false);
  if (j.is_discarded())
    throw AppError(ErrorKind::MalformedInput, "lexicons file is not JSON");
  Lexicons l = defaults();
  auto read = [&](const char* key, std::vector<std::string>& out) {
    if (!j.contains(key)) return;
    out.clear();
    for (const Json& e : j[key]) out.push_back(to_lower(e.get<std::string>()));
  };
  read("rate_intent", l.rate_intent);
  read("outcome_verbs", l.outcome_verbs);
  read("cart_ids", l.cart_ids);
  read("add_to_cart", l.add_to_cart);
  read("subscribe", l.subscribe);
  read("cancel", l.cancel);
  read("ad_ids", l.ad_ids);
  return l;
}

}  // namespace appray
