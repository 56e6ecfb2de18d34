#include <cstdlib>

#include <httplib.h>

#include "appray/explore.hpp"
#include "appray/serde.hpp"

namespace appray::explore {

HttpChatClient::HttpChatClient(std::string base_url, std::string model,
                               int timeout_seconds)
    : base_url_(std::move(base_url)),
      model_(std::move(model)),
      timeout_seconds_(timeout_seconds) {}

std::string HttpChatClient::chat(const std::vector<ChatMessage>& messages) {
  Json body;
  body["model"] = model_;
  Json jm = Json::array();
  for (const ChatMessage& m : messages)
    jm.push_back({{"role", m.role}, {"content", m.content}});
  body["messages"] = jm;

  httplib::Client cli(base_url_);
  cli.set_connection_timeout(timeout_seconds_);
  cli.set_read_timeout(timeout_seconds_);
  httplib::Headers headers;
  if (const char* key = std::getenv("APPRAY_API_KEY"))
    headers.emplace("Authorization", std::string("Bearer ") + key);

  auto res = cli.Post("/v1/chat/completions", headers, body.dump(),
                      "application/json");
  if (!res)
    throw AppError(ErrorKind::ClientFailure,
                   "no response from " + base_url_ + ": " +
                       httplib::to_string(res.error()));
  if (res->status != 200)
    throw AppError(ErrorKind::ClientFailure,
                   "HTTP " + std::to_string(res->status) + " from " + base_url_);
  Json j = Json::parse(res->body, nullptr, false);
  if (j.is_discarded())
    throw AppError(ErrorKind::ClientFailure, "non-JSON completion body");
  try {
    return j.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const Json::exception&) {
    throw AppError(ErrorKind::ClientFailure, "unexpected completion schema");
  }
}

}  // namespace appray::explore
