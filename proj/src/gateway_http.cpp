#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <cstdlib>

#include "lexpsy/error.hpp"
#include "lexpsy/gateway.hpp"

namespace lexpsy::gateway {

using nlohmann::json;

namespace {

bool mentions_content_filter(const json& err) {
  auto code_is = [](const json& j, const char* key, std::string_view want) {
    return j.is_object() && j.contains(key) && j.at(key).is_string() &&
           j.at(key).get<std::string>() == want;
  };
  if (code_is(err, "code", "content_filter")) return true;
  if (err.is_object() && err.contains("innererror")) {
    const auto& inner = err.at("innererror");
    if (code_is(inner, "code", "ResponsibleAIPolicyViolation")) return true;
  }
  return false;
}

}  // namespace

HttpTransport::HttpTransport(HttpConfig config) : config_(std::move(config)) {
  const auto& url = config_.base_url;
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos)
    throw Error(ErrorKind::Config, "base_url needs a scheme: " + url);
  auto path_start = url.find('/', scheme_end + 3);
  scheme_host_port_ = url.substr(0, path_start);
  std::string prefix = path_start == std::string::npos ? "" : url.substr(path_start);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  endpoint_path_ = prefix + "/chat/completions";
  if (!config_.api_version.empty()) endpoint_path_ += "?api-version=" + config_.api_version;

  resolved_key_ = config_.api_key;
  if (resolved_key_.empty() && !config_.api_key_env.empty()) {
    const char* v = std::getenv(config_.api_key_env.c_str());
    if (!v) throw Error(ErrorKind::Config, "environment variable " + config_.api_key_env + " is not set");
    resolved_key_ = v;
  }
}

Attempt HttpTransport::classify_response(int status, const std::string& body) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::exception&) {
    if (status == 200) return Attempt{Outcome::TransportError, "unparseable response body", true};
  }

  if (status == 200) {
    try {
      const auto& choice = j.at("choices").at(0);
      auto finish = choice.value("finish_reason", std::string{});
      if (finish == "content_filter") return Attempt{Outcome::ContentFiltered, "", false};
      const auto& msg = choice.at("message");
      if (msg.contains("refusal") && msg.at("refusal").is_string() &&
          !msg.at("refusal").get<std::string>().empty())
        return Attempt{Outcome::Refused, "", false};
      if (!msg.contains("content") || msg.at("content").is_null())
        return Attempt{Outcome::Refused, "", false};
      return Attempt{Outcome::Text, msg.at("content").get<std::string>(), false};
    } catch (const json::exception& e) {
      return Attempt{Outcome::TransportError, std::string("malformed completion: ") + e.what(), true};
    }
  }

  if (j.is_object() && j.contains("error") && mentions_content_filter(j.at("error")))
    return Attempt{Outcome::ContentFiltered, "", false};
  std::string detail = "HTTP " + std::to_string(status);
  if (j.is_object() && j.contains("error") && j.at("error").is_object())
    detail += ": " + j.at("error").value("message", std::string{});
  bool retryable = status == 408 || status == 409 || status == 429 || status >= 500;
  return Attempt{Outcome::TransportError, detail, retryable};
}

Attempt HttpTransport::send(const ChatRequest& request) {
  httplib::Client client(scheme_host_port_);
  auto secs = config_.timeout.count() / 1000;
  auto usecs = (config_.timeout.count() % 1000) * 1000;
  client.set_connection_timeout(secs, usecs);
  client.set_read_timeout(secs, usecs);
  client.set_write_timeout(secs, usecs);

  httplib::Headers headers;
  if (!resolved_key_.empty()) {
    if (config_.auth_header == "Authorization")
      headers.emplace("Authorization", "Bearer " + resolved_key_);
    else
      headers.emplace(config_.auth_header, resolved_key_);
  }
  json body = {
      {"model", config_.model},
      {"temperature", request.temperature},
      {"max_tokens", request.max_tokens},
      {"messages",
       json::array({{{"role", "system"}, {"content", request.system_prompt}},
                    {{"role", "user"}, {"content", request.user_prompt}}})},
  };
  auto res = client.Post(endpoint_path_, headers, body.dump(), "application/json");
  if (!res) return Attempt{Outcome::TransportError, "transport: " + httplib::to_string(res.error()), true};
  return classify_response(res->status, res->body);
}

}  // namespace lexpsy::gateway
