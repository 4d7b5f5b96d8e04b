#include <cstdlib>
#include <regex>

#include <httplib.h>

#include "cpmr/pipeline.hpp"

namespace cpmr {

namespace {

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

Endpoint split_url(const std::string& url) {
  static const std::regex re(R"(^(https?://[^/]+)(/.*)?$)", std::regex::icase);
  std::smatch m;
  if (!std::regex_match(url, m, re)) throw Error(Errc::BadRequest, "endpoint is not an http(s) url: " + url);
  return {m[1].str(), m[2].matched ? m[2].str() : "/"};
}

struct TransportError {
  std::string what;
};

}  // namespace

LlmBackend::LlmBackend(BackendConfig config) : config_(std::move(config)) {
  config_.kind = BackendKind::Llm;
  config_.check();
  split_url(*config_.endpoint);
}

nlohmann::json LlmBackend::request_body(const Prompt& p) const {
  return {{"model", *config_.model},
          {"temperature", config_.temperature},
          {"messages",
           nlohmann::json::array({{{"role", "system"}, {"content", p.system}},
                                  {{"role", "user"}, {"content", p.user}}})}};
}

std::string LlmBackend::complete(const BackendRequest& request) const {
  Endpoint ep = split_url(*config_.endpoint);
  std::string body = request_body(request.prompt).dump();
  httplib::Headers headers;
  if (const char* key = std::getenv(config_.api_key_env.c_str()); key && *key)
    headers.emplace("Authorization", std::string("Bearer ") + key);

  auto attempt = [&]() -> std::string {
    httplib::Client cli(ep.origin);
    auto secs = static_cast<time_t>(config_.timeout.count());
    cli.set_connection_timeout(secs, 0);
    cli.set_read_timeout(secs, 0);
    cli.set_write_timeout(secs, 0);
    auto res = cli.Post(ep.path, headers, body, "application/json");
    if (!res) throw TransportError{httplib::to_string(res.error())};
    if (res->status >= 500) throw TransportError{"HTTP " + std::to_string(res->status)};
    if (res->status != 200)
      throw Error(Errc::BackendUnavailable, "HTTP " + std::to_string(res->status) + " from " + ep.origin);
    try {
      auto j = nlohmann::json::parse(res->body);
      return j.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const std::exception& e) {
      throw Error(Errc::BackendUnavailable, std::string("malformed completion response: ") + e.what());
    }
  };

  try {
    return attempt();
  } catch (const TransportError&) {
    try {
      return attempt();
    } catch (const TransportError& again) {
      throw Error(Errc::BackendUnavailable, "transport failure talking to " + ep.origin + ": " + again.what);
    }
  }
}

}  // namespace cpmr
