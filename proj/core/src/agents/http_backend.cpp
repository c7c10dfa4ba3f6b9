#include <cstdlib>

#include "avatar/agents/backend.hpp"

// httplib pulls in system headers whose macros collide with Eigen internals;
// it must come after Eigen.
#include <httplib.h>
#include <nlohmann/json.hpp>

namespace avatar::agents {

using nlohmann::json;

HttpBackend::HttpBackend(Config config) : config_(std::move(config)) {
  if (config_.base_url.empty()) throw std::invalid_argument("http backend: base_url is required");
  if (config_.model.empty()) throw std::invalid_argument("http backend: model is required");
}

std::string HttpBackend::send(const AgentRequest& request) {
  if (request.prompt_text.empty())
    throw std::invalid_argument("http backend: empty prompt_text");

  json content = json::array();
  content.push_back({{"type", "text"}, {"text", request.prompt_text}});
  for (const auto& a : request.attachments) {
    // Attachments travel as typed references; the serving side resolves them.
    content.push_back({{"type", to_string(a.kind) + "_ref"}, {"ref", a.ref}});
  }
  json body{{"model", config_.model},
            {"messages", json::array({{{"role", "user"}, {"content", content}}})}};
  if (request.deterministic) {
    body["temperature"] = 0.0;
    body["seed"] = 0;
  }

  httplib::Client client(config_.base_url);
  client.set_connection_timeout(config_.timeout_seconds);
  client.set_read_timeout(config_.timeout_seconds);
  httplib::Headers headers;
  if (const char* token = std::getenv("AGENT_BACKEND_TOKEN"); token && *token)
    headers.emplace("Authorization", std::string("Bearer ") + token);

  auto res = client.Post(config_.path, headers, body.dump(), "application/json");
  if (!res)
    throw TransportError("http backend: request to " + config_.base_url + config_.path +
                         " failed: " + httplib::to_string(res.error()));
  if (res->status < 200 || res->status >= 300)
    throw TransportError("http backend: status " + std::to_string(res->status) + ": " + res->body);

  json doc = json::parse(res->body, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded() || !doc.contains("choices") || doc["choices"].empty())
    throw TransportError("http backend: malformed completion response: " + res->body);
  const json& msg = doc["choices"][0].value("message", json::object());
  if (!msg.contains("content") || !msg["content"].is_string())
    throw TransportError("http backend: completion has no message content");
  return msg["content"].get<std::string>();
}

}  // namespace avatar::agents
