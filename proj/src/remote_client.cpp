#include <httplib.h>

#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdlib>
#include <thread>

#include "avfm/agent_protocol.hpp"

namespace avfm {

namespace {

using nlohmann::json;

struct ParsedUrl {
  std::string host;
  int port = 80;
  std::string path = "/";
};

ParsedUrl parse_http_url(const std::string& url) {
  const std::string prefix = "http://";
  if (url.rfind(prefix, 0) != 0)
    throw ValidationError("endpoint_url must start with http:// (got " + url + ")");
  ParsedUrl out;
  std::string rest = url.substr(prefix.size());
  const size_t slash = rest.find('/');
  std::string authority = slash == std::string::npos ? rest : rest.substr(0, slash);
  if (slash != std::string::npos) out.path = rest.substr(slash);
  const size_t colon = authority.find(':');
  if (colon == std::string::npos) {
    out.host = authority;
  } else {
    out.host = authority.substr(0, colon);
    try {
      out.port = std::stoi(authority.substr(colon + 1));
    } catch (const std::exception&) {
      throw ValidationError("bad port in endpoint_url: " + url);
    }
  }
  if (out.host.empty()) throw ValidationError("empty host in endpoint_url: " + url);
  return out;
}

}  // namespace

RemoteAgentClient::RemoteAgentClient(RemoteAgentConfig config) : config_(std::move(config)) {
  parse_http_url(config_.endpoint_url);  // fail fast on a bad URL
}

std::string RemoteAgentClient::request(const std::string& prompt) {
  const ParsedUrl url = parse_http_url(config_.endpoint_url);

  httplib::Client client(url.host, url.port);
  client.set_connection_timeout(0, config_.timeout_ms * 1000);
  client.set_read_timeout(config_.timeout_ms / 1000, (config_.timeout_ms % 1000) * 1000);

  httplib::Headers headers;
  if (!config_.api_key_env.empty()) {
    if (const char* key = std::getenv(config_.api_key_env.c_str()))
      headers.emplace("Authorization", std::string("Bearer ") + key);
  }

  const std::string body = json{{"model", config_.model_name}, {"prompt", prompt}}.dump();

  std::string last_error;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0)
      std::this_thread::sleep_for(std::chrono::milliseconds(100LL << (attempt - 1)));

    httplib::Result result = client.Post(url.path, headers, body, "application/json");
    if (!result) {
      last_error = "transport failure: " + httplib::to_string(result.error());
      continue;
    }
    if (result->status < 200 || result->status >= 300) {
      last_error = "HTTP status " + std::to_string(result->status);
      continue;
    }
    json response = json::parse(result->body, nullptr, false);
    if (response.is_discarded() || !response.is_object() || !response.contains("text") ||
        !response["text"].is_string())
      throw TransportError("malformed transport JSON: expected an object with a text field");
    return response["text"].get<std::string>();
  }
  throw TransportError("agent call failed after " + std::to_string(config_.max_retries + 1) +
                       " attempts: " + last_error);
}

}  // namespace avfm
