#include <cstdlib>
#include <semaphore>
#include <thread>

#include "define/client.hpp"
#include "define/errors.hpp"
#include "httplib.h"
#include "json.hpp"

namespace define {

namespace {

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

Endpoint split_endpoint(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw ConfigError("endpoint '" + url + "' must start with http:// or https://");
  }
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

bool retryable_status(int status) { return status == 429 || status >= 500; }

}  // namespace

struct HttpCompletionClient::Impl {
  ClientConfig config;
  std::string api_key;
  Endpoint endpoint;
  std::counting_semaphore<> slots;

  Impl(ClientConfig c, std::string key)
      : config(std::move(c)),
        api_key(std::move(key)),
        endpoint(split_endpoint(config.endpoint)),
        slots(std::max(1, config.concurrency)) {}
};

HttpCompletionClient::HttpCompletionClient(ClientConfig config, std::string api_key)
    : impl_(std::make_unique<Impl>(std::move(config), std::move(api_key))) {}

HttpCompletionClient::~HttpCompletionClient() = default;

std::unique_ptr<HttpCompletionClient> HttpCompletionClient::from_env(ClientConfig config) {
  const char* key = std::getenv(kApiKeyEnv);
  if (key == nullptr || *key == '\0') {
    throw ConfigError(std::string("live mode needs an API key: set the ") + kApiKeyEnv +
                      " environment variable, or use fixture mode with --fixtures DIR");
  }
  return std::make_unique<HttpCompletionClient>(std::move(config), key);
}

std::string HttpCompletionClient::request_body(const ChatExchange& exchange) const {
  const auto& c = impl_->config;
  nlohmann::json body{
      {"model", c.model},
      {"temperature", c.temperature},
      {"messages",
       {{{"role", "system"}, {"content", exchange.system_message}},
        {{"role", "user"}, {"content", exchange.user_message}}}},
  };
  if (c.seed) body["seed"] = *c.seed;
  if (exchange.response_format == ResponseFormat::json) {
    body["response_format"] = {{"type", "json_object"}};
  }
  return body.dump();
}

std::string HttpCompletionClient::complete(const ChatExchange& exchange) {
  auto& impl = *impl_;
  const auto body = request_body(exchange);
  const int max_attempts = 1 + std::max(0, impl.config.max_retries);
  auto backoff = impl.config.backoff;

  impl.slots.acquire();
  struct Release {
    std::counting_semaphore<>& s;
    ~Release() { s.release(); }
  } release{impl.slots};

  std::string last_error;
  int last_status = 0;
  for (int attempt = 1; attempt <= max_attempts; ++attempt) {
    httplib::Client cli(impl.endpoint.origin);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(impl.config.timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(
        impl.config.timeout - secs);
    cli.set_connection_timeout(secs.count(), usecs.count());
    cli.set_read_timeout(secs.count(), usecs.count());
    cli.set_write_timeout(secs.count(), usecs.count());
    httplib::Headers headers{{"Authorization", "Bearer " + impl.api_key}};

    auto res = cli.Post(impl.endpoint.path, headers, body, "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      last_status = 0;
    } else if (res->status == 200) {
      try {
        const auto doc = nlohmann::json::parse(res->body);
        return doc.at("choices").at(0).at("message").at("content").get<std::string>();
      } catch (const nlohmann::json::exception& e) {
        throw MalformedResponse(std::string("completion response: ") + e.what());
      }
    } else {
      last_status = res->status;
      last_error = "HTTP " + std::to_string(res->status) + " from " + impl.config.endpoint;
      if (!retryable_status(res->status)) throw TransportError(last_error, attempt, last_status);
    }
    if (attempt < max_attempts) {
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
  }
  throw TransportError(last_error, max_attempts, last_status);
}

}  // namespace define
