#pragma once

#include <chrono>
#include <memory>
#include <optional>
#include <string>

#include "define/prompts.hpp"

namespace define {

/// Chat-completion service. Implementations must be safe to call from
/// several threads at once.
class CompletionClient {
 public:
  virtual ~CompletionClient() = default;
  // Returns the assistant message content for the exchange.
  virtual std::string complete(const ChatExchange& exchange) = 0;
};

enum class ClientMode { live, fixture };

struct ClientConfig {
  ClientMode mode = ClientMode::fixture;
  std::string endpoint = "https://api.openai.com/v1/chat/completions";
  std::string model = "gpt-4o-2024-08-06";
  double temperature = 0.0;
  std::optional<int> seed;
  std::chrono::milliseconds timeout{120'000};
  int max_retries = 3;
  std::chrono::milliseconds backoff{500};  // doubled after every failed attempt
  int concurrency = 4;                     // in-flight requests per client
  std::string fixtures_dir;                // replay source; record target in live mode
  bool record = false;
};

inline constexpr const char* kApiKeyEnv = "DEFINE_API_KEY";

/// Replays responses stored as `{hash}.json` under a directory. Never touches
/// the network; a missing record raises FixtureMissing naming the hash.
class FixtureClient : public CompletionClient {
 public:
  explicit FixtureClient(std::string dir);
  std::string complete(const ChatExchange& exchange) override;

  const std::string& dir() const { return dir_; }

 private:
  std::string dir_;
};

// Writes `{dir}/{hash}.json` holding the exchange and response.
void write_fixture(const std::string& dir, const ChatExchange& exchange,
                   const std::string& response);

/// POSTs to an OpenAI-compatible chat-completions endpoint. Transport
/// failures, 429 and 5xx are retried with exponential backoff; other 4xx
/// fail immediately.
class HttpCompletionClient : public CompletionClient {
 public:
  HttpCompletionClient(ClientConfig config, std::string api_key);
  ~HttpCompletionClient() override;

  // Reads the key from DEFINE_API_KEY; throws ConfigError when unset.
  static std::unique_ptr<HttpCompletionClient> from_env(ClientConfig config);

  std::string complete(const ChatExchange& exchange) override;

  // The JSON body sent for an exchange.
  std::string request_body(const ChatExchange& exchange) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Forwards to another client and stores every response as a fixture.
class RecordingClient : public CompletionClient {
 public:
  RecordingClient(std::unique_ptr<CompletionClient> inner, std::string dir);
  std::string complete(const ChatExchange& exchange) override;

 private:
  std::unique_ptr<CompletionClient> inner_;
  std::string dir_;
};

// Fixture mode -> FixtureClient; live -> HttpCompletionClient (wrapped in a
// RecordingClient when `record` is set).
std::unique_ptr<CompletionClient> make_client(const ClientConfig& config);

}  // namespace define
