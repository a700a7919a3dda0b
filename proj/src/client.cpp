#include "define/client.hpp"

#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>

#include "define/errors.hpp"
#include "json.hpp"

namespace define {

namespace fs = std::filesystem;

FixtureClient::FixtureClient(std::string dir) : dir_(std::move(dir)) {
  if (dir_.empty()) throw ConfigError("fixture mode requires a fixtures directory");
  if (!fs::is_directory(dir_)) throw ConfigError("fixtures directory '" + dir_ + "' not found");
}

std::string FixtureClient::complete(const ChatExchange& exchange) {
  const auto hash = exchange.hash();
  const auto path = (fs::path(dir_) / (hash + ".json")).string();
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FixtureMissing("no recorded response for exchange " + hash + " in " + dir_);
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    const auto doc = nlohmann::json::parse(ss.str());
    return doc.at("response").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("fixture " + path + ": " + e.what());
  }
}

void write_fixture(const std::string& dir, const ChatExchange& exchange,
                   const std::string& response) {
  static std::mutex write_mutex;
  std::lock_guard lock(write_mutex);
  fs::create_directories(dir);
  nlohmann::ordered_json doc;
  doc["hash"] = exchange.hash();
  doc["system_message"] = exchange.system_message;
  doc["user_message"] = exchange.user_message;
  doc["response_format"] = exchange.response_format == ResponseFormat::json ? "json" : "text";
  doc["response"] = response;
  const auto path = (fs::path(dir) / (exchange.hash() + ".json")).string();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IOError("cannot write fixture '" + path + "'");
  out << doc.dump(2) << '\n';
}

RecordingClient::RecordingClient(std::unique_ptr<CompletionClient> inner, std::string dir)
    : inner_(std::move(inner)), dir_(std::move(dir)) {
  if (dir_.empty()) throw ConfigError("recording requires a fixtures directory");
}

std::string RecordingClient::complete(const ChatExchange& exchange) {
  auto response = inner_->complete(exchange);
  write_fixture(dir_, exchange, response);
  return response;
}

std::unique_ptr<CompletionClient> make_client(const ClientConfig& config) {
  if (config.mode == ClientMode::fixture) {
    return std::make_unique<FixtureClient>(config.fixtures_dir);
  }
  std::unique_ptr<CompletionClient> live = HttpCompletionClient::from_env(config);
  if (config.record) {
    return std::make_unique<RecordingClient>(std::move(live), config.fixtures_dir);
  }
  return live;
}

}  // namespace define
