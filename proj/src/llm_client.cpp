#include "selftrain/llm_client.hpp"

#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "selftrain/error.hpp"

namespace selftrain::llm {

using nlohmann::json;

void ChatRequest::validate() const {
  if (messages.empty()) throw Error(Errc::format_error, "chat request has no messages");
  for (const auto& m : messages)
    if (m.role != "system" && m.role != "user" && m.role != "assistant")
      throw Error(Errc::format_error, "invalid message role '" + m.role + "'");
}

std::optional<EndpointConfig> EndpointConfig::from_env() {
  const char* url = std::getenv("CORE_LLM_ENDPOINT");
  if (!url || !*url) return std::nullopt;
  EndpointConfig cfg;
  cfg.base_url = url;
  if (const char* key = std::getenv("CORE_LLM_API_KEY")) cfg.api_key = key;
  return cfg;
}

void EndpointConfig::validate() const {
  if (base_url.empty()) throw Error(Errc::config_error, "llm endpoint url is empty");
  if (max_retries < 0) throw Error(Errc::config_error, "max_retries must be >= 0");
  if (timeout.count() <= 0) throw Error(Errc::config_error, "timeout must be > 0");
  if (max_in_flight < 1 || max_in_flight > 1024) throw Error(Errc::config_error, "max_in_flight must be in [1, 1024]");
}

std::string build_request_body(const ChatRequest& req) {
  json j;
  j["model"] = req.model;
  j["messages"] = json::array();
  for (const auto& m : req.messages) j["messages"].push_back({{"role", m.role}, {"content", m.content}});
  if (req.temperature) j["temperature"] = *req.temperature;
  if (req.top_p) j["top_p"] = *req.top_p;
  if (req.top_k) j["top_k"] = *req.top_k;
  if (req.max_tokens) j["max_tokens"] = *req.max_tokens;
  return j.dump();
}

std::string parse_response_body(std::string_view body) {
  json j = json::parse(body, nullptr, false);
  if (j.is_discarded()) throw Error(Errc::bad_response_shape, "response is not JSON");
  const json* content = nullptr;
  if (j.is_object() && j.contains("choices") && j["choices"].is_array() && !j["choices"].empty()) {
    const json& first = j["choices"][0];
    if (first.is_object() && first.contains("message") && first["message"].is_object() &&
        first["message"].contains("content"))
      content = &first["message"]["content"];
  }
  if (!content || !content->is_string())
    throw Error(Errc::bad_response_shape, "response lacks choices[0].message.content");
  return content->get<std::string>();
}

HttpReply HttpTransport::post(const EndpointConfig& cfg, const std::string& body) {
  std::string origin = cfg.base_url;
  std::string path = "/";
  if (auto scheme = origin.find("://"); scheme != std::string::npos) {
    if (auto slash = origin.find('/', scheme + 3); slash != std::string::npos) {
      path = origin.substr(slash);
      origin.resize(slash);
    }
  }
  httplib::Client cli(origin);
  auto secs = std::chrono::duration_cast<std::chrono::seconds>(cfg.timeout);
  auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(cfg.timeout - secs);
  cli.set_connection_timeout(secs.count(), usecs.count());
  cli.set_read_timeout(secs.count(), usecs.count());
  cli.set_write_timeout(secs.count(), usecs.count());
  httplib::Headers headers;
  if (!cfg.api_key.empty()) headers.emplace("Authorization", "Bearer " + cfg.api_key);
  auto res = cli.Post(path, headers, body, "application/json");
  if (!res) {
    auto err = res.error();
    if (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read || err == httplib::Error::Write)
      throw Error(Errc::timeout, "request to " + cfg.base_url + " timed out (" + httplib::to_string(err) + ")");
    throw Error(Errc::io_error, "request to " + cfg.base_url + " failed: " + httplib::to_string(err));
  }
  return {res->status, res->body};
}

std::string MockTransport::wrap_text(const std::string& text) {
  json j = {{"choices", json::array({{{"index", 0}, {"message", {{"role", "assistant"}, {"content", text}}}}})}};
  return j.dump();
}

void MockTransport::push_text(const std::string& text) { push_reply(200, wrap_text(text)); }

void MockTransport::push_reply(int status, std::string body) {
  std::lock_guard lock(mu_);
  script_.push_back({Scripted::Kind::reply, {status, std::move(body)}});
}

void MockTransport::push_timeout() {
  std::lock_guard lock(mu_);
  script_.push_back({Scripted::Kind::timeout, {}});
}

HttpReply MockTransport::post(const EndpointConfig&, const std::string& body) {
  std::unique_lock lock(mu_);
  bodies_.push_back(body);
  if (!script_.empty()) {
    Scripted s = std::move(script_.front());
    script_.pop_front();
    if (s.kind == Scripted::Kind::timeout) throw Error(Errc::timeout, "mock transport timeout");
    return s.reply;
  }
  if (!responder_) throw Error(Errc::io_error, "mock transport has no scripted reply left");
  lock.unlock();
  std::string last_user;
  json j = json::parse(body);
  for (const auto& m : j.at("messages"))
    if (m.at("role") == "user") last_user = m.at("content").get<std::string>();
  return {200, wrap_text(responder_(last_user))};
}

int MockTransport::calls() const {
  std::lock_guard lock(mu_);
  return static_cast<int>(bodies_.size());
}

std::vector<std::string> MockTransport::request_bodies() const {
  std::lock_guard lock(mu_);
  return bodies_;
}

Client::Client(EndpointConfig cfg, std::shared_ptr<Transport> transport, Sleeper sleeper)
    : cfg_(std::move(cfg)), transport_(std::move(transport)), sleeper_(std::move(sleeper)) {
  cfg_.validate();
  if (!sleeper_) sleeper_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
  slots_ = std::make_unique<std::counting_semaphore<1024>>(cfg_.max_in_flight);
}

std::vector<std::chrono::milliseconds> Client::delays() const {
  std::lock_guard lock(mu_);
  return delays_;
}

ChatResponse Client::complete(const ChatRequest& req) {
  req.validate();
  const std::string body = build_request_body(req);
  std::string last_failure;
  for (int attempt = 1; attempt <= cfg_.max_retries + 1; ++attempt) {
    if (attempt > 1) {
      auto delay = cfg_.backoff_base * (1LL << std::min(attempt - 2, 20));
      {
        std::lock_guard lock(mu_);
        delays_.push_back(delay);
      }
      sleeper_(delay);
    }
    HttpReply reply;
    slots_->acquire();
    try {
      reply = transport_->post(cfg_, body);
    } catch (const Error& e) {
      slots_->release();
      if (e.code() != Errc::timeout) throw;
      last_failure = e.what();
      continue;
    }
    slots_->release();
    if (reply.status >= 500) {
      last_failure = "HTTP status " + std::to_string(reply.status);
      continue;
    }
    if (reply.status < 200 || reply.status >= 300) throw HttpStatusError(reply.status, reply.body);
    return {parse_response_body(reply.body), attempt};
  }
  throw Error(Errc::retries_exhausted, "gave up after " + std::to_string(cfg_.max_retries + 1) +
                                           " attempts; last failure: " + last_failure);
}

ChatRequest single_turn(const std::string& model, const std::string& system, const std::string& user,
                        std::optional<double> temperature) {
  ChatRequest req;
  req.model = model;
  if (!system.empty()) req.messages.push_back({"system", system});
  req.messages.push_back({"user", user});
  req.temperature = temperature;
  return req;
}

}  // namespace selftrain::llm
