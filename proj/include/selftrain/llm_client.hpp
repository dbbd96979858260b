#pragma once

#include <chrono>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>
#include <vector>

namespace selftrain::llm {

struct Message {
  std::string role;  // system | user | assistant
  std::string content;
  bool operator==(const Message&) const = default;
};

struct ChatRequest {
  std::string model;
  std::vector<Message> messages;
  std::optional<double> temperature;
  std::optional<double> top_p;
  std::optional<int> top_k;
  std::optional<int> max_tokens;

  /// Throws Error(format_error) on empty messages or an unknown role.
  void validate() const;
};

struct ChatResponse {
  std::string text;
  int attempts = 1;
};

struct EndpointConfig {
  std::string base_url;
  std::string api_key;
  std::chrono::milliseconds timeout{60000};
  int max_retries = 3;
  std::chrono::milliseconds backoff_base{500};
  int max_in_flight = 4;

  /// Reads CORE_LLM_ENDPOINT and CORE_LLM_API_KEY; nullopt when the endpoint
  /// variable is unset or empty.
  static std::optional<EndpointConfig> from_env();
  /// Throws Error(config_error).
  void validate() const;
};

/// Chat-completions request body: {"model","messages",...sampling fields}.
std::string build_request_body(const ChatRequest& req);
/// choices[0].message.content. Throws Error(bad_response_shape).
std::string parse_response_body(std::string_view body);

struct HttpReply {
  int status = 0;
  std::string body;
};

/// One POST. Implementations throw Error(timeout) when the deadline passes and
/// Error(io_error) for other connection failures.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual HttpReply post(const EndpointConfig& cfg, const std::string& body) = 0;
};

class HttpTransport final : public Transport {
 public:
  HttpReply post(const EndpointConfig& cfg, const std::string& body) override;
};

/// Offline transport. Replies are either scripted (consumed in order) or
/// produced by a responder from the request's last user message.
class MockTransport final : public Transport {
 public:
  using Responder = std::function<std::string(const std::string& last_user_message)>;
  struct Scripted {
    enum class Kind { reply, timeout } kind = Kind::reply;
    HttpReply reply;
  };

  MockTransport() = default;
  explicit MockTransport(Responder responder) : responder_(std::move(responder)) {}

  /// A 200 reply wrapping `text` in the chat-completions shape.
  void push_text(const std::string& text);
  void push_reply(int status, std::string body);
  void push_timeout();

  HttpReply post(const EndpointConfig& cfg, const std::string& body) override;

  int calls() const;
  std::vector<std::string> request_bodies() const;

  static std::string wrap_text(const std::string& text);

 private:
  mutable std::mutex mu_;
  std::deque<Scripted> script_;
  Responder responder_;
  std::vector<std::string> bodies_;
};

using Sleeper = std::function<void(std::chrono::milliseconds)>;

/// complete() retries 5xx replies and timeouts with delays of
/// backoff_base * 2^(n-1) and gives up after max_retries + 1 attempts. At most
/// max_in_flight requests run at once; other callers block.
class Client {
 public:
  Client(EndpointConfig cfg, std::shared_ptr<Transport> transport, Sleeper sleeper = {});

  /// Throws HttpStatusError (non-retryable status), Error(bad_response_shape)
  /// or Error(retries_exhausted).
  ChatResponse complete(const ChatRequest& req);

  const EndpointConfig& config() const { return cfg_; }
  /// Backoff delays actually slept, across all calls.
  std::vector<std::chrono::milliseconds> delays() const;

 private:
  EndpointConfig cfg_;
  std::shared_ptr<Transport> transport_;
  Sleeper sleeper_;
  std::unique_ptr<std::counting_semaphore<1024>> slots_;
  mutable std::mutex mu_;
  std::vector<std::chrono::milliseconds> delays_;
};

/// Single-turn helper: optional system prompt plus one user message.
ChatRequest single_turn(const std::string& model, const std::string& system, const std::string& user,
                        std::optional<double> temperature = std::nullopt);

}  // namespace selftrain::llm
