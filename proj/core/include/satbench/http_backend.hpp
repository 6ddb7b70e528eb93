#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <random>
#include <semaphore>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "satbench/backend.hpp"

namespace satbench {

struct HttpRequest {
  std::string url;
  std::vector<std::pair<std::string, std::string>> headers;
  std::string body;
};

struct HttpResponse {
  int status = 0;  // 0 when the transport failed before a status arrived
  std::string body;
  std::string transport_error;
};

/// Blocking POST. Implementations must be safe to call from several threads.
class HttpTransport {
 public:
  virtual ~HttpTransport() = default;
  virtual HttpResponse post(const HttpRequest& request) = 0;
};

/// cpp-httplib transport supporting http:// and https:// URLs.
std::unique_ptr<HttpTransport> make_httplib_transport(std::chrono::seconds timeout);

struct RetryPolicy {
  int max_attempts = 5;
  std::chrono::milliseconds base_delay{1000};
  double jitter = 0.2;
};

/// base_delay * 2^retry_index scaled by (1 + jitter * (2u - 1)) for u in [0, 1).
std::chrono::milliseconds backoff_delay(const RetryPolicy& policy, int retry_index,
                                        double unit_random);

/// Timeouts, connection failures, 408, 429 and 5xx.
bool is_retryable_status(int status);

/// OpenAI-compatible /v1/chat/completions request body.
std::string build_chat_completion_body(const ChatRequest& request);
/// Extracts choices[0].message.content. Throws BackendError(kMalformed).
std::string parse_chat_completion_body(std::string_view body);

/// Appends /v1/chat/completions unless the URL already ends in /chat/completions.
std::string chat_completions_url(std::string_view endpoint_url);

/// Name of the environment variable holding the bearer token.
inline constexpr std::string_view kApiKeyEnvVar = "SATIRE_BENCH_API_KEY";

class HttpBackend final : public ChatBackend {
 public:
  using Sleeper = std::function<void(std::chrono::milliseconds)>;

  HttpBackend(BackendDescriptor descriptor, std::shared_ptr<HttpTransport> transport,
              RetryPolicy retry = {}, std::string api_key = {}, Sleeper sleeper = {},
              std::uint64_t jitter_seed = 0x5a71be);

  const BackendDescriptor& descriptor() const noexcept override { return descriptor_; }

 protected:
  ChatResponse do_complete(const ChatRequest& request) override;

 private:
  double next_unit_random();

  BackendDescriptor descriptor_;
  std::shared_ptr<HttpTransport> transport_;
  RetryPolicy retry_;
  std::string api_key_;
  std::string url_;
  Sleeper sleeper_;
  std::counting_semaphore<> inflight_;
  std::mutex rng_mutex_;
  std::mt19937_64 rng_;
};

}  // namespace satbench
