#include "satbench/http_backend.hpp"

#include <cmath>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "satbench/error.hpp"

namespace satbench {

using nlohmann::json;

namespace {

constexpr std::string_view kChatCompletionsPath = "/v1/chat/completions";

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

SplitUrl split_url(std::string_view url) {
  const std::size_t scheme_end = url.find("://");
  if (scheme_end == std::string_view::npos) {
    throw BackendError(BackendFailure::kInvalidRequest, "endpoint URL needs a scheme: " +
                                                            std::string(url));
  }
  const std::size_t path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string_view::npos) return {std::string(url), "/"};
  return {std::string(url.substr(0, path_start)), std::string(url.substr(path_start))};
}

class HttplibTransport final : public HttpTransport {
 public:
  explicit HttplibTransport(std::chrono::seconds timeout) : timeout_(timeout) {}

  HttpResponse post(const HttpRequest& request) override {
    const SplitUrl url = split_url(request.url);
    // One client per call: httplib::Client is not safe for concurrent use.
    httplib::Client client(url.origin);
    client.set_connection_timeout(timeout_);
    client.set_read_timeout(timeout_);
    client.set_write_timeout(timeout_);
    httplib::Headers headers;
    for (const auto& [name, value] : request.headers) headers.emplace(name, value);

    HttpResponse out;
    auto result = client.Post(url.path, headers, request.body, "application/json");
    if (!result) {
      out.transport_error = httplib::to_string(result.error());
      return out;
    }
    out.status = result->status;
    out.body = result->body;
    return out;
  }

 private:
  std::chrono::seconds timeout_;
};

}  // namespace

std::unique_ptr<HttpTransport> make_httplib_transport(std::chrono::seconds timeout) {
  return std::make_unique<HttplibTransport>(timeout);
}

std::chrono::milliseconds backoff_delay(const RetryPolicy& policy, int retry_index,
                                        double unit_random) {
  const double base = static_cast<double>(policy.base_delay.count()) * std::ldexp(1.0, retry_index);
  const double scale = 1.0 + policy.jitter * (2.0 * unit_random - 1.0);
  return std::chrono::milliseconds(std::llround(base * scale));
}

bool is_retryable_status(int status) {
  return status == 0 || status == 408 || status == 429 || (status >= 500 && status <= 599);
}

std::string build_chat_completion_body(const ChatRequest& request) {
  json messages = json::array();
  for (const ChatMessage& message : request.messages()) {
    messages.push_back({{"role", to_string(message.role)}, {"content", message.content}});
  }
  const json body = {{"model", request.model_name()},
                     {"messages", std::move(messages)},
                     {"temperature", request.decoding().temperature},
                     {"max_tokens", request.decoding().max_new_tokens}};
  return body.dump(-1, ' ', false, json::error_handler_t::replace);
}

std::string parse_chat_completion_body(std::string_view body) {
  json parsed;
  try {
    parsed = json::parse(body);
  } catch (const json::parse_error& e) {
    throw BackendError(BackendFailure::kMalformed,
                       std::string("chat completion body is not JSON: ") + e.what());
  }
  try {
    const json& content = parsed.at("choices").at(0).at("message").at("content");
    if (content.is_null()) return {};
    return content.get<std::string>();
  } catch (const json::exception& e) {
    throw BackendError(BackendFailure::kMalformed,
                       std::string("chat completion body lacks choices[0].message.content: ") +
                           e.what());
  }
}

std::string chat_completions_url(std::string_view endpoint_url) {
  std::string url(endpoint_url);
  while (!url.empty() && url.back() == '/') url.pop_back();
  if (url.ends_with("/chat/completions")) return url;
  if (url.ends_with("/v1")) return url + "/chat/completions";
  return url + std::string(kChatCompletionsPath);
}

HttpBackend::HttpBackend(BackendDescriptor descriptor, std::shared_ptr<HttpTransport> transport,
                         RetryPolicy retry, std::string api_key, Sleeper sleeper,
                         std::uint64_t jitter_seed)
    : descriptor_(std::move(descriptor)),
      transport_(std::move(transport)),
      retry_(retry),
      api_key_(std::move(api_key)),
      sleeper_(std::move(sleeper)),
      inflight_(static_cast<std::ptrdiff_t>(descriptor_.max_inflight)),
      rng_(jitter_seed) {
  descriptor_.validate();
  if (descriptor_.kind != BackendKind::kHttpEndpoint) {
    throw ConfigError("HttpBackend needs an http descriptor");
  }
  if (!transport_) throw ConfigError("HttpBackend needs a transport");
  if (retry_.max_attempts < 1) throw ConfigError("retry max_attempts must be >= 1");
  url_ = chat_completions_url(*descriptor_.endpoint_url);
  if (!sleeper_) {
    sleeper_ = [](std::chrono::milliseconds delay) { std::this_thread::sleep_for(delay); };
  }
}

double HttpBackend::next_unit_random() {
  std::lock_guard lock(rng_mutex_);
  return static_cast<double>(rng_() >> 11) * 0x1.0p-53;
}

ChatResponse HttpBackend::do_complete(const ChatRequest& request) {
  HttpRequest http;
  http.url = url_;
  http.body = build_chat_completion_body(request);
  http.headers.emplace_back("Accept", "application/json");
  if (!api_key_.empty()) http.headers.emplace_back("Authorization", "Bearer " + api_key_);

  std::string last_failure;
  for (int attempt = 1; attempt <= retry_.max_attempts; ++attempt) {
    HttpResponse response;
    {
      inflight_.acquire();
      try {
        response = transport_->post(http);
      } catch (...) {
        inflight_.release();
        throw;
      }
      inflight_.release();
    }

    if (response.status >= 200 && response.status < 300) {
      ChatResponse out;
      out.text = parse_chat_completion_body(response.body);
      out.attempt_count = attempt;
      return out;
    }
    last_failure = response.status == 0
                       ? "transport error: " + response.transport_error
                       : "HTTP " + std::to_string(response.status);
    if (!is_retryable_status(response.status)) {
      throw BackendError(BackendFailure::kRejected,
                         descriptor_.label() + ": " + last_failure + ": " +
                             response.body.substr(0, 200),
                         response.status);
    }
    if (attempt < retry_.max_attempts) {
      sleeper_(backoff_delay(retry_, attempt - 1, next_unit_random()));
    }
  }
  throw BackendError(BackendFailure::kExhausted,
                     descriptor_.label() + ": gave up after " +
                         std::to_string(retry_.max_attempts) + " attempts, last " + last_failure);
}

}  // namespace satbench
