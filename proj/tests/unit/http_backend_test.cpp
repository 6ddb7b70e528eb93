#include <gtest/gtest.h>

#include <atomic>
#include <deque>
#include <mutex>
#include <thread>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "satbench/error.hpp"
#include "satbench/http_backend.hpp"

namespace satbench {
namespace {

using namespace std::chrono_literals;

std::string completion(const std::string& content) {
  return nlohmann::json{{"choices", {{{"message", {{"role", "assistant"}, {"content", content}}}}}}}
      .dump();
}

BackendDescriptor http_descriptor(std::size_t max_inflight = 4) {
  BackendDescriptor d;
  d.kind = BackendKind::kHttpEndpoint;
  d.model_name = "jais-13b-chat";
  d.endpoint_url = "http://localhost:9";
  d.max_inflight = max_inflight;
  return d;
}

ChatRequest simple_request(const std::string& text = "Is this satire?") {
  return ChatRequest("jais-13b-chat", {{Role::kUser, text, {}}}, DecodingParams{});
}

// Replays a scripted list of responses and records what it was sent.
class ScriptedTransport : public HttpTransport {
 public:
  explicit ScriptedTransport(std::deque<HttpResponse> script) : script_(std::move(script)) {}

  HttpResponse post(const HttpRequest& request) override {
    std::lock_guard lock(mutex_);
    requests_.push_back(request);
    if (script_.empty()) return {200, completion("1"), {}};
    HttpResponse r = script_.front();
    script_.pop_front();
    return r;
  }
  std::vector<HttpRequest> requests() {
    std::lock_guard lock(mutex_);
    return requests_;
  }

 private:
  std::mutex mutex_;
  std::deque<HttpResponse> script_;
  std::vector<HttpRequest> requests_;
};

// Counts concurrent posts and keeps each one open briefly.
class ConcurrencyProbe : public HttpTransport {
 public:
  HttpResponse post(const HttpRequest&) override {
    const int now = ++active_;
    int seen = peak_.load();
    while (now > seen && !peak_.compare_exchange_weak(seen, now)) {
    }
    std::this_thread::sleep_for(5ms);
    --active_;
    return {200, completion("0"), {}};
  }
  int peak() const { return peak_.load(); }

 private:
  std::atomic<int> active_{0};
  std::atomic<int> peak_{0};
};

TEST(Http, BodyShapeAndUrl) {
  const nlohmann::json body = nlohmann::json::parse(build_chat_completion_body(simple_request()));
  EXPECT_EQ(body["model"], "jais-13b-chat");
  EXPECT_EQ(body["messages"][0]["role"], "user");
  EXPECT_EQ(body["temperature"], 0.0);
  EXPECT_EQ(body["max_tokens"], 16);
  EXPECT_EQ(chat_completions_url("http://h:8000"), "http://h:8000/v1/chat/completions");
  EXPECT_EQ(chat_completions_url("http://h:8000/"), "http://h:8000/v1/chat/completions");
  EXPECT_EQ(chat_completions_url("http://h/v1/chat/completions"), "http://h/v1/chat/completions");
}

TEST(Http, ParseResponseBody) {
  EXPECT_EQ(parse_chat_completion_body(completion("1")), "1");
  EXPECT_THROW(parse_chat_completion_body("{}"), BackendError);
  EXPECT_THROW(parse_chat_completion_body("not json"), BackendError);
}

TEST(Http, RetryableStatuses) {
  for (int s : {0, 408, 429, 500, 503, 599}) EXPECT_TRUE(is_retryable_status(s)) << s;
  for (int s : {200, 400, 401, 404, 422}) EXPECT_FALSE(is_retryable_status(s)) << s;
}

TEST(Http, BackoffDoublesWithinJitter) {
  RetryPolicy p;
  EXPECT_EQ(backoff_delay(p, 0, 0.5), 1000ms);
  EXPECT_EQ(backoff_delay(p, 3, 0.5), 8000ms);
  EXPECT_EQ(backoff_delay(p, 1, 0.0), 1600ms);
  EXPECT_EQ(backoff_delay(p, 1, 1.0), 2400ms);
}

TEST(Http, RetriesTransientThenSucceeds) {
  auto transport = std::make_shared<ScriptedTransport>(std::deque<HttpResponse>{
      {429, "slow down", {}}, {0, {}, "connection refused"}, {503, "", {}},
      {200, completion("1"), {}}});
  std::vector<std::chrono::milliseconds> sleeps;
  HttpBackend backend(http_descriptor(), transport, RetryPolicy{}, "secret",
                      [&](std::chrono::milliseconds d) { sleeps.push_back(d); });
  const ChatResponse r = backend.complete(simple_request());
  EXPECT_EQ(r.text, "1");
  EXPECT_EQ(r.attempt_count, 4);
  ASSERT_EQ(sleeps.size(), 3u);
  for (std::size_t i = 0; i < sleeps.size(); ++i) {
    const auto nominal = 1000.0 * (1 << i);
    EXPECT_GE(sleeps[i].count(), nominal * 0.8 - 1);
    EXPECT_LE(sleeps[i].count(), nominal * 1.2 + 1);
  }
  const auto requests = transport->requests();
  ASSERT_EQ(requests.size(), 4u);
  EXPECT_EQ(requests[0].url, "http://localhost:9/v1/chat/completions");
  bool has_auth = false;
  for (const auto& [k, v] : requests[0].headers) has_auth |= (k == "Authorization" && v == "Bearer secret");
  EXPECT_TRUE(has_auth);
}

TEST(Http, ExhaustsAfterMaxAttempts) {
  auto transport = std::make_shared<ScriptedTransport>(
      std::deque<HttpResponse>(10, HttpResponse{500, "boom", {}}));
  RetryPolicy retry;
  retry.max_attempts = 3;
  HttpBackend backend(http_descriptor(), transport, retry, {}, [](auto) {});
  try {
    backend.complete(simple_request());
    FAIL();
  } catch (const BackendError& e) {
    EXPECT_EQ(e.failure(), BackendFailure::kExhausted);
  }
  EXPECT_EQ(transport->requests().size(), 3u);
}

TEST(Http, NonRetryableRejectsImmediately) {
  auto transport =
      std::make_shared<ScriptedTransport>(std::deque<HttpResponse>{{401, "bad key", {}}});
  HttpBackend backend(http_descriptor(), transport, RetryPolicy{}, {}, [](auto) {});
  try {
    backend.complete(simple_request());
    FAIL();
  } catch (const BackendError& e) {
    EXPECT_EQ(e.failure(), BackendFailure::kRejected);
    EXPECT_EQ(e.http_status(), 401);
  }
  EXPECT_EQ(transport->requests().size(), 1u);
}

TEST(Http, InflightBoundHolds) {
  auto probe = std::make_shared<ConcurrencyProbe>();
  HttpBackend backend(http_descriptor(3), probe);
  std::vector<std::thread> threads;
  for (int t = 0; t < 12; ++t) {
    threads.emplace_back([&] {
      for (int i = 0; i < 3; ++i) backend.complete(simple_request());
    });
  }
  for (auto& t : threads) t.join();
  EXPECT_LE(probe->peak(), 3);
  EXPECT_GE(probe->peak(), 1);
}

TEST(Http, RealTransportAgainstLocalServer) {
  httplib::Server server;
  std::atomic<int> hits{0};
  server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    const int n = ++hits;
    if (n == 1) {
      res.status = 503;
      return;
    }
    const auto body = nlohmann::json::parse(req.body);
    const std::string echo = body["messages"][0]["content"];
    res.set_content(completion(echo == "ping" ? "0" : "1"), "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  ASSERT_GT(port, 0);
  std::thread listener([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  BackendDescriptor d = http_descriptor();
  d.endpoint_url = "http://127.0.0.1:" + std::to_string(port);
  HttpBackend backend(d, make_httplib_transport(5s), RetryPolicy{}, {}, [](auto) {});
  const ChatResponse r = backend.complete(simple_request("ping"));
  EXPECT_EQ(r.text, "0");
  EXPECT_EQ(r.attempt_count, 2);

  server.stop();
  listener.join();
}

TEST(Http, ConnectionRefusedIsTransient) {
  BackendDescriptor d = http_descriptor();
  d.endpoint_url = "http://127.0.0.1:1";
  RetryPolicy retry;
  retry.max_attempts = 2;
  HttpBackend backend(d, make_httplib_transport(1s), retry, {}, [](auto) {});
  try {
    backend.complete(simple_request());
    FAIL();
  } catch (const BackendError& e) {
    EXPECT_EQ(e.failure(), BackendFailure::kExhausted);
  }
}

}  // namespace
}  // namespace satbench
