#pragma once

#include <atomic>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "satbench/prompt.hpp"

namespace satbench {

enum class Role { kSystem, kUser, kAssistant };

std::string_view to_string(Role role);

/// Byte range inside a message that holds article or analysis payload and
/// may be cut when the request exceeds its context budget.
struct PayloadSpan {
  std::size_t offset = 0;
  std::size_t length = 0;
  SegmentKind kind = SegmentKind::kArticle;
};

struct ChatMessage {
  Role role = Role::kUser;
  std::string content;
  std::vector<PayloadSpan> payload;
};

struct DecodingParams {
  double temperature = 0.0;
  std::size_t max_new_tokens = 16;
  std::size_t context_budget_tokens = 2048;

  /// Throws BackendError(kInvalidRequest).
  void validate() const;
};

enum class BackendKind { kHttpEndpoint, kMock, kReplay };

std::string_view to_string(BackendKind kind);
std::optional<BackendKind> parse_backend_kind(std::string_view text);

struct BackendDescriptor {
  BackendKind kind = BackendKind::kMock;
  /// Label used in run records and reports; defaults to model_name.
  std::string name;
  std::string model_name;
  std::optional<std::string> endpoint_url;
  /// Decoding for zero-shot and prediction calls.
  DecodingParams decoding;
  /// max_new_tokens for the CoT analysis call.
  std::size_t analysis_max_new_tokens = 512;
  std::size_t max_inflight = 4;

  const std::string& label() const noexcept { return name.empty() ? model_name : name; }
  DecodingParams decoding_for(Phase phase) const;

  /// endpoint_url present iff kind is kHttpEndpoint. Throws ConfigError.
  void validate() const;
};

class ChatRequest {
 public:
  /// Throws BackendError(kInvalidRequest) without a user message or with
  /// invalid decoding parameters.
  ChatRequest(std::string model_name, std::vector<ChatMessage> messages,
              DecodingParams decoding);

  const std::string& model_name() const noexcept { return model_name_; }
  const std::vector<ChatMessage>& messages() const noexcept { return messages_; }
  const DecodingParams& decoding() const noexcept { return decoding_; }
  /// Hex SHA-256 over the canonical serialization of model, messages and decoding.
  const std::string& cache_key() const noexcept { return cache_key_; }

  /// Canonical JSON used for the key and for recordings.
  std::string canonical_json() const;

 private:
  std::string model_name_;
  std::vector<ChatMessage> messages_;
  DecodingParams decoding_;
  std::string cache_key_;
};

struct ChatResponse {
  std::string text;
  double latency_ms = 0.0;
  bool truncated_input = false;
  int attempt_count = 1;
};

/// ceil(code_points / 3).
std::size_t estimate_tokens(std::string_view text);

struct FittedRequest {
  ChatRequest request;
  bool truncated = false;
};

/// Cuts payload tails (article first, then analysis) until the request fits
/// context_budget_tokens - max_new_tokens. Instruction text is never cut;
/// throws BackendError(kContextOverflow) if it alone does not fit.
FittedRequest fit_to_context(const ChatRequest& request);

/// Builds the messages for a rendered prompt: a single user message, or the
/// instruction as a system message followed by the payload as the user message.
std::vector<ChatMessage> to_messages(const RenderedPrompt& prompt, bool instruction_as_system);

class ChatBackend {
 public:
  virtual ~ChatBackend() = default;

  /// Applies the context guard, times the call and forwards to do_complete().
  ChatResponse complete(const ChatRequest& request);

  virtual const BackendDescriptor& descriptor() const noexcept = 0;

 protected:
  virtual ChatResponse do_complete(const ChatRequest& request) = 0;
};

/// Scripted backend: the response is a pure function of the request.
class MockBackend final : public ChatBackend {
 public:
  using Rule = std::function<std::string(const ChatRequest&)>;

  MockBackend(BackendDescriptor descriptor, Rule rule);

  const BackendDescriptor& descriptor() const noexcept override { return descriptor_; }
  std::size_t calls() const noexcept { return calls_.load(); }

  static Rule constant(std::string response);
  /// `hit` when any message contains `marker`, otherwise `miss`.
  static Rule marker(std::string marker, std::string hit, std::string miss);

 protected:
  ChatResponse do_complete(const ChatRequest& request) override;

 private:
  BackendDescriptor descriptor_;
  Rule rule_;
  std::atomic<std::size_t> calls_{0};
};

}  // namespace satbench
