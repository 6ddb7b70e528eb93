#include "satbench/backend.hpp"

#include <openssl/evp.h>

#include <chrono>

#include <nlohmann/json.hpp>

#include "satbench/error.hpp"
#include "satbench/unicode.hpp"

namespace satbench {

using nlohmann::json;

std::string_view to_string(Role role) {
  switch (role) {
    case Role::kSystem:
      return "system";
    case Role::kUser:
      return "user";
    case Role::kAssistant:
      return "assistant";
  }
  return "user";
}

void DecodingParams::validate() const {
  if (!(temperature >= 0.0)) {
    throw BackendError(BackendFailure::kInvalidRequest, "temperature must be >= 0");
  }
  if (max_new_tokens < 1) {
    throw BackendError(BackendFailure::kInvalidRequest, "max_new_tokens must be >= 1");
  }
  if (context_budget_tokens <= max_new_tokens) {
    throw BackendError(BackendFailure::kInvalidRequest,
                       "context_budget_tokens must exceed max_new_tokens");
  }
}

std::string_view to_string(BackendKind kind) {
  switch (kind) {
    case BackendKind::kHttpEndpoint:
      return "http";
    case BackendKind::kMock:
      return "mock";
    case BackendKind::kReplay:
      return "replay";
  }
  return "mock";
}

std::optional<BackendKind> parse_backend_kind(std::string_view text) {
  const std::string lower = unicode::ascii_lower(text);
  if (lower == "http" || lower == "http_endpoint" || lower == "openai") {
    return BackendKind::kHttpEndpoint;
  }
  if (lower == "mock") return BackendKind::kMock;
  if (lower == "replay") return BackendKind::kReplay;
  return std::nullopt;
}

DecodingParams BackendDescriptor::decoding_for(Phase phase) const {
  DecodingParams params = decoding;
  if (phase == Phase::kAnalysis) params.max_new_tokens = analysis_max_new_tokens;
  return params;
}

void BackendDescriptor::validate() const {
  if (model_name.empty()) throw ConfigError("backend needs a model name");
  if ((kind == BackendKind::kHttpEndpoint) != endpoint_url.has_value()) {
    throw ConfigError("backend " + label() +
                      ": endpoint_url is required for http backends and invalid otherwise");
  }
  if (max_inflight == 0) throw ConfigError("backend " + label() + ": max_inflight must be >= 1");
  try {
    decoding.validate();
    decoding_for(Phase::kAnalysis).validate();
  } catch (const BackendError& e) {
    throw ConfigError("backend " + label() + ": " + e.what());
  }
}

namespace {

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * length);
  for (unsigned int i = 0; i < length; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0x0F]);
  }
  return out;
}

}  // namespace

ChatRequest::ChatRequest(std::string model_name, std::vector<ChatMessage> messages,
                         DecodingParams decoding)
    : model_name_(std::move(model_name)),
      messages_(std::move(messages)),
      decoding_(decoding) {
  decoding_.validate();
  bool has_user = false;
  for (const ChatMessage& message : messages_) {
    if (message.role == Role::kUser) has_user = true;
    for (const PayloadSpan& span : message.payload) {
      if (span.offset + span.length > message.content.size()) {
        throw BackendError(BackendFailure::kInvalidRequest, "payload span outside message");
      }
    }
  }
  if (!has_user) {
    throw BackendError(BackendFailure::kInvalidRequest, "request has no user message");
  }
  cache_key_ = sha256_hex(canonical_json());
}

std::string ChatRequest::canonical_json() const {
  json messages = json::array();
  for (const ChatMessage& message : messages_) {
    messages.push_back({{"role", to_string(message.role)}, {"content", message.content}});
  }
  const json canonical = {{"model", model_name_},
                          {"messages", std::move(messages)},
                          {"temperature", decoding_.temperature},
                          {"max_new_tokens", decoding_.max_new_tokens},
                          {"context_budget_tokens", decoding_.context_budget_tokens}};
  return canonical.dump(-1, ' ', false, json::error_handler_t::replace);
}

std::size_t estimate_tokens(std::string_view text) {
  return (unicode::code_point_count(text) + 2) / 3;
}

namespace {

std::size_t total_tokens(const std::vector<ChatMessage>& messages) {
  std::size_t total = 0;
  for (const ChatMessage& message : messages) total += estimate_tokens(message.content);
  return total;
}

// Removes up to `excess` tokens worth of code points from the tail of one span.
void cut_span_tail(ChatMessage& message, std::size_t span_index, std::size_t excess) {
  PayloadSpan& span = message.payload[span_index];
  const std::string_view payload =
      std::string_view(message.content).substr(span.offset, span.length);
  const std::size_t span_points = unicode::code_point_count(payload);
  const std::size_t message_tokens = estimate_tokens(message.content);
  const std::size_t message_points = unicode::code_point_count(message.content);
  const std::size_t target_tokens = message_tokens > excess ? message_tokens - excess : 0;
  const std::size_t target_points = 3 * target_tokens;
  std::size_t remove = message_points > target_points ? message_points - target_points : 0;
  remove = std::min(remove, span_points);
  if (remove == 0) return;

  const std::size_t keep_bytes = unicode::byte_offset_of(payload, span_points - remove);
  const std::size_t removed_bytes = span.length - keep_bytes;
  message.content.erase(span.offset + keep_bytes, removed_bytes);
  span.length = keep_bytes;
  for (PayloadSpan& other : message.payload) {
    if (other.offset > span.offset) other.offset -= removed_bytes;
  }
}

}  // namespace

FittedRequest fit_to_context(const ChatRequest& request) {
  const DecodingParams& decoding = request.decoding();
  const std::size_t limit = decoding.context_budget_tokens - decoding.max_new_tokens;
  std::size_t total = total_tokens(request.messages());
  if (total <= limit) return FittedRequest{request, false};

  std::vector<ChatMessage> messages = request.messages();
  for (SegmentKind kind : {SegmentKind::kArticle, SegmentKind::kAnalysis}) {
    for (ChatMessage& message : messages) {
      for (std::size_t s = message.payload.size(); s-- > 0;) {
        if (total <= limit) break;
        if (message.payload[s].kind != kind) continue;
        cut_span_tail(message, s, total - limit);
        total = total_tokens(messages);
      }
    }
  }
  if (total > limit) {
    throw BackendError(BackendFailure::kContextOverflow,
                       "instruction text needs " + std::to_string(total) +
                           " tokens, context allows " + std::to_string(limit));
  }
  return FittedRequest{ChatRequest(request.model_name(), std::move(messages), decoding), true};
}

std::vector<ChatMessage> to_messages(const RenderedPrompt& prompt, bool instruction_as_system) {
  std::vector<ChatMessage> messages;
  if (!instruction_as_system) {
    ChatMessage user{Role::kUser, {}, {}};
    for (const Segment& segment : prompt.segments) {
      if (segment.kind != SegmentKind::kInstruction) {
        user.payload.push_back({user.content.size(), segment.text.size(), segment.kind});
      }
      user.content += segment.text;
    }
    messages.push_back(std::move(user));
    return messages;
  }

  const std::string instruction = prompt.instruction_text();
  if (!instruction.empty()) messages.push_back({Role::kSystem, instruction, {}});
  ChatMessage user{Role::kUser, {}, {}};
  for (const Segment& segment : prompt.segments) {
    if (segment.kind == SegmentKind::kInstruction) continue;
    if (!user.content.empty()) user.content += "\n\n";
    user.payload.push_back({user.content.size(), segment.text.size(), segment.kind});
    user.content += segment.text;
  }
  messages.push_back(std::move(user));
  return messages;
}

ChatResponse ChatBackend::complete(const ChatRequest& request) {
  FittedRequest fitted = fit_to_context(request);
  const auto start = std::chrono::steady_clock::now();
  ChatResponse response = do_complete(fitted.request);
  const auto elapsed = std::chrono::steady_clock::now() - start;
  response.latency_ms = std::chrono::duration<double, std::milli>(elapsed).count();
  response.truncated_input = fitted.truncated;
  if (response.attempt_count < 1) response.attempt_count = 1;
  return response;
}

MockBackend::MockBackend(BackendDescriptor descriptor, Rule rule)
    : descriptor_(std::move(descriptor)), rule_(std::move(rule)) {
  if (!rule_) throw ConfigError("mock backend " + descriptor_.label() + " has no rule");
}

MockBackend::Rule MockBackend::constant(std::string response) {
  return [response = std::move(response)](const ChatRequest&) { return response; };
}

MockBackend::Rule MockBackend::marker(std::string marker, std::string hit, std::string miss) {
  return [marker = std::move(marker), hit = std::move(hit),
          miss = std::move(miss)](const ChatRequest& request) {
    for (const ChatMessage& message : request.messages()) {
      if (message.content.find(marker) != std::string::npos) return hit;
    }
    return miss;
  };
}

ChatResponse MockBackend::do_complete(const ChatRequest& request) {
  ++calls_;
  ChatResponse response;
  response.text = rule_(request);
  return response;
}

}  // namespace satbench
