#include "pubbie/llm.hpp"

#include "pubbie/strings.hpp"

namespace pubbie::llm {

std::string_view to_string(StageId stage) {
  switch (stage) {
    case StageId::A1: return "A1";
    case StageId::A2: return "A2";
    case StageId::B: return "B";
    case StageId::C: return "C";
    case StageId::D: return "D";
    case StageId::E: return "E";
  }
  return "B";
}

std::optional<StageId> stage_from_string(std::string_view text) {
  const auto t = strings::to_upper(strings::trim(text));
  for (auto s : {StageId::A1, StageId::A2, StageId::B, StageId::C, StageId::D, StageId::E}) {
    if (t == to_string(s)) return s;
  }
  return std::nullopt;
}

std::string_view to_string(Role role) {
  switch (role) {
    case Role::System: return "system";
    case Role::User: return "user";
    case Role::Assistant: return "assistant";
  }
  return "user";
}

std::string_view to_string(FinishReason reason) {
  switch (reason) {
    case FinishReason::Stop: return "stop";
    case FinishReason::Length: return "length";
    case FinishReason::Error: return "error";
  }
  return "error";
}

StageRequest StageRequest::for_stage(StageId stage, std::vector<ChatMessage> messages) {
  StageRequest r;
  r.stage = stage;
  r.messages = std::move(messages);
  switch (stage) {
    case StageId::A1:
      r.temperature = 0.0;
      r.max_tokens = 4;
      break;
    case StageId::B:
      r.temperature = 0.0;
      r.max_tokens = 8;
      break;
    case StageId::D:
      r.temperature = 0.0;
      r.max_tokens = 256;
      break;
    case StageId::A2:
      r.temperature = 0.0;
      r.max_tokens = 512;
      break;
    case StageId::C:
    case StageId::E:
      r.temperature = 0.7;
      r.max_tokens = 512;
      break;
  }
  return r;
}

void StageRequest::validate() const {
  if (messages.empty()) throw Error(ErrorCode::InvalidArgument, "stage request has no messages");
  if (messages.front().role != Role::System) {
    throw Error(ErrorCode::InvalidArgument, "first message of a stage request must be the system prompt");
  }
  if (temperature < 0.0) throw Error(ErrorCode::InvalidArgument, "temperature must be >= 0");
}

std::string_view StageRequest::last_user_message() const {
  for (auto it = messages.rbegin(); it != messages.rend(); ++it) {
    if (it->role == Role::User) return it->content;
  }
  return {};
}

void check_embedding_width(const std::vector<Embedding>& vectors) {
  for (const auto& v : vectors) {
    if (v.size() != kEmbeddingDim) {
      throw Error(ErrorCode::DimensionMismatch, "provider returned a " + std::to_string(v.size()) +
                                                    "-dim embedding, expected " +
                                                    std::to_string(kEmbeddingDim));
    }
  }
}

}  // namespace pubbie::llm
