#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace pubbie {

// Stable, machine-readable failure codes shared by every module. The string
// form (to_string) is what crosses the HTTP and CLI boundaries.
enum class ErrorCode {
  // store
  EmptyInput,
  HeaderMissingRequired,
  ExecError,
  InvalidLabel,
  StoreUnavailable,
  StoreCorrupt,
  // classifier
  EmptyCorpus,
  InvalidArgument,
  DimensionMismatch,
  LengthMismatch,
  Empty,
  TooSmall,
  // llm provider
  ProviderUnreachable,
  ProviderError,
  MockNoMatch,
  CacheMiss,
  IoError,
  ParseError,
  // sql guard
  NotSql,
  MultiStatement,
  ForbiddenStatement,
  ForbiddenTable,
  ForbiddenColumn,
  SyntaxError,
  // orchestrator
  UnparseableStageOutput,
  SqlGenerationFailed,
  NoResultToExport,
  TemplateError,
  // service
  SessionNotFound,
  SessionBusy,
  TextTooLong,
  PayloadTooLarge,
  ConfigError,
  NotFound,
  Internal,
};

std::string_view to_string(ErrorCode code);
std::optional<ErrorCode> error_code_from_string(std::string_view name);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  // Errors tied to an input location: SYNTAX_ERROR carries a byte offset,
  // PARSE_ERROR and ingest row errors carry a 1-based line number.
  Error(ErrorCode code, const std::string& message, std::size_t location)
      : std::runtime_error(message), code_(code), location_(location) {}

  ErrorCode code() const noexcept { return code_; }
  std::optional<std::size_t> location() const noexcept { return location_; }

 private:
  ErrorCode code_;
  std::optional<std::size_t> location_;
};

}  // namespace pubbie
