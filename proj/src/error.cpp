#include "pubbie/error.hpp"

#include <array>
#include <utility>

namespace pubbie {
namespace {

constexpr std::array<std::pair<ErrorCode, std::string_view>, 35> kNames{{
    {ErrorCode::EmptyInput, "EMPTY_INPUT"},
    {ErrorCode::HeaderMissingRequired, "HEADER_MISSING_REQUIRED"},
    {ErrorCode::ExecError, "EXEC_ERROR"},
    {ErrorCode::InvalidLabel, "INVALID_LABEL"},
    {ErrorCode::StoreUnavailable, "STORE_UNAVAILABLE"},
    {ErrorCode::StoreCorrupt, "STORE_CORRUPT"},
    {ErrorCode::EmptyCorpus, "EMPTY_CORPUS"},
    {ErrorCode::InvalidArgument, "INVALID_ARGUMENT"},
    {ErrorCode::DimensionMismatch, "DIMENSION_MISMATCH"},
    {ErrorCode::LengthMismatch, "LENGTH_MISMATCH"},
    {ErrorCode::Empty, "EMPTY"},
    {ErrorCode::TooSmall, "TOO_SMALL"},
    {ErrorCode::ProviderUnreachable, "PROVIDER_UNREACHABLE"},
    {ErrorCode::ProviderError, "PROVIDER_ERROR"},
    {ErrorCode::MockNoMatch, "MOCK_NO_MATCH"},
    {ErrorCode::CacheMiss, "CACHE_MISS"},
    {ErrorCode::IoError, "IO_ERROR"},
    {ErrorCode::ParseError, "PARSE_ERROR"},
    {ErrorCode::NotSql, "NOT_SQL"},
    {ErrorCode::MultiStatement, "MULTI_STATEMENT"},
    {ErrorCode::ForbiddenStatement, "FORBIDDEN_STATEMENT"},
    {ErrorCode::ForbiddenTable, "FORBIDDEN_TABLE"},
    {ErrorCode::ForbiddenColumn, "FORBIDDEN_COLUMN"},
    {ErrorCode::SyntaxError, "SYNTAX_ERROR"},
    {ErrorCode::UnparseableStageOutput, "UNPARSEABLE_STAGE_OUTPUT"},
    {ErrorCode::SqlGenerationFailed, "SQL_GENERATION_FAILED"},
    {ErrorCode::NoResultToExport, "NO_RESULT_TO_EXPORT"},
    {ErrorCode::TemplateError, "TEMPLATE_ERROR"},
    {ErrorCode::SessionNotFound, "SESSION_NOT_FOUND"},
    {ErrorCode::SessionBusy, "SESSION_BUSY"},
    {ErrorCode::TextTooLong, "TEXT_TOO_LONG"},
    {ErrorCode::PayloadTooLarge, "PAYLOAD_TOO_LARGE"},
    {ErrorCode::ConfigError, "CONFIG_ERROR"},
    {ErrorCode::NotFound, "NOT_FOUND"},
    {ErrorCode::Internal, "INTERNAL"},
}};

}  // namespace

std::string_view to_string(ErrorCode code) {
  for (const auto& [c, name] : kNames) {
    if (c == code) return name;
  }
  return "INTERNAL";
}

std::optional<ErrorCode> error_code_from_string(std::string_view name) {
  for (const auto& [c, n] : kNames) {
    if (n == name) return c;
  }
  return std::nullopt;
}

}  // namespace pubbie
