#include <random>
#include <sstream>

#include "pubbie/crypto.hpp"
#include "pubbie/file_util.hpp"
#include "pubbie/llm.hpp"
#include "pubbie/strings.hpp"
#include "rng.hpp"

namespace pubbie::llm {
namespace {

std::string escape(std::string_view field) {
  std::string out;
  for (std::size_t i = 0; i < field.size(); ++i) {
    const char c = field[i];
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '|': out += "\\|"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      case ' ':
        // Edge spaces would be trimmed away on load.
        out += (i == 0 || i + 1 == field.size()) ? "\\s" : " ";
        break;
      default: out.push_back(c);
    }
  }
  return out;
}

std::string unescape(std::string_view raw, std::size_t line) {
  std::string out;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (raw[i] != '\\') {
      out.push_back(raw[i]);
      continue;
    }
    if (++i >= raw.size()) {
      throw Error(ErrorCode::ParseError, "script line " + std::to_string(line) + ": dangling backslash", line);
    }
    switch (raw[i]) {
      case '\\': out.push_back('\\'); break;
      case '|': out.push_back('|'); break;
      case 'n': out.push_back('\n'); break;
      case 'r': out.push_back('\r'); break;
      case 't': out.push_back('\t'); break;
      case 's': out.push_back(' '); break;
      default:
        throw Error(ErrorCode::ParseError,
                    "script line " + std::to_string(line) + ": unknown escape '\\" + raw[i] + "'", line);
    }
  }
  return out;
}

std::vector<std::string_view> split_unescaped_pipes(std::string_view line) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '\\') {
      ++i;
      continue;
    }
    if (line[i] == '|') {
      parts.push_back(line.substr(start, i - start));
      start = i + 1;
    }
  }
  parts.push_back(line.substr(start));
  return parts;
}

}  // namespace

std::string serialize_script(const std::vector<ScriptEntry>& entries) {
  std::string out;
  for (const auto& e : entries) {
    out += e.stage ? std::string(to_string(*e.stage)) : std::string("*");
    out += " | ";
    out += escape(e.matcher);
    out += " | ";
    out += escape(e.response);
    out.push_back('\n');
  }
  return out;
}

std::vector<ScriptEntry> parse_script(std::string_view text) {
  std::vector<ScriptEntry> entries;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const auto end = text.find('\n', pos);
    std::string_view line = text.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos);
    pos = end == std::string_view::npos ? text.size() : end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    const auto trimmed = strings::trim(line);
    if (trimmed.empty() || trimmed.front() == '#') continue;

    const auto parts = split_unescaped_pipes(line);
    if (parts.size() != 3) {
      throw Error(ErrorCode::ParseError,
                  "script line " + std::to_string(line_no) + ": expected 'stage | matcher | response'", line_no);
    }
    ScriptEntry entry;
    const auto stage_text = strings::trim(parts[0]);
    if (stage_text != "*") {
      entry.stage = stage_from_string(stage_text);
      if (!entry.stage) {
        throw Error(ErrorCode::ParseError,
                    "script line " + std::to_string(line_no) + ": unknown stage '" + std::string(stage_text) + "'",
                    line_no);
      }
    }
    entry.matcher = unescape(strings::trim(parts[1]), line_no);
    entry.response = unescape(strings::trim(parts[2]), line_no);
    entries.push_back(std::move(entry));
  }
  return entries;
}

MockScript load_script(const std::filesystem::path& path) {
  MockScript script;
  script.entries = parse_script(read_file(path));
  return script;
}

void save_script(const std::filesystem::path& path, const std::vector<ScriptEntry>& entries) {
  write_file(path, serialize_script(entries));
}

std::vector<ScriptEntry> script_from_log(const std::vector<CallRecord>& log) {
  std::vector<ScriptEntry> entries;
  entries.reserve(log.size());
  for (const auto& call : log) {
    entries.push_back({call.request.stage, std::string(call.request.last_user_message()), call.response.text});
  }
  return entries;
}

Embedding pseudo_embedding(std::string_view text) {
  const auto digest = sha256_hex(text);
  std::uint64_t seed = 0;
  for (std::size_t i = 0; i < 16; ++i) {
    const char c = digest[i];
    seed = (seed << 4) | static_cast<std::uint64_t>(c <= '9' ? c - '0' : c - 'a' + 10);
  }
  std::mt19937_64 rng(seed);
  Embedding v(kEmbeddingDim);
  for (double& x : v) x = 2.0 * detail::unit_double(rng) - 1.0;
  return v;
}

MockProvider::MockProvider(std::vector<ScriptEntry> entries) : entries_(std::move(entries)) {}

void MockProvider::add(ScriptEntry entry) {
  std::lock_guard lock(mu_);
  entries_.push_back(std::move(entry));
}

void MockProvider::inject_failure(std::optional<StageId> stage, ErrorCode code, std::size_t times) {
  std::lock_guard lock(mu_);
  faults_.push_back({stage, code, times});
}

StageCompletion MockProvider::complete(const StageRequest& request) {
  request.validate();
  std::lock_guard lock(mu_);

  for (auto& fault : faults_) {
    if (fault.remaining > 0 && (!fault.stage || *fault.stage == request.stage)) {
      --fault.remaining;
      throw Error(fault.code, "injected failure at stage " + std::string(to_string(request.stage)));
    }
  }

  const auto last_user = request.last_user_message();
  for (const auto& entry : entries_) {
    if (entry.stage && *entry.stage != request.stage) continue;
    if (last_user.find(entry.matcher) == std::string_view::npos) continue;
    StageCompletion out;
    out.text = entry.response == "{echo}" ? std::string(last_user) : entry.response;
    out.finish_reason = FinishReason::Stop;
    log_.push_back({request, out});
    return out;
  }
  throw Error(ErrorCode::MockNoMatch, "no scripted response for stage " +
                                          std::string(to_string(request.stage)) + " and message '" +
                                          std::string(last_user.substr(0, 120)) + "'");
}

std::vector<Embedding> MockProvider::embed(const std::vector<std::string>& texts) {
  if (texts.empty()) throw Error(ErrorCode::InvalidArgument, "embed needs at least one text");
  std::vector<Embedding> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(pseudo_embedding(t));
  return out;
}

std::vector<CallRecord> MockProvider::call_log() const {
  std::lock_guard lock(mu_);
  return log_;
}

MockScript MockProvider::script() const {
  std::lock_guard lock(mu_);
  return {entries_, log_};
}

void MockProvider::record_session(const std::filesystem::path& path) const {
  save_script(path, script_from_log(call_log()));
}

}  // namespace pubbie::llm
