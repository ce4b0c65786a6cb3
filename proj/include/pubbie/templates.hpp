#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pubbie/llm.hpp"

namespace pubbie {

using SlotBindings = std::map<std::string, std::string, std::less<>>;

// One stage's prompt. Slots are written `{name}` with name in [a-z_]; any
// other brace is literal text. Few-shot pairs are sent verbatim between the
// system message and the final request.
//
// Text format:
//
//   <system text>
//   === user ===
//   <example input>
//   === assistant ===
//   <example output>
//   ...
//   === request ===
//   <request text>
struct PromptTemplate {
  llm::StageId stage = llm::StageId::B;
  std::string system_text;
  std::vector<std::pair<std::string, std::string>> few_shot_examples;
  std::string request_text = "{user_prompt}";

  // Every slot referenced by system_text or request_text.
  std::set<std::string> required_slots() const;
  // System message, example pairs, then the request as the last user
  // message. TEMPLATE_ERROR naming the first unbound slot.
  std::vector<llm::ChatMessage> render(const SlotBindings& bindings) const;

  friend bool operator==(const PromptTemplate&, const PromptTemplate&) = default;
};

// Slots a stage may reference; the orchestrator binds exactly these.
const std::set<std::string>& allowed_slots(llm::StageId stage);

std::string render_slots(std::string_view text, const SlotBindings& bindings);

std::string serialize_template(const PromptTemplate& t);
// TEMPLATE_ERROR on a malformed layout, a slot not allowed for the stage, or
// a request that does not reference {user_prompt}.
PromptTemplate parse_template(llm::StageId stage, std::string_view text);

PromptTemplate default_template(llm::StageId stage);

class TemplateRegistry {
 public:
  // Built-in defaults for all six stages.
  TemplateRegistry();

  // Defaults overridden by `a1.txt` ... `e.txt` where present. A missing
  // directory is a CONFIG_ERROR.
  static TemplateRegistry load_dir(const std::filesystem::path& dir);
  // Writes all six templates as files.
  void save_dir(const std::filesystem::path& dir) const;

  const PromptTemplate& get(llm::StageId stage) const;
  void set(PromptTemplate t);

  static std::string file_name(llm::StageId stage);

 private:
  std::array<PromptTemplate, 6> templates_;
};

}  // namespace pubbie
