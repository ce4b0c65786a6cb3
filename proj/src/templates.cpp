#include "pubbie/templates.hpp"

#include "pubbie/file_util.hpp"
#include "pubbie/strings.hpp"

namespace pubbie {
namespace {

using llm::StageId;

constexpr std::array<StageId, 6> kStages{StageId::A1, StageId::A2, StageId::B,
                                         StageId::C,  StageId::D,  StageId::E};

constexpr std::string_view kUserMarker = "=== user ===";
constexpr std::string_view kAssistantMarker = "=== assistant ===";
constexpr std::string_view kRequestMarker = "=== request ===";

bool is_slot_char(char c) { return (c >= 'a' && c <= 'z') || c == '_'; }

// Calls f(name, begin, end) for each `{name}` in text.
template <typename F>
void for_each_slot(std::string_view text, F&& f) {
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] != '{') continue;
    std::size_t j = i + 1;
    while (j < text.size() && is_slot_char(text[j])) ++j;
    if (j > i + 1 && j < text.size() && text[j] == '}') {
      f(text.substr(i + 1, j - i - 1), i, j + 1);
      i = j;
    }
  }
}

std::string trim_section(std::string_view s) {
  // Keep interior and leading indentation, drop surrounding blank lines.
  std::size_t b = 0;
  while (b < s.size() && (s[b] == '\n' || s[b] == '\r')) ++b;
  std::size_t e = s.size();
  while (e > b && strings::is_space(s[e - 1])) --e;
  return std::string(s.substr(b, e - b));
}

const std::map<StageId, PromptTemplate>& defaults() {
  static const std::map<StageId, PromptTemplate> table = [] {
    std::map<StageId, PromptTemplate> m;

    m[StageId::A1] = {
        StageId::A1,
        "You decide whether a user's new message depends on the earlier conversation with Pubbie, an "
        "assistant for the NRC publication dataset.\n"
        "Answer YES if the message refers back to the conversation, for example through a pronoun such as "
        "\"this\" or \"it\", a vague term such as \"the data\", or a missing subject. Answer NO if the "
        "message can be understood on its own.\n"
        "Reply with exactly one word: YES or NO.\n"
        "\n"
        "Conversation so far:\n"
        "{history}",
        {{"Give me the challenge program of this publication.", "YES"},
         {"How many publications were published in 2022?", "NO"}},
        "{user_prompt}"};

    m[StageId::A2] = {
        StageId::A2,
        "You rewrite the user's latest message so that it can be understood without the conversation.\n"
        "Replace pronouns and vague references such as \"this publication\", \"this author\" or \"the data\" "
        "with the exact titles, names or terms they refer to in the conversation. Keep everything else "
        "unchanged and keep titles in double quotes.\n"
        "Reply with the rewritten message only.\n"
        "\n"
        "Conversation so far:\n"
        "{history}",
        {},
        "{user_prompt}"};

    m[StageId::B] = {
        StageId::B,
        "Classify the user's message for Pubbie, an assistant for a database of NRC publications.\n"
        "GENERIC: greetings, small talk, and general questions about the dataset or the assistant.\n"
        "SQL_QUERY: requests to look up, count, list or summarize publications in the database.\n"
        "SQL_UPDATE: requests to change the challenge program recorded for publications.\n"
        "Reply with exactly one of: GENERIC, SQL_QUERY, SQL_UPDATE.",
        {{"Hi!", "GENERIC"},
         {"What is the NRC publication dataset about?", "GENERIC"},
         {"How many publications were published in 2021?", "SQL_QUERY"},
         {"Set the challenge program of the publication with EID 2-s2.0-85000000001 to Pandemic Response.",
          "SQL_UPDATE"}},
        "{user_prompt}"};

    m[StageId::C] = {
        StageId::C,
        "You are Pubbie, a friendly assistant for the National Research Council of Canada (NRC) "
        "publication dataset. The dataset lists NRC publications with their titles, authors, "
        "affiliations, keywords, abstracts, sources and the NRC challenge program each one belongs to.\n"
        "Answer the user's message briefly. Use the publications below when they are relevant and do not "
        "invent publications.\n"
        "\n"
        "Relevant publications:\n"
        "{context}",
        {},
        "{user_prompt}"};

    m[StageId::D] = {
        StageId::D,
        "Translate the user's request into one SQLite statement over the table described below.\n"
        "\n"
        "{schema}\n"
        "\n"
        "Rules:\n"
        "- Use only the table pub. Do not join, nest queries or use other tables.\n"
        "- For lookups write a single SELECT statement.\n"
        "- To change the challenge program of publications write UPDATE pub SET prog = '<program>' "
        "WHERE ... using one of the listed programs.\n"
        "- Never write INSERT, DELETE, DROP or any other kind of statement.\n"
        "- Reply with the SQL statement only.",
        {{"How many publications were published in 2022?", "SELECT COUNT(*) FROM pub WHERE year = 2022;"},
         {"List the titles of publications in the Pandemic Response program.",
          "SELECT title FROM pub WHERE prog = 'Pandemic Response';"},
         {"Set the challenge program of the publication with EID 2-s2.0-85000000001 to Critical Battery "
          "Materials.",
          "UPDATE pub SET prog = 'Critical Battery Materials' WHERE eid = '2-s2.0-85000000001';"}},
        "{user_prompt}"};

    m[StageId::E] = {
        StageId::E,
        "You are Pubbie, an assistant for the NRC publication dataset. Reply to the user's message using "
        "the data retrieved for it. State the result plainly in one or two sentences and quote titles and "
        "program names exactly. If the data is empty or zero, say so.",
        {},
        "{user_prompt}\n"
        "\n"
        "Data:\n"
        "{context}"};
    return m;
  }();
  return table;
}

void check_slots(const PromptTemplate& t) {
  const auto& allowed = allowed_slots(t.stage);
  for (const auto& slot : t.required_slots()) {
    if (!allowed.count(slot)) {
      throw Error(ErrorCode::TemplateError, "template " + TemplateRegistry::file_name(t.stage) +
                                                " uses slot {" + slot + "} which this stage does not provide");
    }
  }
  bool has_prompt = false;
  for_each_slot(t.request_text, [&](std::string_view name, std::size_t, std::size_t) {
    has_prompt = has_prompt || name == "user_prompt";
  });
  if (!has_prompt) {
    throw Error(ErrorCode::TemplateError,
                "template " + TemplateRegistry::file_name(t.stage) + " request must contain {user_prompt}");
  }
}

}  // namespace

std::set<std::string> PromptTemplate::required_slots() const {
  std::set<std::string> out;
  auto add = [&](std::string_view name, std::size_t, std::size_t) { out.emplace(name); };
  for_each_slot(system_text, add);
  for_each_slot(request_text, add);
  return out;
}

std::string render_slots(std::string_view text, const SlotBindings& bindings) {
  std::string out;
  std::size_t copied = 0;
  for_each_slot(text, [&](std::string_view name, std::size_t begin, std::size_t end) {
    const auto it = bindings.find(name);
    if (it == bindings.end()) {
      throw Error(ErrorCode::TemplateError, "unbound template slot {" + std::string(name) + "}");
    }
    out.append(text.substr(copied, begin - copied));
    out += it->second;
    copied = end;
  });
  out.append(text.substr(copied));
  return out;
}

std::vector<llm::ChatMessage> PromptTemplate::render(const SlotBindings& bindings) const {
  std::vector<llm::ChatMessage> messages;
  messages.push_back({llm::Role::System, render_slots(system_text, bindings)});
  for (const auto& [input, output] : few_shot_examples) {
    messages.push_back({llm::Role::User, input});
    messages.push_back({llm::Role::Assistant, output});
  }
  messages.push_back({llm::Role::User, render_slots(request_text, bindings)});
  return messages;
}

const std::set<std::string>& allowed_slots(StageId stage) {
  static const std::set<std::string> history{"history", "user_prompt"};
  static const std::set<std::string> classify{"labels", "user_prompt"};
  static const std::set<std::string> context{"context", "user_prompt"};
  static const std::set<std::string> sql{"schema", "labels", "user_prompt"};
  switch (stage) {
    case StageId::A1:
    case StageId::A2: return history;
    case StageId::B: return classify;
    case StageId::C:
    case StageId::E: return context;
    case StageId::D: return sql;
  }
  return context;
}

std::string serialize_template(const PromptTemplate& t) {
  std::string out = t.system_text;
  out += '\n';
  for (const auto& [input, output] : t.few_shot_examples) {
    out += kUserMarker;
    out += '\n' + input + '\n';
    out += kAssistantMarker;
    out += '\n' + output + '\n';
  }
  out += kRequestMarker;
  out += '\n' + t.request_text + '\n';
  return out;
}

PromptTemplate parse_template(StageId stage, std::string_view text) {
  enum class Section { System, User, Assistant, Request };
  struct Part {
    Section section;
    std::string body;
  };
  std::vector<Part> parts{{Section::System, {}}};

  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    std::string_view line = text.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos);
    pos = end == std::string_view::npos ? text.size() : end + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    const auto marker = strings::trim(line);
    if (marker == kUserMarker) {
      parts.push_back({Section::User, {}});
    } else if (marker == kAssistantMarker) {
      parts.push_back({Section::Assistant, {}});
    } else if (marker == kRequestMarker) {
      parts.push_back({Section::Request, {}});
    } else {
      parts.back().body.append(line);
      parts.back().body.push_back('\n');
    }
  }

  const std::string name = TemplateRegistry::file_name(stage);
  auto fail = [&](const std::string& msg) { throw Error(ErrorCode::TemplateError, "template " + name + ": " + msg); };
  if (parts.back().section != Section::Request) fail("must end with a '=== request ===' section");

  PromptTemplate t;
  t.stage = stage;
  t.system_text = trim_section(parts.front().body);
  for (std::size_t i = 1; i + 1 < parts.size(); i += 2) {
    if (parts[i].section != Section::User || parts[i + 1].section != Section::Assistant) {
      fail("examples must be '=== user ===' / '=== assistant ===' pairs before the request");
    }
    t.few_shot_examples.emplace_back(trim_section(parts[i].body), trim_section(parts[i + 1].body));
  }
  if (parts.size() % 2 != 0) fail("examples must be '=== user ===' / '=== assistant ===' pairs before the request");
  t.request_text = trim_section(parts.back().body);
  check_slots(t);
  return t;
}

PromptTemplate default_template(StageId stage) { return defaults().at(stage); }

TemplateRegistry::TemplateRegistry() {
  for (std::size_t i = 0; i < kStages.size(); ++i) templates_[i] = default_template(kStages[i]);
}

std::string TemplateRegistry::file_name(StageId stage) {
  return strings::to_lower(llm::to_string(stage)) + ".txt";
}

TemplateRegistry TemplateRegistry::load_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) {
    throw Error(ErrorCode::ConfigError, "template directory '" + dir.string() + "' does not exist");
  }
  TemplateRegistry registry;
  for (auto stage : kStages) {
    const auto path = dir / file_name(stage);
    if (std::filesystem::exists(path, ec)) registry.set(parse_template(stage, read_file(path)));
  }
  return registry;
}

void TemplateRegistry::save_dir(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  for (const auto& t : templates_) write_file(dir / file_name(t.stage), serialize_template(t));
}

const PromptTemplate& TemplateRegistry::get(StageId stage) const {
  return templates_[static_cast<std::size_t>(stage)];
}

void TemplateRegistry::set(PromptTemplate t) {
  check_slots(t);
  const auto index = static_cast<std::size_t>(t.stage);
  templates_[index] = std::move(t);
}

}  // namespace pubbie
