#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "pubbie/crypto.hpp"
#include "pubbie/publication.hpp"

namespace pubbie::test {

std::filesystem::path data_path(std::string_view name) { return std::filesystem::path(PUBBIE_DATA_DIR) / name; }

std::filesystem::path templates_dir() { return PUBBIE_TEMPLATES_DIR; }

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::unique_ptr<Store> fixture_store() {
  auto store = std::make_unique<Store>(":memory:");
  store->ingest_csv(read_text(data_path("fixture_publications.csv")));
  return store;
}

TempDir::TempDir() {
  path = std::filesystem::temp_directory_path() / ("pubbie-test-" + random_token(9));
  std::filesystem::create_directories(path);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path, ec);
}

// ---------------------------------------------------------------------------

std::vector<std::vector<std::string>> parse_csv_oracle(std::string_view text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  enum { FieldStart, Unquoted, Quoted, QuoteInQuoted } state = FieldStart;
  bool any = false;  // something seen since the last record break

  auto end_field = [&] {
    record.push_back(std::move(field));
    field.clear();
  };
  auto end_record = [&] {
    end_field();
    records.push_back(std::move(record));
    record.clear();
    any = false;
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    switch (state) {
      case FieldStart:
      case Unquoted:
        if (c == '"' && state == FieldStart) {
          state = Quoted;
          any = true;
        } else if (c == ',') {
          end_field();
          state = FieldStart;
          any = true;
        } else if (c == '\n' || c == '\r') {
          if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
          end_record();
          state = FieldStart;
        } else {
          field += c;
          state = Unquoted;
          any = true;
        }
        break;
      case Quoted:
        if (c == '"') {
          state = QuoteInQuoted;
        } else {
          field += c;
        }
        break;
      case QuoteInQuoted:
        if (c == '"') {
          field += '"';
          state = Quoted;
        } else if (c == ',') {
          end_field();
          state = FieldStart;
        } else if (c == '\n' || c == '\r') {
          if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
          end_record();
          state = FieldStart;
        } else {
          // Stray text after a closing quote; keep it.
          field += c;
          state = Unquoted;
        }
        break;
    }
  }
  if (any || !record.empty() || state != FieldStart) end_record();
  return records;
}

std::size_t count_csv_records(std::string_view text) {
  const auto records = parse_csv_oracle(text);
  return records.empty() ? 0 : records.size() - 1;
}

ResultTable random_string_table(std::mt19937_64& rng) {
  static const std::string kAlphabet =
      " !#$%&'()*+-./0123456789:;<=>?@ABCDEFGHIJKLMNOPQRSTUVWXYZ[\\]^_`abcdefghijklmnopqrstuvwxyz{|}~";
  auto pick = [&](std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); };
  auto random_string = [&] {
    std::string s;
    const std::size_t len = pick(13);
    for (std::size_t i = 0; i < len; ++i) {
      switch (pick(12)) {
        case 0: s += ','; break;
        case 1: s += '"'; break;
        case 2: s += ' '; break;
        case 3:
          if (pick(4) == 0) {
            s += '\n';
          } else {
            s += kAlphabet[pick(kAlphabet.size())];
          }
          break;
        case 4:
          if (pick(4) == 0) {
            s += "\xC3\xA9";  // é
          } else {
            s += kAlphabet[pick(kAlphabet.size())];
          }
          break;
        default: s += kAlphabet[pick(kAlphabet.size())]; break;
      }
    }
    return s;
  };

  ResultTable t;
  const std::size_t cols = 1 + pick(6);
  for (std::size_t c = 0; c < cols; ++c) {
    auto name = random_string();
    // Header names are never blank in practice.
    if (name.empty()) name = "c" + std::to_string(c);
    t.columns.push_back(std::move(name));
  }
  const std::size_t rows = pick(9);
  for (std::size_t r = 0; r < rows; ++r) {
    std::vector<Cell> row;
    for (std::size_t c = 0; c < cols; ++c) row.emplace_back(random_string());
    t.rows.push_back(std::move(row));
  }
  return t;
}

namespace {

std::string quote_if_needed(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

const std::vector<std::string>& word_pool() {
  static const std::vector<std::string> words{
      "hydrogen", "methane",  "photonic", "quantum", "sensor",   "battery", "alloy",   "catalyst",
      "vaccine",  "protein",  "robot",    "arctic",  "concrete", "laser",   "graphene", "wind",
      "solar",    "fuel",     "membrane", "network", "imaging",  "aerosol", "polymer",  "turbine"};
  return words;
}

}  // namespace

std::string synthetic_scopus_csv(std::size_t rows, std::size_t labeled, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const auto& words = word_pool();
  auto word = [&] { return words[std::uniform_int_distribution<std::size_t>(0, words.size() - 1)(rng)]; };
  auto phrase = [&](std::size_t n) {
    std::string s;
    for (std::size_t i = 0; i < n; ++i) s += (i ? " " : "") + word();
    return s;
  };
  const auto& programs = ProgramLabel::canonical_names();

  std::string out;
  for (std::size_t i = 0; i < kAttributeCount; ++i) out += std::string(kAttributeNames[i]) + ",";
  out += "prog\n";
  for (std::size_t r = 0; r < rows; ++r) {
    const std::string eid = "2-s2.0-9" + std::to_string(100000000 + r);
    std::string abstract = "We study " + phrase(6) + ", with \"" + word() + "\" effects, at scale " +
                           std::to_string(r % 97) + ".";
    if (r % 41 == 0) abstract += "\nSecond paragraph: " + phrase(5) + ".";
    const std::vector<std::string> fields{
        eid,
        "On " + phrase(4) + " number " + std::to_string(r),
        std::to_string(1995 + r % 30),
        "Author" + std::to_string(r % 211) + " A., Author" + std::to_string(r % 53) + " B.",
        "Author" + std::to_string(r % 211) + " A., National Research Council of Canada, Ottawa, ON, Canada",
        "National Research Council of Canada, Ottawa, ON, Canada",
        phrase(3),
        phrase(3),
        "Journal of " + word(),
        "10.5555/syn." + std::to_string(r),
        abstract,
        r % 5 == 0 ? "Conference Paper" : "Article",
        "Publisher " + std::to_string(r % 7),
        std::to_string(1 + r % 40),
        std::to_string(1 + r % 12),
        std::to_string(r % 300) + "-" + std::to_string(r % 300 + 9),
        std::to_string(r % 150),
        "English",
        r % 3 == 0 ? "All Open Access" : "",
        "https://www.scopus.com/inward/record.uri?eid=" + eid,
        r < labeled ? std::string(programs[r % programs.size()]) : "",
    };
    for (std::size_t f = 0; f < fields.size(); ++f) out += (f ? "," : "") + quote_if_needed(fields[f]);
    out += '\n';
  }
  return out;
}

std::string non_prog_snapshot(const Store& store) {
  std::string out;
  for (const auto& pub : store.all_publications()) {
    for (auto name : kAttributeNames) {
      out += pub.attribute(name);
      out += '\x1f';
    }
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------

OraclePosterior nb_oracle(const std::vector<OracleDoc>& corpus, long double alpha,
                          const std::vector<std::string>& query) {
  std::set<std::string> vocab;
  for (const auto& d : corpus) vocab.insert(d.tokens.begin(), d.tokens.end());
  const auto v = static_cast<long double>(vocab.size());

  std::array<long double, ProgramLabel::kCount> docs{};
  std::array<long double, ProgramLabel::kCount> total{};
  std::array<std::map<std::string, long double>, ProgramLabel::kCount> count;
  for (const auto& d : corpus) {
    docs[d.label] += 1;
    for (const auto& t : d.tokens) {
      count[d.label][t] += 1;
      total[d.label] += 1;
    }
  }

  constexpr long double kNegInf = -std::numeric_limits<long double>::infinity();
  OraclePosterior joint;
  for (std::size_t c = 0; c < ProgramLabel::kCount; ++c) {
    if (docs[c] == 0) {
      joint[c] = kNegInf;
      continue;
    }
    long double score = std::log(docs[c] / static_cast<long double>(corpus.size()));
    for (const auto& t : query) {
      if (!vocab.count(t)) continue;
      const auto it = count[c].find(t);
      const long double n = it == count[c].end() ? 0 : it->second;
      score += std::log((n + alpha) / (total[c] + alpha * v));
    }
    joint[c] = score;
  }

  long double top = kNegInf;
  for (auto j : joint) top = std::max(top, j);
  long double sum = 0;
  for (auto j : joint) {
    if (j != kNegInf) sum += std::exp(j - top);
  }
  const long double norm = top + std::log(sum);
  for (auto& j : joint) {
    if (j != kNegInf) j -= norm;
  }
  return joint;
}

std::size_t oracle_argmax(const OraclePosterior& p) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < p.size(); ++c) {
    if (p[c] > p[best]) best = c;
  }
  return best;
}

// ---------------------------------------------------------------------------

namespace {

std::string replace_first(std::string s, std::string_view from, std::string_view to) {
  const auto pos = s.find(from);
  if (pos != std::string::npos) s.replace(pos, from.size(), to);
  return s;
}

std::string without_semicolon(std::string s) {
  while (!s.empty() && (s.back() == ';' || s.back() == ' ')) s.pop_back();
  return s;
}

// Rewrites characters outside single-quoted literals.
template <typename F>
std::string outside_literals(const std::string& s, F&& f) {
  std::string out;
  bool in_literal = false;
  for (char c : s) {
    if (c == '\'') in_literal = !in_literal;
    out += in_literal || c == '\'' ? std::string(1, c) : f(c);
  }
  return out;
}

struct Mutation {
  std::string name;
  bool must_reject;
  bool (*applies)(const std::string& seed);
  std::string (*apply)(const std::string& seed, std::mt19937_64& rng);
};

bool any_seed(const std::string&) { return true; }
bool is_select(const std::string& s) { return s.rfind("SELECT", 0) == 0; }
bool is_update(const std::string& s) { return s.rfind("UPDATE", 0) == 0; }
bool has_where(const std::string& s) { return s.find("WHERE ") != std::string::npos; }
bool has_literal(const std::string& s) { return s.find('\'') != std::string::npos; }

std::size_t pick(std::mt19937_64& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

template <std::size_t N>
std::string choose(std::mt19937_64& rng, const std::array<const char*, N>& options) {
  return options[pick(rng, N)];
}

const std::vector<Mutation>& mutations() {
  static const std::vector<Mutation> list{
      {"append_drop", true, any_seed,
       [](const std::string& s, std::mt19937_64&) { return without_semicolon(s) + "; DROP TABLE pub"; }},
      {"append_delete", true, any_seed,
       [](const std::string& s, std::mt19937_64&) { return without_semicolon(s) + "; DELETE FROM pub;"; }},
      {"append_select", true, any_seed,
       [](const std::string& s, std::mt19937_64&) { return without_semicolon(s) + "; SELECT 1"; }},
      {"prefix_pragma", true, any_seed,
       [](const std::string& s, std::mt19937_64&) { return "PRAGMA writable_schema = 1; " + s; }},
      {"drop", true, any_seed, [](const std::string&, std::mt19937_64& rng) {
         return choose(rng, std::array{"DROP TABLE pub", "DROP TABLE pub;", "drop table if exists pub",
                                       "DROP INDEX pub_prog", "DROP VIEW v"});
       }},
      {"delete", true, any_seed, [](const std::string&, std::mt19937_64& rng) {
         return choose(rng, std::array{"DELETE FROM pub", "DELETE FROM pub WHERE year < 2000;",
                                       "delete from pub where prog = 'No Program'"});
       }},
      {"insert", true, any_seed, [](const std::string&, std::mt19937_64& rng) {
         return choose(rng, std::array{"INSERT INTO pub (eid, title) VALUES ('x', 'y')",
                                       "INSERT OR REPLACE INTO pub (eid, title) VALUES ('2-s2.0-85170000001', 'z')",
                                       "REPLACE INTO pub (eid, title) VALUES ('a', 'b')"});
       }},
      {"ddl", true, any_seed, [](const std::string& s, std::mt19937_64& rng) {
         switch (pick(rng, 4)) {
           case 0: return std::string("ALTER TABLE pub ADD COLUMN z TEXT");
           case 1: return "CREATE TABLE copy AS " + without_semicolon(s);
           case 2: return std::string("CREATE TRIGGER t AFTER UPDATE ON pub BEGIN DELETE FROM pub; END");
           default: return std::string("ALTER TABLE pub RENAME TO gone");
         }
       }},
      {"attach", true, any_seed, [](const std::string&, std::mt19937_64& rng) {
         return choose(rng, std::array{"ATTACH DATABASE '/tmp/pubbie-fuzz.db' AS x", "DETACH DATABASE x",
                                       "VACUUM INTO '/tmp/pubbie-fuzz.db'", "VACUUM", "REINDEX pub",
                                       "PRAGMA table_info(pub)", "BEGIN; DELETE FROM pub; COMMIT"});
       }},
      {"other_table", true, any_seed, [](const std::string& s, std::mt19937_64& rng) {
         const auto table = choose(rng, std::array{"sqlite_master", "sqlite_schema", "chat_session", "chat_turn",
                                                   "pub_backup", "sqlite_temp_master", "temp.pub"});
         return is_update(s) ? replace_first(s, "UPDATE pub", "UPDATE " + table)
                             : replace_first(s, "FROM pub", "FROM " + table);
       }},
      {"join_other", true, is_select, [](const std::string& s, std::mt19937_64& rng) {
         const auto join = choose(rng, std::array{"FROM pub, sqlite_master", "FROM pub JOIN chat_turn ON 1 = 1",
                                                  "FROM pub AS p, chat_session AS s",
                                                  "FROM pub NATURAL JOIN sqlite_master"});
         return replace_first(s, "FROM pub", join);
       }},
      {"subquery_other", true, has_where, [](const std::string& s, std::mt19937_64& rng) {
         const auto sub = choose(rng, std::array{"eid IN (SELECT name FROM sqlite_master) AND ",
                                                 "EXISTS (SELECT 1 FROM chat_turn) AND ",
                                                 "title = (SELECT sql FROM sqlite_master LIMIT 1) OR "});
         return replace_first(s, "WHERE ", "WHERE " + sub);
       }},
      {"union_other", true, is_select, [](const std::string& s, std::mt19937_64& rng) {
         const auto tail = choose(rng, std::array{" UNION SELECT sql FROM sqlite_master",
                                                  " UNION ALL SELECT body FROM chat_turn",
                                                  " EXCEPT SELECT name FROM sqlite_master"});
         return without_semicolon(s) + tail;
       }},
      {"update_column", true, is_update, [](const std::string& s, std::mt19937_64& rng) {
         const auto col = choose(rng, std::array{"title", "prog_source", "eid", "abstract", "year", "cited_by"});
         return replace_first(s, "SET prog", "SET " + col);
       }},
      {"update_extra_column", true, is_update, [](const std::string& s, std::mt19937_64& rng) {
         const auto extra = choose(rng, std::array{", title = 'hacked'", ", prog_source = 'GROUND_TRUTH'",
                                                   ", year = 1900", ", eid = 'x'"});
         return replace_first(s, "'Materials for Clean Fuels'", "'Materials for Clean Fuels'" + extra);
       }},
      {"update_bad_label", true, is_update, [](const std::string& s, std::mt19937_64& rng) {
         const auto label = choose(rng, std::array{"'Nonexistent Program'", "''", "'Materials for Dirty Fuels'",
                                                   "title", "(SELECT title FROM pub LIMIT 1)", "NULL",
                                                   "upper('No Program')", "'No Program' || title"});
         return replace_first(s, "'Materials for Clean Fuels'", label);
       }},
      {"update_no_where", true, is_update,
       [](const std::string& s, std::mt19937_64&) { return s.substr(0, s.find(" WHERE")); }},
      {"update_from_other", true, is_update, [](const std::string& s, std::mt19937_64&) {
         return replace_first(s, " WHERE ", " FROM chat_turn WHERE ");
       }},
      {"comment_smuggle", true, any_seed, [](const std::string& s, std::mt19937_64& rng) {
         const auto tail = choose(rng, std::array{" -- note\n; DROP TABLE pub", " /* x */; DELETE FROM pub",
                                                  " /* ; */ ; DROP TABLE pub", "\n;\nDELETE FROM pub"});
         return without_semicolon(s) + tail;
       }},
      {"quote_break", true, has_literal, [](const std::string& s, std::mt19937_64& rng) {
         const auto inject = choose(rng, std::array{"'x'; DROP TABLE pub; --", "'x'; DELETE FROM pub; --",
                                                    "'x' UNION SELECT sql FROM sqlite_master --"});
         const auto pos = s.find('\'');
         return s.substr(0, pos) + inject + s.substr(pos + 1);
       }},
      {"dangerous_function", true, is_select, [](const std::string&, std::mt19937_64& rng) {
         return choose(rng, std::array{"SELECT load_extension('/tmp/evil.so') FROM pub",
                                       "SELECT writefile('/tmp/pubbie-fuzz', title) FROM pub",
                                       "SELECT readfile('/etc/passwd') FROM pub",
                                       "SELECT sqlite_version() FROM pub", "SELECT randomblob(1000000000) FROM pub"});
       }},
      {"cte_write", true, any_seed, [](const std::string&, std::mt19937_64& rng) {
         return choose(rng, std::array{"WITH x AS (SELECT 1) DELETE FROM pub",
                                       "WITH x AS (SELECT name FROM sqlite_master) SELECT * FROM x",
                                       "WITH RECURSIVE r(n) AS (SELECT 1 UNION ALL SELECT n + 1 FROM r) SELECT n "
                                       "FROM r"});
       }},
      {"not_sql", true, any_seed, [](const std::string&, std::mt19937_64& rng) {
         return choose(rng, std::array{"", "   ", "I cannot answer that.", "```\n```", "SQL:", ";", ";;"});
       }},
      // Neutral: outcome may go either way, but anything accepted must be sound.
      {"case_flip", false, any_seed, [](const std::string& s, std::mt19937_64& rng) {
         return outside_literals(s, [&](char c) {
           const auto u = static_cast<unsigned char>(c);
           return std::string(1, static_cast<char>(pick(rng, 2) ? std::toupper(u) : std::tolower(u)));
         });
       }},
      {"whitespace", false, any_seed, [](const std::string& s, std::mt19937_64& rng) {
         return outside_literals(s, [&](char c) {
           if (c != ' ') return std::string(1, c);
           return choose(rng, std::array{" ", "  ", "\t", "\n", " \r\n "});
         });
       }},
      {"fence", false, any_seed, [](const std::string& s, std::mt19937_64& rng) {
         return choose(rng, std::array{"```sql\n", "```\n", "Here you go:\n```sql\n"}) + s + "\n```";
       }},
      {"label", false, any_seed, [](const std::string& s, std::mt19937_64&) { return "SQL: " + s; }},
      {"truncate", false, any_seed,
       [](const std::string& s, std::mt19937_64& rng) { return s.substr(0, pick(rng, s.size() + 1)); }},
      {"char_delete", false, any_seed, [](const std::string& s, std::mt19937_64& rng) {
         auto out = s;
         out.erase(pick(rng, out.size()), 1);
         return out;
       }},
      {"char_insert", false, any_seed, [](const std::string& s, std::mt19937_64& rng) {
         auto out = s;
         const auto c = choose(rng, std::array{";", "'", "(", ")", "*", "-", "/", "\"", ",", "`", "[", "\\"});
         out.insert(pick(rng, out.size() + 1), c);
         return out;
       }},
  };
  return list;
}

}  // namespace

std::vector<std::string> guard_seeds() {
  return {
      "SELECT prog FROM pub WHERE title = 'A Study on the Use of Intake Flow Path Modification to Reduce Methane "
      "Slip of a Natural Gas-Diesel Dual-Fuel Engine';",
      "SELECT COUNT(*) FROM pub WHERE authors_with_affil LIKE '%Alysa%';",
      "SELECT title, year FROM pub WHERE year >= 2020 ORDER BY year DESC LIMIT 5",
      "SELECT prog, COUNT(*) AS n FROM pub GROUP BY prog ORDER BY n DESC",
      "SELECT eid FROM pub WHERE prog IN ('No Program') AND cited_by > 10;",
      "UPDATE pub SET prog = 'Materials for Clean Fuels' WHERE eid = '2-s2.0-85170000012'",
      "UPDATE pub SET prog = 'Materials for Clean Fuels' WHERE title LIKE '%lithium%';",
  };
}

std::vector<GuardCase> guard_fuzz_corpus(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const auto seeds = guard_seeds();
  const auto& muts = mutations();
  std::vector<GuardCase> out;

  auto make = [&](const Mutation& m) {
    std::string base;
    do {
      base = seeds[pick(rng, seeds.size())];
    } while (!m.applies(base));
    GuardCase c{m.apply(base, rng), m.must_reject, m.name};
    // Dress some unsafe cases up with a neutral mutation on top.
    if (m.must_reject && pick(rng, 3) == 0) {
      const auto& dress = muts[muts.size() - 7 + pick(rng, 4)];  // case_flip .. label
      c.text = dress.apply(c.text, rng);
      c.mutation += "+" + dress.name;
    }
    out.push_back(std::move(c));
  };

  for (const auto& m : muts) make(m);
  while (out.size() < n) make(muts[pick(rng, muts.size())]);
  out.resize(n);
  return out;
}

// ---------------------------------------------------------------------------

const std::array<ExampleTurn, 4>& example_conversation() {
  static const std::string kTitle =
      "A Study on the Use of Intake Flow Path Modification to Reduce Methane Slip of a Natural Gas-Diesel "
      "Dual-Fuel Engine";
  static const std::array<ExampleTurn, 4> rows{{
      {"Hi!", "Hi!", "Generic", std::nullopt, std::nullopt, "Hello! How can I assist you today?"},
      {"What is the data about?", "What is the NRC publication dataset about?", "Generic", std::nullopt,
       std::nullopt,
       "The NRC publication dataset contains information about publications at the National Research Council "
       "of Canada. It includes details such as titles ..."},
      {"Give me the challenge program of this publication.",
       "Give me the challenge program of the publication \"" + kTitle + "\".", "SQL",
       "SELECT prog FROM pub WHERE title = '" + kTitle + "';", "Materials for Clean Fuels",
       "The challenge program for the publication \"" + kTitle + "\" is \"Materials for Clean Fuels\"."},
      {"About this author, how many publications were written?", "About Alysa, how many publications were written?",
       "SQL", "SELECT COUNT(*) FROM pub WHERE authors_with_affil LIKE '%Alysa%';", "0",
       "Alysa has not written any publications."},
  }};
  return rows;
}

const std::set<std::string>& documented_api_codes() {
  static const std::set<std::string> codes{
      "SESSION_NOT_FOUND",    "NOT_FOUND",          "TEXT_TOO_LONG",         "PAYLOAD_TOO_LARGE",
      "INVALID_ARGUMENT",     "PARSE_ERROR",        "EMPTY_INPUT",           "HEADER_MISSING_REQUIRED",
      "SESSION_BUSY",         "NO_RESULT_TO_EXPORT", "SQL_GENERATION_FAILED", "EXEC_ERROR",
      "PROVIDER_UNREACHABLE", "PROVIDER_ERROR",     "MOCK_NO_MATCH",         "CACHE_MISS",
      "STORE_UNAVAILABLE",    "STORE_CORRUPT",      "UNPARSEABLE_STAGE_OUTPUT", "INTERNAL",
  };
  return codes;
}

}  // namespace pubbie::test
