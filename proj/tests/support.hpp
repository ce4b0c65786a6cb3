#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "pubbie/program_label.hpp"
#include "pubbie/result_table.hpp"
#include "pubbie/store.hpp"

namespace pubbie::test {

std::filesystem::path data_path(std::string_view name);
std::filesystem::path templates_dir();
std::string read_text(const std::filesystem::path& path);

// In-memory store loaded with data/fixture_publications.csv.
std::unique_ptr<Store> fixture_store();

struct TempDir {
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  std::filesystem::path path;
};

// Plain RFC 4180 reader, written separately from pubbie::csv so it can judge it.
std::vector<std::vector<std::string>> parse_csv_oracle(std::string_view text);

// Number of records after the header, by the oracle reader.
std::size_t count_csv_records(std::string_view text);

// 1..6 columns, 0..8 rows of printable ASCII (comma, quote and space heavy),
// with the odd newline and UTF-8 sequence mixed in.
ResultTable random_string_table(std::mt19937_64& rng);

// Scopus-style export with the 20 attributes plus a prog column. The first
// `labeled` rows carry a program; abstracts contain commas, quotes and, now
// and then, line breaks.
std::string synthetic_scopus_csv(std::size_t rows, std::size_t labeled, std::uint64_t seed);

// Every stored attribute except prog and prog_source, one line per row.
std::string non_prog_snapshot(const Store& store);

// Multinomial Naive Bayes posterior computed from scratch in long double.
// Documents are whitespace-separated lowercase tokens.
struct OracleDoc {
  std::vector<std::string> tokens;
  std::size_t label = 0;
};
using OraclePosterior = std::array<long double, ProgramLabel::kCount>;
OraclePosterior nb_oracle(const std::vector<OracleDoc>& corpus, long double alpha,
                          const std::vector<std::string>& query);
std::size_t oracle_argmax(const OraclePosterior& p);

// Guard fuzzing: statements derived from safe seeds. `must_reject` marks
// mutations that reach outside the admitted subset.
struct GuardCase {
  std::string text;
  bool must_reject = false;
  std::string mutation;
};
std::vector<std::string> guard_seeds();
std::vector<GuardCase> guard_fuzz_corpus(std::size_t n, std::uint64_t seed);

// The example conversation, cell for cell (ASCII quotes).
struct ExampleTurn {
  std::string user_prompt;
  std::string rewritten;
  std::string question_type;  // as printed: "Generic" or "SQL"
  std::optional<std::string> sql;
  std::optional<std::string> sql_output;
  std::string agent_output;
};
const std::array<ExampleTurn, 4>& example_conversation();

// Error codes the HTTP API documents.
const std::set<std::string>& documented_api_codes();

}  // namespace pubbie::test
