#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <variant>

#include "pubbie/linear_head.hpp"
#include "pubbie/naive_bayes.hpp"

namespace pubbie {

// Model files are UTF-8 text:
//
//   pubbie-model <kind> 1           kind = naive-bayes | linear-head
//   labels 13                       followed by one canonical label per line
//   ...kind-specific sections...
//
// Reals are written as C99 hex-float literals so save/load is bit-exact.
// naive-bayes:  "alpha <x>", "prior <13 x>", "vocab <V>" + V lines
//               "<token> <index>", then 13 lines "loglik <V x>".
// linear-head:  "config <lr> <epochs> <seed> <init_scale>", "final_loss <x>",
//               "bias <13 x>", then 13 lines "weights <768 x>".
using Model = std::variant<BowModel, LinearHead>;

std::string serialize_model(const Model& model);
Model parse_model(std::string_view text);  // PARSE_ERROR with line number

void save_model(const std::filesystem::path& path, const Model& model);
Model load_model(const std::filesystem::path& path);

}  // namespace pubbie
