#include "pubbie/model_io.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "pubbie/error.hpp"
#include "pubbie/file_util.hpp"
#include "pubbie/strings.hpp"

namespace pubbie {
namespace {

std::string hex(double v) {
  if (std::isinf(v)) return v < 0 ? "-inf" : "inf";
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::hex);
  return std::string(buf.data(), res.ptr);
}

class LineReader {
 public:
  explicit LineReader(std::string_view text) : text_(text) {}

  std::string_view next() {
    if (pos_ > text_.size()) fail("unexpected end of file");
    const auto end = text_.find('\n', pos_);
    std::string_view line = text_.substr(pos_, end == std::string_view::npos ? end : end - pos_);
    pos_ = end == std::string_view::npos ? text_.size() + 1 : end + 1;
    ++line_;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    return line;
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw Error(ErrorCode::ParseError, "model line " + std::to_string(line_) + ": " + msg, line_);
  }

  // Splits "<keyword> a b c" and checks the keyword.
  std::vector<std::string_view> fields(std::string_view keyword) {
    const auto line = next();
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
      while (i < line.size() && line[i] == ' ') ++i;
      const std::size_t start = i;
      while (i < line.size() && line[i] != ' ') ++i;
      if (i > start) out.push_back(line.substr(start, i - start));
    }
    if (out.empty() || out.front() != keyword) fail("expected '" + std::string(keyword) + "'");
    out.erase(out.begin());
    return out;
  }

  double real(std::string_view s) const {
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    double v = 0.0;
    std::string_view body = s;
    bool neg = false;
    if (!body.empty() && body.front() == '-') {
      neg = true;
      body.remove_prefix(1);
    }
    const auto [end, ec] = std::from_chars(body.data(), body.data() + body.size(), v, std::chars_format::hex);
    if (ec != std::errc() || end != body.data() + body.size()) fail("bad number '" + std::string(s) + "'");
    return neg ? -v : v;
  }

  std::uint64_t integer(std::string_view s) const {
    std::uint64_t v = 0;
    const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || end != s.data() + s.size()) fail("bad integer '" + std::string(s) + "'");
    return v;
  }

  template <std::size_t N>
  std::array<double, N> reals(std::string_view keyword) {
    const auto f = fields(keyword);
    if (f.size() != N) fail("expected " + std::to_string(N) + " values");
    std::array<double, N> out{};
    for (std::size_t i = 0; i < N; ++i) out[i] = real(f[i]);
    return out;
  }

  std::vector<double> real_vector(std::string_view keyword, std::size_t n) {
    const auto f = fields(keyword);
    if (f.size() != n) fail("expected " + std::to_string(n) + " values");
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = real(f[i]);
    return out;
  }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_ = 0;
};

void write_labels(std::ostringstream& os) {
  os << "labels " << ProgramLabel::kCount << '\n';
  for (auto name : ProgramLabel::canonical_names()) os << name << '\n';
}

void read_labels(LineReader& in) {
  const auto f = in.fields("labels");
  if (f.size() != 1 || in.integer(f[0]) != ProgramLabel::kCount) in.fail("expected 13 labels");
  for (auto name : ProgramLabel::canonical_names()) {
    if (in.next() != name) in.fail("label list does not match this build");
  }
}

template <typename Range>
void write_reals(std::ostringstream& os, std::string_view keyword, const Range& values) {
  os << keyword;
  for (double v : values) os << ' ' << hex(v);
  os << '\n';
}

}  // namespace

std::string serialize_model(const Model& model) {
  std::ostringstream os;
  if (const auto* nb = std::get_if<BowModel>(&model)) {
    os << "pubbie-model naive-bayes 1\n";
    write_labels(os);
    os << "alpha " << hex(nb->smoothing_alpha) << '\n';
    write_reals(os, "prior", nb->class_log_prior);
    os << "vocab " << nb->vocabulary.size() << '\n';
    for (const auto& [tok, idx] : nb->vocabulary) os << tok << ' ' << idx << '\n';
    for (const auto& row : nb->token_log_likelihood) write_reals(os, "loglik", row);
  } else {
    const auto& head = std::get<LinearHead>(model);
    os << "pubbie-model linear-head 1\n";
    write_labels(os);
    os << "config " << hex(head.config.learning_rate) << ' ' << head.config.epochs << ' '
       << head.config.seed << ' ' << hex(head.config.init_scale) << '\n';
    os << "final_loss " << hex(head.final_loss) << '\n';
    write_reals(os, "bias", head.bias);
    for (std::size_t c = 0; c < ProgramLabel::kCount; ++c) {
      os << "weights";
      for (std::size_t j = 0; j < kEmbeddingDim; ++j) os << ' ' << hex(head.weight(c, j));
      os << '\n';
    }
  }
  return os.str();
}

Model parse_model(std::string_view text) {
  LineReader in(text);
  const auto magic = in.fields("pubbie-model");
  if (magic.size() != 2 || magic[1] != "1") in.fail("unsupported model header");
  read_labels(in);

  if (magic[0] == "naive-bayes") {
    BowModel nb;
    const auto a = in.fields("alpha");
    if (a.size() != 1) in.fail("expected alpha");
    nb.smoothing_alpha = in.real(a[0]);
    nb.class_log_prior = in.reals<ProgramLabel::kCount>("prior");
    const auto v = in.fields("vocab");
    if (v.size() != 1) in.fail("expected vocabulary size");
    const std::size_t vocab = in.integer(v[0]);
    for (std::size_t i = 0; i < vocab; ++i) {
      const auto line = in.next();
      const auto space = line.find(' ');
      if (space == std::string_view::npos) in.fail("expected '<token> <index>'");
      const auto idx = in.integer(line.substr(space + 1));
      if (idx >= vocab) in.fail("token index out of range");
      nb.vocabulary.emplace(std::string(line.substr(0, space)), idx);
    }
    for (std::size_t c = 0; c < ProgramLabel::kCount; ++c) {
      nb.token_log_likelihood.push_back(in.real_vector("loglik", vocab));
    }
    return nb;
  }
  if (magic[0] == "linear-head") {
    LinearHead head;
    const auto cfg = in.fields("config");
    if (cfg.size() != 4) in.fail("expected 4 config values");
    head.config.learning_rate = in.real(cfg[0]);
    head.config.epochs = in.integer(cfg[1]);
    head.config.seed = in.integer(cfg[2]);
    head.config.init_scale = in.real(cfg[3]);
    const auto fl = in.fields("final_loss");
    if (fl.size() != 1) in.fail("expected final loss");
    head.final_loss = in.real(fl[0]);
    head.bias = in.reals<ProgramLabel::kCount>("bias");
    head.weights.reserve(ProgramLabel::kCount * kEmbeddingDim);
    for (std::size_t c = 0; c < ProgramLabel::kCount; ++c) {
      const auto row = in.real_vector("weights", kEmbeddingDim);
      head.weights.insert(head.weights.end(), row.begin(), row.end());
    }
    return head;
  }
  in.fail("unknown model kind '" + std::string(magic[0]) + "'");
}

void save_model(const std::filesystem::path& path, const Model& model) {
  write_file(path, serialize_model(model));
}

Model load_model(const std::filesystem::path& path) { return parse_model(read_file(path)); }

}  // namespace pubbie
