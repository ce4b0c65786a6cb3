#include <array>
#include <charconv>

#include "pubbie/crypto.hpp"
#include "pubbie/file_util.hpp"
#include "pubbie/llm.hpp"

namespace pubbie::llm {

std::shared_ptr<EmbeddingCache> EmbeddingCache::load(const std::filesystem::path& path) {
  auto cache = std::make_shared<EmbeddingCache>();
  const std::string text = read_file(path);
  std::size_t pos = 0;
  std::size_t line = 0;
  while (pos < text.size()) {
    const auto end = text.find('\n', pos);
    const std::string_view row(text.data() + pos, (end == std::string::npos ? text.size() : end) - pos);
    pos = end == std::string::npos ? text.size() : end + 1;
    ++line;
    if (row.empty()) continue;
    auto fail = [&](const std::string& msg) {
      throw Error(ErrorCode::ParseError, "embedding cache line " + std::to_string(line) + ": " + msg, line);
    };
    if (row.size() < 65 || row[64] != ' ') fail("expected '<sha256> <values>'");
    const std::string hash(row.substr(0, 64));
    Embedding v;
    v.reserve(kEmbeddingDim);
    const char* p = row.data() + 65;
    const char* stop = row.data() + row.size();
    while (p < stop) {
      while (p < stop && *p == ' ') ++p;
      if (p >= stop) break;
      double x = 0.0;
      const auto [next, ec] = std::from_chars(p, stop, x);
      if (ec != std::errc()) fail("bad number");
      v.push_back(x);
      p = next;
    }
    if (v.size() != kEmbeddingDim) fail("expected " + std::to_string(kEmbeddingDim) + " values");
    cache->entries_[hash] = std::move(v);
  }
  return cache;
}

void EmbeddingCache::save(const std::filesystem::path& path) const {
  std::string out;
  std::lock_guard lock(mu_);
  std::array<char, 64> buf{};
  for (const auto& [hash, v] : entries_) {
    out += hash;
    for (double x : v) {
      out.push_back(' ');
      const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), x);
      out.append(buf.data(), res.ptr);
    }
    out.push_back('\n');
  }
  write_file(path, out);
}

std::optional<Embedding> EmbeddingCache::get(std::string_view text) const {
  return get_by_hash(sha256_hex(text));
}

std::optional<Embedding> EmbeddingCache::get_by_hash(const std::string& hash) const {
  std::lock_guard lock(mu_);
  const auto it = entries_.find(hash);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void EmbeddingCache::put(std::string_view text, Embedding vector) {
  check_embedding_width({vector});
  std::lock_guard lock(mu_);
  entries_[sha256_hex(text)] = std::move(vector);
}

std::size_t EmbeddingCache::size() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

CachedProvider::CachedProvider(std::shared_ptr<EmbeddingCache> cache, std::shared_ptr<Provider> upstream,
                               bool offline)
    : cache_(std::move(cache)), upstream_(std::move(upstream)), offline_(offline) {}

StageCompletion CachedProvider::complete(const StageRequest& request) {
  if (!upstream_) throw Error(ErrorCode::ProviderUnreachable, "no chat-completion provider configured");
  return upstream_->complete(request);
}

std::vector<Embedding> CachedProvider::embed(const std::vector<std::string>& texts) {
  if (texts.empty()) throw Error(ErrorCode::InvalidArgument, "embed needs at least one text");
  std::vector<Embedding> out(texts.size());
  std::vector<std::size_t> missing;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    if (auto hit = cache_->get(texts[i])) {
      out[i] = std::move(*hit);
    } else {
      missing.push_back(i);
    }
  }
  if (missing.empty()) return out;
  if (offline_ || !upstream_) {
    throw Error(ErrorCode::CacheMiss, "embedding cache miss for text hash " + sha256_hex(texts[missing.front()]));
  }
  std::vector<std::string> batch;
  batch.reserve(missing.size());
  for (auto i : missing) batch.push_back(texts[i]);
  auto fetched = upstream_->embed(batch);
  if (fetched.size() != batch.size()) {
    throw Error(ErrorCode::ProviderError, "provider returned the wrong number of embeddings");
  }
  check_embedding_width(fetched);
  for (std::size_t k = 0; k < missing.size(); ++k) {
    cache_->put(texts[missing[k]], fetched[k]);
    out[missing[k]] = std::move(fetched[k]);
  }
  return out;
}

}  // namespace pubbie::llm
