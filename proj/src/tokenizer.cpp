#include "tspmgs/tokenizer.hpp"

#include <cctype>

#include <spdlog/spdlog.h>

#include "tspmgs/errors.hpp"

namespace tspmgs {

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::vector<std::size_t> TokenSequence::word_positions() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (!Tokenizer::is_special(ids[i])) out.push_back(i);
  }
  return out;
}

Tokenizer::Tokenizer(int vocab_size, int context_length)
    : vocab_size_(vocab_size), context_length_(context_length) {
  if (vocab_size_ <= kReservedIds) throw ConfigError("vocabulary too small");
  if (context_length_ < 3) throw ConfigError("context length must be at least 3");
}

std::vector<std::string> Tokenizer::split(std::string_view text) const {
  std::vector<std::string> out;
  std::string word;
  auto flush = [&] {
    if (!word.empty()) out.push_back(std::move(word));
    word.clear();
  };
  for (unsigned char c : text) {
    if (std::isalnum(c) || c >= 0x80) {
      word.push_back(static_cast<char>(std::tolower(c)));
    } else if (std::isspace(c)) {
      flush();
    } else {
      flush();
      out.emplace_back(1, static_cast<char>(c));
    }
  }
  flush();
  return out;
}

int Tokenizer::id_of(std::string_view piece) const {
  const auto buckets = static_cast<std::uint64_t>(vocab_size_ - kReservedIds);
  return kReservedIds + static_cast<int>(fnv1a(piece) % buckets);
}

TokenSequence Tokenizer::encode(std::string_view text) const {
  auto words = split(text);
  TokenSequence seq;
  if (static_cast<int>(words.size()) > max_words()) {
    spdlog::warn("text has {} tokens, truncating to {}", words.size(), max_words());
    words.resize(static_cast<std::size_t>(max_words()));
    seq.truncated = true;
  }
  seq.ids.reserve(words.size() + 2);
  seq.ids.push_back(kStartToken);
  seq.pieces.emplace_back("<sot>");
  for (auto& w : words) {
    seq.ids.push_back(id_of(w));
    seq.pieces.push_back(std::move(w));
  }
  seq.ids.push_back(kEndToken);
  seq.pieces.emplace_back("<eot>");
  return seq;
}

}  // namespace tspmgs
