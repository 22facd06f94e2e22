#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace tspmgs {

/// Token ids of one text, framed by start/end markers.
struct TokenSequence {
  std::vector<int> ids;
  std::vector<std::string> pieces;  // text of each id; markers are "<sot>"/"<eot>"
  bool truncated = false;

  std::size_t size() const { return ids.size(); }
  std::size_t eot_index() const { return ids.size() - 1; }
  /// Positions of the non-marker tokens.
  std::vector<std::size_t> word_positions() const;
};

/// FNV-1a, 64 bit. Stable across platforms, used for token hashing and
/// config fingerprints.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);

/// Lowercasing word-level tokenizer with a hashed vocabulary: runs of ASCII
/// letters/digits (and any non-ASCII bytes) form one token, every other
/// non-space character is a token of its own.
class Tokenizer {
 public:
  static constexpr int kStartToken = 0;
  static constexpr int kEndToken = 1;
  static constexpr int kReservedIds = 2;

  explicit Tokenizer(int vocab_size = 8192, int context_length = 77);

  int vocab_size() const { return vocab_size_; }
  int context_length() const { return context_length_; }
  /// Content tokens that fit next to the two markers.
  int max_words() const { return context_length_ - 2; }

  std::vector<std::string> split(std::string_view text) const;

  /// Over-length text is cut to max_words() content tokens and a warning is logged.
  TokenSequence encode(std::string_view text) const;

  int id_of(std::string_view piece) const;
  static bool is_special(int id) { return id < kReservedIds; }

 private:
  int vocab_size_;
  int context_length_;
};

}  // namespace tspmgs
