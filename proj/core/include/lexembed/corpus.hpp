#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace lexembed {

// Splits a byte stream into lowercased, whitespace-delimited tokens.
// Tokens are maximal runs of non-whitespace bytes; ASCII letters are
// lowercased, other bytes pass through. The scanner validates UTF-8 and
// reports the byte offset of the first malformed sequence.
class TokenStream {
 public:
  // `source` must stay alive for the lifetime of the stream. When
  // `start_offset` > 0 the stream seeks there and, if the offset lands inside
  // a token, skips the partial tail so that a token is consumed by exactly
  // one of several streams cutting the same file at the same offsets.
  explicit TokenStream(std::istream& source, std::uint64_t start_offset = 0);

  // Fills `token` with the next token; returns false at end of stream.
  bool next(std::string& token);

  // Byte offset of the first byte of the token most recently returned.
  std::uint64_t token_begin() const { return token_begin_; }

 private:
  int fill();

  std::istream* src_;
  std::vector<char> buf_;
  std::size_t buf_pos_ = 0;
  std::size_t buf_len_ = 0;
  std::uint64_t offset_ = 0;       // absolute offset of buf_[buf_pos_]
  std::uint64_t token_begin_ = 0;
  int utf8_pending_ = 0;           // continuation bytes still expected
  std::uint64_t utf8_start_ = 0;   // offset of the current sequence's lead byte
  unsigned char utf8_lead_ = 0;
  int utf8_seen_ = 0;
};

// Tokenizes an in-memory string. Convenience for small inputs and tests.
std::vector<std::string> tokenize(std::string_view text);

struct TransparentStringHash {
  using is_transparent = void;
  std::size_t operator()(std::string_view s) const noexcept {
    return std::hash<std::string_view>{}(s);
  }
};

// Token <-> index map with corpus frequencies. Words are ordered by
// descending count, ties broken lexicographically; index 0 is the most
// frequent word. Immutable after construction and safe to share across
// threads.
class Vocabulary {
 public:
  Vocabulary() = default;

  // Counts every token in `tokens`, then retains exactly the tokens occurring
  // at least `min_count` times. `raw_tokens`, when non-null, receives the
  // total number of tokens scanned (retained or not). Throws ConfigError for
  // min_count < 1 and Error when the stream holds no tokens at all.
  static Vocabulary build(TokenStream& tokens, std::int64_t min_count,
                          std::int64_t* raw_tokens = nullptr);
  static Vocabulary build_from_file(const std::string& path,
                                    std::int64_t min_count,
                                    std::int64_t* raw_tokens = nullptr);

  // One line per word, "token<TAB>count", preceded by "#total<TAB>N".
  void save(std::ostream& out) const;
  static Vocabulary load(std::istream& in);
  static Vocabulary load_from_file(const std::string& path);

  std::int32_t size() const { return static_cast<std::int32_t>(words_.size()); }
  // -1 when the token is not in the vocabulary.
  std::int32_t index_of(std::string_view token) const {
    auto it = index_.find(token);
    return it == index_.end() ? -1 : it->second;
  }
  const std::string& word(std::int32_t index) const { return words_[index]; }
  std::int64_t count(std::int32_t index) const { return counts_[index]; }
  // Number of retained-token occurrences (sum of counts).
  std::int64_t total_tokens() const { return total_tokens_; }

 private:
  void rebuild_index();

  std::vector<std::string> words_;
  std::vector<std::int64_t> counts_;
  std::unordered_map<std::string, std::int32_t, TransparentStringHash,
                     std::equal_to<>>
      index_;
  std::int64_t total_tokens_ = 0;
};

// Probability of keeping an occurrence of a word with frequency count/total
// under subsampling threshold t: min(1, (sqrt(f/t) + 1) * t / f). t = 0
// disables subsampling (always 1).
double keep_probability(std::int64_t count, std::int64_t total, double t);

}  // namespace lexembed
