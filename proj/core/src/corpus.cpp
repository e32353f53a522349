#include "lexembed/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "lexembed/errors.hpp"

namespace lexembed {

namespace {

constexpr std::size_t kBufSize = 1 << 20;

inline bool is_space_byte(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' ||
         c == '\f';
}

inline char lower_ascii(unsigned char c) {
  return (c >= 'A' && c <= 'Z') ? static_cast<char>(c + 32)
                                : static_cast<char>(c);
}

[[noreturn]] void bad_encoding(std::uint64_t offset) {
  throw ParseError("invalid UTF-8 sequence at byte offset " +
                   std::to_string(offset));
}

}  // namespace

TokenStream::TokenStream(std::istream& source, std::uint64_t start_offset)
    : src_(&source), buf_(kBufSize) {
  if (start_offset > 0) {
    // Peek at the byte before the cut; if it is not whitespace the offset
    // landed inside a token whose head belongs to the previous segment.
    src_->seekg(static_cast<std::streamoff>(start_offset - 1));
    int prev = src_->get();
    offset_ = start_offset;
    if (prev != std::char_traits<char>::eof() &&
        !is_space_byte(static_cast<unsigned char>(prev))) {
      int c;
      while ((c = src_->get()) != std::char_traits<char>::eof()) {
        ++offset_;
        if (is_space_byte(static_cast<unsigned char>(c))) break;
      }
    }
  }
  token_begin_ = offset_;
}

int TokenStream::fill() {
  if (buf_pos_ < buf_len_) return static_cast<unsigned char>(buf_[buf_pos_]);
  src_->read(buf_.data(), static_cast<std::streamsize>(buf_.size()));
  buf_len_ = static_cast<std::size_t>(src_->gcount());
  buf_pos_ = 0;
  if (buf_len_ == 0) return -1;
  return static_cast<unsigned char>(buf_[0]);
}

bool TokenStream::next(std::string& token) {
  token.clear();
  int ci;
  // Skip leading whitespace.
  while ((ci = fill()) != -1) {
    unsigned char c = static_cast<unsigned char>(ci);
    if (!is_space_byte(c)) break;
    ++buf_pos_;
    ++offset_;
  }
  if (ci == -1) return false;
  token_begin_ = offset_;
  while ((ci = fill()) != -1) {
    unsigned char c = static_cast<unsigned char>(ci);
    if (is_space_byte(c)) break;
    // Incremental UTF-8 validation. Whitespace is ASCII, so a multi-byte
    // sequence never spans a token boundary; a dangling sequence at a
    // boundary is malformed and caught above.
    if (utf8_pending_ > 0) {
      if ((c & 0xc0) != 0x80) bad_encoding(utf8_start_);
      ++utf8_seen_;
      if (utf8_seen_ == 1) {
        // Second byte restrictions rule out overlong forms and surrogates.
        bool ok = true;
        switch (utf8_lead_) {
          case 0xe0: ok = c >= 0xa0; break;
          case 0xed: ok = c <= 0x9f; break;
          case 0xf0: ok = c >= 0x90; break;
          case 0xf4: ok = c <= 0x8f; break;
          default: break;
        }
        if (!ok) bad_encoding(utf8_start_);
      }
      --utf8_pending_;
    } else if (c >= 0x80) {
      utf8_start_ = offset_;
      utf8_lead_ = c;
      utf8_seen_ = 0;
      if ((c & 0xe0) == 0xc0) {
        if (c < 0xc2) bad_encoding(offset_);
        utf8_pending_ = 1;
      } else if ((c & 0xf0) == 0xe0) {
        utf8_pending_ = 2;
      } else if ((c & 0xf8) == 0xf0) {
        if (c > 0xf4) bad_encoding(offset_);
        utf8_pending_ = 3;
      } else {
        bad_encoding(offset_);
      }
    }
    token.push_back(lower_ascii(c));
    ++buf_pos_;
    ++offset_;
  }
  // A multi-byte sequence may not stop at a token boundary.
  if (utf8_pending_ > 0) bad_encoding(utf8_start_);
  return true;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::istringstream in{std::string(text)};
  TokenStream ts(in);
  std::vector<std::string> out;
  std::string tok;
  while (ts.next(tok)) out.push_back(tok);
  return out;
}

Vocabulary Vocabulary::build(TokenStream& tokens, std::int64_t min_count,
                             std::int64_t* raw_tokens) {
  if (min_count < 1) throw ConfigError("min_count must be at least 1");
  std::unordered_map<std::string, std::int64_t, TransparentStringHash,
                     std::equal_to<>>
      freq;
  std::string tok;
  std::int64_t raw = 0;
  while (tokens.next(tok)) {
    ++raw;
    ++freq[tok];
  }
  if (raw_tokens) *raw_tokens = raw;
  if (raw == 0) throw Error("empty corpus: no tokens found");

  Vocabulary v;
  for (auto& [word, count] : freq) {
    if (count >= min_count) {
      v.words_.push_back(word);
      v.counts_.push_back(count);  // placeholder order, fixed below
    }
  }
  // Sort words by descending count, ties lexicographic.
  std::vector<std::int32_t> order(v.words_.size());
  for (std::size_t i = 0; i < order.size(); ++i)
    order[i] = static_cast<std::int32_t>(i);
  std::sort(order.begin(), order.end(), [&](std::int32_t a, std::int32_t b) {
    if (v.counts_[a] != v.counts_[b]) return v.counts_[a] > v.counts_[b];
    return v.words_[a] < v.words_[b];
  });
  std::vector<std::string> words(order.size());
  std::vector<std::int64_t> counts(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    words[i] = std::move(v.words_[order[i]]);
    counts[i] = v.counts_[order[i]];
  }
  v.words_ = std::move(words);
  v.counts_ = std::move(counts);
  v.total_tokens_ = 0;
  for (auto c : v.counts_) v.total_tokens_ += c;
  v.rebuild_index();
  return v;
}

Vocabulary Vocabulary::build_from_file(const std::string& path,
                                       std::int64_t min_count,
                                       std::int64_t* raw_tokens) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open corpus file: " + path);
  TokenStream ts(in);
  return build(ts, min_count, raw_tokens);
}

void Vocabulary::save(std::ostream& out) const {
  out << "#total\t" << total_tokens_ << '\n';
  for (std::size_t i = 0; i < words_.size(); ++i)
    out << words_[i] << '\t' << counts_[i] << '\n';
  if (!out) throw IoError("failed to write vocabulary");
}

Vocabulary Vocabulary::load(std::istream& in) {
  Vocabulary v;
  std::string line;
  if (!std::getline(in, line))
    throw ParseError("vocabulary line 1: missing #total header");
  auto tab = line.find('\t');
  if (line.rfind("#total", 0) != 0 || tab == std::string::npos)
    throw ParseError("vocabulary line 1: expected \"#total<TAB>N\"");
  try {
    v.total_tokens_ = std::stoll(line.substr(tab + 1));
  } catch (const std::exception&) {
    throw ParseError("vocabulary line 1: bad total count");
  }
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    tab = line.find('\t');
    if (tab == std::string::npos || tab == 0)
      throw ParseError("vocabulary line " + std::to_string(line_no) +
                       ": expected \"token<TAB>count\"");
    std::int64_t count = 0;
    try {
      count = std::stoll(line.substr(tab + 1));
    } catch (const std::exception&) {
      throw ParseError("vocabulary line " + std::to_string(line_no) +
                       ": bad count");
    }
    v.words_.push_back(line.substr(0, tab));
    v.counts_.push_back(count);
  }
  if (v.words_.empty()) throw ParseError("vocabulary has no words");
  v.rebuild_index();
  if (v.index_.size() != v.words_.size())
    throw ParseError("vocabulary contains duplicate tokens");
  return v;
}

Vocabulary Vocabulary::load_from_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open vocabulary file: " + path);
  return load(in);
}

void Vocabulary::rebuild_index() {
  index_.clear();
  index_.reserve(words_.size());
  for (std::size_t i = 0; i < words_.size(); ++i)
    index_.emplace(words_[i], static_cast<std::int32_t>(i));
}

double keep_probability(std::int64_t count, std::int64_t total, double t) {
  if (count < 1 || total < count) throw DomainError("keep_probability: need 1 <= count <= total");
  if (t < 0) throw DomainError("keep_probability: t must be non-negative");
  if (t == 0) return 1.0;
  double f = static_cast<double>(count) / static_cast<double>(total);
  double p = (std::sqrt(f / t) + 1.0) * t / f;
  return std::min(1.0, p);
}

}  // namespace lexembed
