#include "lexembed/vectors.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>

namespace lexembed {

namespace {

// The binary format stores raw little-endian IEEE-754 floats.
static_assert(std::numeric_limits<float>::is_iec559, "IEEE-754 float required");
static_assert(std::endian::native == std::endian::little,
              "vector I/O assumes a little-endian host");

}  // namespace

void EmbeddingSet::rebuild_index() {
  index_.clear();
  index_.reserve(words_.size());
  for (std::int32_t i = 0; i < size(); ++i)
    index_.emplace(words_[i], i);  // duplicates keep the first row
}

EmbeddingSet EmbeddingSet::from_model(const Model& model,
                                      const Vocabulary& vocab) {
  if (model.vocab_size != vocab.size())
    throw DomainError("EmbeddingSet: model/vocabulary size mismatch");
  EmbeddingSet set;
  set.dim_ = model.dim;
  set.words_.reserve(static_cast<std::size_t>(vocab.size()));
  for (std::int32_t w = 0; w < vocab.size(); ++w)
    set.words_.push_back(vocab.word(w));
  set.matrix_ = model.input;
  set.rebuild_index();
  return set;
}

EmbeddingSet EmbeddingSet::from_rows(std::vector<std::string> words,
                                     std::vector<float> matrix,
                                     std::int32_t dim) {
  if (dim < 1) throw DomainError("EmbeddingSet: dim must be >= 1");
  if (words.empty()) throw DomainError("EmbeddingSet: no rows");
  if (matrix.size() != words.size() * static_cast<std::size_t>(dim))
    throw DomainError("EmbeddingSet: matrix shape does not match word count");
  EmbeddingSet set;
  set.words_ = std::move(words);
  set.matrix_ = std::move(matrix);
  set.dim_ = dim;
  set.rebuild_index();
  return set;
}

void EmbeddingSet::save(std::ostream& out, VectorFormat format) const {
  out << size() << ' ' << dim_ << '\n';
  if (format == VectorFormat::Text) {
    char buf[32];
    for (std::int32_t w = 0; w < size(); ++w) {
      out << words_[w];
      const float* r = matrix_.data() + static_cast<std::size_t>(w) * dim_;
      for (std::int32_t d = 0; d < dim_; ++d) {
        const int len = std::snprintf(buf, sizeof(buf), " %.6g",
                                      static_cast<double>(r[d]));
        out.write(buf, len);
      }
      out << '\n';
    }
  } else {
    for (std::int32_t w = 0; w < size(); ++w) {
      out << words_[w] << ' ';
      out.write(reinterpret_cast<const char*>(
                    matrix_.data() + static_cast<std::size_t>(w) * dim_),
                static_cast<std::streamsize>(sizeof(float)) * dim_);
      out << '\n';
    }
  }
  if (!out) throw IoError("failed to write vector data");
}

void EmbeddingSet::save_to_file(const std::string& path,
                                VectorFormat format) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  save(out, format);
}

namespace {

// Header line shared by both formats: "V D".
void parse_header(const std::string& line, std::int64_t& rows,
                  std::int64_t& dim) {
  const char* p = line.data();
  const char* end = p + line.size();
  auto r1 = std::from_chars(p, end, rows);
  if (r1.ec != std::errc() || r1.ptr == end || *r1.ptr != ' ')
    throw ParseError("vector file, line 1: malformed header (want \"V D\")");
  auto r2 = std::from_chars(r1.ptr + 1, end, dim);
  if (r2.ec != std::errc() || r2.ptr != end)
    throw ParseError("vector file, line 1: malformed header (want \"V D\")");
  if (rows < 1 || dim < 1)
    throw ParseError("vector file, line 1: header dimensions must be positive");
}

EmbeddingSet load_text(std::istream& in) {
  std::string line;
  if (!std::getline(in, line))
    throw ParseError("vector file, line 1: missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::int64_t rows = 0, dim = 0;
  parse_header(line, rows, dim);

  std::vector<std::string> words;
  std::vector<float> matrix;
  words.reserve(static_cast<std::size_t>(rows));
  matrix.reserve(static_cast<std::size_t>(rows * dim));
  for (std::int64_t w = 0; w < rows; ++w) {
    const std::string where =
        "vector file, line " + std::to_string(w + 2) + ": ";
    if (!std::getline(in, line)) throw ParseError(where + "unexpected end of file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::size_t sep = line.find(' ');
    if (sep == std::string::npos || sep == 0)
      throw ParseError(where + "expected \"token v1 ... vD\"");
    words.push_back(line.substr(0, sep));
    const char* p = line.data() + sep;
    const char* end = line.data() + line.size();
    for (std::int64_t d = 0; d < dim; ++d) {
      if (p == end || *p != ' ')
        throw ParseError(where + "expected " + std::to_string(dim) +
                         " values, found " + std::to_string(d));
      ++p;
      float value = 0.0f;
      auto res = std::from_chars(p, end, value);
      if (res.ec != std::errc())
        throw ParseError(where + "malformed value at column " +
                         std::to_string(d + 1));
      p = res.ptr;
      matrix.push_back(value);
    }
    while (p != end && *p == ' ') ++p;  // reference writers leave a trailing blank
    if (p != end)
      throw ParseError(where + "trailing data after " + std::to_string(dim) +
                       " values");
  }
  // Only blank lines may follow the declared rows.
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty())
      throw ParseError("vector file: data beyond the declared " +
                       std::to_string(rows) + " rows");
  }
  return EmbeddingSet::from_rows(std::move(words), std::move(matrix),
                                 static_cast<std::int32_t>(dim));
}

EmbeddingSet load_binary(std::istream& in) {
  std::string line;
  if (!std::getline(in, line))
    throw ParseError("vector file, line 1: missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::int64_t rows = 0, dim = 0;
  parse_header(line, rows, dim);

  std::vector<std::string> words;
  std::vector<float> matrix;
  words.reserve(static_cast<std::size_t>(rows));
  matrix.resize(static_cast<std::size_t>(rows * dim));
  std::string token;
  for (std::int64_t w = 0; w < rows; ++w) {
    token.clear();
    int c;
    // Tokens are separated from the previous row's payload by '\n' (or a
    // space in some writers); skip any such padding.
    while ((c = in.get()) != EOF && (c == '\n' || c == ' ')) {
    }
    while (c != EOF && c != ' ' && c != '\n') {
      token.push_back(static_cast<char>(c));
      c = in.get();
    }
    std::int64_t offset = static_cast<std::int64_t>(in.tellg());
    if (offset < 0) {  // tellg fails once eofbit is set
      in.clear();
      offset = static_cast<std::int64_t>(in.tellg());
    }
    if (token.empty() || c != ' ')
      throw ParseError("vector file, byte offset " + std::to_string(offset) +
                       ": expected \"token \" for row " + std::to_string(w));
    in.read(reinterpret_cast<char*>(matrix.data() +
                                    static_cast<std::size_t>(w * dim)),
            static_cast<std::streamsize>(sizeof(float)) * dim);
    if (in.gcount() != static_cast<std::streamsize>(sizeof(float)) * dim)
      throw ParseError("vector file, byte offset " + std::to_string(offset) +
                       ": truncated payload for row " + std::to_string(w));
    words.push_back(token);
  }
  int c;
  while ((c = in.get()) != EOF && (c == '\n' || c == ' ')) {
  }
  if (c != EOF)
    throw ParseError("vector file: data beyond the declared " +
                     std::to_string(rows) + " rows");
  return EmbeddingSet::from_rows(std::move(words), std::move(matrix),
                                 static_cast<std::int32_t>(dim));
}

}  // namespace

EmbeddingSet EmbeddingSet::load(std::istream& in, VectorFormat format) {
  return format == VectorFormat::Text ? load_text(in) : load_binary(in);
}

EmbeddingSet EmbeddingSet::load_from_file(const std::string& path,
                                          VectorFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open vector file: " + path);
  return load(in, format);
}

void EmbeddingSet::normalize() {
  if (normalized_) return;
  zero_rows_ = 0;
  for (std::int32_t w = 0; w < size(); ++w) {
    float* r = matrix_.data() + static_cast<std::size_t>(w) * dim_;
    double sq = 0.0;
    for (std::int32_t d = 0; d < dim_; ++d)
      sq += static_cast<double>(r[d]) * static_cast<double>(r[d]);
    if (sq == 0.0) {
      ++zero_rows_;
      continue;
    }
    const double inv = 1.0 / std::sqrt(sq);
    for (std::int32_t d = 0; d < dim_; ++d)
      r[d] = static_cast<float>(r[d] * inv);
  }
  normalized_ = true;
}

std::vector<Neighbor> nearest(const EmbeddingSet& set,
                              std::span<const double> query,
                              std::span<const std::int32_t> exclude,
                              std::int32_t k) {
  if (!set.normalized())
    throw DomainError("nearest: normalize the embedding set first");
  if (k < 1) throw DomainError("nearest: k must be >= 1");
  if (query.size() != static_cast<std::size_t>(set.dim()))
    throw DomainError("nearest: query dimension mismatch");

  double sq = 0.0;
  for (double v : query) sq += v * v;
  if (sq == 0.0) throw DomainError("nearest: zero query vector");
  const double inv = 1.0 / std::sqrt(sq);

  std::vector<std::int32_t> skip(exclude.begin(), exclude.end());
  std::sort(skip.begin(), skip.end());

  auto better = [](const Neighbor& a, const Neighbor& b) {
    if (a.cosine != b.cosine) return a.cosine > b.cosine;
    return a.index < b.index;
  };
  std::vector<Neighbor> best;
  best.reserve(static_cast<std::size_t>(k) + 1);
  const std::int32_t dim = set.dim();
  for (std::int32_t w = 0; w < set.size(); ++w) {
    if (std::binary_search(skip.begin(), skip.end(), w)) continue;
    const float* r = set.row(w).data();
    double dot = 0.0;
    for (std::int32_t d = 0; d < dim; ++d)
      dot += query[static_cast<std::size_t>(d)] * static_cast<double>(r[d]);
    const Neighbor cand{w, dot * inv};
    if (best.size() == static_cast<std::size_t>(k) &&
        !better(cand, best.back()))
      continue;
    best.insert(std::upper_bound(best.begin(), best.end(), cand, better), cand);
    if (best.size() > static_cast<std::size_t>(k)) best.pop_back();
  }
  return best;
}

std::int32_t analogy_query(const EmbeddingSet& set, std::int32_t a,
                           std::int32_t b, std::int32_t c) {
  for (std::int32_t idx : {a, b, c})
    if (idx < 0 || idx >= set.size())
      throw DomainError("analogy_query: index out of range");
  if (!set.normalized())
    throw DomainError("analogy_query: normalize the embedding set first");

  const std::int32_t dim = set.dim();
  const float* ra = set.row(a).data();
  const float* rb = set.row(b).data();
  const float* rc = set.row(c).data();
  std::vector<double> query(static_cast<std::size_t>(dim));
  for (std::int32_t d = 0; d < dim; ++d)
    query[static_cast<std::size_t>(d)] = static_cast<double>(rb[d]) -
                                         static_cast<double>(ra[d]) +
                                         static_cast<double>(rc[d]);
  const std::int32_t exclude[] = {a, b, c};
  const auto top = nearest(set, query, exclude, 1);
  if (top.empty()) throw DomainError("analogy_query: no candidate rows");
  return top.front().index;
}

}  // namespace lexembed
