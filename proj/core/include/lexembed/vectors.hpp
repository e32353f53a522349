#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "lexembed/corpus.hpp"
#include "lexembed/trainer.hpp"

namespace lexembed {

enum class VectorFormat : std::uint8_t { Text, Binary };

// A word list with its V×D embedding matrix. Immutable once normalized;
// queries are read-only and safe to run concurrently.
class EmbeddingSet {
 public:
  EmbeddingSet() = default;

  // Copies the input-side vectors of a trained model.
  static EmbeddingSet from_model(const Model& model, const Vocabulary& vocab);
  // Assembles a set from explicit rows (fixtures, tests). matrix holds
  // words.size()*dim scalars, row-major.
  static EmbeddingSet from_rows(std::vector<std::string> words,
                                std::vector<float> matrix, std::int32_t dim);

  // Text: header "V D", then one line per word, "token v1 … vD" with
  // 6-significant-digit decimals. Binary: the same header line, then per
  // word the token, one space, D little-endian IEEE-754 32-bit values, and
  // a newline. Both round-trip with load; binary is bit-exact.
  void save(std::ostream& out, VectorFormat format) const;
  void save_to_file(const std::string& path, VectorFormat format) const;
  // Loads either format; the result is unnormalized. Parse errors name the
  // offending line (text) or byte offset (binary). A binary row's trailing
  // newline may be absent on the last row.
  static EmbeddingSet load(std::istream& in, VectorFormat format);
  static EmbeddingSet load_from_file(const std::string& path,
                                     VectorFormat format);

  std::int32_t size() const { return static_cast<std::int32_t>(words_.size()); }
  std::int32_t dim() const { return dim_; }
  const std::string& word(std::int32_t index) const { return words_[index]; }
  // Index of the first row holding `token`; -1 when absent.
  std::int32_t index_of(std::string_view token) const {
    auto it = index_.find(token);
    return it == index_.end() ? -1 : it->second;
  }
  std::span<const float> row(std::int32_t index) const {
    return {matrix_.data() + static_cast<std::size_t>(index) * dim_,
            static_cast<std::size_t>(dim_)};
  }

  // Scales every row to unit Euclidean norm; zero rows stay zero and are
  // counted. Idempotent: a second call is a no-op.
  void normalize();
  bool normalized() const { return normalized_; }
  std::int32_t zero_rows() const { return zero_rows_; }

 private:
  void rebuild_index();

  std::vector<std::string> words_;
  std::vector<float> matrix_;
  std::int32_t dim_ = 0;
  std::unordered_map<std::string, std::int32_t, TransparentStringHash,
                     std::equal_to<>>
      index_;
  bool normalized_ = false;
  std::int32_t zero_rows_ = 0;
};

struct Neighbor {
  std::int32_t index;
  double cosine;
};

// The k highest-cosine rows against `query`, descending, ties broken by
// ascending index; rows listed in `exclude` are skipped. Requires a
// normalized set and a nonzero query (DomainError otherwise). Accumulation
// runs in double precision so results are reproducible.
std::vector<Neighbor> nearest(const EmbeddingSet& set,
                              std::span<const double> query,
                              std::span<const std::int32_t> exclude,
                              std::int32_t k);

// Index of the row closest (by cosine) to v_b − v_a + v_c over the
// normalized rows, with a, b, c themselves excluded. Throws DomainError for
// invalid indices, an unnormalized set, or a degenerate zero query.
std::int32_t analogy_query(const EmbeddingSet& set, std::int32_t a,
                           std::int32_t b, std::int32_t c);

}  // namespace lexembed
