#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lexembed/errors.hpp"
#include "lexembed/rng.hpp"

namespace lexembed {

class Vocabulary;

// The six PPDB 2.0 entailment labels.
enum class RelationType : std::uint8_t {
  Equivalence = 0,
  ForwardEntailment = 1,
  ReverseEntailment = 2,
  Exclusion = 3,
  OtherRelated = 4,
  Independent = 5,
};

inline constexpr int kRelationCount = 6;

// Accepts the PPDB dump labels ("Equivalence", "ForwardEntailment", ...) and
// common CLI spellings ("forward-entailment", "forward_entailment");
// case-insensitive. nullopt for anything else.
std::optional<RelationType> parse_relation(std::string_view label);
std::string_view relation_name(RelationType relation);

// Small set of relation types, used to whitelist lexicon rows.
class RelationSet {
 public:
  RelationSet() = default;

  static RelationSet all() {
    RelationSet s;
    s.bits_ = (1u << kRelationCount) - 1;
    return s;
  }
  // Equivalence + ForwardEntailment + ReverseEntailment, the set used for
  // threshold tuning.
  static RelationSet defaults();
  // Comma-separated relation names; throws ConfigError on unknown names or
  // an empty list.
  static RelationSet parse(std::string_view csv);

  RelationSet& add(RelationType r) {
    bits_ |= (1u << static_cast<unsigned>(r));
    return *this;
  }
  bool contains(RelationType r) const {
    return (bits_ >> static_cast<unsigned>(r)) & 1u;
  }
  bool empty() const { return bits_ == 0; }
  std::string to_string() const;

 private:
  std::uint8_t bits_ = 0;
};

struct ParaphraseEntry {
  std::int32_t paraphrase;  // vocabulary index
  float score;              // PPDB2.0 score, > 0
  RelationType relation;
};

// Row outcome counters for parse_ppdb.
struct PpdbParseStats {
  std::int64_t rows = 0;
  std::int64_t kept = 0;
  std::int64_t malformed = 0;
  std::int64_t unknown_relation = 0;
  std::int64_t relation_filtered = 0;
  std::int64_t multiword = 0;
  std::int64_t out_of_vocab = 0;
  std::int64_t self_pair = 0;
  std::int64_t missing_score = 0;
  std::int64_t duplicates_merged = 0;
};

// Per-word paraphrase lists keyed by vocabulary index. Immutable after
// construction; safe for concurrent reads.
class Lexicon {
 public:
  struct RawEntry {
    std::int32_t head;
    std::int32_t paraphrase;
    float score;
    RelationType relation;
  };

  Lexicon() = default;

  // Builds a lexicon from explicit entries (synthetic lexicons, tests).
  // Duplicate (head, paraphrase, relation) rows keep the maximum score.
  // Throws DomainError on self-pairs, non-positive scores, or bad indices.
  static Lexicon from_entries(std::int32_t vocab_size,
                              std::span<const RawEntry> entries);

  // Entries for `word`, ordered by descending score, ties by ascending
  // paraphrase index. Empty span for words without paraphrases.
  std::span<const ParaphraseEntry> paraphrases_of(std::int32_t word) const {
    return {entries_.data() + offsets_[word],
            entries_.data() + offsets_[word + 1]};
  }
  // Sorted unique paraphrase indices of `word`; the negative-sampling
  // exclusion set.
  std::span<const std::int32_t> exclusion_of(std::int32_t word) const {
    return {exclusion_.data() + excl_offsets_[word],
            exclusion_.data() + excl_offsets_[word + 1]};
  }
  bool has_paraphrases(std::int32_t word) const {
    return offsets_[word + 1] > offsets_[word];
  }
  // Maximum score within the word's paraphrase set. Requires
  // has_paraphrases(word).
  float max_score_of(std::int32_t word) const;
  // Maximum score over the whole lexicon; 0 when empty.
  float max_score() const { return max_score_; }

  std::int64_t entry_count() const {
    return static_cast<std::int64_t>(entries_.size());
  }
  std::int32_t vocab_size() const {
    return static_cast<std::int32_t>(offsets_.size()) - 1;
  }

 private:
  static Lexicon finalize(std::int32_t vocab_size,
                          std::vector<RawEntry>&& rows,
                          std::int64_t* duplicates_merged);

  std::vector<std::int64_t> offsets_;       // size V+1
  std::vector<ParaphraseEntry> entries_;
  std::vector<std::int64_t> excl_offsets_;  // size V+1
  std::vector<std::int32_t> exclusion_;
  std::vector<float> max_score_of_;
  float max_score_ = 0.0f;

  friend Lexicon parse_ppdb(std::istream&, RelationSet, const Vocabulary&,
                            PpdbParseStats*);
};

// Parses a PPDB 2.0 lexical dump: fields separated by " ||| "
// (LHS ||| phrase ||| paraphrase ||| features ||| alignment ||| entailment).
// Keeps rows whose phrase and paraphrase are single tokens present in
// `vocab`, whose entailment label is in `allowed`, and whose feature list
// carries PPDB2.0Score. Duplicate (head, paraphrase, relation) rows keep the
// maximum score. Throws ConfigError when nothing is retained.
Lexicon parse_ppdb(std::istream& source, RelationSet allowed,
                   const Vocabulary& vocab, PpdbParseStats* stats = nullptr);
Lexicon parse_ppdb_file(const std::string& path, RelationSet allowed,
                        const Vocabulary& vocab,
                        PpdbParseStats* stats = nullptr);

// Threshold gate: true iff score is strictly above theta.
inline bool gate_threshold(double score, double theta) {
  return score > theta;
}

// Degree of truth of a paraphrase: score normalized by the maximum score in
// the word's paraphrase set. Requires max_in_set > 0.
inline double degree_of_truth(double score, double max_in_set) {
  if (max_in_set <= 0) throw DomainError("degree_of_truth: max_in_set must be positive");
  return score / max_in_set;
}

// Bernoulli gate: true with probability x.
inline bool gate_bernoulli(double x, Rng& rng) {
  if (!(x >= 0.0 && x <= 1.0)) throw DomainError("gate_bernoulli: x must lie in [0,1]");
  return rng.bernoulli(x);
}

}  // namespace lexembed
