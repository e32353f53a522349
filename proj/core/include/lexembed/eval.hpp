#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lexembed/trainer.hpp"
#include "lexembed/vectors.hpp"

namespace lexembed {

class Lexicon;
class Vocabulary;

// Word-analogy questions in the standard "questions-words" layout: section
// headers ": section-name" followed by four space-separated tokens per line.
// Sections whose names start with "gram" are syntactic; the rest semantic.
// Tokens are lowercased at load.
struct AnalogySection {
  std::string name;
  bool syntactic = false;
  std::vector<std::array<std::string, 4>> questions;
};

struct AnalogyDataset {
  std::vector<AnalogySection> sections;

  static AnalogyDataset load(std::istream& in);
  static AnalogyDataset load_from_file(const std::string& path);

  std::int64_t question_count(bool syntactic) const;
  std::int64_t question_count() const;
};

// Word-similarity pairs with human scores, read from a tab-separated file
// with a header row naming word1, word2 and SimLex999 columns.
struct SimilarityPair {
  std::string word1;
  std::string word2;
  double score;
};

struct SimilarityDataset {
  std::vector<SimilarityPair> pairs;

  static SimilarityDataset load(std::istream& in);
  static SimilarityDataset load_from_file(const std::string& path);
};

struct ScopeResult {
  std::int64_t correct = 0;
  std::int64_t attempted = 0;
  std::int64_t skipped = 0;  // questions with out-of-vocabulary tokens

  // correct/attempted; 0 when nothing was attempted.
  double accuracy() const {
    return attempted == 0
               ? 0.0
               : static_cast<double>(correct) / static_cast<double>(attempted);
  }
};

struct SectionResult {
  std::string name;
  bool syntactic = false;
  ScopeResult result;
};

struct EvalReport {
  std::vector<SectionResult> sections;
  ScopeResult semantic;
  ScopeResult syntactic;
  ScopeResult total;          // also carries SimLex attempted/skipped pair counts
  std::optional<double> rho;  // SimLex Spearman correlation
};

// Scores every question: lowercased tokens, skip-and-count when any of the
// four is out of vocabulary, correct iff analogy_query picks w_D. The set is
// normalized in place first. `threads` splits the questions; accuracy does
// not depend on the split.
EvalReport eval_analogy(EmbeddingSet& set, const AnalogyDataset& data,
                        std::int32_t threads = 1);

// Spearman's rank correlation with average ranks on ties. Throws DomainError
// on length mismatch or length < 2, EvalError when either list has zero rank
// variance.
double spearman_rho(std::span<const double> xs, std::span<const double> ys);

// Cosine-vs-human-score correlation over in-vocabulary pairs; skipped pairs
// are counted in the report. Throws EvalError when fewer than 2 pairs are
// scorable.
EvalReport eval_simlex(EmbeddingSet& set, const SimilarityDataset& data);

struct SweepRow {
  double theta = 0.0;
  bool failed = false;
  std::string error;  // diagnostic when failed
  EvalReport report;
};

// θ grid covering the feasible score interval: 0.5, 1.0, …, 7.0.
std::vector<double> default_sweep_grid();

// Trains one threshold-mode model per θ — each run re-derives its state from
// base.seed, so rows differ only in θ — and evaluates it on the analogy set.
// A failing row records its error and the sweep continues. Requires
// base.mode == threshold.
std::vector<SweepRow> sweep_threshold(const TrainConfig& base,
                                      std::span<const double> thetas,
                                      const std::string& corpus_path,
                                      const Vocabulary& vocab,
                                      const Lexicon& lexicon,
                                      const AnalogyDataset& data,
                                      std::ostream* progress = nullptr);

// Tab-separated sweep table: header, then one row per θ with percentages to
// two decimals; failed rows become "# theta=… error: …" comment lines.
void write_sweep_tsv(std::ostream& out, std::span<const SweepRow> rows);

}  // namespace lexembed
