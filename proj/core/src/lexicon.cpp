#include "lexembed/lexicon.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <istream>
#include <sstream>

#include "lexembed/corpus.hpp"

namespace lexembed {

namespace {

// Lowercase a label and drop '-'/'_' so "forward-entailment" and
// "ForwardEntailment" compare equal.
std::string canonical_label(std::string_view label) {
  std::string out;
  out.reserve(label.size());
  for (char c : label) {
    if (c == '-' || c == '_') continue;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

}  // namespace

std::optional<RelationType> parse_relation(std::string_view label) {
  const std::string key = canonical_label(label);
  if (key == "equivalence") return RelationType::Equivalence;
  if (key == "forwardentailment") return RelationType::ForwardEntailment;
  if (key == "reverseentailment") return RelationType::ReverseEntailment;
  if (key == "exclusion") return RelationType::Exclusion;
  if (key == "otherrelated") return RelationType::OtherRelated;
  if (key == "independent") return RelationType::Independent;
  return std::nullopt;
}

std::string_view relation_name(RelationType relation) {
  switch (relation) {
    case RelationType::Equivalence: return "Equivalence";
    case RelationType::ForwardEntailment: return "ForwardEntailment";
    case RelationType::ReverseEntailment: return "ReverseEntailment";
    case RelationType::Exclusion: return "Exclusion";
    case RelationType::OtherRelated: return "OtherRelated";
    case RelationType::Independent: return "Independent";
  }
  throw DomainError("relation_name: invalid relation value");
}

RelationSet RelationSet::defaults() {
  RelationSet s;
  s.add(RelationType::Equivalence)
      .add(RelationType::ForwardEntailment)
      .add(RelationType::ReverseEntailment);
  return s;
}

RelationSet RelationSet::parse(std::string_view csv) {
  RelationSet s;
  std::size_t pos = 0;
  while (pos <= csv.size()) {
    std::size_t comma = csv.find(',', pos);
    if (comma == std::string_view::npos) comma = csv.size();
    std::string_view item = csv.substr(pos, comma - pos);
    // trim ASCII whitespace
    while (!item.empty() && std::isspace(static_cast<unsigned char>(item.front())))
      item.remove_prefix(1);
    while (!item.empty() && std::isspace(static_cast<unsigned char>(item.back())))
      item.remove_suffix(1);
    if (!item.empty()) {
      auto r = parse_relation(item);
      if (!r) throw ConfigError("unknown relation type: '" + std::string(item) + "'");
      s.add(*r);
    }
    pos = comma + 1;
  }
  if (s.empty()) throw ConfigError("relation set is empty");
  return s;
}

std::string RelationSet::to_string() const {
  std::string out;
  for (int i = 0; i < kRelationCount; ++i) {
    auto r = static_cast<RelationType>(i);
    if (!contains(r)) continue;
    if (!out.empty()) out += ',';
    out += relation_name(r);
  }
  return out;
}

float Lexicon::max_score_of(std::int32_t word) const {
  if (!has_paraphrases(word))
    throw DomainError("max_score_of: word " + std::to_string(word) +
                      " has no paraphrases");
  return max_score_of_[word];
}

Lexicon Lexicon::finalize(std::int32_t vocab_size, std::vector<RawEntry>&& rows,
                          std::int64_t* duplicates_merged) {
  // Sort so duplicates are adjacent and the final per-head order
  // (descending score, ascending paraphrase index) falls out directly.
  std::sort(rows.begin(), rows.end(), [](const RawEntry& a, const RawEntry& b) {
    if (a.head != b.head) return a.head < b.head;
    if (a.score != b.score) return a.score > b.score;
    if (a.paraphrase != b.paraphrase) return a.paraphrase < b.paraphrase;
    return static_cast<int>(a.relation) < static_cast<int>(b.relation);
  });

  // Keep the max-score row per (head, paraphrase, relation). Rows are
  // ordered by descending score within a head, so the first occurrence wins.
  std::vector<RawEntry> unique;
  unique.reserve(rows.size());
  std::int64_t merged = 0;
  for (const RawEntry& row : rows) {
    bool duplicate = false;
    // Scan back within the same head; duplicate keys are rare and heads are
    // short, so a linear check beats another full sort pass.
    for (auto it = unique.rbegin(); it != unique.rend() && it->head == row.head;
         ++it) {
      if (it->paraphrase == row.paraphrase && it->relation == row.relation) {
        duplicate = true;
        break;
      }
    }
    if (duplicate) {
      ++merged;
    } else {
      unique.push_back(row);
    }
  }
  if (duplicates_merged) *duplicates_merged += merged;

  Lexicon lex;
  lex.offsets_.assign(static_cast<std::size_t>(vocab_size) + 1, 0);
  lex.entries_.reserve(unique.size());
  for (const RawEntry& row : unique) ++lex.offsets_[row.head + 1];
  for (std::int32_t w = 0; w < vocab_size; ++w)
    lex.offsets_[w + 1] += lex.offsets_[w];
  for (const RawEntry& row : unique)
    lex.entries_.push_back({row.paraphrase, row.score, row.relation});

  // Exclusion lists: unique paraphrase indices per head, ascending.
  lex.excl_offsets_.assign(static_cast<std::size_t>(vocab_size) + 1, 0);
  lex.max_score_of_.assign(static_cast<std::size_t>(vocab_size), 0.0f);
  std::vector<std::int32_t> scratch;
  for (std::int32_t w = 0; w < vocab_size; ++w) {
    auto span = lex.paraphrases_of(w);
    scratch.clear();
    for (const ParaphraseEntry& e : span) scratch.push_back(e.paraphrase);
    std::sort(scratch.begin(), scratch.end());
    scratch.erase(std::unique(scratch.begin(), scratch.end()), scratch.end());
    lex.exclusion_.insert(lex.exclusion_.end(), scratch.begin(), scratch.end());
    lex.excl_offsets_[w + 1] = static_cast<std::int64_t>(lex.exclusion_.size());
    if (!span.empty()) {
      lex.max_score_of_[w] = span.front().score;  // spans are score-descending
      lex.max_score_ = std::max(lex.max_score_, span.front().score);
    }
  }
  return lex;
}

Lexicon Lexicon::from_entries(std::int32_t vocab_size,
                              std::span<const RawEntry> entries) {
  if (vocab_size <= 0) throw DomainError("Lexicon: vocab_size must be positive");
  if (entries.empty()) throw ConfigError("Lexicon: no entries");
  std::vector<RawEntry> rows(entries.begin(), entries.end());
  for (const RawEntry& row : rows) {
    if (row.head < 0 || row.head >= vocab_size || row.paraphrase < 0 ||
        row.paraphrase >= vocab_size)
      throw DomainError("Lexicon: entry index out of range");
    if (row.head == row.paraphrase)
      throw DomainError("Lexicon: self-paraphrase for word index " +
                        std::to_string(row.head));
    if (!(row.score > 0.0f))
      throw DomainError("Lexicon: score must be positive");
  }
  return finalize(vocab_size, std::move(rows), nullptr);
}

namespace {

// Splits a PPDB row on " ||| ". Returns false if the row has fewer fields
// than requested.
bool split_ppdb(std::string_view line, std::span<std::string_view> out) {
  constexpr std::string_view kSep = " ||| ";
  std::size_t pos = 0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (i + 1 == out.size()) {
      out[i] = line.substr(pos);
      return true;
    }
    std::size_t next = line.find(kSep, pos);
    if (next == std::string_view::npos) return false;
    out[i] = line.substr(pos, next - pos);
    pos = next + kSep.size();
  }
  return true;
}

// Extracts PPDB2.0Score=<float> from the space-separated feature field.
std::optional<float> ppdb2_score(std::string_view features) {
  constexpr std::string_view kKey = "PPDB2.0Score=";
  std::size_t pos = 0;
  while ((pos = features.find(kKey, pos)) != std::string_view::npos) {
    // Keys like XPPDB2.0Score= must not match.
    if (pos > 0 && features[pos - 1] != ' ') {
      pos += kKey.size();
      continue;
    }
    std::size_t begin = pos + kKey.size();
    std::size_t end = features.find(' ', begin);
    if (end == std::string_view::npos) end = features.size();
    std::string_view value = features.substr(begin, end - begin);
    float score = 0.0f;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), score);
    if (ec == std::errc() && ptr == value.data() + value.size()) return score;
    return std::nullopt;  // key present but malformed
  }
  return std::nullopt;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
    s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
    s.remove_suffix(1);
  return s;
}

bool single_token(std::string_view phrase) {
  return !phrase.empty() &&
         phrase.find(' ') == std::string_view::npos &&
         phrase.find('\t') == std::string_view::npos;
}

}  // namespace

Lexicon parse_ppdb(std::istream& source, RelationSet allowed,
                   const Vocabulary& vocab, PpdbParseStats* stats) {
  if (allowed.empty()) throw ConfigError("parse_ppdb: empty relation set");
  PpdbParseStats local;
  PpdbParseStats& st = stats ? *stats : local;

  std::vector<Lexicon::RawEntry> rows;
  std::string line;
  while (std::getline(source, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ++st.rows;

    std::string_view fields[6];
    if (!split_ppdb(line, fields)) {
      ++st.malformed;
      continue;
    }
    std::string_view phrase = trim(fields[1]);
    std::string_view paraphrase = trim(fields[2]);
    std::string_view features = fields[3];
    std::string_view entailment = trim(fields[5]);

    auto relation = parse_relation(entailment);
    if (!relation) {
      ++st.unknown_relation;
      continue;
    }
    if (!allowed.contains(*relation)) {
      ++st.relation_filtered;
      continue;
    }
    if (!single_token(phrase) || !single_token(paraphrase)) {
      ++st.multiword;
      continue;
    }
    std::int32_t head = vocab.index_of(phrase);
    std::int32_t para = vocab.index_of(paraphrase);
    if (head < 0 || para < 0) {
      ++st.out_of_vocab;
      continue;
    }
    if (head == para) {
      ++st.self_pair;
      continue;
    }
    auto score = ppdb2_score(features);
    if (!score || !(*score > 0.0f)) {
      ++st.missing_score;
      continue;
    }
    rows.push_back({head, para, *score, *relation});
    ++st.kept;
  }
  if (source.bad()) throw IoError("parse_ppdb: read failure");
  if (rows.empty())
    throw ConfigError("parse_ppdb: no usable rows (of " +
                      std::to_string(st.rows) + " read)");
  // kept counts pre-dedup rows; duplicates_merged reports the merges.
  return Lexicon::finalize(vocab.size(), std::move(rows), &st.duplicates_merged);
}

Lexicon parse_ppdb_file(const std::string& path, RelationSet allowed,
                        const Vocabulary& vocab, PpdbParseStats* stats) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open lexicon file: " + path);
  return parse_ppdb(in, allowed, vocab, stats);
}

}  // namespace lexembed
