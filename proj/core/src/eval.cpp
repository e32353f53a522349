#include "lexembed/eval.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <thread>

#include "lexembed/corpus.hpp"
#include "lexembed/lexicon.hpp"

namespace lexembed {

namespace {

std::string lower_copy(std::string_view s) {
  std::string out(s);
  for (char& c : out)
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace

AnalogyDataset AnalogyDataset::load(std::istream& in) {
  AnalogyDataset data;
  std::string line;
  std::int64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == ':') {
      std::string name = line.substr(1);
      const std::size_t start = name.find_first_not_of(' ');
      name = start == std::string::npos ? std::string() : name.substr(start);
      AnalogySection section;
      section.name = name;
      section.syntactic = name.rfind("gram", 0) == 0;
      data.sections.push_back(std::move(section));
      continue;
    }
    std::array<std::string, 4> q;
    std::istringstream fields(line);
    std::string extra;
    if (!(fields >> q[0] >> q[1] >> q[2] >> q[3]) || (fields >> extra))
      throw ParseError("analogy dataset, line " + std::to_string(line_no) +
                       ": expected 4 tokens");
    for (std::string& t : q) t = lower_copy(t);
    if (data.sections.empty()) {
      // Files that open with questions get an implicit semantic section.
      data.sections.push_back({"", false, {}});
    }
    data.sections.back().questions.push_back(std::move(q));
  }
  if (in.bad()) throw IoError("analogy dataset: read failure");
  return data;
}

AnalogyDataset AnalogyDataset::load_from_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open analogy dataset: " + path);
  return load(in);
}

std::int64_t AnalogyDataset::question_count(bool syntactic) const {
  std::int64_t n = 0;
  for (const AnalogySection& s : sections)
    if (s.syntactic == syntactic)
      n += static_cast<std::int64_t>(s.questions.size());
  return n;
}

std::int64_t AnalogyDataset::question_count() const {
  return question_count(false) + question_count(true);
}

SimilarityDataset SimilarityDataset::load(std::istream& in) {
  std::string line;
  if (!std::getline(in, line))
    throw ParseError("similarity dataset, line 1: missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();

  // Locate the needed columns by header name.
  int col_w1 = -1, col_w2 = -1, col_score = -1;
  {
    std::istringstream fields(line);
    std::string name;
    for (int col = 0; std::getline(fields, name, '\t'); ++col) {
      if (name == "word1") col_w1 = col;
      else if (name == "word2") col_w2 = col;
      else if (name == "SimLex999") col_score = col;
    }
  }
  if (col_w1 < 0 || col_w2 < 0 || col_score < 0)
    throw ParseError(
        "similarity dataset, line 1: header must name word1, word2 and "
        "SimLex999 columns");

  SimilarityDataset data;
  std::int64_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string cell;
    SimilarityPair pair{};
    bool have_score = false;
    for (int col = 0; std::getline(fields, cell, '\t'); ++col) {
      if (col == col_w1) pair.word1 = cell;
      else if (col == col_w2) pair.word2 = cell;
      else if (col == col_score) {
        try {
          std::size_t used = 0;
          pair.score = std::stod(cell, &used);
          have_score = used == cell.size();
        } catch (const std::exception&) {
          have_score = false;
        }
      }
    }
    if (pair.word1.empty() || pair.word2.empty() || !have_score)
      throw ParseError("similarity dataset, line " + std::to_string(line_no) +
                       ": malformed row");
    data.pairs.push_back(std::move(pair));
  }
  if (in.bad()) throw IoError("similarity dataset: read failure");
  return data;
}

SimilarityDataset SimilarityDataset::load_from_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open similarity dataset: " + path);
  return load(in);
}

namespace {

// Scores questions [begin, end) of one section.
ScopeResult score_questions(
    const EmbeddingSet& set,
    std::span<const std::array<std::string, 4>> questions) {
  ScopeResult r;
  for (const auto& q : questions) {
    const std::int32_t a = set.index_of(q[0]);
    const std::int32_t b = set.index_of(q[1]);
    const std::int32_t c = set.index_of(q[2]);
    const std::int32_t d = set.index_of(q[3]);
    if (a < 0 || b < 0 || c < 0 || d < 0) {
      ++r.skipped;
      continue;
    }
    ++r.attempted;
    try {
      if (analogy_query(set, a, b, c) == d) ++r.correct;
    } catch (const DomainError&) {
      // degenerate (zero) query vector: attempted but wrong
    }
  }
  return r;
}

void accumulate(ScopeResult& into, const ScopeResult& part) {
  into.correct += part.correct;
  into.attempted += part.attempted;
  into.skipped += part.skipped;
}

}  // namespace

EvalReport eval_analogy(EmbeddingSet& set, const AnalogyDataset& data,
                        std::int32_t threads) {
  if (threads < 1) throw ConfigError("eval_analogy: threads must be >= 1");
  set.normalize();

  EvalReport report;
  for (const AnalogySection& section : data.sections) {
    std::span<const std::array<std::string, 4>> questions = section.questions;
    ScopeResult result;
    if (threads == 1 || questions.size() < 64) {
      result = score_questions(set, questions);
    } else {
      const std::size_t n = questions.size();
      const std::size_t parts = std::min<std::size_t>(
          static_cast<std::size_t>(threads), n);
      std::vector<ScopeResult> partials(parts);
      std::vector<std::thread> pool;
      pool.reserve(parts);
      for (std::size_t p = 0; p < parts; ++p) {
        const std::size_t lo = n * p / parts;
        const std::size_t hi = n * (p + 1) / parts;
        pool.emplace_back([&, p, lo, hi] {
          partials[p] = score_questions(set, questions.subspan(lo, hi - lo));
        });
      }
      for (auto& t : pool) t.join();
      for (const ScopeResult& part : partials) accumulate(result, part);
    }
    accumulate(section.syntactic ? report.syntactic : report.semantic, result);
    accumulate(report.total, result);
    report.sections.push_back({section.name, section.syntactic, result});
  }
  return report;
}

double spearman_rho(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size())
    throw DomainError("spearman_rho: length mismatch");
  const std::size_t n = xs.size();
  if (n < 2) throw DomainError("spearman_rho: need at least 2 observations");

  auto ranks_of = [n](std::span<const double> values) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return values[a] < values[b];
    });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
      std::size_t j = i;
      while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
      // Tied values share the average of the ranks they occupy (1-based).
      const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
      for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
      i = j + 1;
    }
    return ranks;
  };

  const std::vector<double> rx = ranks_of(xs);
  const std::vector<double> ry = ranks_of(ys);
  double mean_x = 0.0, mean_y = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mean_x += rx[i];
    mean_y += ry[i];
  }
  mean_x /= static_cast<double>(n);
  mean_y /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = rx[i] - mean_x;
    const double dy = ry[i] - mean_y;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0)
    throw EvalError("spearman_rho: zero rank variance");
  return sxy / std::sqrt(sxx * syy);
}

EvalReport eval_simlex(EmbeddingSet& set, const SimilarityDataset& data) {
  set.normalize();
  std::vector<double> cosines;
  std::vector<double> human;
  EvalReport report;
  for (const SimilarityPair& pair : data.pairs) {
    const std::int32_t w1 = set.index_of(pair.word1);
    const std::int32_t w2 = set.index_of(pair.word2);
    if (w1 < 0 || w2 < 0) {
      ++report.total.skipped;
      continue;
    }
    ++report.total.attempted;
    const std::span<const float> r1 = set.row(w1);
    const std::span<const float> r2 = set.row(w2);
    double dot = 0.0;
    for (std::int32_t d = 0; d < set.dim(); ++d)
      dot += static_cast<double>(r1[d]) * static_cast<double>(r2[d]);
    cosines.push_back(dot);
    human.push_back(pair.score);
  }
  if (cosines.size() < 2)
    throw EvalError("eval_simlex: fewer than 2 scorable pairs");
  report.rho = spearman_rho(cosines, human);
  return report;
}

std::vector<double> default_sweep_grid() {
  std::vector<double> grid;
  for (int i = 1; i <= 14; ++i) grid.push_back(0.5 * i);
  return grid;
}

std::vector<SweepRow> sweep_threshold(const TrainConfig& base,
                                      std::span<const double> thetas,
                                      const std::string& corpus_path,
                                      const Vocabulary& vocab,
                                      const Lexicon& lexicon,
                                      const AnalogyDataset& data,
                                      std::ostream* progress) {
  if (base.mode != TrainMode::Threshold)
    throw ConfigError("sweep_threshold: base config must use threshold mode");
  if (thetas.empty()) throw ConfigError("sweep_threshold: empty theta grid");

  std::vector<SweepRow> rows;
  rows.reserve(thetas.size());
  for (const double theta : thetas) {
    SweepRow row;
    row.theta = theta;
    if (progress)
      *progress << "sweep: training theta=" << theta << "\n";
    try {
      TrainConfig config = base;
      config.theta = theta;
      const Model model =
          train(corpus_path, vocab, &lexicon, config, progress);
      EmbeddingSet set = EmbeddingSet::from_model(model, vocab);
      row.report = eval_analogy(set, data, base.threads);
    } catch (const std::exception& e) {
      row.failed = true;
      row.error = e.what();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_sweep_tsv(std::ostream& out, std::span<const SweepRow> rows) {
  out << "theta\tsem\tsyn\ttotal\tattempted\tskipped\n";
  char buf[160];
  for (const SweepRow& row : rows) {
    if (row.failed) {
      out << "# theta=" << row.theta << " error: " << row.error << "\n";
      continue;
    }
    const EvalReport& r = row.report;
    std::snprintf(buf, sizeof(buf), "%g\t%.2f\t%.2f\t%.2f\t%lld\t%lld\n",
                  row.theta, 100.0 * r.semantic.accuracy(),
                  100.0 * r.syntactic.accuracy(), 100.0 * r.total.accuracy(),
                  static_cast<long long>(r.total.attempted),
                  static_cast<long long>(r.total.skipped));
    out << buf;
  }
  if (!out) throw IoError("failed to write sweep table");
}

}  // namespace lexembed
