#include "lexembed/trainer.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <ostream>
#include <thread>

#include "lexembed/corpus.hpp"
#include "lexembed/lexicon.hpp"

namespace lexembed {

std::optional<TrainMode> parse_mode(std::string_view name) {
  if (name == "cbow") return TrainMode::Cbow;
  if (name == "threshold") return TrainMode::Threshold;
  if (name == "bernoulli") return TrainMode::Bernoulli;
  return std::nullopt;
}

std::string_view mode_name(TrainMode mode) {
  switch (mode) {
    case TrainMode::Cbow: return "cbow";
    case TrainMode::Threshold: return "threshold";
    case TrainMode::Bernoulli: return "bernoulli";
  }
  throw DomainError("mode_name: invalid mode value");
}

void TrainConfig::validate() const {
  if (dim < 1) throw ConfigError("dim must be >= 1");
  if (window < 1) throw ConfigError("window must be >= 1");
  if (negatives < 1) throw ConfigError("negatives must be >= 1");
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (!(initial_lr > 0)) throw ConfigError("initial learning rate must be positive");
  if (!(subsample_t >= 0)) throw ConfigError("subsample threshold must be >= 0");
  if (threads < 1) throw ConfigError("threads must be >= 1");
  if (!(noise_exponent >= 0)) throw ConfigError("noise exponent must be >= 0");
  if (noise_table_size < 1) throw ConfigError("noise table size must be >= 1");
  if (average_context && mode != TrainMode::Cbow)
    throw ConfigError("average-context is a cbow-only baseline");
}

Model init_model(const Vocabulary& vocab, std::int32_t dim, std::uint64_t seed) {
  return init_basic_model<float>(vocab.size(), dim, seed);
}

NoiseTable::NoiseTable(std::span<const std::int64_t> counts, double exponent,
                       std::int64_t size) {
  if (counts.empty()) throw ConfigError("noise table: empty vocabulary");
  if (size < static_cast<std::int64_t>(counts.size()))
    throw ConfigError("noise table size " + std::to_string(size) +
                      " is smaller than the vocabulary (" +
                      std::to_string(counts.size()) + ")");
  if (!(exponent >= 0)) throw DomainError("noise table: exponent must be >= 0");

  double total = 0.0;
  for (std::int64_t c : counts) {
    if (c <= 0) throw DomainError("noise table: counts must be positive");
    total += std::pow(static_cast<double>(c), exponent);
  }

  table_.resize(static_cast<std::size_t>(size));
  double cum = 0.0;
  std::int64_t prev = 0;
  const std::int32_t n = static_cast<std::int32_t>(counts.size());
  for (std::int32_t w = 0; w < n; ++w) {
    cum += std::pow(static_cast<double>(counts[w]), exponent);
    // Cumulative rounding keeps every word within one slot of its exact share.
    std::int64_t boundary = std::llround(cum / total * static_cast<double>(size));
    if (w == n - 1) boundary = size;  // absorb floating-point residue
    for (std::int64_t slot = prev; slot < boundary; ++slot)
      table_[static_cast<std::size_t>(slot)] = w;
    prev = boundary;
  }
}

namespace {

std::vector<std::int64_t> vocab_counts(const Vocabulary& vocab) {
  std::vector<std::int64_t> counts(static_cast<std::size_t>(vocab.size()));
  for (std::int32_t w = 0; w < vocab.size(); ++w) counts[w] = vocab.count(w);
  return counts;
}

}  // namespace

NoiseTable::NoiseTable(const Vocabulary& vocab, double exponent,
                       std::int64_t size)
    : NoiseTable(vocab_counts(vocab), exponent, size) {}

namespace {

constexpr std::size_t kChunkTokens = 1000;   // context never crosses a chunk
constexpr std::int64_t kSyncTokens = 10000;  // lr/progress update cadence
constexpr std::int64_t kFiniteCheckSteps = 1 << 21;

struct SharedTrain {
  const Vocabulary& vocab;
  const Lexicon* lex;
  const TrainConfig& cfg;
  const NoiseTable& noise;
  const SigmoidTable& sigmoid;
  Model& model;
  const std::string& path;
  std::uint64_t file_size;
  std::int64_t budget;  // epochs * total in-vocab tokens
  std::vector<double> keep;  // per-word subsampling keep probability

  std::atomic<std::int64_t> processed{0};
  std::atomic<bool> abort{false};
  std::mutex error_mu;
  std::exception_ptr error;
  std::mutex stats_mu;
  TrainStats totals;

  double lr_at(std::int64_t done) const {
    const double frac =
        static_cast<double>(done) / (static_cast<double>(budget) + 1.0);
    return std::max(cfg.initial_lr * (1.0 - frac), cfg.initial_lr * 1e-4);
  }
};

void check_row_finite(const Model& model, std::int32_t w) {
  const float* row = model.input_row(w);
  for (std::int32_t d = 0; d < model.dim; ++d)
    if (!std::isfinite(row[d]))
      throw NumericError("training produced a non-finite entry in word " +
                         std::to_string(w));
}

class TrainWorker {
 public:
  TrainWorker(SharedTrain& shared, int id)
      : s_(shared),
        id_(id),
        rng_(Rng::for_stream(shared.cfg.seed, static_cast<std::uint64_t>(id))),
        scratch_(static_cast<std::size_t>(shared.cfg.dim)),
        context_sum_(static_cast<std::size_t>(shared.cfg.dim)),
        negatives_(static_cast<std::size_t>(shared.cfg.negatives)) {
    begin_ = s_.file_size * static_cast<std::uint64_t>(id) /
             static_cast<std::uint64_t>(s_.cfg.threads);
    end_ = s_.file_size * static_cast<std::uint64_t>(id + 1) /
           static_cast<std::uint64_t>(s_.cfg.threads);
  }

  void run() {
    try {
      run_epochs();
      flush_processed();
    } catch (...) {
      std::lock_guard<std::mutex> lock(s_.error_mu);
      if (!s_.error) s_.error = std::current_exception();
      s_.abort.store(true, std::memory_order_relaxed);
    }
    std::lock_guard<std::mutex> lock(s_.stats_mu);
    s_.totals.corpus_tokens += stats_.corpus_tokens;
    s_.totals.trained_tokens += stats_.trained_tokens;
    s_.totals.pair_steps += stats_.pair_steps;
    s_.totals.paraphrase_steps += stats_.paraphrase_steps;
    s_.totals.negatives_checked += stats_.negatives_checked;
  }

 private:
  void run_epochs() {
    if (begin_ >= s_.file_size || begin_ == end_) return;
    lr_ = static_cast<float>(s_.cfg.initial_lr);
    for (std::int32_t epoch = 0; epoch < s_.cfg.epochs; ++epoch) {
      std::ifstream in(s_.path, std::ios::binary);
      if (!in) throw IoError("cannot open corpus file: " + s_.path);
      TokenStream tokens(in, begin_);
      run_segment(tokens);
      if (s_.abort.load(std::memory_order_relaxed)) return;
    }
  }

  void run_segment(TokenStream& tokens) {
    std::string tok;
    std::vector<std::int32_t> chunk;
    chunk.reserve(kChunkTokens);
    bool done = false;
    while (!done) {
      if (s_.abort.load(std::memory_order_relaxed)) return;
      chunk.clear();
      while (chunk.size() < kChunkTokens) {
        if (!tokens.next(tok) || tokens.token_begin() >= end_) {
          done = true;
          break;
        }
        const std::int32_t w = s_.vocab.index_of(tok);
        if (w < 0) continue;
        ++stats_.corpus_tokens;
        if (++since_sync_ >= kSyncTokens) flush_processed();
        if (s_.cfg.subsample_t > 0 && !rng_.bernoulli(s_.keep[w])) continue;
        ++stats_.trained_tokens;
        chunk.push_back(w);
      }
      train_chunk(chunk);
    }
  }

  void train_chunk(std::span<const std::int32_t> chunk) {
    for (std::size_t i = 0; i < chunk.size(); ++i) {
      const std::int32_t target = chunk[i];
      const std::uint64_t b =
          1 + rng_.next_below(static_cast<std::uint64_t>(s_.cfg.window));
      const std::size_t lo = i > b ? i - b : 0;
      const std::size_t hi = std::min(chunk.size() - 1, i + b);
      if (s_.cfg.average_context) {
        train_averaged(chunk, i, lo, hi);
        continue;
      }
      for (std::size_t j = lo; j <= hi; ++j) {
        if (j == i) continue;
        step_with_input(chunk[j], target);
        ++stats_.pair_steps;
        if (s_.cfg.mode == TrainMode::Cbow || !s_.lex) continue;
        paraphrase_steps(chunk[j], target);
      }
    }
  }

  // One train_pair step with `input` predicting `target`, negatives drawn
  // fresh outside {target} ∪ L_input.
  void step_with_input(std::int32_t input, std::int32_t target) {
    std::span<const std::int32_t> excl =
        s_.lex ? s_.lex->exclusion_of(input) : std::span<const std::int32_t>{};
    if (s_.cfg.exclude_target_paraphrases && s_.lex) {
      auto target_excl = s_.lex->exclusion_of(target);
      merged_excl_.clear();
      std::set_union(excl.begin(), excl.end(), target_excl.begin(),
                     target_excl.end(), std::back_inserter(merged_excl_));
      excl = merged_excl_;
    }
    for (std::int32_t n = 0; n < s_.cfg.negatives; ++n) {
      negatives_[static_cast<std::size_t>(n)] =
          sample_negative(s_.noise, target, excl, rng_);
    }
    if (s_.cfg.runtime_checks) verify_negatives(target, excl);
    train_pair(s_.model, input, target,
               std::span<const std::int32_t>(negatives_), lr_, s_.sigmoid,
               std::span<float>(scratch_));
    if (++steps_since_check_ >= kFiniteCheckSteps) {
      steps_since_check_ = 0;
      check_row_finite(s_.model, input);
    }
  }

  // Gate-admitted paraphrases of the context word train as inputs too.
  void paraphrase_steps(std::int32_t context_word, std::int32_t target) {
    if (!s_.lex->has_paraphrases(context_word)) return;
    const float max_score = s_.lex->max_score_of(context_word);
    for (const ParaphraseEntry& entry : s_.lex->paraphrases_of(context_word)) {
      bool fire;
      if (s_.cfg.mode == TrainMode::Threshold) {
        fire = gate_threshold(entry.score, s_.cfg.theta);
      } else {
        fire = gate_bernoulli(degree_of_truth(entry.score, max_score), rng_);
      }
      if (!fire) continue;
      step_with_input(entry.paraphrase, target);
      ++stats_.paraphrase_steps;
    }
  }

  // Classic CBOW baseline: the averaged context vector predicts the target,
  // and the input-side delta is added to every context word. The lexicon
  // plays no role on this path.
  void train_averaged(std::span<const std::int32_t> chunk, std::size_t i,
                      std::size_t lo, std::size_t hi) {
    const std::int32_t dim = s_.cfg.dim;
    const std::int32_t target = chunk[i];
    std::int32_t cw = 0;
    for (std::int32_t d = 0; d < dim; ++d) context_sum_[d] = 0.0f;
    for (std::size_t j = lo; j <= hi; ++j) {
      if (j == i) continue;
      const float* row = s_.model.input_row(chunk[j]);
      for (std::int32_t d = 0; d < dim; ++d) context_sum_[d] += row[d];
      ++cw;
    }
    if (cw == 0) return;
    const float inv = 1.0f / static_cast<float>(cw);
    for (std::int32_t d = 0; d < dim; ++d) context_sum_[d] *= inv;

    for (std::int32_t n = 0; n < s_.cfg.negatives; ++n)
      negatives_[static_cast<std::size_t>(n)] =
          sample_negative(s_.noise, target, {}, rng_);
    if (s_.cfg.runtime_checks) verify_negatives(target, {});

    for (std::int32_t d = 0; d < dim; ++d) scratch_[d] = 0.0f;
    auto step = [&](std::int32_t out, float label) {
      float* v_out = s_.model.output_row(out);
      float dot = 0.0f;
      for (std::int32_t d = 0; d < dim; ++d) dot += context_sum_[d] * v_out[d];
      if (!std::isfinite(dot))
        throw NumericError("train: non-finite activation (averaged context, output " +
                           std::to_string(out) + ")");
      const float g = (label - s_.sigmoid(dot)) * lr_;
      for (std::int32_t d = 0; d < dim; ++d) scratch_[d] += g * v_out[d];
      for (std::int32_t d = 0; d < dim; ++d) v_out[d] += g * context_sum_[d];
    };
    step(target, 1.0f);
    for (std::int32_t n : negatives_) step(n, 0.0f);
    for (std::size_t j = lo; j <= hi; ++j) {
      if (j == i) continue;
      float* row = s_.model.input_row(chunk[j]);
      for (std::int32_t d = 0; d < dim; ++d) row[d] += scratch_[d];
    }
    ++stats_.pair_steps;
  }

  void verify_negatives(std::int32_t target,
                        std::span<const std::int32_t> excl) {
    for (std::int32_t w : negatives_) {
      if (w == target ||
          (!excl.empty() && std::binary_search(excl.begin(), excl.end(), w)))
        throw SamplingError("sampling violation: noise word " +
                            std::to_string(w) + " excluded for target " +
                            std::to_string(target));
      ++stats_.negatives_checked;
    }
  }

  void flush_processed() {
    if (since_sync_ == 0) return;
    const std::int64_t done =
        s_.processed.fetch_add(since_sync_, std::memory_order_relaxed) +
        since_sync_;
    since_sync_ = 0;
    lr_ = static_cast<float>(s_.lr_at(done));
  }

  SharedTrain& s_;
  int id_;
  Rng rng_;
  std::uint64_t begin_ = 0;
  std::uint64_t end_ = 0;
  float lr_ = 0.0f;
  std::int64_t since_sync_ = 0;
  std::int64_t steps_since_check_ = 0;
  std::vector<float> scratch_;
  std::vector<float> context_sum_;
  std::vector<std::int32_t> negatives_;
  std::vector<std::int32_t> merged_excl_;
  TrainStats stats_;
};

void report_progress(const SharedTrain& shared, std::ostream& out,
                     std::chrono::steady_clock::time_point start) {
  const std::int64_t done = shared.processed.load(std::memory_order_relaxed);
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  const double pct =
      100.0 * static_cast<double>(done) / static_cast<double>(shared.budget);
  char line[128];
  std::snprintf(line, sizeof(line),
                "\rprogress: %6.2f%%  lr: %.6f  tokens/s: %.0f   ",
                pct, shared.lr_at(done),
                elapsed > 0 ? static_cast<double>(done) / elapsed : 0.0);
  out << line << std::flush;
}

}  // namespace

Model train(const std::string& corpus_path, const Vocabulary& vocab,
            const Lexicon* lexicon, const TrainConfig& config,
            std::ostream* progress, TrainStats* stats) {
  config.validate();
  if (config.mode != TrainMode::Cbow && !lexicon)
    throw ConfigError(std::string(mode_name(config.mode)) +
                      " mode requires a lexicon");
  if (lexicon && lexicon->vocab_size() != vocab.size())
    throw DomainError("train: lexicon was built against a different vocabulary");
  if (vocab.size() == 0 || vocab.total_tokens() == 0)
    throw DomainError("train: empty vocabulary");

  std::error_code ec;
  const std::uint64_t file_size = std::filesystem::file_size(corpus_path, ec);
  if (ec) throw IoError("cannot stat corpus file: " + corpus_path);
  if (file_size == 0) throw DomainError("train: empty corpus");

  Model model = init_model(vocab, config.dim, config.seed);
  const NoiseTable noise(vocab, config.noise_exponent, config.noise_table_size);
  const SigmoidTable sigmoid;

  SharedTrain shared{vocab,       lexicon, config, noise,
                     sigmoid,     model,   corpus_path,
                     file_size,   static_cast<std::int64_t>(config.epochs) *
                                      vocab.total_tokens()};
  if (config.subsample_t > 0) {
    shared.keep.resize(static_cast<std::size_t>(vocab.size()));
    for (std::int32_t w = 0; w < vocab.size(); ++w)
      shared.keep[w] = keep_probability(vocab.count(w), vocab.total_tokens(),
                                        config.subsample_t);
  }

  const auto start = std::chrono::steady_clock::now();
  std::vector<std::thread> workers;
  workers.reserve(static_cast<std::size_t>(config.threads));
  for (std::int32_t id = 0; id < config.threads; ++id)
    workers.emplace_back(
        [&shared, id] { TrainWorker(shared, static_cast<int>(id)).run(); });

  std::atomic<bool> training_done{false};
  std::thread reporter;
  if (progress) {
    reporter = std::thread([&shared, progress, start, &training_done] {
      auto next = start;
      while (!training_done.load(std::memory_order_relaxed)) {
        if (std::chrono::steady_clock::now() >= next) {
          report_progress(shared, *progress, start);
          next += std::chrono::milliseconds(500);
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(50));
      }
    });
  }
  for (auto& t : workers) t.join();
  training_done.store(true, std::memory_order_relaxed);
  if (reporter.joinable()) {
    reporter.join();
    report_progress(shared, *progress, start);
    *progress << "\n";
  }
  if (shared.error) std::rethrow_exception(shared.error);
  if (shared.totals.corpus_tokens == 0)
    throw DomainError("train: corpus holds no vocabulary tokens");

  // Lost updates are tolerated; non-finite entries are not.
  for (std::int32_t w = 0; w < model.vocab_size; ++w) {
    check_row_finite(model, w);
    const float* row = model.output_row(w);
    for (std::int32_t d = 0; d < model.dim; ++d)
      if (!std::isfinite(row[d]))
        throw NumericError("training produced a non-finite entry in word " +
                           std::to_string(w));
  }

  shared.totals.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  if (stats) *stats = shared.totals;
  return model;
}

double exact_objective(const Model& model, std::span<const std::int32_t> tokens,
                       const Lexicon* lexicon, const TrainConfig& config) {
  config.validate();
  if (config.mode != TrainMode::Cbow && !lexicon)
    throw ConfigError(std::string(mode_name(config.mode)) +
                      " mode requires a lexicon");
  const std::int32_t V = model.vocab_size;
  const std::int32_t D = model.dim;
  if (lexicon && lexicon->vocab_size() != V)
    throw DomainError("exact_objective: lexicon/model vocabulary mismatch");
  for (std::int32_t t : tokens)
    if (t < 0 || t >= V)
      throw DomainError("exact_objective: token index out of range");

  // log p(o|w) = v'_o·v_w − logZ(w); rows cached per distinct input word.
  std::vector<std::vector<double>> cache(static_cast<std::size_t>(V));
  auto log_probs = [&](std::int32_t w) -> const std::vector<double>& {
    auto& row = cache[static_cast<std::size_t>(w)];
    if (!row.empty()) return row;
    row.resize(static_cast<std::size_t>(V));
    const float* v_in = model.input_row(w);
    double max_logit = -std::numeric_limits<double>::infinity();
    for (std::int32_t o = 0; o < V; ++o) {
      const float* v_out = model.output_row(o);
      double dot = 0.0;
      for (std::int32_t d = 0; d < D; ++d)
        dot += static_cast<double>(v_in[d]) * static_cast<double>(v_out[d]);
      row[static_cast<std::size_t>(o)] = dot;
      max_logit = std::max(max_logit, dot);
    }
    double sum = 0.0;
    for (double logit : row) sum += std::exp(logit - max_logit);
    const double log_z = max_logit + std::log(sum);
    for (double& logit : row) logit -= log_z;
    return row;
  };

  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(tokens.size());
  const std::ptrdiff_t window = config.window;
  double objective = 0.0;
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const std::int32_t target = tokens[static_cast<std::size_t>(i)];
    const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, i - window);
    const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(n - 1, i + window);
    for (std::ptrdiff_t j = lo; j <= hi; ++j) {
      if (j == i) continue;
      const std::int32_t input = tokens[static_cast<std::size_t>(j)];
      objective += log_probs(input)[static_cast<std::size_t>(target)];
      if (config.mode == TrainMode::Cbow || !lexicon ||
          !lexicon->has_paraphrases(input))
        continue;
      const float max_score = lexicon->max_score_of(input);
      for (const ParaphraseEntry& entry : lexicon->paraphrases_of(input)) {
        const double lp =
            log_probs(entry.paraphrase)[static_cast<std::size_t>(target)];
        if (config.mode == TrainMode::Threshold) {
          if (gate_threshold(entry.score, config.theta)) objective += lp;
        } else {
          objective += degree_of_truth(entry.score, max_score) * lp;
        }
      }
    }
  }
  return objective;
}

}  // namespace lexembed
