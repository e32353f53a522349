#pragma once

#include <algorithm>
#include <array>
#include <cmath>
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
class Lexicon;

enum class TrainMode : std::uint8_t { Cbow, Threshold, Bernoulli };

std::optional<TrainMode> parse_mode(std::string_view name);
std::string_view mode_name(TrainMode mode);

struct TrainConfig {
  TrainMode mode = TrainMode::Cbow;
  double theta = 3.8;       // threshold-mode gate
  std::int32_t dim = 200;
  std::int32_t window = 8;  // max one-sided context width
  std::int32_t negatives = 25;
  std::int32_t epochs = 25;
  double initial_lr = 0.05;
  double subsample_t = 1e-4;  // 0 disables subsampling
  std::uint64_t seed = 1;
  std::int32_t threads = 1;
  double noise_exponent = 0.75;
  std::int64_t noise_table_size = 100'000'000;
  // Classic averaged-context baseline: mean of the context vectors predicts
  // the target and the gradient is distributed back to every context word.
  // Only valid in cbow mode; the lexicon is ignored on this path.
  bool average_context = false;
  // Sensitivity switch: also keep noise words out of the target's paraphrase
  // set, not just the input word's.
  bool exclude_target_paraphrases = false;
  // Re-verify sampling postconditions on every negative draw.
  bool runtime_checks = false;

  void validate() const;  // throws ConfigError
};

// The two parameter matrices, row-major V×D. Templated on the scalar so
// oracle tests can run the exact same update rule in double precision.
template <typename Real>
struct BasicModel {
  std::int32_t vocab_size = 0;
  std::int32_t dim = 0;
  std::vector<Real> input;   // word vectors, the artifact's product
  std::vector<Real> output;  // prediction-side vectors

  Real* input_row(std::int32_t w) {
    return input.data() + static_cast<std::size_t>(w) * dim;
  }
  const Real* input_row(std::int32_t w) const {
    return input.data() + static_cast<std::size_t>(w) * dim;
  }
  Real* output_row(std::int32_t w) {
    return output.data() + static_cast<std::size_t>(w) * dim;
  }
  const Real* output_row(std::int32_t w) const {
    return output.data() + static_cast<std::size_t>(w) * dim;
  }
};

using Model = BasicModel<float>;

// Input vectors i.i.d. uniform in [-0.5/dim, +0.5/dim); output vectors zero.
// Deterministic for a fixed (vocab_size, dim, seed). The draws use the
// 24-bit float path in every instantiation so double models initialize to
// the widened float values.
template <typename Real>
BasicModel<Real> init_basic_model(std::int32_t vocab_size, std::int32_t dim,
                                  std::uint64_t seed) {
  if (vocab_size < 1) throw DomainError("init_model: empty vocabulary");
  if (dim < 1) throw DomainError("init_model: dim must be >= 1");
  BasicModel<Real> model;
  model.vocab_size = vocab_size;
  model.dim = dim;
  const std::size_t cells = static_cast<std::size_t>(vocab_size) * dim;
  model.input.resize(cells);
  model.output.assign(cells, Real(0));
  Rng rng(seed);
  const float inv_dim = 1.0f / static_cast<float>(dim);
  for (std::size_t i = 0; i < cells; ++i)
    model.input[i] = static_cast<Real>((rng.next_float01() - 0.5f) * inv_dim);
  return model;
}

Model init_model(const Vocabulary& vocab, std::int32_t dim, std::uint64_t seed);

// Word indices laid out so that a uniform slot draw approximates the noise
// distribution P(w) ∝ count^exponent; each word's slot share is exact to
// within one slot of rounding.
class NoiseTable {
 public:
  NoiseTable(std::span<const std::int64_t> counts, double exponent,
             std::int64_t size);
  NoiseTable(const Vocabulary& vocab, double exponent, std::int64_t size);

  std::int32_t operator[](std::int64_t slot) const { return table_[slot]; }
  std::int64_t size() const { return static_cast<std::int64_t>(table_.size()); }

 private:
  std::vector<std::int32_t> table_;
};

// Uniform slot draws, rejected until the word is neither the target nor in
// `excluded` (sorted ascending). Throws SamplingError when no admissible word
// turns up within the rejection bound.
inline std::int32_t sample_negative(const NoiseTable& table,
                                    std::int32_t target,
                                    std::span<const std::int32_t> excluded,
                                    Rng& rng) {
  constexpr int kMaxRejects = 100000;
  for (int attempt = 0; attempt < kMaxRejects; ++attempt) {
    const std::int32_t w =
        table[static_cast<std::int64_t>(rng.next_below(table.size()))];
    if (w == target) continue;
    if (!excluded.empty() &&
        std::binary_search(excluded.begin(), excluded.end(), w))
      continue;
    return w;
  }
  throw SamplingError("sample_negative: no admissible noise word for target " +
                      std::to_string(target));
}

// 1000-bin lookup over [-6, 6] for the hot path; saturates to 0/1 outside.
// Bin 500 holds σ(0) = 0.5 exactly.
class SigmoidTable {
 public:
  static constexpr int kBins = 1000;
  static constexpr float kMaxArg = 6.0f;

  SigmoidTable() {
    for (int i = 0; i < kBins; ++i) {
      const double x = (static_cast<double>(i) / kBins * 2.0 - 1.0) * kMaxArg;
      table_[i] = static_cast<float>(1.0 / (1.0 + std::exp(-x)));
    }
  }

  float operator()(float x) const {
    if (x >= kMaxArg) return 1.0f;
    if (x <= -kMaxArg) return 0.0f;
    const int bin =
        static_cast<int>((x + kMaxArg) * (kBins / (2.0f * kMaxArg)));
    return table_[bin];
  }

 private:
  std::array<float, kBins> table_;
};

// Exact σ for oracle and test paths; the production table's quantization
// must not leak into gradient checks.
struct ExactSigmoid {
  template <typename Real>
  Real operator()(Real x) const {
    return Real(1) / (Real(1) + std::exp(-x));
  }
};

// One gradient-ascent step on
//   log σ(v'_target·v_input) + Σ_n log σ(−v'_n·v_input).
// With g_o = lr·(label_o − σ(v'_o·v_input)), the input delta Σ_o g_o·v'_o is
// accumulated against pre-update output rows and applied once at the end;
// each output row is updated immediately: v'_o += g_o·v_input. `scratch`
// must hold at least dim scalars. Callers guarantee negatives is nonempty
// and target-free.
template <typename Real, typename Sig>
void train_pair(BasicModel<Real>& model, std::int32_t input,
                std::int32_t target, std::span<const std::int32_t> negatives,
                Real lr, const Sig& sigmoid, std::span<Real> scratch) {
  const std::int32_t dim = model.dim;
  Real* v_in = model.input_row(input);
  Real* acc = scratch.data();
  for (std::int32_t d = 0; d < dim; ++d) acc[d] = Real(0);

  auto step = [&](std::int32_t out, Real label) {
    Real* v_out = model.output_row(out);
    Real dot = Real(0);
    for (std::int32_t d = 0; d < dim; ++d) dot += v_in[d] * v_out[d];
    if (!std::isfinite(static_cast<double>(dot)))
      throw NumericError("train_pair: non-finite activation (input " +
                         std::to_string(input) + ", output " +
                         std::to_string(out) + ")");
    const Real g = (label - sigmoid(dot)) * lr;
    for (std::int32_t d = 0; d < dim; ++d) acc[d] += g * v_out[d];
    for (std::int32_t d = 0; d < dim; ++d) v_out[d] += g * v_in[d];
  };

  step(target, Real(1));
  for (std::int32_t n : negatives) step(n, Real(0));
  for (std::int32_t d = 0; d < dim; ++d) v_in[d] += acc[d];
}

// The quantity train_pair ascends, evaluated exactly in double precision.
template <typename Real>
double pair_objective(const BasicModel<Real>& model, std::int32_t input,
                      std::int32_t target,
                      std::span<const std::int32_t> negatives) {
  const std::int32_t dim = model.dim;
  const Real* v_in = model.input_row(input);
  auto log_sigma = [&](std::int32_t out, double sign) {
    const Real* v_out = model.output_row(out);
    double dot = 0.0;
    for (std::int32_t d = 0; d < dim; ++d)
      dot += static_cast<double>(v_in[d]) * static_cast<double>(v_out[d]);
    // log σ(s·x) = −log(1 + e^{−s·x}), computed stably
    const double z = -sign * dot;
    return z > 0 ? -z - std::log1p(std::exp(-z)) : -std::log1p(std::exp(z));
  };
  double obj = log_sigma(target, 1.0);
  for (std::int32_t n : negatives) obj += log_sigma(n, -1.0);
  return obj;
}

struct TrainStats {
  std::int64_t corpus_tokens = 0;      // in-vocab tokens scanned (drives lr decay)
  std::int64_t trained_tokens = 0;     // tokens kept after subsampling
  std::int64_t pair_steps = 0;         // context-word updates
  std::int64_t paraphrase_steps = 0;   // gate-admitted paraphrase updates
  std::int64_t negatives_checked = 0;  // postcondition re-checks (runtime_checks)
  double seconds = 0.0;
};

// Full training run over the corpus file. Per epoch, per retained target
// token w_i: draw b uniform in [1, window]; each context token w_j within b
// positions takes a train_pair(w_j → w_i) step with fresh negatives excluding
// {w_i} ∪ L_{w_j}; in threshold mode every w_k ∈ L_{w_j} whose score exceeds
// theta takes the same step as input (exclusion {w_i} ∪ L_{w_k}); bernoulli
// mode gates each w_k on its degree of truth instead. The learning rate
// decays linearly to 10^-4·initial_lr over epochs·total_tokens. Workers split
// the file into byte segments and update the matrices without locks; runs
// with threads = 1 are bit-deterministic. Progress lines go to `progress`
// when non-null.
Model train(const std::string& corpus_path, const Vocabulary& vocab,
            const Lexicon* lexicon, const TrainConfig& config,
            std::ostream* progress = nullptr, TrainStats* stats = nullptr);

// Exact value of the gated objective under a full-softmax model of
// p(w_i|w_j) — a test oracle, quadratic in |V|. Uses the fixed full window
// (no dynamic shrink, no subsampling); bernoulli terms enter by expectation,
// weighted by their degree of truth.
double exact_objective(const Model& model, std::span<const std::int32_t> tokens,
                       const Lexicon* lexicon, const TrainConfig& config);

}  // namespace lexembed
