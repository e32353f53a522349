#include "lexembed/cli.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "lexembed/corpus.hpp"
#include "lexembed/eval.hpp"
#include "lexembed/lexicon.hpp"
#include "lexembed/trainer.hpp"
#include "lexembed/vectors.hpp"

namespace lexembed::cli {

namespace {

constexpr int kUsageError = 2;
constexpr int kRuntimeError = 1;

struct CommonPaths {
  std::string corpus;
  std::string vocab;
  std::string save_vocab;
  std::string lexicon;
  std::string relations = "Equivalence,ForwardEntailment,ReverseEntailment";
  std::string output;
  std::string config_file;
  std::int64_t min_count = 5;
  bool quiet = false;
};

// Expands a key=value config file into --key=value arguments for whichever
// keys the command line leaves unset, so explicit flags always win. Done
// before CLI11 sees the arguments: CLI11 only consults config files attached
// to the root app, and every option here lives on a subcommand.
std::vector<std::string> merge_config_args(std::vector<std::string> args) {
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) return args;  // let CLI11 report the gap
      path = args[i + 1];
    } else if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
    }
  }
  if (path.empty()) return args;

  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file: " + path);

  std::set<std::string> given;
  for (const std::string& a : args)
    if (a.rfind("--", 0) == 0) given.insert(a.substr(0, a.find('=')));

  auto strip = [](std::string s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return std::string();
    const auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
  };

  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string stripped = strip(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos || eq == 0)
      throw ConfigError("config file line " + std::to_string(line_no) +
                        ": expected key=value");
    const std::string key = strip(stripped.substr(0, eq));
    if (key == "config") continue;  // no recursion
    if (given.count("--" + key)) continue;
    args.push_back("--" + key + "=" + strip(stripped.substr(eq + 1)));
  }
  return args;
}

struct TrainFlags {
  std::string mode = "cbow";
  TrainConfig config;
  bool text_output = false;
};

// Shared between train and sweep.
void add_train_options(CLI::App* sub, CommonPaths& paths, TrainFlags& flags) {
  sub->add_option("--corpus", paths.corpus, "training corpus (plain text)")
      ->required()
      ->check(CLI::ExistingFile);
  sub->add_option("--vocab", paths.vocab,
                  "precomputed vocabulary file; built from the corpus when absent")
      ->check(CLI::ExistingFile);
  sub->add_option("--save-vocab", paths.save_vocab,
                  "write the (built) vocabulary here");
  sub->add_option("--min-count", paths.min_count,
                  "discard words seen fewer times than this")
      ->capture_default_str();
  sub->add_option("--lexicon", paths.lexicon, "paraphrase lexicon dump")
      ->check(CLI::ExistingFile);
  sub->add_option("--relations", paths.relations,
                  "comma-separated relation types to keep from the lexicon")
      ->capture_default_str();
  sub->add_option("--mode", flags.mode, "cbow, threshold, or bernoulli")
      ->capture_default_str();
  sub->add_option("--theta", flags.config.theta, "threshold-mode gate value")
      ->capture_default_str();
  sub->add_option("--dim", flags.config.dim, "embedding dimensionality")
      ->capture_default_str();
  sub->add_option("--window", flags.config.window, "max one-sided context width")
      ->capture_default_str();
  sub->add_option("--negatives", flags.config.negatives,
                  "noise words per training pair")
      ->capture_default_str();
  sub->add_option("--epochs", flags.config.epochs, "training passes")
      ->capture_default_str();
  sub->add_option("--lr", flags.config.initial_lr, "initial learning rate")
      ->capture_default_str();
  sub->add_option("--subsample", flags.config.subsample_t,
                  "frequent-word subsampling threshold (0 disables)")
      ->capture_default_str();
  sub->add_option("--seed", flags.config.seed, "random seed")
      ->capture_default_str();
  sub->add_option("--threads", flags.config.threads, "training threads")
      ->capture_default_str();
  sub->add_option("--noise-exponent", flags.config.noise_exponent,
                  "noise distribution exponent")
      ->capture_default_str();
  sub->add_option("--noise-table-size", flags.config.noise_table_size,
                  "noise table slots")
      ->capture_default_str();
  sub->add_flag("--average-context", flags.config.average_context,
                "classic averaged-context baseline (cbow mode only)");
  sub->add_flag("--exclude-target-paraphrases",
                flags.config.exclude_target_paraphrases,
                "also keep noise words out of the target's paraphrase set");
  sub->add_flag("--runtime-checks", flags.config.runtime_checks,
                "re-verify sampling postconditions during training");
  sub->add_flag("--quiet", paths.quiet, "suppress progress output");
  sub->add_option("--config", paths.config_file,
                  "key=value file supplying any of these options; "
                  "explicit flags win");
}

void log_effective_config(const CLI::App* sub) {
  std::cerr << "[" << sub->get_name() << "] effective configuration:\n";
  std::string dump = sub->config_to_str(true, false);
  std::istringstream lines(dump);
  std::string line;
  while (std::getline(lines, line))
    if (!line.empty()) std::cerr << "  " << line << "\n";
}

TrainMode resolve_mode(const std::string& name) {
  const auto mode = parse_mode(name);
  if (!mode)
    throw ConfigError("unknown mode '" + name +
                      "' (expected cbow, threshold, or bernoulli)");
  return *mode;
}

Vocabulary resolve_vocab(const CommonPaths& paths) {
  if (!paths.vocab.empty()) {
    Vocabulary vocab = Vocabulary::load_from_file(paths.vocab);
    std::cerr << "vocabulary: " << vocab.size() << " words ("
              << vocab.total_tokens() << " retained tokens)\n";
    return vocab;
  }
  std::int64_t raw = 0;
  Vocabulary vocab =
      Vocabulary::build_from_file(paths.corpus, paths.min_count, &raw);
  std::cerr << "vocabulary: " << vocab.size() << " words ("
            << vocab.total_tokens() << " retained of " << raw
            << " raw tokens)\n";
  if (!paths.save_vocab.empty()) {
    std::ofstream out(paths.save_vocab, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + paths.save_vocab);
    vocab.save(out);
  }
  return vocab;
}

std::optional<Lexicon> resolve_lexicon(const CommonPaths& paths,
                                       const Vocabulary& vocab) {
  if (paths.lexicon.empty()) return std::nullopt;
  const RelationSet relations = RelationSet::parse(paths.relations);
  PpdbParseStats stats;
  Lexicon lexicon = parse_ppdb_file(paths.lexicon, relations, vocab, &stats);
  std::cerr << "lexicon: " << lexicon.entry_count() << " entries from "
            << stats.rows << " rows (relation-filtered "
            << stats.relation_filtered << ", out-of-vocab "
            << stats.out_of_vocab << ", multiword " << stats.multiword
            << ", merged " << stats.duplicates_merged << ")\n";
  return lexicon;
}

int do_build_vocab(const std::string& corpus, std::int64_t min_count,
                   const std::string& output) {
  std::int64_t raw = 0;
  const Vocabulary vocab = Vocabulary::build_from_file(corpus, min_count, &raw);
  std::ofstream out(output, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + output);
  vocab.save(out);
  std::cout << "words: " << vocab.size() << "\n"
            << "raw-tokens: " << raw << "\n"
            << "retained-tokens: " << vocab.total_tokens() << "\n";
  return 0;
}

int do_train(const CommonPaths& paths, const TrainFlags& flags) {
  TrainConfig config = flags.config;
  config.mode = resolve_mode(flags.mode);
  config.validate();
  if (config.mode != TrainMode::Cbow && paths.lexicon.empty())
    throw ConfigError("--lexicon is required for " +
                      std::string(mode_name(config.mode)) + " mode");

  const Vocabulary vocab = resolve_vocab(paths);
  const std::optional<Lexicon> lexicon = resolve_lexicon(paths, vocab);

  TrainStats stats;
  const Model model =
      train(paths.corpus, vocab, lexicon ? &*lexicon : nullptr, config,
            paths.quiet ? nullptr : &std::cerr, &stats);
  std::cerr << "trained: " << stats.pair_steps << " pair steps, "
            << stats.paraphrase_steps << " paraphrase steps, "
            << stats.trained_tokens << " tokens kept, "
            << static_cast<std::int64_t>(stats.seconds) << "s\n";

  const EmbeddingSet set = EmbeddingSet::from_model(model, vocab);
  set.save_to_file(paths.output,
                   flags.text_output ? VectorFormat::Text : VectorFormat::Binary);
  std::cerr << "wrote " << paths.output << "\n";
  return 0;
}

void print_analogy_report(const EvalReport& report) {
  for (const SectionResult& s : report.sections) {
    std::printf("%-24s %6.2f%%  (correct %lld, attempted %lld, skipped %lld)\n",
                s.name.c_str(), 100.0 * s.result.accuracy(),
                static_cast<long long>(s.result.correct),
                static_cast<long long>(s.result.attempted),
                static_cast<long long>(s.result.skipped));
  }
  const auto line = [](const char* scope, const ScopeResult& r) {
    std::printf("%s accuracy: %.2f%% (correct %lld, attempted %lld, skipped %lld)\n",
                scope, 100.0 * r.accuracy(), static_cast<long long>(r.correct),
                static_cast<long long>(r.attempted),
                static_cast<long long>(r.skipped));
  };
  line("semantic", report.semantic);
  line("syntactic", report.syntactic);
  line("total", report.total);
  if (report.total.attempted == 0)
    std::printf("warning: every question was skipped (out-of-vocabulary)\n");
}

int do_eval_analogy(const std::string& vectors, const std::string& questions,
                    bool text_vectors, std::int32_t threads) {
  EmbeddingSet set = EmbeddingSet::load_from_file(
      vectors, text_vectors ? VectorFormat::Text : VectorFormat::Binary);
  const AnalogyDataset data = AnalogyDataset::load_from_file(questions);
  const EvalReport report = eval_analogy(set, data, threads);
  print_analogy_report(report);
  return 0;
}

int do_eval_simlex(const std::string& vectors, const std::string& simlex,
                   bool text_vectors) {
  EmbeddingSet set = EmbeddingSet::load_from_file(
      vectors, text_vectors ? VectorFormat::Text : VectorFormat::Binary);
  const SimilarityDataset data = SimilarityDataset::load_from_file(simlex);
  const EvalReport report = eval_simlex(set, data);
  std::printf("spearman rho: %.4f (attempted %lld, skipped %lld)\n",
              *report.rho, static_cast<long long>(report.total.attempted),
              static_cast<long long>(report.total.skipped));
  return 0;
}

int do_sweep(const CommonPaths& paths, const TrainFlags& flags,
             const std::string& questions, std::vector<double> thetas) {
  TrainConfig config = flags.config;
  config.mode = resolve_mode(flags.mode);
  if (config.mode != TrainMode::Threshold)
    throw ConfigError("sweep requires --mode threshold");
  config.validate();
  if (paths.lexicon.empty())
    throw ConfigError("--lexicon is required for a threshold sweep");
  if (thetas.empty()) thetas = default_sweep_grid();

  const Vocabulary vocab = resolve_vocab(paths);
  const std::optional<Lexicon> lexicon = resolve_lexicon(paths, vocab);
  const AnalogyDataset data = AnalogyDataset::load_from_file(questions);

  const std::vector<SweepRow> rows =
      sweep_threshold(config, thetas, paths.corpus, vocab, *lexicon, data,
                      paths.quiet ? nullptr : &std::cerr);

  std::printf("%8s %8s %8s %8s %10s %8s\n", "theta", "sem%", "syn%", "total%",
              "attempted", "skipped");
  for (const SweepRow& row : rows) {
    if (row.failed) {
      std::printf("%8g failed: %s\n", row.theta, row.error.c_str());
      continue;
    }
    const EvalReport& r = row.report;
    std::printf("%8g %8.2f %8.2f %8.2f %10lld %8lld\n", row.theta,
                100.0 * r.semantic.accuracy(), 100.0 * r.syntactic.accuracy(),
                100.0 * r.total.accuracy(),
                static_cast<long long>(r.total.attempted),
                static_cast<long long>(r.total.skipped));
  }
  if (!paths.output.empty()) {
    std::ofstream out(paths.output, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + paths.output);
    write_sweep_tsv(out, rows);
    std::cerr << "wrote " << paths.output << "\n";
  }
  return 0;
}

}  // namespace

int run(std::vector<std::string> args) {
  CLI::App app{"word embeddings with a gated paraphrase-lexicon layer"};
  app.require_subcommand(1);

  // build-vocab
  std::string bv_corpus, bv_output;
  std::int64_t bv_min_count = 5;
  CLI::App* build_vocab =
      app.add_subcommand("build-vocab", "count tokens and write a vocabulary");
  build_vocab->add_option("--corpus", bv_corpus, "plain-text corpus")
      ->required()
      ->check(CLI::ExistingFile);
  build_vocab->add_option("--min-count", bv_min_count,
                          "discard words seen fewer times than this")
      ->capture_default_str();
  build_vocab->add_option("--output", bv_output, "vocabulary file to write")
      ->required();
  std::string bv_config;
  build_vocab->add_option("--config", bv_config,
                          "key=value file supplying any of these options; "
                          "explicit flags win");

  // train
  CommonPaths tr_paths;
  TrainFlags tr_flags;
  CLI::App* train_cmd =
      app.add_subcommand("train", "train word vectors on a corpus");
  add_train_options(train_cmd, tr_paths, tr_flags);
  train_cmd->add_option("--output", tr_paths.output, "vector file to write")
      ->required();
  train_cmd->add_flag("--text-output", tr_flags.text_output,
                      "write vectors as text instead of binary");

  // eval-analogy
  std::string ea_vectors, ea_questions;
  bool ea_text = false;
  std::int32_t ea_threads = 1;
  CLI::App* eval_analogy_cmd = app.add_subcommand(
      "eval-analogy", "score vectors on a word-analogy dataset");
  eval_analogy_cmd->add_option("--vectors", ea_vectors, "vector file")
      ->required()
      ->check(CLI::ExistingFile);
  eval_analogy_cmd
      ->add_option("--questions", ea_questions, "questions-words dataset")
      ->required()
      ->check(CLI::ExistingFile);
  eval_analogy_cmd->add_flag("--text-vectors", ea_text,
                             "vector file is text format");
  eval_analogy_cmd->add_option("--threads", ea_threads, "evaluation threads")
      ->capture_default_str();
  std::string ea_config;
  eval_analogy_cmd->add_option("--config", ea_config,
                               "key=value file supplying any of these "
                               "options; explicit flags win");

  // eval-simlex
  std::string es_vectors, es_simlex;
  bool es_text = false;
  CLI::App* eval_simlex_cmd = app.add_subcommand(
      "eval-simlex", "score vectors on a word-similarity dataset");
  eval_simlex_cmd->add_option("--vectors", es_vectors, "vector file")
      ->required()
      ->check(CLI::ExistingFile);
  eval_simlex_cmd->add_option("--simlex", es_simlex, "similarity dataset (TSV)")
      ->required()
      ->check(CLI::ExistingFile);
  eval_simlex_cmd->add_flag("--text-vectors", es_text,
                            "vector file is text format");
  std::string es_config;
  eval_simlex_cmd->add_option("--config", es_config,
                              "key=value file supplying any of these "
                              "options; explicit flags win");

  // sweep
  CommonPaths sw_paths;
  TrainFlags sw_flags;
  sw_flags.mode = "threshold";
  std::string sw_questions;
  std::vector<double> sw_thetas;
  CLI::App* sweep_cmd = app.add_subcommand(
      "sweep", "train and evaluate across a grid of thresholds");
  add_train_options(sweep_cmd, sw_paths, sw_flags);
  sweep_cmd->add_option("--questions", sw_questions, "questions-words dataset")
      ->required()
      ->check(CLI::ExistingFile);
  sweep_cmd
      ->add_option("--thetas", sw_thetas,
                   "comma-separated threshold grid (default 0.5..7.0)")
      ->delimiter(',');
  sweep_cmd->add_option("--output", sw_paths.output,
                        "tab-separated results file");

  try {
    args = merge_config_args(std::move(args));
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsageError;
  }

  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("lexembed");
  for (const std::string& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageError;
  }

  try {
    if (build_vocab->parsed()) {
      log_effective_config(build_vocab);
      return do_build_vocab(bv_corpus, bv_min_count, bv_output);
    }
    if (train_cmd->parsed()) {
      log_effective_config(train_cmd);
      return do_train(tr_paths, tr_flags);
    }
    if (eval_analogy_cmd->parsed()) {
      log_effective_config(eval_analogy_cmd);
      return do_eval_analogy(ea_vectors, ea_questions, ea_text, ea_threads);
    }
    if (eval_simlex_cmd->parsed()) {
      log_effective_config(eval_simlex_cmd);
      return do_eval_simlex(es_vectors, es_simlex, es_text);
    }
    if (sweep_cmd->parsed()) {
      log_effective_config(sweep_cmd);
      return do_sweep(sw_paths, sw_flags, sw_questions, std::move(sw_thetas));
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeError;
  }
  return 0;
}

}  // namespace lexembed::cli
