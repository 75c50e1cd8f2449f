// tsnmf: ingest, fit, evaluate, sweep, top-terms, synth.
//
// Exit codes: 0 success, 2 input/shape error, 3 empty data, 4 numerical failure.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <unordered_set>

#include "CLI11.hpp"
#include "tsnmf/tsnmf.hpp"

namespace {

using namespace tsnmf;

constexpr int kOk = 0;
constexpr int kInputError = 2;
constexpr int kEmptyData = 3;
constexpr int kNumerical = 4;

std::unordered_set<std::string> load_stopwords(const std::string& path) {
  auto is = open_input(path);
  std::unordered_set<std::string> words;
  std::string line;
  while (std::getline(is, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (!line.empty() && line.front() != '#') words.insert(line);
  }
  return words;
}

struct DataArgs {
  std::string dir;
  std::string matrix;
  std::string meta;

  void add_to(CLI::App* app) {
    app->add_option("--data", dir, "Dataset directory (matrix.txt + meta.json)");
    app->add_option("--matrix", matrix, "Sparse matrix file (overrides --data)");
    app->add_option("--meta", meta, "Metadata JSON (overrides --data)");
  }

  Dataset load() const {
    const fs::path base(dir);
    const fs::path m = matrix.empty() ? base / "matrix.txt" : fs::path(matrix);
    const fs::path j = meta.empty() ? base / "meta.json" : fs::path(meta);
    if (dir.empty() && (matrix.empty() || meta.empty())) {
      throw ParseError("give --data, or both --matrix and --meta");
    }
    return load_dataset(m, j);
  }
};

struct IngestArgs {
  std::string corpus;
  std::size_t vocab_cap = 2000;
  std::size_t min_chars = 250;
  std::string stopwords;
  std::string out = "ingest_out";
};

int cmd_ingest(const IngestArgs& a) {
  auto is = open_input(a.corpus);
  auto corpus = read_corpus_jsonl(is);
  IngestOptions opts;
  opts.vocab_cap = a.vocab_cap;
  opts.min_chars = a.min_chars;
  std::string stop_path = a.stopwords;
  if (stop_path.empty()) {
    if (const char* env = std::getenv("TSNMF_STOPWORDS")) stop_path = env;
  }
  std::unordered_set<std::string> custom;
  if (!stop_path.empty()) {
    custom = load_stopwords(stop_path);
    opts.tokenizer.stopwords = &custom;
  }
  const auto ds = dataset_from_ingest(ingest(std::move(corpus), opts));
  save_dataset(a.out, ds);
  std::cout << "documents: " << ds.stats.kept_docs << " kept of " << ds.stats.input_docs
            << " (" << ds.stats.dropped_short << " below " << a.min_chars << " chars)\n"
            << "vocabulary: " << ds.vocabulary.size() << " terms\n"
            << "labels: " << ds.labels.num_labels() << "\n"
            << "zero rows: " << ds.stats.zero_rows << "\n";
  return kOk;
}

struct FitArgs {
  DataArgs data;
  std::string supervision;
  std::optional<double> rate;
  std::uint64_t seed = 0;
  std::optional<std::size_t> topics;
  bool weighted = false;
  std::size_t max_iter = 200;
  double rel_tol = 1e-4;
  double epsilon = 1e-9;
  std::size_t acol_q = 5;
  std::string out = "model_out";
  std::string export_mask;
};

int cmd_fit(const FitArgs& a) {
  const auto ds = a.data.load();
  SupervisionSpec spec;
  if (!a.supervision.empty()) {
    const auto j = load_json(a.supervision);
    spec = supervision_spec_from_json(j);
    if (!j.contains("seed")) spec.seed = a.seed;
  } else {
    spec.rate = a.rate.value_or(0.0);
    spec.seed = a.seed;
  }
  const auto supervised = resolve_supervision(spec, ds.doc_ids);
  const std::size_t d = a.topics.value_or(ds.labels.num_labels());
  FitConfig config{d, a.max_iter, a.rel_tol, a.epsilon, a.seed, a.weighted, a.acol_q};
  config.validate();
  const auto mask = build_mask(ds.labels, supervised, ds.V.rows(), d);
  if (!a.export_mask.empty()) save_csv(a.export_mask, mask.matrix);
  try {
    const auto result = fit(ds.V, mask, config);
    save_model(a.out, result, config, supervised);
    std::cout << "supervised: " << supervised.size() << " of " << ds.V.rows() << "\n"
              << "iterations: " << result.trace.iterations << "\n"
              << "stop reason: " << to_string(result.trace.stop) << "\n"
              << "final loss: " << format_double(result.trace.final_loss()) << "\n";
  } catch (const FitFailure& e) {
    fs::create_directories(a.out);
    save_trace_csv(fs::path(a.out) / "trace.csv", e.trace());
    throw;
  }
  return kOk;
}

struct EvalArgs {
  DataArgs data;
  std::string model;
  double threshold = 0.1;
  std::string out = "report_out";
};

int cmd_evaluate(const EvalArgs& a) {
  const auto ds = a.data.load();
  const auto saved = load_model(a.model);
  const auto truth = truth_matrix(ds.labels);
  std::optional<double> coverage;
  if (saved.model.W.rows() == ds.labels.num_docs()) {
    coverage = topic_coverage(ds.labels, saved.supervised);
  }
  const auto report = score_report(saved.model, truth, a.threshold, coverage);
  save_report(a.out, report, ds.labels.labels);
  std::cout << "resolved: " << report.resolved_count << " of " << report.matching.pairs.size()
            << " (threshold " << format_double(a.threshold) << ")\n"
            << "mean similarity: " << format_double(report.mean_similarity) << "\n"
            << "total similarity: " << format_double(report.total_similarity) << "\n";
  return kOk;
}

struct TopTermsArgs {
  DataArgs data;
  std::string model;
  std::size_t m = 3;
  std::string out;
};

int cmd_top_terms(const TopTermsArgs& a) {
  const auto ds = a.data.load();
  const auto saved = load_model(a.model);
  const auto terms = top_terms(saved.model.H, ds.vocabulary, a.m);
  for (std::size_t r = 0; r < terms.size(); ++r) {
    std::cout << "topic " << r << ":";
    for (std::size_t k = 0; k < terms[r].size(); ++k) std::cout << (k ? ", " : " ") << terms[r][k];
    std::cout << "\n";
  }
  if (!a.out.empty()) {
    write_file(a.out, [&](std::ostream& os) {
      const std::size_t width = terms.empty() ? 0 : terms.front().size();
      os << "topic";
      for (std::size_t k = 1; k <= width; ++k) os << ",term_" << k;
      os << '\n';
      for (std::size_t r = 0; r < terms.size(); ++r) {
        os << r;
        for (const auto& t : terms[r]) os << ',' << csv_field(t);
        os << '\n';
      }
    });
  }
  return kOk;
}

struct SweepArgs {
  std::string config;
  std::string out;
  std::optional<std::size_t> jobs;
};

int cmd_sweep(const SweepArgs& a) {
  auto config = load_experiment_config(a.config);
  if (!a.out.empty()) config.output = a.out;
  if (a.jobs) config.jobs = *a.jobs;
  const auto ds = load_experiment_dataset(config);
  const auto result = run_sweep(config, ds);
  save_sweep(config.output, result);
  for (const auto& s : summarize(result)) {
    std::cout << "rate " << format_double(s.rate) << ": mean similarity "
              << format_double(s.mean_similarity) << " (sd " << format_double(s.sd_similarity)
              << "), resolved " << format_double(s.mean_resolved) << ", coverage "
              << format_double(s.mean_coverage) << ", " << s.ok << " ok\n";
  }
  const auto failed = result.failures();
  if (failed) std::cerr << failed << " of " << result.rows.size() << " cells failed\n";
  if (failed == result.rows.size()) return kInputError;
  return kOk;
}

struct SynthArgs {
  SyntheticSpec spec;
  std::string out = "synthetic";
};

int cmd_synth(const SynthArgs& a) {
  auto ds = dataset_from_synthetic(generate_synthetic(a.spec));
  save_dataset(a.out, ds);
  std::cout << "wrote " << ds.V.rows() << " x " << ds.V.cols() << " matrix with "
            << ds.labels.num_labels() << " labels to " << a.out << "\n";
  return kOk;
}

template <class F>
int guarded(F&& f) {
  try {
    return f();
  } catch (const FitFailure& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumerical;
  } catch (const NumericalFailure& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumerical;
  } catch (const EmptyDataError& e) {
    std::cerr << "empty data: " << e.what() << "\n";
    return kEmptyData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Topic-supervised non-negative matrix factorization"};
  app.require_subcommand(1);
  int rc = kOk;

  IngestArgs ingest_args;
  auto* ingest_cmd = app.add_subcommand("ingest", "Build a TF-IDF matrix from a JSON-lines corpus");
  ingest_cmd->add_option("--corpus", ingest_args.corpus, "JSON-lines corpus")->required();
  ingest_cmd->add_option("--vocab-cap", ingest_args.vocab_cap, "Maximum vocabulary size")
      ->capture_default_str();
  ingest_cmd->add_option("--min-chars", ingest_args.min_chars, "Drop documents shorter than this")
      ->capture_default_str();
  ingest_cmd->add_option("--stopwords", ingest_args.stopwords,
                         "Stopword file, one per line (default: $TSNMF_STOPWORDS or built-in)");
  ingest_cmd->add_option("--out", ingest_args.out, "Output directory")->capture_default_str();
  ingest_cmd->callback([&] { rc = guarded([&] { return cmd_ingest(ingest_args); }); });

  FitArgs fit_args;
  auto* fit_cmd = app.add_subcommand("fit", "Fit a TS-NMF model");
  fit_args.data.add_to(fit_cmd);
  auto* spec_opt = fit_cmd->add_option("--supervision", fit_args.supervision,
                      "Supervision spec JSON ({\"rate\", \"seed\"} or {\"supervised_ids\"})");
  auto* rate_opt =
      fit_cmd->add_option("--rate", fit_args.rate, "Supervision rate in [0, 1] (default 0)");
  spec_opt->excludes(rate_opt);
  fit_cmd->add_option("--seed", fit_args.seed, "Random seed")->capture_default_str();
  fit_cmd->add_option("--topics", fit_args.topics, "Topic count (default: number of labels)");
  fit_cmd->add_flag("--weighted", fit_args.weighted, "Use inverse-frequency error weighting");
  fit_cmd->add_option("--max-iter", fit_args.max_iter)->capture_default_str();
  fit_cmd->add_option("--rel-tol", fit_args.rel_tol)->capture_default_str();
  fit_cmd->add_option("--epsilon", fit_args.epsilon)->capture_default_str();
  fit_cmd->add_option("--acol-q", fit_args.acol_q, "Rows averaged per H row at init")
      ->capture_default_str();
  fit_cmd->add_option("--out", fit_args.out, "Model output directory")->capture_default_str();
  fit_cmd->add_option("--export-mask", fit_args.export_mask, "Write the supervision mask as CSV");
  fit_cmd->callback([&] { rc = guarded([&] { return cmd_fit(fit_args); }); });

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("evaluate", "Score a model against the label table");
  eval_args.data.add_to(eval_cmd);
  eval_cmd->add_option("--model", eval_args.model, "Model directory")->required();
  eval_cmd->add_option("--threshold", eval_args.threshold, "Resolution threshold")
      ->capture_default_str();
  eval_cmd->add_option("--out", eval_args.out, "Report output directory")->capture_default_str();
  eval_cmd->callback([&] { rc = guarded([&] { return cmd_evaluate(eval_args); }); });

  TopTermsArgs tt_args;
  auto* tt_cmd = app.add_subcommand("top-terms", "Print the leading terms of each topic");
  tt_args.data.add_to(tt_cmd);
  tt_cmd->add_option("--model", tt_args.model, "Model directory")->required();
  tt_cmd->add_option("-m,--terms", tt_args.m, "Terms per topic")->capture_default_str();
  tt_cmd->add_option("--out", tt_args.out, "Optional CSV output");
  tt_cmd->callback([&] { rc = guarded([&] { return cmd_top_terms(tt_args); }); });

  SweepArgs sweep_args;
  auto* sweep_cmd = app.add_subcommand("sweep", "Run fit + evaluate over supervision rates x seeds");
  sweep_cmd->add_option("--config", sweep_args.config, "Experiment config JSON")->required();
  sweep_cmd->add_option("--out", sweep_args.out, "Override the config's output directory");
  sweep_cmd->add_option("--jobs", sweep_args.jobs, "Worker threads");
  sweep_cmd->callback([&] { rc = guarded([&] { return cmd_sweep(sweep_args); }); });

  SynthArgs synth_args;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a planted-topic dataset");
  synth_cmd->add_option("--docs", synth_args.spec.docs)->capture_default_str();
  synth_cmd->add_option("--terms", synth_args.spec.terms)->capture_default_str();
  synth_cmd->add_option("--topics", synth_args.spec.topics)->capture_default_str();
  synth_cmd->add_option("--noise", synth_args.spec.noise, "Noise Frobenius norm relative to signal")
      ->capture_default_str();
  synth_cmd->add_option("--seed", synth_args.spec.seed)->capture_default_str();
  synth_cmd->add_option("--out", synth_args.out, "Dataset output directory")->capture_default_str();
  synth_cmd->callback([&] { rc = guarded([&] { return cmd_synth(synth_args); }); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInputError;
  }
  return rc;
}
