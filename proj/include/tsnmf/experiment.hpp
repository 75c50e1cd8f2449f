#pragma once

// Experiment orchestration: resolving a supervision spec to document indices,
// running one fit + evaluation cell, and sweeping supervision rates x seeds.

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "tsnmf/artifacts.hpp"
#include "tsnmf/evaluation.hpp"
#include "tsnmf/factorization.hpp"
#include "tsnmf/preprocessing.hpp"
#include "tsnmf/supervision.hpp"
#include "tsnmf/synthetic.hpp"

namespace tsnmf {

/// Seed for the supervision-sampling stream, kept distinct from the
/// initialization stream so the two are not correlated for the same seed.
inline std::uint64_t supervision_stream_seed(std::uint64_t seed) {
  return seed ^ 0x9E3779B97F4A7C15ULL;
}

/// Either a rate (sampled with a seed) or an explicit list of document ids.
struct SupervisionSpec {
  std::optional<double> rate;
  std::vector<std::string> supervised_ids;
  std::uint64_t seed = 0;
};

inline SupervisionSpec supervision_spec_from_json(const json& j) {
  SupervisionSpec s;
  try {
    if (j.contains("rate")) s.rate = j.at("rate").get<double>();
    if (j.contains("supervised_ids")) {
      s.supervised_ids = j.at("supervised_ids").get<std::vector<std::string>>();
    }
    if (j.contains("seed")) s.seed = j.at("seed").get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("supervision spec: ") + e.what());
  }
  if (s.rate && !s.supervised_ids.empty()) {
    throw ParseError("supervision spec: give either \"rate\" or \"supervised_ids\", not both");
  }
  return s;
}

inline SupervisedSet resolve_supervision(const SupervisionSpec& spec,
                                         std::span<const std::string> doc_ids) {
  if (spec.rate) return sample_supervised_set(doc_ids.size(), *spec.rate,
                                              supervision_stream_seed(spec.seed));
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < doc_ids.size(); ++i) index.emplace(doc_ids[i], i);
  SupervisedSet out;
  for (const auto& id : spec.supervised_ids) {
    auto it = index.find(id);
    if (it == index.end()) throw InvalidSupervision("unknown supervised document id \"" + id + "\"");
    out.push_back(it->second);
  }
  return normalize_supervised(std::move(out));
}

struct ExperimentConfig {
  // Exactly one data source.
  std::optional<fs::path> corpus;   // JSON-lines, ingested in-process
  std::optional<fs::path> dataset;  // directory with matrix.txt + meta.json
  std::optional<SyntheticSpec> synthetic;

  std::size_t vocab_cap = 2000;
  std::size_t min_chars = 250;
  std::optional<std::size_t> topics;  // defaults to the number of labels
  std::vector<double> rates;
  std::vector<std::uint64_t> seeds;
  bool weighted = false;
  std::size_t max_iter = 200;
  double rel_tol = 1e-4;
  double epsilon = 1e-9;
  std::size_t acol_q = 5;
  double threshold = 0.1;
  fs::path output = "sweep_out";
  bool write_cells = true;
  std::size_t jobs = 1;

  void validate() const {
    const int sources = corpus.has_value() + dataset.has_value() + synthetic.has_value();
    if (sources != 1) {
      throw ParseError("experiment config needs exactly one of \"corpus\", \"dataset\", \"synthetic\"");
    }
    if (rates.empty()) throw ParseError("experiment config: \"rates\" must be non-empty");
    for (double r : rates)
      if (!(r >= 0.0 && r <= 1.0)) throw ParseError("experiment config: rates must lie in [0, 1]");
    if (seeds.empty()) throw ParseError("experiment config: \"seeds\" must be non-empty");
    if (corpus && !fs::exists(*corpus)) throw ParseError("corpus not found: " + corpus->string());
    if (dataset && !fs::exists(*dataset / "matrix.txt")) {
      throw ParseError("dataset not found: " + dataset->string());
    }
  }

  FitConfig fit_config(std::size_t d, std::uint64_t seed) const {
    return {d, max_iter, rel_tol, epsilon, seed, weighted, acol_q};
  }
};

/// Parses a sweep config. Relative paths resolve against `base_dir`.
inline ExperimentConfig experiment_config_from_json(const json& j, const fs::path& base_dir = {}) {
  ExperimentConfig c;
  auto resolve = [&](const std::string& p) {
    fs::path path(p);
    return path.is_absolute() || base_dir.empty() ? path : base_dir / path;
  };
  try {
    if (j.contains("corpus")) c.corpus = resolve(j.at("corpus").get<std::string>());
    if (j.contains("dataset")) c.dataset = resolve(j.at("dataset").get<std::string>());
    if (j.contains("synthetic")) {
      const auto& s = j.at("synthetic");
      SyntheticSpec spec;
      spec.docs = s.value("docs", spec.docs);
      spec.terms = s.value("terms", spec.terms);
      spec.topics = s.value("topics", spec.topics);
      spec.noise = s.value("noise", spec.noise);
      spec.off_block_density = s.value("off_block_density", spec.off_block_density);
      spec.max_labels_per_doc = s.value("max_labels_per_doc", spec.max_labels_per_doc);
      spec.seed = s.value("seed", spec.seed);
      c.synthetic = spec;
    }
    c.vocab_cap = j.value("vocab_cap", c.vocab_cap);
    c.min_chars = j.value("min_chars", c.min_chars);
    if (j.contains("topics")) c.topics = j.at("topics").get<std::size_t>();
    c.rates = j.at("rates").get<std::vector<double>>();
    c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    c.weighted = j.value("weighted", c.weighted);
    c.max_iter = j.value("max_iter", c.max_iter);
    c.rel_tol = j.value("rel_tol", c.rel_tol);
    c.epsilon = j.value("epsilon", c.epsilon);
    c.acol_q = j.value("acol_q", c.acol_q);
    c.threshold = j.value("threshold", c.threshold);
    if (j.contains("output")) c.output = resolve(j.at("output").get<std::string>());
    c.write_cells = j.value("write_cells", c.write_cells);
    c.jobs = j.value("jobs", c.jobs);
  } catch (const json::exception& e) {
    throw ParseError(std::string("experiment config: ") + e.what());
  }
  c.validate();
  return c;
}

inline ExperimentConfig load_experiment_config(const fs::path& path) {
  return experiment_config_from_json(load_json(path), path.parent_path());
}

inline Dataset dataset_from_synthetic(SyntheticCorpus s) {
  Dataset ds{std::move(s.V), std::move(s.doc_ids), std::move(s.vocabulary), std::move(s.labels), {}};
  ds.stats.input_docs = ds.stats.kept_docs = ds.V.rows();
  return ds;
}

/// Loads or builds the experiment's dataset.
inline Dataset load_experiment_dataset(const ExperimentConfig& c) {
  if (c.synthetic) return dataset_from_synthetic(generate_synthetic(*c.synthetic));
  if (c.dataset) return load_dataset_dir(*c.dataset);
  auto is = open_input(c.corpus->string());
  IngestOptions opts;
  opts.vocab_cap = c.vocab_cap;
  opts.min_chars = c.min_chars;
  return dataset_from_ingest(ingest(read_corpus_jsonl(is), opts));
}

struct SweepRow {
  double rate = 0.0;
  std::uint64_t seed = 0;
  std::string status = "ok";
  double coverage = 0.0;
  double mean_similarity = 0.0;
  std::size_t resolved = 0;
  std::size_t iterations = 0;
  double final_loss = 0.0;
  double wall_seconds = 0.0;
};

struct SweepResult {
  std::vector<SweepRow> rows;  // (rate, seed) in config order

  std::size_t failures() const {
    return static_cast<std::size_t>(std::count_if(
        rows.begin(), rows.end(), [](const SweepRow& r) { return r.status != "ok"; }));
  }
};

struct CellOutcome {
  FitResult fit;
  EvaluationReport report;
  SupervisedSet supervised;
  FitConfig config;
};

/// Fit + evaluate one (rate, seed) cell.
inline CellOutcome run_cell(const Dataset& ds, const DenseMatrix& truth, std::size_t d,
                            const ExperimentConfig& c, double rate, std::uint64_t seed) {
  CellOutcome out;
  out.config = c.fit_config(d, seed);
  out.supervised = sample_supervised_set(ds.V.rows(), rate, supervision_stream_seed(seed));
  const auto mask = build_mask(ds.labels, out.supervised, ds.V.rows(), d);
  out.fit = fit(ds.V, mask, out.config);
  out.report = score_report(out.fit.model, truth, c.threshold,
                            topic_coverage(ds.labels, out.supervised));
  return out;
}

inline std::string cell_name(double rate, std::uint64_t seed) {
  return "rate_" + format_double(rate) + "_seed_" + std::to_string(seed);
}

/// Runs every (rate, seed) cell. A failing cell is recorded in its row and the
/// sweep continues. Cells may run on `c.jobs` threads; row order is fixed.
inline SweepResult run_sweep(const ExperimentConfig& c, const Dataset& ds) {
  const std::size_t d = c.topics.value_or(ds.labels.num_labels());
  if (d == 0) throw InvalidSupervision("topic count is 0 (no labels and no \"topics\" given)");
  const auto truth = truth_matrix(ds.labels);

  std::vector<std::pair<double, std::uint64_t>> cells;
  for (double r : c.rates)
    for (auto s : c.seeds) cells.emplace_back(r, s);

  SweepResult result;
  result.rows.resize(cells.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < cells.size(); k = next++) {
      auto& row = result.rows[k];
      row.rate = cells[k].first;
      row.seed = cells[k].second;
      const auto start = std::chrono::steady_clock::now();
      try {
        auto cell = run_cell(ds, truth, d, c, row.rate, row.seed);
        row.coverage = *cell.report.topic_coverage;
        row.mean_similarity = cell.report.mean_similarity;
        row.resolved = cell.report.resolved_count;
        row.iterations = cell.fit.trace.iterations;
        row.final_loss = cell.fit.trace.final_loss();
        if (c.write_cells) {
          const auto dir = c.output / "cells" / cell_name(row.rate, row.seed);
          save_model(dir, cell.fit, cell.config, cell.supervised);
          save_report(dir, cell.report, ds.labels.labels);
        }
      } catch (const std::exception& e) {
        row.status = std::string("error: ") + e.what();
      }
      row.wall_seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
  };
  const std::size_t jobs = std::max<std::size_t>(1, std::min(c.jobs, cells.size()));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  return result;
}

struct RateSummary {
  double rate = 0.0;
  std::size_t ok = 0;
  double mean_similarity = 0.0, sd_similarity = 0.0;
  double mean_resolved = 0.0, sd_resolved = 0.0;
  double mean_coverage = 0.0, sd_coverage = 0.0;
};

/// Mean and sample standard deviation per rate over successful cells, in
/// first-appearance rate order.
inline std::vector<RateSummary> summarize(const SweepResult& result) {
  std::vector<double> order;
  std::map<double, std::vector<const SweepRow*>> groups;
  for (const auto& row : result.rows) {
    if (!groups.count(row.rate)) order.push_back(row.rate);
    auto& g = groups[row.rate];
    if (row.status == "ok") g.push_back(&row);
  }
  auto stats = [](const std::vector<double>& xs) {
    if (xs.empty()) return std::pair{0.0, 0.0};
    double m = 0.0;
    for (double x : xs) m += x;
    m /= static_cast<double>(xs.size());
    double ss = 0.0;
    for (double x : xs) ss += (x - m) * (x - m);
    const double sd = xs.size() > 1 ? std::sqrt(ss / static_cast<double>(xs.size() - 1)) : 0.0;
    return std::pair{m, sd};
  };
  std::vector<RateSummary> out;
  for (double r : order) {
    const auto& g = groups[r];
    std::vector<double> sim, res, cov;
    for (const auto* row : g) {
      sim.push_back(row->mean_similarity);
      res.push_back(static_cast<double>(row->resolved));
      cov.push_back(row->coverage);
    }
    RateSummary s;
    s.rate = r;
    s.ok = g.size();
    std::tie(s.mean_similarity, s.sd_similarity) = stats(sim);
    std::tie(s.mean_resolved, s.sd_resolved) = stats(res);
    std::tie(s.mean_coverage, s.sd_coverage) = stats(cov);
    out.push_back(s);
  }
  return out;
}

/// Writes sweep.csv and summary.csv (both deterministic) and timing.csv
/// (wall-clock seconds per cell, which naturally varies run to run).
inline void save_sweep(const fs::path& dir, const SweepResult& result) {
  fs::create_directories(dir);
  write_file((dir / "sweep.csv").string(), [&](std::ostream& os) {
    os << "rate,seed,status,coverage,mean_similarity,resolved,iterations,final_loss\n";
    for (const auto& r : result.rows) {
      os << format_double(r.rate) << ',' << r.seed << ',' << csv_field(r.status) << ','
         << format_double(r.coverage) << ',' << format_double(r.mean_similarity) << ','
         << r.resolved << ',' << r.iterations << ',' << format_double(r.final_loss) << '\n';
    }
  });
  write_file((dir / "summary.csv").string(), [&](std::ostream& os) {
    os << "rate,cells_ok,mean_similarity,sd_similarity,mean_resolved,sd_resolved,"
          "mean_coverage,sd_coverage\n";
    for (const auto& s : summarize(result)) {
      os << format_double(s.rate) << ',' << s.ok << ',' << format_double(s.mean_similarity) << ','
         << format_double(s.sd_similarity) << ',' << format_double(s.mean_resolved) << ','
         << format_double(s.sd_resolved) << ',' << format_double(s.mean_coverage) << ','
         << format_double(s.sd_coverage) << '\n';
    }
  });
  write_file((dir / "timing.csv").string(), [&](std::ostream& os) {
    os << "rate,seed,wall_seconds\n";
    for (const auto& r : result.rows) {
      os << format_double(r.rate) << ',' << r.seed << ',' << format_double(r.wall_seconds) << '\n';
    }
  });
}

}  // namespace tsnmf
