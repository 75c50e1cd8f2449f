#pragma once

// On-disk artifacts shared by the pipeline stages.
//
//   dataset:  matrix.txt (sparse V) + meta.json
//             {"doc_ids", "vocabulary", "labels", "doc_labels", "filter_stats"}
//   model:    model.json header + W.csv + H.csv + trace.csv ("iteration,loss")
//   report:   report.json + report.csv (one row per matched pair)

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tsnmf/evaluation.hpp"
#include "tsnmf/factorization.hpp"
#include "tsnmf/matrix_io.hpp"
#include "tsnmf/preprocessing.hpp"
#include "tsnmf/supervision.hpp"

namespace tsnmf {

namespace fs = std::filesystem;
using nlohmann::json;

/// Quotes a CSV field when it contains a separator, quote, or newline.
inline std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

inline void save_json(const fs::path& path, const json& j) {
  write_file(path.string(), [&](std::ostream& os) { os << j.dump(2) << '\n'; });
}

inline json load_json(const fs::path& path) {
  auto is = open_input(path.string());
  try {
    return json::parse(is);
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

struct Dataset {
  DenseMatrix V;
  std::vector<std::string> doc_ids;
  std::vector<std::string> vocabulary;
  LabelTable labels;
  FilterStats stats;
};

inline Dataset dataset_from_ingest(IngestResult r) {
  return {std::move(r.tdm.matrix), std::move(r.tdm.doc_ids), std::move(r.tdm.vocabulary.terms),
          std::move(r.labels), r.stats};
}

inline void save_dataset(const fs::path& dir, const Dataset& ds) {
  fs::create_directories(dir);
  save_sparse((dir / "matrix.txt").string(), SparseMatrix::from_dense(ds.V));
  json meta;
  meta["doc_ids"] = ds.doc_ids;
  meta["vocabulary"] = ds.vocabulary;
  meta["labels"] = ds.labels.labels;
  meta["doc_labels"] = ds.labels.doc_labels;
  meta["filter_stats"] = {{"input_docs", ds.stats.input_docs},
                          {"kept_docs", ds.stats.kept_docs},
                          {"dropped_short", ds.stats.dropped_short},
                          {"zero_rows", ds.stats.zero_rows}};
  save_json(dir / "meta.json", meta);
}

/// Loads and cross-checks a dataset. Inconsistent shapes raise DimensionError.
inline Dataset load_dataset(const fs::path& matrix_path, const fs::path& meta_path) {
  Dataset ds;
  ds.V = load_sparse(matrix_path.string()).to_dense();
  const auto meta = load_json(meta_path);
  try {
    ds.doc_ids = meta.at("doc_ids").get<std::vector<std::string>>();
    ds.vocabulary = meta.at("vocabulary").get<std::vector<std::string>>();
    ds.labels.labels = meta.at("labels").get<std::vector<std::string>>();
    ds.labels.doc_labels = meta.at("doc_labels").get<std::vector<std::vector<std::size_t>>>();
    if (auto it = meta.find("filter_stats"); it != meta.end()) {
      ds.stats.input_docs = it->value("input_docs", std::size_t{0});
      ds.stats.kept_docs = it->value("kept_docs", std::size_t{0});
      ds.stats.dropped_short = it->value("dropped_short", std::size_t{0});
      ds.stats.zero_rows = it->value("zero_rows", std::size_t{0});
    }
  } catch (const json::exception& e) {
    throw ParseError(meta_path.string() + ": " + e.what());
  }
  if (ds.doc_ids.size() != ds.V.rows() || ds.labels.doc_labels.size() != ds.V.rows()) {
    throw DimensionError("dataset: matrix has " + std::to_string(ds.V.rows()) +
                         " rows but metadata lists " + std::to_string(ds.doc_ids.size()) +
                         " documents and " + std::to_string(ds.labels.doc_labels.size()) +
                         " label rows");
  }
  if (ds.vocabulary.size() != ds.V.cols()) {
    throw DimensionError("dataset: matrix has " + std::to_string(ds.V.cols()) +
                         " columns but vocabulary has " + std::to_string(ds.vocabulary.size()) +
                         " terms");
  }
  for (const auto& row : ds.labels.doc_labels)
    for (std::size_t j : row)
      if (j >= ds.labels.num_labels()) throw DimensionError("dataset: label index out of range");
  return ds;
}

inline Dataset load_dataset_dir(const fs::path& dir) {
  return load_dataset(dir / "matrix.txt", dir / "meta.json");
}

struct SavedModel {
  FactorModel model;
  FitConfig config;
  SupervisedSet supervised;
  StopReason stop = StopReason::max_iter;
  std::size_t iterations = 0;
  double final_loss = 0.0;
};

inline json config_to_json(const FitConfig& c) {
  return {{"topics", c.topics},   {"max_iter", c.max_iter}, {"rel_tol", c.rel_tol},
          {"epsilon", c.epsilon}, {"seed", c.seed},         {"weighted", c.weighted},
          {"acol_q", c.acol_q}};
}

inline FitConfig config_from_json(const json& j) {
  FitConfig c;
  c.topics = j.at("topics").get<std::size_t>();
  c.max_iter = j.at("max_iter").get<std::size_t>();
  c.rel_tol = j.at("rel_tol").get<double>();
  c.epsilon = j.at("epsilon").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.weighted = j.at("weighted").get<bool>();
  c.acol_q = j.at("acol_q").get<std::size_t>();
  return c;
}

inline void save_trace_csv(const fs::path& path, const FitTrace& trace) {
  write_file(path.string(), [&](std::ostream& os) {
    os << "iteration,loss\n";
    for (std::size_t k = 0; k < trace.loss.size(); ++k) {
      os << k << ',' << format_double(trace.loss[k]) << '\n';
    }
  });
}

inline void save_model(const fs::path& dir, const FitResult& fit, const FitConfig& config,
                       const SupervisedSet& supervised) {
  fs::create_directories(dir);
  const auto& m = fit.model;
  json header;
  header["format"] = "tsnmf-model/1";
  header["documents"] = m.W.rows();
  header["topics"] = m.W.cols();
  header["terms"] = m.H.cols();
  header["config"] = config_to_json(config);
  header["seed"] = config.seed;
  header["objective"] = config.weighted ? "weighted_sq_error" : "loss_ts";
  header["stop_reason"] = to_string(fit.trace.stop);
  header["iterations"] = fit.trace.iterations;
  header["final_loss"] = fit.trace.final_loss();
  header["supervised_rows"] = supervised;
  header["W"] = "W.csv";
  header["H"] = "H.csv";
  header["trace"] = "trace.csv";
  save_json(dir / "model.json", header);
  save_csv((dir / "W.csv").string(), m.W);
  save_csv((dir / "H.csv").string(), m.H);
  save_trace_csv(dir / "trace.csv", fit.trace);
}

inline SavedModel load_model(const fs::path& dir) {
  const auto header = load_json(dir / "model.json");
  SavedModel out;
  try {
    out.config = config_from_json(header.at("config"));
    out.supervised = header.at("supervised_rows").get<SupervisedSet>();
    out.iterations = header.at("iterations").get<std::size_t>();
    out.final_loss = header.at("final_loss").get<double>();
    out.stop = header.at("stop_reason").get<std::string>() == "converged" ? StopReason::converged
                                                                         : StopReason::max_iter;
    out.model.W = load_csv((dir / header.at("W").get<std::string>()).string());
    out.model.H = load_csv((dir / header.at("H").get<std::string>()).string());
  } catch (const json::exception& e) {
    throw ParseError((dir / "model.json").string() + ": " + e.what());
  }
  if (out.model.W.cols() != out.model.H.rows()) {
    throw DimensionError("model: W " + out.model.W.shape() + " and H " + out.model.H.shape() +
                         " do not conform");
  }
  return out;
}

inline json report_to_json(const EvaluationReport& r, std::span<const std::string> label_names) {
  json pairs = json::array();
  for (const auto& p : r.matching.pairs) {
    pairs.push_back({{"topic", p.topic},
                     {"label", p.label},
                     {"label_name", p.label < label_names.size() ? label_names[p.label] : ""},
                     {"similarity", p.similarity},
                     {"resolved", p.similarity > r.threshold}});
  }
  json j;
  j["pairs"] = pairs;
  j["unmatched_topics"] = r.matching.unmatched_topics;
  j["unmatched_labels"] = r.matching.unmatched_labels;
  j["total_similarity"] = r.total_similarity;
  j["mean_similarity"] = r.mean_similarity;
  j["resolved_count"] = r.resolved_count;
  j["threshold"] = r.threshold;
  j["topic_coverage"] = r.topic_coverage ? json(*r.topic_coverage) : json(nullptr);
  return j;
}

inline void save_report(const fs::path& dir, const EvaluationReport& r,
                        std::span<const std::string> label_names) {
  fs::create_directories(dir);
  save_json(dir / "report.json", report_to_json(r, label_names));
  write_file((dir / "report.csv").string(), [&](std::ostream& os) {
    os << "topic,label,label_name,similarity,resolved\n";
    for (const auto& p : r.matching.pairs) {
      os << p.topic << ',' << p.label << ','
         << csv_field(p.label < label_names.size() ? label_names[p.label] : "") << ','
         << format_double(p.similarity) << ',' << (p.similarity > r.threshold ? 1 : 0) << '\n';
    }
  });
}

}  // namespace tsnmf
