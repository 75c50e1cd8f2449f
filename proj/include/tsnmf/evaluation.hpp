#pragma once

// Scoring a fitted model against ground-truth labels.
//
// Each discovered topic (a column of W) is compared with each label (a column
// of the binary truth matrix) by weighted Jaccard similarity; topics are then
// matched one-to-one to labels maximizing the total similarity, and a matched
// topic counts as resolved when its similarity exceeds the threshold.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tsnmf/assignment.hpp"
#include "tsnmf/errors.hpp"
#include "tsnmf/factorization.hpp"
#include "tsnmf/matrix.hpp"
#include "tsnmf/supervision.hpp"

namespace tsnmf {

/// Σ min(x_k, y_k) / Σ max(x_k, y_k). Two all-zero vectors are identical, so
/// their similarity is 1.
inline double jaccard_match(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw DimensionError("jaccard_match: lengths " + std::to_string(x.size()) + " and " +
                         std::to_string(y.size()));
  }
  double lo = 0.0, hi = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (x[k] < 0.0 || y[k] < 0.0) throw std::invalid_argument("jaccard_match: negative entry");
    lo += std::min(x[k], y[k]);
    hi += std::max(x[k], y[k]);
  }
  return hi == 0.0 ? 1.0 : lo / hi;
}

/// Divides each column by its maximum; all-zero columns are left alone.
inline DenseMatrix max_normalize_columns(const DenseMatrix& m) {
  DenseMatrix out = m;
  for (std::size_t c = 0; c < m.cols(); ++c) {
    double mx = 0.0;
    for (std::size_t r = 0; r < m.rows(); ++r) mx = std::max(mx, m(r, c));
    if (mx == 0.0) continue;
    for (std::size_t r = 0; r < m.rows(); ++r) out(r, c) = m(r, c) / mx;
  }
  return out;
}

/// Entry (a, b) is the Jaccard match of column a of `model` and column b of `truth`.
inline DenseMatrix cross_similarity(const DenseMatrix& model, const DenseMatrix& truth) {
  if (model.rows() != truth.rows()) {
    throw DimensionError("cross_similarity: row counts " + std::to_string(model.rows()) +
                         " and " + std::to_string(truth.rows()));
  }
  std::vector<std::vector<double>> mcols(model.cols()), tcols(truth.cols());
  for (std::size_t a = 0; a < model.cols(); ++a) mcols[a] = model.column(a);
  for (std::size_t b = 0; b < truth.cols(); ++b) tcols[b] = truth.column(b);
  DenseMatrix sim(model.cols(), truth.cols());
  for (std::size_t a = 0; a < model.cols(); ++a)
    for (std::size_t b = 0; b < truth.cols(); ++b) sim(a, b) = jaccard_match(mcols[a], tcols[b]);
  return sim;
}

struct MatchedPair {
  std::size_t topic;
  std::size_t label;
  double similarity;
};

struct Matching {
  std::vector<MatchedPair> pairs;  // sorted by topic
  std::vector<std::size_t> unmatched_topics;
  std::vector<std::size_t> unmatched_labels;

  /// Sum of pair similarities in topic order.
  double total() const {
    double s = 0.0;
    for (const auto& p : pairs) s += p.similarity;
    return s;
  }
};

/// One-to-one topic -> label mapping of size min(d, d~) maximizing total similarity.
inline Matching hungarian_match(const DenseMatrix& similarity) {
  const auto assignment = solve_assignment_max(similarity);
  Matching m;
  std::vector<bool> topic_used(similarity.rows(), false), label_used(similarity.cols(), false);
  for (auto [a, b] : assignment.pairs) {
    m.pairs.push_back({a, b, similarity(a, b)});
    topic_used[a] = true;
    label_used[b] = true;
  }
  for (std::size_t a = 0; a < similarity.rows(); ++a)
    if (!topic_used[a]) m.unmatched_topics.push_back(a);
  for (std::size_t b = 0; b < similarity.cols(); ++b)
    if (!label_used[b]) m.unmatched_labels.push_back(b);
  return m;
}

/// Binary n x d~ matrix: 1 where document i carries label j.
inline DenseMatrix truth_matrix(const LabelTable& labels) {
  DenseMatrix t(labels.num_docs(), labels.num_labels());
  for (std::size_t i = 0; i < labels.num_docs(); ++i)
    for (std::size_t j : labels.doc_labels[i]) t(i, j) = 1.0;
  return t;
}

struct EvaluationReport {
  Matching matching;
  double total_similarity = 0.0;
  double mean_similarity = 0.0;
  std::size_t resolved_count = 0;
  double threshold = 0.1;
  std::optional<double> topic_coverage;
};

/// Column-max-normalizes W, builds the topic x label similarity matrix,
/// matches, and counts pairs with similarity strictly above `threshold`.
inline EvaluationReport score_report(const DenseMatrix& W, const DenseMatrix& truth,
                                     double threshold = 0.1,
                                     std::optional<double> coverage = std::nullopt) {
  if (W.rows() != truth.rows()) {
    throw DimensionError("score_report: model has " + std::to_string(W.rows()) +
                         " documents, truth has " + std::to_string(truth.rows()));
  }
  const auto sim = cross_similarity(max_normalize_columns(W), truth);
  EvaluationReport report;
  report.matching = hungarian_match(sim);
  report.threshold = threshold;
  report.topic_coverage = coverage;
  report.total_similarity = report.matching.total();
  const auto k = report.matching.pairs.size();
  report.mean_similarity = k == 0 ? 0.0 : report.total_similarity / static_cast<double>(k);
  report.resolved_count = static_cast<std::size_t>(
      std::count_if(report.matching.pairs.begin(), report.matching.pairs.end(),
                    [&](const MatchedPair& p) { return p.similarity > threshold; }));
  return report;
}

inline EvaluationReport score_report(const FactorModel& model, const DenseMatrix& truth,
                                     double threshold = 0.1,
                                     std::optional<double> coverage = std::nullopt) {
  return score_report(model.W, truth, threshold, coverage);
}

/// Column indices of the m largest entries of each row of H, descending by
/// weight with ties in column order. m is clamped to the column count.
inline std::vector<std::vector<std::size_t>> top_term_indices(const DenseMatrix& H, std::size_t m) {
  if (m == 0) throw std::invalid_argument("top_terms: m must be >= 1");
  m = std::min(m, H.cols());
  std::vector<std::vector<std::size_t>> out(H.rows());
  std::vector<std::size_t> order(H.cols());
  for (std::size_t r = 0; r < H.rows(); ++r) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto row = H.row(r);
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(m), order.end(),
                      [&](std::size_t a, std::size_t b) {
                        return row[a] != row[b] ? row[a] > row[b] : a < b;
                      });
    out[r].assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(m));
  }
  return out;
}

inline std::vector<std::vector<std::string>> top_terms(const DenseMatrix& H,
                                                       std::span<const std::string> vocabulary,
                                                       std::size_t m) {
  if (vocabulary.size() != H.cols()) {
    throw DimensionError("top_terms: vocabulary has " + std::to_string(vocabulary.size()) +
                         " terms, H has " + std::to_string(H.cols()) + " columns");
  }
  std::vector<std::vector<std::string>> out;
  for (const auto& idx : top_term_indices(H, m)) {
    auto& terms = out.emplace_back();
    for (std::size_t j : idx) terms.push_back(vocabulary[j]);
  }
  return out;
}

}  // namespace tsnmf
