#pragma once

// Supervision inputs for TS-NMF: which documents are labeled, the binary mask
// restricting the topics each document may use, and per-document error
// weights emphasizing the labeled rows.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "tsnmf/errors.hpp"
#include "tsnmf/matrix.hpp"
#include "tsnmf/random.hpp"

namespace tsnmf {

/// Distinct labels in lexicographic order (label j is topic column j) and the
/// label indices attached to each document.
struct LabelTable {
  std::vector<std::string> labels;
  std::vector<std::vector<std::size_t>> doc_labels;

  std::size_t num_labels() const noexcept { return labels.size(); }
  std::size_t num_docs() const noexcept { return doc_labels.size(); }

  friend bool operator==(const LabelTable&, const LabelTable&) = default;
};

/// Builds a table from per-document label strings. Duplicate labels within a
/// document are collapsed; each document's indices come out sorted.
inline LabelTable build_label_table(std::span<const std::vector<std::string>> per_doc) {
  std::map<std::string, std::size_t> index;
  for (const auto& doc : per_doc)
    for (const auto& l : doc) index.emplace(l, 0);
  LabelTable table;
  table.labels.reserve(index.size());
  for (auto& [name, idx] : index) {
    idx = table.labels.size();
    table.labels.push_back(name);
  }
  table.doc_labels.reserve(per_doc.size());
  for (const auto& doc : per_doc) {
    std::vector<std::size_t> ids;
    ids.reserve(doc.size());
    for (const auto& l : doc) ids.push_back(index.at(l));
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    table.doc_labels.push_back(std::move(ids));
  }
  return table;
}

/// Sorted, duplicate-free document indices.
using SupervisedSet = std::vector<std::size_t>;

inline SupervisedSet normalize_supervised(SupervisedSet s) {
  std::sort(s.begin(), s.end());
  s.erase(std::unique(s.begin(), s.end()), s.end());
  return s;
}

/// Uniformly random subset of [0, n) of size round(rate * n), reproducible from seed.
inline SupervisedSet sample_supervised_set(std::size_t n, double rate, std::uint64_t seed) {
  if (!(rate >= 0.0 && rate <= 1.0)) {
    throw std::invalid_argument("supervision rate must lie in [0, 1], got " + std::to_string(rate));
  }
  const auto k = static_cast<std::size_t>(std::llround(rate * static_cast<double>(n)));
  Rng rng(seed);
  return normalize_supervised(rng.sample_without_replacement(n, k));
}

struct SupervisionMask {
  DenseMatrix matrix;  // n x d, entries exactly 0 or 1
  SupervisedSet supervised_rows;
};

/// Supervised rows allow exactly their label columns; every other row is all ones.
inline SupervisionMask build_mask(const LabelTable& labels, const SupervisedSet& supervised,
                                  std::size_t n, std::size_t d) {
  if (d == 0) throw std::invalid_argument("topic count must be at least 1");
  SupervisionMask mask{DenseMatrix::ones(n, d), normalize_supervised(supervised)};
  for (std::size_t i : mask.supervised_rows) {
    if (i >= n) {
      throw DimensionError("supervised index " + std::to_string(i) + " out of range for " +
                           std::to_string(n) + " documents");
    }
    if (i >= labels.num_docs()) {
      throw DimensionError("label table has " + std::to_string(labels.num_docs()) +
                           " documents, supervised index " + std::to_string(i));
    }
    const auto& doc = labels.doc_labels[i];
    if (doc.empty()) {
      throw InvalidSupervision("supervised document " + std::to_string(i) + " has no labels");
    }
    auto row = mask.matrix.row(i);
    std::fill(row.begin(), row.end(), 0.0);
    for (std::size_t j : doc) {
      if (j >= d) {
        throw InvalidSupervision("label index " + std::to_string(j) + " of document " +
                                 std::to_string(i) + " exceeds topic count " + std::to_string(d));
      }
      row[j] = 1.0;
    }
  }
  return mask;
}

/// Row-constant error weights; the n x t weight matrix is this vector broadcast
/// across columns.
struct ErrorWeights {
  std::vector<double> row_weight;

  static ErrorWeights uniform(std::size_t n) { return {std::vector<double>(n, 1.0)}; }

  std::size_t size() const noexcept { return row_weight.size(); }

  DenseMatrix broadcast(std::size_t cols) const {
    DenseMatrix e(row_weight.size(), cols);
    for (std::size_t i = 0; i < row_weight.size(); ++i) {
      auto row = e.row(i);
      std::fill(row.begin(), row.end(), row_weight[i]);
    }
    return e;
  }
};

/// Inverse-frequency weighting: labeled rows get n / |supervised|, the rest 1.
inline ErrorWeights build_error_weights(std::size_t n, const SupervisedSet& supervised) {
  auto weights = ErrorWeights::uniform(n);
  const auto s = normalize_supervised(supervised);
  if (s.empty()) return weights;
  const double w = static_cast<double>(n) / static_cast<double>(s.size());
  for (std::size_t i : s) {
    if (i >= n) throw DimensionError("supervised index " + std::to_string(i) + " out of range");
    weights.row_weight[i] = w;
  }
  return weights;
}

/// Fraction of all labels carried by at least one supervised document.
inline double topic_coverage(const LabelTable& labels, const SupervisedSet& supervised) {
  if (labels.num_labels() == 0) return 0.0;
  std::vector<bool> seen(labels.num_labels(), false);
  std::size_t count = 0;
  for (std::size_t i : supervised) {
    if (i >= labels.num_docs()) throw DimensionError("supervised index out of range");
    for (std::size_t j : labels.doc_labels[i]) {
      if (!seen[j]) {
        seen[j] = true;
        ++count;
      }
    }
  }
  return static_cast<double>(count) / static_cast<double>(labels.num_labels());
}

}  // namespace tsnmf
