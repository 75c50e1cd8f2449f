#pragma once

// Planted-topic generator: V = W~ H~ + N with a known document-label table.
//
// Topics own contiguous blocks of terms (weights Uniform(0.5, 1.5)) plus a
// sparse scattering of weaker off-block terms, so topics overlap. Each document
// carries 1-3 labels; its weight on each label is Uniform(0.5, 1.5). N is
// entrywise |Gaussian| noise rescaled so that ||N||_F = noise * ||W~ H~||_F.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "tsnmf/matrix.hpp"
#include "tsnmf/random.hpp"
#include "tsnmf/supervision.hpp"

namespace tsnmf {

struct SyntheticSpec {
  std::size_t docs = 500;
  std::size_t terms = 1000;
  std::size_t topics = 10;
  double noise = 0.1;
  double off_block_density = 0.1;
  std::size_t max_labels_per_doc = 3;
  std::uint64_t seed = 1;
};

struct SyntheticCorpus {
  DenseMatrix V;
  DenseMatrix W_true;
  DenseMatrix H_true;
  LabelTable labels;
  std::vector<std::string> doc_ids;
  std::vector<std::string> vocabulary;
};

namespace detail {
inline std::string padded(const char* prefix, std::size_t i, int width) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s%0*zu", prefix, width, i);
  return buf;
}
}  // namespace detail

inline SyntheticCorpus generate_synthetic(const SyntheticSpec& spec) {
  if (spec.docs == 0 || spec.terms == 0 || spec.topics == 0) {
    throw std::invalid_argument("synthetic corpus dimensions must be positive");
  }
  if (spec.topics > spec.terms) throw std::invalid_argument("more topics than terms");
  if (spec.noise < 0.0) throw std::invalid_argument("noise level must be >= 0");
  if (spec.max_labels_per_doc == 0) throw std::invalid_argument("max_labels_per_doc must be >= 1");

  Rng rng(spec.seed);
  const std::size_t n = spec.docs, t = spec.terms, k = spec.topics;

  DenseMatrix H(k, t);
  for (std::size_t r = 0; r < k; ++r) {
    const std::size_t lo = r * t / k, hi = (r + 1) * t / k;
    for (std::size_t j = 0; j < t; ++j) {
      if (j >= lo && j < hi) H(r, j) = rng.uniform(0.5, 1.5);
      else if (rng.uniform() < spec.off_block_density) H(r, j) = rng.uniform(0.0, 0.5);
    }
  }

  std::vector<std::vector<std::string>> names(n);
  DenseMatrix W(n, k);
  const std::size_t max_labels = std::min(spec.max_labels_per_doc, k);
  for (std::size_t i = 0; i < n; ++i) {
    // 1 label with probability ~0.6, then geometrically fewer.
    std::size_t count = 1;
    while (count < max_labels && rng.uniform() < 0.4) ++count;
    for (std::size_t r : rng.sample_without_replacement(k, count)) {
      W(i, r) = rng.uniform(0.5, 1.5);
      names[i].push_back(detail::padded("topic_", r, 2));
    }
  }

  const auto signal = matmul(W, H);
  DenseMatrix noise(n, t);
  for (double& x : noise.values()) x = std::fabs(rng.normal());
  const double sn = std::sqrt(frobenius_sq(signal));
  const double nn = std::sqrt(frobenius_sq(noise));
  const double scale = nn == 0.0 ? 0.0 : spec.noise * sn / nn;

  SyntheticCorpus out;
  out.V = DenseMatrix(n, t);
  for (std::size_t k2 = 0; k2 < out.V.size(); ++k2) {
    out.V.values()[k2] = signal.values()[k2] + scale * noise.values()[k2];
  }
  out.W_true = std::move(W);
  out.H_true = std::move(H);
  out.labels = build_label_table(names);
  for (std::size_t i = 0; i < n; ++i) out.doc_ids.push_back(detail::padded("doc_", i, 5));
  for (std::size_t j = 0; j < t; ++j) out.vocabulary.push_back(detail::padded("term_", j, 5));
  return out;
}

}  // namespace tsnmf
