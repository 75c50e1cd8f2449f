#pragma once

// Corpus -> TF-IDF document-term matrix.
//
// Pipeline: drop short documents, tokenize (lowercase, split on anything that
// is not an ASCII letter, drop tokens under 3 characters and stopwords), keep
// the `cap` most document-frequent terms, then weight raw counts by the
// smoothed idf ln((1 + n) / (1 + df)) + 1 and L2-normalize each row.

#include <algorithm>
#include <cmath>
#include <functional>
#include <istream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "tsnmf/errors.hpp"
#include "tsnmf/matrix.hpp"
#include "tsnmf/stopwords.hpp"
#include "tsnmf/supervision.hpp"

namespace tsnmf {

struct RawDocument {
  std::string id;
  std::string text;
  std::vector<std::string> labels;
};

using TokenList = std::vector<std::string>;

struct TokenizerOptions {
  const std::unordered_set<std::string>* stopwords = &default_stopwords();
  std::size_t min_token_length = 3;
  /// Applied to each lowercased token before filtering (e.g. a lemmatizer).
  std::function<std::string(std::string)> normalizer;
};

inline TokenList tokenize(std::string_view text, const TokenizerOptions& opts = {}) {
  TokenList out;
  std::string cur;
  auto flush = [&] {
    if (cur.empty()) return;
    std::string tok = opts.normalizer ? opts.normalizer(std::move(cur)) : std::move(cur);
    cur.clear();
    if (tok.size() < opts.min_token_length) return;
    if (opts.stopwords && opts.stopwords->count(tok)) return;
    out.push_back(std::move(tok));
  };
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z')) {
      cur.push_back(static_cast<char>(c | 0x20));
    } else {
      flush();
    }
  }
  flush();
  return out;
}

/// Number of UTF-8 code points in `s`.
inline std::size_t char_count(std::string_view s) {
  std::size_t n = 0;
  for (char ch : s) n += (static_cast<unsigned char>(ch) & 0xC0) != 0x80;
  return n;
}

/// Keeps documents with at least `min_chars` characters, in original order.
inline std::vector<RawDocument> filter_documents(std::vector<RawDocument> corpus,
                                                 std::size_t min_chars) {
  std::erase_if(corpus, [&](const RawDocument& d) { return char_count(d.text) < min_chars; });
  return corpus;
}

struct Vocabulary {
  std::vector<std::string> terms;
  std::unordered_map<std::string, std::size_t> index;

  Vocabulary() = default;
  explicit Vocabulary(std::vector<std::string> t) : terms(std::move(t)) {
    for (std::size_t j = 0; j < terms.size(); ++j) index.emplace(terms[j], j);
  }

  std::size_t size() const noexcept { return terms.size(); }

  /// Column of `term`, or size() when absent.
  std::size_t find(const std::string& term) const {
    auto it = index.find(term);
    return it == index.end() ? size() : it->second;
  }
};

/// The `cap` most document-frequent tokens; ties in lexicographic order.
inline Vocabulary build_vocabulary(std::span<const TokenList> docs, std::size_t cap) {
  if (cap == 0) throw std::invalid_argument("vocabulary cap must be at least 1");
  std::unordered_map<std::string, std::size_t> df;
  for (const auto& doc : docs) {
    std::unordered_set<std::string_view> seen;
    for (const auto& tok : doc)
      if (seen.insert(tok).second) ++df[tok];
  }
  if (df.empty()) throw EmptyDataError("no tokens survive filtering; vocabulary is empty");
  std::vector<std::pair<std::string, std::size_t>> ranked(df.begin(), df.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  if (ranked.size() > cap) ranked.resize(cap);
  std::vector<std::string> terms;
  terms.reserve(ranked.size());
  for (auto& [term, count] : ranked) terms.push_back(std::move(term));
  return Vocabulary(std::move(terms));
}

struct TermDocumentMatrix {
  DenseMatrix matrix;  // n x t
  std::vector<std::string> doc_ids;
  Vocabulary vocabulary;
  std::size_t zero_rows = 0;  // documents with no in-vocabulary token
};

inline TermDocumentMatrix tfidf_encode(std::span<const TokenList> docs, const Vocabulary& vocab,
                                       std::vector<std::string> doc_ids = {}) {
  if (vocab.size() == 0) throw EmptyDataError("tfidf_encode: empty vocabulary");
  const std::size_t n = docs.size();
  const std::size_t t = vocab.size();
  if (doc_ids.empty()) {
    doc_ids.reserve(n);
    for (std::size_t i = 0; i < n; ++i) doc_ids.push_back(std::to_string(i));
  }
  if (doc_ids.size() != n) throw DimensionError("tfidf_encode: doc_ids length mismatch");

  DenseMatrix counts(n, t);
  std::vector<std::size_t> df(t, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& tok : docs[i]) {
      const auto j = vocab.find(tok);
      if (j == t) continue;
      if (counts(i, j) == 0.0) ++df[j];
      counts(i, j) += 1.0;
    }
  }
  std::vector<double> idf(t);
  for (std::size_t j = 0; j < t; ++j) {
    idf[j] = std::log((1.0 + static_cast<double>(n)) / (1.0 + static_cast<double>(df[j]))) + 1.0;
  }
  std::size_t zero_rows = 0;
  for (std::size_t i = 0; i < n; ++i) {
    auto row = counts.row(i);
    bool any = false;
    for (std::size_t j = 0; j < t; ++j) {
      row[j] *= idf[j];
      any = any || row[j] != 0.0;
    }
    zero_rows += !any;
  }
  return {l2_normalize_rows(counts), std::move(doc_ids), vocab, zero_rows};
}

/// Parses a JSON-lines corpus: one {"id", "text", "labels"} object per line.
/// Blank lines are skipped. Errors name the 1-based line number.
inline std::vector<RawDocument> read_corpus_jsonl(std::istream& is) {
  std::vector<RawDocument> docs;
  std::unordered_set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto where = "line " + std::to_string(line_no) + ": ";
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(where + "invalid JSON (" + e.what() + ")");
    }
    if (!obj.is_object()) throw ParseError(where + "expected a JSON object");
    RawDocument doc;
    for (const char* key : {"id", "text"}) {
      auto it = obj.find(key);
      if (it == obj.end() || !it->is_string()) {
        throw ParseError(where + "missing or non-string field \"" + key + "\"");
      }
    }
    doc.id = obj["id"].get<std::string>();
    doc.text = obj["text"].get<std::string>();
    auto labels = obj.find("labels");
    if (labels == obj.end() || !labels->is_array()) {
      throw ParseError(where + "missing or non-array field \"labels\"");
    }
    for (const auto& l : *labels) {
      if (!l.is_string()) throw ParseError(where + "labels must be strings");
      doc.labels.push_back(l.get<std::string>());
    }
    if (!ids.insert(doc.id).second) throw ParseError(where + "duplicate id \"" + doc.id + "\"");
    docs.push_back(std::move(doc));
  }
  return docs;
}

struct IngestOptions {
  std::size_t vocab_cap = 2000;
  std::size_t min_chars = 250;
  TokenizerOptions tokenizer;
};

struct FilterStats {
  std::size_t input_docs = 0;
  std::size_t kept_docs = 0;
  std::size_t dropped_short = 0;
  std::size_t zero_rows = 0;
};

struct IngestResult {
  TermDocumentMatrix tdm;
  LabelTable labels;
  FilterStats stats;
};

/// Full pipeline. Throws EmptyDataError when no document survives the
/// length filter or no token survives tokenization.
inline IngestResult ingest(std::vector<RawDocument> corpus, const IngestOptions& opts = {}) {
  FilterStats stats;
  stats.input_docs = corpus.size();
  corpus = filter_documents(std::move(corpus), opts.min_chars);
  stats.kept_docs = corpus.size();
  stats.dropped_short = stats.input_docs - stats.kept_docs;
  if (corpus.empty()) throw EmptyDataError("no documents left after the length filter");

  std::vector<TokenList> tokens;
  std::vector<std::string> ids;
  std::vector<std::vector<std::string>> labels;
  tokens.reserve(corpus.size());
  for (auto& doc : corpus) {
    tokens.push_back(tokenize(doc.text, opts.tokenizer));
    ids.push_back(std::move(doc.id));
    labels.push_back(std::move(doc.labels));
  }
  auto vocab = build_vocabulary(tokens, opts.vocab_cap);
  auto tdm = tfidf_encode(tokens, vocab, std::move(ids));
  stats.zero_rows = tdm.zero_rows;
  return {std::move(tdm), build_label_table(labels), stats};
}

}  // namespace tsnmf
