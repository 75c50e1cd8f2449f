#pragma once

// Text formats for matrices.
//
//   sparse: header line "rows cols nnz", then one "row col value" line per
//           entry, 0-based indices, entries in (row, col) order.
//   dense:  CSV, one matrix row per line, comma separated, no header.
//
// Doubles are written in shortest round-trip form, so write -> read is exact
// and identical matrices always produce identical bytes.

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>

#include "tsnmf/errors.hpp"
#include "tsnmf/matrix.hpp"

namespace tsnmf {

inline std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) throw std::runtime_error("format_double: to_chars failed");
  return {buf, ptr};
}

namespace detail {

inline double parse_double(std::string_view s, std::size_t line) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) {
    throw ParseError("line " + std::to_string(line) + ": bad number '" + std::string(s) + "'");
  }
  return v;
}

}  // namespace detail

inline void write_sparse(std::ostream& os, const SparseMatrix& m) {
  os << m.rows() << ' ' << m.cols() << ' ' << m.nnz() << '\n';
  for (const auto& e : m.entries()) {
    os << e.row << ' ' << e.col << ' ' << format_double(e.value) << '\n';
  }
}

inline SparseMatrix read_sparse(std::istream& is) {
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(is, line)) throw ParseError("sparse matrix: missing header line");
  std::istringstream header(line);
  std::size_t rows = 0, cols = 0, nnz = 0;
  if (!(header >> rows >> cols >> nnz)) {
    throw ParseError("sparse matrix: header must be 'rows cols nnz'");
  }
  std::vector<SparseEntry> entries;
  entries.reserve(nnz);
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    std::istringstream ls(line);
    std::size_t r = 0, c = 0;
    std::string value;
    if (!(ls >> r >> c >> value)) {
      throw ParseError("sparse matrix line " + std::to_string(line_no) + ": expected 'row col value'");
    }
    entries.push_back({r, c, detail::parse_double(value, line_no)});
  }
  if (entries.size() != nnz) {
    throw ParseError("sparse matrix: header declares " + std::to_string(nnz) + " entries, found " +
                     std::to_string(entries.size()));
  }
  try {
    return {rows, cols, std::move(entries)};
  } catch (const std::invalid_argument& e) {
    throw ParseError(std::string("sparse matrix: ") + e.what());
  }
}

inline void write_csv(std::ostream& os, const DenseMatrix& m) {
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) {
      if (c) os << ',';
      os << format_double(m(r, c));
    }
    os << '\n';
  }
}

inline DenseMatrix read_csv(std::istream& is) {
  std::vector<double> data;
  std::size_t rows = 0, cols = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    std::size_t n = 0;
    std::string_view rest(line);
    while (true) {
      const auto comma = rest.find(',');
      data.push_back(detail::parse_double(rest.substr(0, comma), line_no));
      ++n;
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (rows == 0) cols = n;
    else if (n != cols) {
      throw ParseError("csv line " + std::to_string(line_no) + ": expected " +
                       std::to_string(cols) + " fields, found " + std::to_string(n));
    }
    ++rows;
  }
  return {rows, cols, std::move(data)};
}

template <class Writer>
void write_file(const std::string& path, Writer&& writer) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  writer(os);
  if (!os) throw std::runtime_error("write failed: " + path);
}

inline std::ifstream open_input(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ParseError("cannot open " + path);
  return is;
}

inline SparseMatrix load_sparse(const std::string& path) {
  auto is = open_input(path);
  return read_sparse(is);
}

inline DenseMatrix load_csv(const std::string& path) {
  auto is = open_input(path);
  return read_csv(is);
}

inline void save_sparse(const std::string& path, const SparseMatrix& m) {
  write_file(path, [&](std::ostream& os) { write_sparse(os, m); });
}

inline void save_csv(const std::string& path, const DenseMatrix& m) {
  write_file(path, [&](std::ostream& os) { write_csv(os, m); });
}

}  // namespace tsnmf
