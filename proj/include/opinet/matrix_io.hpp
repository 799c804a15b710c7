#ifndef OPINET_MATRIX_IO_HPP
#define OPINET_MATRIX_IO_HPP

// Plain-text matrix files:
//
//   # optional comments
//   3              <- header: n for a square matrix, or "rows cols"
//   0.5 0.25 0.25
//   ...
//
// Access-count files append one extra line after the rows:
//
//   components 1 1 2
//
// assigning each topic a component label.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "opinet/core_model.hpp"

namespace opinet::io {

namespace detail {

struct LineReader {
  std::istream& in;
  std::string source;
  std::size_t line_no = 0;

  // Next line that is neither blank nor a comment.
  std::optional<std::string> next() {
    std::string line;
    while (std::getline(in, line)) {
      ++line_no;
      if (auto hash = line.find('#'); hash != std::string::npos) {
        line.erase(hash);
      }
      if (line.find_first_not_of(" \t\r,") == std::string::npos) continue;
      for (auto& ch : line) {
        if (ch == ',') ch = ' ';
      }
      return line;
    }
    return std::nullopt;
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(source, line_no, msg);
  }
};

inline Matrix read_body(LineReader& r) {
  auto header = r.next();
  if (!header) r.fail("missing size header");
  std::istringstream hs(*header);
  long rows = 0;
  long cols = 0;
  if (!(hs >> rows) || rows <= 0) r.fail("bad size header '" + *header + "'");
  if (!(hs >> cols)) cols = rows;
  if (cols <= 0) r.fail("bad column count in header");
  std::string extra;
  if (hs >> extra) r.fail("unexpected token '" + extra + "' in header");

  Matrix m(rows, cols);
  for (long i = 0; i < rows; ++i) {
    auto line = r.next();
    if (!line) r.fail("expected " + std::to_string(rows) + " rows, got " +
                      std::to_string(i));
    std::istringstream ls(*line);
    for (long j = 0; j < cols; ++j) {
      std::string tok;
      if (!(ls >> tok)) {
        r.fail("row " + std::to_string(i + 1) + " has " + std::to_string(j) +
               " values, expected " + std::to_string(cols));
      }
      char* end = nullptr;
      m(i, j) = std::strtod(tok.c_str(), &end);
      if (end != tok.c_str() + tok.size()) r.fail("not a number: '" + tok + "'");
    }
    std::string tail;
    if (ls >> tail) {
      r.fail("row " + std::to_string(i + 1) + " has more than " +
             std::to_string(cols) + " values");
    }
  }
  return m;
}

}  // namespace detail

inline Matrix read_matrix(std::istream& in, const std::string& source = "<stream>") {
  detail::LineReader r{in, source};
  Matrix m = detail::read_body(r);
  if (auto extra = r.next()) r.fail("trailing content after matrix rows");
  return m;
}

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  return in;
}

inline Matrix read_matrix_file(const std::string& path) {
  auto in = open_input(path);
  return read_matrix(in, path);
}

struct RawAccessCounts {
  Matrix counts;
  std::vector<long> component_labels;
};

inline RawAccessCounts read_access_counts(std::istream& in,
                                          const std::string& source = "<stream>") {
  detail::LineReader r{in, source};
  RawAccessCounts out;
  out.counts = detail::read_body(r);
  auto line = r.next();
  if (!line) r.fail("missing 'components' line");
  std::istringstream ls(*line);
  std::string key;
  ls >> key;
  if (key != "components") r.fail("expected 'components', got '" + key + "'");
  long label = 0;
  while (ls >> label) out.component_labels.push_back(label);
  if (!ls.eof()) r.fail("bad component label");
  if (static_cast<Index>(out.component_labels.size()) != out.counts.rows()) {
    r.fail("component line has " + std::to_string(out.component_labels.size()) +
           " labels for " + std::to_string(out.counts.rows()) + " topics");
  }
  if (r.next()) r.fail("trailing content after components line");
  return out;
}

inline RawAccessCounts read_access_counts_file(const std::string& path) {
  auto in = open_input(path);
  return read_access_counts(in, path);
}

// Shortest decimal form that round-trips a double exactly.
inline std::string format_real(double v) {
  char buf[32];
  for (int prec = 12; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

inline void write_matrix(std::ostream& out, const Matrix& m) {
  if (m.rows() == m.cols()) {
    out << m.rows() << '\n';
  } else {
    out << m.rows() << ' ' << m.cols() << '\n';
  }
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j) out << ' ';
      out << format_real(m(i, j));
    }
    out << '\n';
  }
}

}  // namespace opinet::io

#endif  // OPINET_MATRIX_IO_HPP
