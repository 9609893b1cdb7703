#pragma once

// Matrix CSV format:
//
//   rows,cols
//   a00,a01,...
//   a10,a11,...
//
// Values are written in shortest round-trip form, so write -> read is
// lossless and output bytes are a function of the values only.

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "rnmf/matrix.hpp"

namespace rnmf {

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

inline double parse_double(std::string_view tok, const std::string& where) {
  tok = trim(tok);
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size() || tok.empty()) {
    throw FormatError(where + ": bad number '" + std::string(tok) + "'");
  }
  if (!std::isfinite(v)) throw FormatError(where + ": non-finite value");
  return v;
}

inline std::size_t parse_count(std::string_view tok, const std::string& where) {
  tok = trim(tok);
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size() || tok.empty()) {
    throw FormatError(where + ": bad count '" + std::string(tok) + "'");
  }
  return v;
}

}  // namespace detail

inline std::string format_double(double x) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  (void)ec;
  return std::string(buf, ptr);
}

inline DenseMatrix parse_csv(std::string_view text) {
  std::vector<std::string_view> lines;
  for (auto line : detail::split(text, '\n')) {
    line = detail::trim(line);
    if (!line.empty()) lines.push_back(line);
  }
  if (lines.empty()) throw FormatError("csv: empty input");
  const auto header = detail::split(lines[0], ',');
  if (header.size() != 2) throw FormatError("csv: header must be 'rows,cols'");
  const std::size_t rows = detail::parse_count(header[0], "csv header");
  const std::size_t cols = detail::parse_count(header[1], "csv header");
  if (rows == 0 || cols == 0) throw FormatError("csv: zero dimension");
  if (lines.size() - 1 != rows) {
    throw FormatError("csv: expected " + std::to_string(rows) + " rows, got " +
                      std::to_string(lines.size() - 1));
  }
  std::vector<double> data;
  data.reserve(rows * cols);
  for (std::size_t i = 0; i < rows; ++i) {
    const auto toks = detail::split(lines[i + 1], ',');
    if (toks.size() != cols) {
      throw FormatError("csv: ragged row " + std::to_string(i + 1) + " has " +
                        std::to_string(toks.size()) + " values, expected " +
                        std::to_string(cols));
    }
    for (const auto tok : toks) {
      data.push_back(detail::parse_double(tok, "csv row " + std::to_string(i + 1)));
    }
  }
  return DenseMatrix(rows, cols, std::move(data));
}

inline std::string format_csv(const DenseMatrix& m) {
  std::string out = std::to_string(m.rows()) + "," + std::to_string(m.cols()) + "\n";
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (j) out += ',';
      out += format_double(m(i, j));
    }
    out += '\n';
  }
  return out;
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write '" + path + "'");
  out << text;
  if (!out) throw FormatError("write failed for '" + path + "'");
}

inline DenseMatrix read_csv(const std::string& path) {
  return parse_csv(read_text_file(path));
}

inline void write_csv(const std::string& path, const DenseMatrix& m) {
  write_text_file(path, format_csv(m));
}

}  // namespace rnmf
