#include "normalgraph/csv.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace normalgraph {

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string join(const std::vector<std::string>& cells) {
  std::string s;
  for (std::size_t i = 0; i < cells.size(); ++i) s += (i ? "," : "") + cells[i];
  return s;
}

std::string comment_block(const std::vector<std::string>& comments) {
  std::string s;
  for (const auto& c : comments) s += "# " + c + "\n";
  return s;
}

}  // namespace

CsvTable parse_csv(const std::string& text, const std::string& origin) {
  CsvTable t;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      t.comments.push_back(line.size() > 2 && line[1] == ' ' ? line.substr(2) : line.substr(1));
      continue;
    }
    auto cells = split(line);
    if (!have_header) {
      t.header = std::move(cells);
      have_header = true;
      continue;
    }
    if (cells.size() != t.header.size())
      throw ParseError(origin + ":" + std::to_string(lineno) + ": expected " + std::to_string(t.header.size()) +
                       " fields, found " + std::to_string(cells.size()));
    t.rows.push_back(std::move(cells));
  }
  if (!have_header) throw ParseError(origin + ": missing header line");
  return t;
}

CsvTable read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_csv(ss.str(), path);
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << text;
  if (!out) throw IoError("failed writing '" + path + "'");
}

std::string format_real(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x < 0 ? "-inf" : "inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

double parse_real(const std::string& s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double x = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw ParseError("not a number: '" + s + "'");
  return x;
}

namespace {

std::size_t parse_count(const std::string& s, const std::string& where) {
  std::size_t x = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw ParseError(where + ": not a non-negative integer: '" + s + "'");
  return x;
}

}  // namespace

std::string format_dataset(const SampleSet& samples, const std::vector<std::string>& comments) {
  std::string s = comment_block(comments) + join(samples.variables) + "\n";
  for (const auto& row : samples.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) s += (c ? "," : "") + std::to_string(row[c] + 1);
    s += "\n";
  }
  return s;
}

SampleSet parse_dataset(const std::string& text, const std::string& origin) {
  CsvTable t = parse_csv(text, origin);
  SampleSet out;
  out.variables = t.header;
  for (const auto& c : t.comments)
    if (c.rfind("seed=", 0) == 0) out.seed = parse_count(c.substr(5), origin + ": seed comment");
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    std::vector<std::size_t> row;
    for (std::size_t c = 0; c < t.rows[r].size(); ++c) {
      const std::string where = origin + ": row " + std::to_string(r + 1) + ", column '" + t.header[c] + "'";
      const std::size_t symbol = parse_count(t.rows[r][c], where);
      if (symbol == 0) throw ParseError(where + ": symbols are 1-based");
      row.push_back(symbol - 1);
    }
    out.rows.push_back(std::move(row));
  }
  return out;
}

std::string format_results(const std::vector<ResultRow>& rows, const std::vector<std::string>& comments) {
  std::string s = comment_block(comments) + join(kResultsHeader) + "\n";
  for (const auto& r : rows)
    s += join({r.algorithm, std::to_string(r.epoch), format_real(r.train_loglik),
               r.test_loglik ? format_real(*r.test_loglik) : "", format_real(r.wall_ms)}) +
         "\n";
  return s;
}

std::vector<ResultRow> parse_results(const std::string& text, const std::string& origin) {
  CsvTable t = parse_csv(text, origin);
  if (t.header != kResultsHeader) throw ParseError(origin + ": unexpected results header '" + join(t.header) + "'");
  std::vector<ResultRow> out;
  for (const auto& cells : t.rows) {
    ResultRow r;
    r.algorithm = cells[0];
    r.epoch = parse_count(cells[1], origin);
    r.train_loglik = parse_real(cells[2]);
    if (!cells[3].empty()) r.test_loglik = parse_real(cells[3]);
    r.wall_ms = parse_real(cells[4]);
    out.push_back(std::move(r));
  }
  return out;
}

std::string results_body(const std::string& text) {
  std::istringstream in(text);
  std::string line, out;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    auto cells = split(line);
    if (!cells.empty()) cells.pop_back();
    out += join(cells) + "\n";
  }
  return out;
}

std::string format_coefficients(const std::vector<CoefficientRow>& rows, const std::vector<std::string>& comments) {
  std::string s = comment_block(comments) + "algorithm,epoch,block,row,col,value\n";
  for (const auto& r : rows)
    s += join({r.algorithm, std::to_string(r.epoch), r.block, std::to_string(r.row), std::to_string(r.col),
               format_real(r.value)}) +
         "\n";
  return s;
}

}  // namespace normalgraph
