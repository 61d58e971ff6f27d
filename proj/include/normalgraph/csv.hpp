#pragma once

// Dataset, results and coefficient CSV files. Lines starting with '#' are
// metadata comments; reals are printed with 17 significant digits.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "normalgraph/synthgen.hpp"

namespace normalgraph {

struct CsvTable {
  std::vector<std::string> comments;  // without the leading "# "
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

/// Splits plain comma-separated text (no quoting). Throws ParseError with
/// the origin and line number on ragged rows.
CsvTable parse_csv(const std::string& text, const std::string& origin = "<csv>");
CsvTable read_csv_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

/// Round-trippable decimal for a double ("-inf", "inf", "nan" for specials).
std::string format_real(double x);
double parse_real(const std::string& s);

/// Header = terminal names, one row of 1-based symbols per sample.
std::string format_dataset(const SampleSet& samples, const std::vector<std::string>& comments = {});
SampleSet parse_dataset(const std::string& text, const std::string& origin = "<dataset>");

struct ResultRow {
  std::string algorithm;
  std::size_t epoch = 0;
  double train_loglik = 0.0;
  std::optional<double> test_loglik;
  double wall_ms = 0.0;
};

inline const std::vector<std::string> kResultsHeader = {"algorithm", "epoch", "train_loglik", "test_loglik", "wall_ms"};

std::string format_results(const std::vector<ResultRow>& rows, const std::vector<std::string>& comments = {});
std::vector<ResultRow> parse_results(const std::string& text, const std::string& origin = "<results>");

/// Results text with comments and the wall_ms column removed; equal for
/// reruns of the same configuration and seed.
std::string results_body(const std::string& text);

struct CoefficientRow {
  std::string algorithm;
  std::size_t epoch = 0;
  std::string block;
  std::size_t row = 0;  // 1-based
  std::size_t col = 0;  // 1-based
  double value = 0.0;
};

std::string format_coefficients(const std::vector<CoefficientRow>& rows, const std::vector<std::string>& comments = {});

}  // namespace normalgraph
