#pragma once

#include <stdexcept>
#include <string>

namespace normalgraph {

// Base for every error raised by the library. `category()` is a short
// machine-friendly tag printed by the CLI on failure.
class Error : public std::runtime_error {
 public:
  Error(std::string category, const std::string& what)
      : std::runtime_error(what), category_(std::move(category)) {}
  const std::string& category() const noexcept { return category_; }

 private:
  std::string category_;
};

class AllZeroVector : public Error {
 public:
  explicit AllZeroVector(const std::string& what) : Error("all-zero-vector", what) {}
};

class SupportMismatch : public Error {
 public:
  explicit SupportMismatch(const std::string& what) : Error("support-mismatch", what) {}
};

class AlphabetMismatch : public Error {
 public:
  explicit AlphabetMismatch(const std::string& what) : Error("alphabet-mismatch", what) {}
};

class InvalidIndex : public Error {
 public:
  explicit InvalidIndex(const std::string& what) : Error("invalid-index", what) {}
};

class UnknownVariable : public Error {
 public:
  explicit UnknownVariable(const std::string& what) : Error("unknown-variable", what) {}
};

class InvalidGraph : public Error {
 public:
  explicit InvalidGraph(const std::string& what) : Error("invalid-graph", what) {}
};

class ContradictoryEvidence : public Error {
 public:
  ContradictoryEvidence(const std::string& what, std::string variable, long sample = -1)
      : Error("contradictory-evidence", what), variable_(std::move(variable)), sample_(sample) {}
  const std::string& variable() const noexcept { return variable_; }
  // -1 when not raised from a multi-sample routine.
  long sample() const noexcept { return sample_; }

 private:
  std::string variable_;
  long sample_;
};

class EmptyRow : public Error {
 public:
  EmptyRow(const std::string& what, std::size_t row) : Error("empty-row", what), row_(row) {}
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

class ParseError : public Error {
 public:
  explicit ParseError(const std::string& what) : Error("parse-error", what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error("io-error", what) {}
};

}  // namespace normalgraph
