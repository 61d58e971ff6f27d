#pragma once

// Discrete distributions over finite alphabets and the elementwise algebra
// shared by propagation and learning. Everything here is 64-bit.

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "normalgraph/errors.hpp"

namespace normalgraph {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Tolerance on the sum of a normalized distribution.
inline constexpr double kNormTolerance = 1e-12;

/// Finite alphabet {x^1, ..., x^M}; symbols are addressed 0..M-1 in code and
/// 1..M in files.
class Alphabet {
 public:
  explicit Alphabet(std::size_t size);
  std::size_t size() const noexcept { return size_; }
  friend bool operator==(Alphabet, Alphabet) = default;

 private:
  std::size_t size_;
};

/// Normalized nonnegative vector over an alphabet. Only constructible through
/// the factories below, so every instance satisfies the invariants.
class Distribution {
 public:
  static Distribution uniform(std::size_t size);
  static Distribution delta(std::size_t size, std::size_t symbol);

  std::size_t size() const noexcept { return static_cast<std::size_t>(values_.size()); }
  Alphabet alphabet() const { return Alphabet(size()); }
  double operator[](std::size_t i) const { return values_[static_cast<Eigen::Index>(i)]; }
  const Vector& values() const noexcept { return values_; }
  std::vector<double> to_vector() const { return {values_.begin(), values_.end()}; }

  /// Index of the largest entry; ties go to the lowest index.
  std::size_t argmax() const;

  friend bool operator==(const Distribution& a, const Distribution& b) {
    return a.values_.size() == b.values_.size() && a.values_ == b.values_;
  }

 private:
  friend Distribution normalize(const Vector& v);
  explicit Distribution(Vector v) : values_(std::move(v)) {}
  Vector values_;
};

/// Forward and backward message on one variable edge.
struct MessagePair {
  Distribution forward;
  Distribution backward;
};

/// Scales v to sum to one. Throws AllZeroVector when every entry is zero and
/// std::invalid_argument on negative or non-finite entries or an empty vector.
/// Inputs already summing to one within rounding are returned bit-unchanged,
/// which makes normalize idempotent.
Distribution normalize(const Vector& v);
Distribution normalize(std::span<const double> v);
Distribution normalize(std::initializer_list<double> v);

/// p ∝ f ⊙ b.
Distribution hadamard_posterior(const Distribution& f, const Distribution& b);

/// u.^exponent renormalized. Computed on u / max(u) so large exponents do not
/// underflow the leading entry.
Distribution sharpen(const Distribution& u, double exponent);

/// Indicator of the argmax (lowest index on ties) plus delta on every entry.
/// Deliberately not normalized.
Vector max_indicator(const Distribution& p, double delta);

/// KL(p || q) with 0 log 0 = 0. Throws SupportMismatch if p > 0 where q = 0.
double kl_divergence(const Distribution& p, const Distribution& q);

}  // namespace normalgraph
