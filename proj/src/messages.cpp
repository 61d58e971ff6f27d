#include "normalgraph/messages.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace normalgraph {

Alphabet::Alphabet(std::size_t size) : size_(size) {
  if (size == 0) throw std::invalid_argument("alphabet size must be at least 1");
}

Distribution Distribution::uniform(std::size_t size) {
  Alphabet a(size);
  return Distribution(Vector::Constant(static_cast<Eigen::Index>(a.size()), 1.0 / static_cast<double>(size)));
}

Distribution Distribution::delta(std::size_t size, std::size_t symbol) {
  Alphabet a(size);
  if (symbol >= a.size())
    throw InvalidIndex("symbol " + std::to_string(symbol) + " outside alphabet of size " + std::to_string(size));
  Vector v = Vector::Zero(static_cast<Eigen::Index>(size));
  v[static_cast<Eigen::Index>(symbol)] = 1.0;
  return Distribution(std::move(v));
}

std::size_t Distribution::argmax() const {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < values_.size(); ++i)
    if (values_[i] > values_[best]) best = i;
  return static_cast<std::size_t>(best);
}

Distribution normalize(const Vector& v) {
  if (v.size() == 0) throw std::invalid_argument("cannot normalize an empty vector");
  for (double x : v)
    if (!(x >= 0.0) || !std::isfinite(x))
      throw std::invalid_argument("distribution entries must be finite and nonnegative");
  const double s = v.sum();
  if (s == 0.0) throw AllZeroVector("cannot normalize an all-zero vector");
  // Rounding bound for summing n terms that were divided by their total.
  const double already = 2.0 * static_cast<double>(v.size()) * std::numeric_limits<double>::epsilon();
  if (std::abs(s - 1.0) <= already) return Distribution(v);
  return Distribution(v / s);
}

Distribution normalize(std::span<const double> v) {
  return normalize(Vector(Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()))));
}

Distribution normalize(std::initializer_list<double> v) {
  return normalize(std::span<const double>(v.begin(), v.size()));
}

Distribution hadamard_posterior(const Distribution& f, const Distribution& b) {
  if (f.size() != b.size())
    throw AlphabetMismatch("posterior of messages over alphabets of size " + std::to_string(f.size()) + " and " +
                           std::to_string(b.size()));
  return normalize(Vector(f.values().cwiseProduct(b.values())));
}

Distribution sharpen(const Distribution& u, double exponent) {
  if (!(exponent > 0.0)) throw std::invalid_argument("sharpening exponent must be positive");
  if (exponent == 1.0) return u;
  const double top = u.values().maxCoeff();
  Vector out = (u.values() / top).array().pow(exponent).matrix();
  return normalize(out);
}

Vector max_indicator(const Distribution& p, double delta) {
  if (!(delta > 0.0)) throw std::invalid_argument("max_indicator delta must be positive");
  Vector out = Vector::Constant(static_cast<Eigen::Index>(p.size()), delta);
  out[static_cast<Eigen::Index>(p.argmax())] += 1.0;
  return out;
}

double kl_divergence(const Distribution& p, const Distribution& q) {
  if (p.size() != q.size()) throw AlphabetMismatch("KL divergence between different alphabets");
  double d = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j) {
    if (p[j] == 0.0) continue;
    if (q[j] == 0.0)
      throw SupportMismatch("q vanishes at symbol " + std::to_string(j + 1) + " where p is positive");
    d += p[j] * std::log(p[j] / q[j]);
  }
  // Rounding can leave tiny negatives for p == q.
  return d < 0.0 ? 0.0 : d;
}

}  // namespace normalgraph
