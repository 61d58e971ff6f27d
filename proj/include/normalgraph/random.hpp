#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "normalgraph/messages.hpp"

namespace normalgraph {

/// Seed for the named substream `stream` of a run seeded with `seed`.
/// splitmix64 over seed ^ FNV-1a(stream).
std::uint64_t substream_seed(std::uint64_t seed, std::string_view stream);

/// mt19937_64 with a portable double conversion, so draws are identical
/// across standard libraries.
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::string_view stream) : engine_(substream_seed(seed, stream)) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Inverse-CDF draw from the (not necessarily normalized) weights.
  std::size_t categorical(const Vector& weights);

 private:
  std::mt19937_64 engine_;
};

}  // namespace normalgraph
