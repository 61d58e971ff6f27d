#pragma once

#include <cstdint>
#include <vector>

#include "normalgraph/messages.hpp"

namespace normalgraph {

/// The M-step input of one block: per-sample forward message at its input,
/// backward message at its output, and the 0/1 learning mask.
class BlockDataset {
 public:
  BlockDataset(std::size_t input_size, std::size_t output_size);

  void add(Distribution forward, Distribution backward, bool learn = true);

  std::size_t size() const noexcept { return forward_.size(); }
  std::size_t input_size() const noexcept { return input_size_; }
  std::size_t output_size() const noexcept { return output_size_; }
  const std::vector<Distribution>& forward() const noexcept { return forward_; }
  const std::vector<Distribution>& backward() const noexcept { return backward_; }
  const std::vector<std::uint8_t>& mask() const noexcept { return mask_; }

  /// Forward messages as an N × M_X matrix (row n = f_X[n]).
  Matrix forward_matrix() const;
  /// Backward messages as an N × M_Y matrix.
  Matrix backward_matrix() const;
  Vector mask_vector() const;

 private:
  std::size_t input_size_;
  std::size_t output_size_;
  std::vector<Distribution> forward_;
  std::vector<Distribution> backward_;
  std::vector<std::uint8_t> mask_;
};

}  // namespace normalgraph
