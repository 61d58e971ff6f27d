#include "normalgraph/block_data.hpp"

#include <string>

namespace normalgraph {

BlockDataset::BlockDataset(std::size_t input_size, std::size_t output_size)
    : input_size_(Alphabet(input_size).size()), output_size_(Alphabet(output_size).size()) {}

void BlockDataset::add(Distribution forward, Distribution backward, bool learn) {
  if (forward.size() != input_size_ || backward.size() != output_size_)
    throw AlphabetMismatch("message pair of sizes (" + std::to_string(forward.size()) + ", " +
                           std::to_string(backward.size()) + ") for a " + std::to_string(input_size_) + "x" +
                           std::to_string(output_size_) + " block");
  forward_.push_back(std::move(forward));
  backward_.push_back(std::move(backward));
  mask_.push_back(learn ? 1 : 0);
}

Matrix BlockDataset::forward_matrix() const {
  Matrix m(static_cast<Eigen::Index>(size()), static_cast<Eigen::Index>(input_size_));
  for (std::size_t n = 0; n < size(); ++n) m.row(static_cast<Eigen::Index>(n)) = forward_[n].values().transpose();
  return m;
}

Matrix BlockDataset::backward_matrix() const {
  Matrix m(static_cast<Eigen::Index>(size()), static_cast<Eigen::Index>(output_size_));
  for (std::size_t n = 0; n < size(); ++n) m.row(static_cast<Eigen::Index>(n)) = backward_[n].values().transpose();
  return m;
}

Vector BlockDataset::mask_vector() const {
  Vector v(static_cast<Eigen::Index>(size()));
  for (std::size_t n = 0; n < size(); ++n) v[static_cast<Eigen::Index>(n)] = mask_[n];
  return v;
}

}  // namespace normalgraph
