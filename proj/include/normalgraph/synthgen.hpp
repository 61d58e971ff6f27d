#pragma once

// Generative use of a graph and random data factories for single-block runs.

#include <cstdint>
#include <string>
#include <vector>

#include "normalgraph/block_data.hpp"
#include "normalgraph/graph.hpp"
#include "normalgraph/learning.hpp"

namespace normalgraph {

/// Sampled symbols (0-based) for a set of variables.
struct SampleSet {
  std::vector<std::string> variables;
  std::vector<std::vector<std::size_t>> rows;
  std::uint64_t seed = 0;

  std::size_t column(const std::string& variable) const;
};

/// Ancestral sampling over every variable in topological order. Each
/// variable draws from its own substream, so adding a block leaves the other
/// variables' draws alone. A diverter with several inbound replicas picks the
/// symbol ∝ product of the inbound blocks' rows; this is exact when those
/// blocks are expanders.
SampleSet ancestral_sample_all(const GraphSpec& g, std::size_t n_samples, std::uint64_t seed);

/// ancestral_sample_all restricted to the terminals.
SampleSet ancestral_sample(const GraphSpec& g, std::size_t n_samples, std::uint64_t seed);

/// N pairs f = sharpen(normalize(u), ex), b = sharpen(normalize(u'), ey) from
/// independent uniform draws; mask all ones.
BlockDataset random_message_pairs(std::size_t mx, std::size_t my, std::size_t n, double ex, double ey,
                                  std::uint64_t seed);

/// Rows of normalized uniform draws.
Matrix random_row_stochastic(std::size_t mx, std::size_t my, std::uint64_t seed);

/// Hard evidence for every sample; the first `train_count` rows get mask 1.
TrainingData to_training_data(const SampleSet& samples, std::size_t train_count);

}  // namespace normalgraph
