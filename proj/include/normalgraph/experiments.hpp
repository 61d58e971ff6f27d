#pragma once

// Reference graphs and the batch experiment suites behind the CLI.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "normalgraph/csv.hpp"
#include "normalgraph/learning.hpp"
#include "normalgraph/synthgen.hpp"

namespace normalgraph {

/// Hidden source S with three observed children X1, X2, X3 (sizes 2, 2, 3)
/// and the fixed generating parameters of the tree benchmark.
GraphSpec tree_generative_graph();

/// Same topology with a hidden alphabet of `hidden_size` and uniform,
/// trainable parameters.
GraphSpec tree_learning_graph(std::size_t hidden_size);

/// Three sources S1 (4), S2 (2), S3 (3) feeding Y1 (3), Y2 (4) and the
/// observed X1 (3), X2 (2), X3 (3). Product spaces S1·S2 and Y2·S3 are built
/// from fixed expanders. Trainable parameters are drawn from `seed`.
GraphSpec deep_generative_graph(std::uint64_t seed);

/// deep_generative_graph topology with uniform trainable parameters.
GraphSpec deep_learning_graph();

struct ExperimentConfig {
  std::string experiment = "tree";  // single-block | tree | deep
  int variant = 1;
  /// Hidden alphabet sizes to try (tree experiment only); empty = variant default.
  std::vector<std::size_t> hidden_sizes;
  std::optional<std::size_t> samples;
  std::optional<std::size_t> epochs;
  std::optional<std::size_t> inner_iterations;
  /// Single-block sizes and sharpening exponents.
  std::size_t mx = 4;
  std::size_t my = 3;
  double ex = 1.0;
  double ey = 1.0;
  std::vector<Algorithm> algorithms = {Algorithm::ml, Algorithm::kl, Algorithm::vit, Algorithm::var};
  /// Training fraction; 1 = no test set.
  std::optional<double> split;
  std::uint64_t seed = 1;
  double delta = 1e-6;
  std::optional<double> tol;
  bool keep_snapshots = false;
};

struct AlgorithmRun {
  Algorithm algorithm;
  TrainReport report;
};

/// One trained model per algorithm on the same data.
struct ExperimentRun {
  std::string label;  // e.g. "ms4"
  GraphSpec generative;
  SampleSet data;
  std::vector<AlgorithmRun> runs;
};

/// Trains each algorithm from the uniform starting point of `learning`.
std::vector<AlgorithmRun> train_all(const GraphSpec& learning, const TrainingData& data,
                                    const std::vector<Algorithm>& algorithms, const TrainConfig& base);

/// Tree experiments: 1 (matched model), 2 (hidden size 2 and 7),
/// 3 (train/test split with hidden size 4 and 9). One run per hidden size,
/// all sharing the same sampled data.
std::vector<ExperimentRun> run_tree_experiment(const ExperimentConfig& cfg);

ExperimentRun run_deep_experiment(const ExperimentConfig& cfg);

struct SingleBlockRow {
  std::string algorithm;  // ml, kl, vit, var, ref
  std::size_t iteration = 0;
  double loglik = 0.0;
};

/// Random message pairs, ML and KL iterated from uniform rows (one row per
/// iteration), VIT and VAR once, and a random reference matrix.
std::vector<SingleBlockRow> run_single_block(std::size_t mx, std::size_t my, std::size_t n, double ex, double ey,
                                             std::size_t iterations, std::uint64_t seed, double delta = 1e-6);

std::string format_single_block(const std::vector<SingleBlockRow>& rows, const std::vector<std::string>& comments = {});

struct SweepRow {
  std::size_t inner_iterations = 0;
  std::size_t repetition = 0;
  double final_loglik = 0.0;
};

/// Final ML log-likelihood of the matched tree model for each inner
/// iteration count, repeated with different initial messages on one dataset.
std::vector<SweepRow> run_nit_sweep(const ExperimentConfig& cfg, const std::vector<std::size_t>& nits,
                                    std::size_t repetitions);

std::string format_sweep(const std::vector<SweepRow>& rows, const std::vector<std::string>& comments = {});

std::vector<ResultRow> result_rows(const std::vector<AlgorithmRun>& runs);
std::vector<CoefficientRow> coefficient_rows(const std::vector<AlgorithmRun>& runs);

/// gnuplot script plotting train (and test, if present) log-likelihood per
/// algorithm from a results CSV.
std::string gnuplot_script(const std::string& csv_path, const std::vector<Algorithm>& algorithms, bool with_test);

}  // namespace normalgraph
