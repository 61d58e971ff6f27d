#pragma once

// Local M-step rules for a single SISO block and the EM loop that drives them
// across a graph.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "normalgraph/block_data.hpp"
#include "normalgraph/graph.hpp"
#include "normalgraph/propagation.hpp"

namespace normalgraph {

enum class Algorithm { ml, kl, vit, var };

std::string to_string(Algorithm a);
/// Accepts "ml", "kl", "vit", "var" (case-insensitive).
Algorithm parse_algorithm(const std::string& s);

/// Zero message entries are raised to this before the ML and KL updates so
/// that instantiated variables cannot produce 0/0.
inline constexpr double kMessageFloor = 1e-300;

/// What ml_update / kl_update do with a row that receives no forward mass.
enum class EmptyRowPolicy { keep, raise };

/// One multiplicative maximum-likelihood step followed by row normalization:
///   θ_lm ← θ_lm / (Σ_n L f(l)) · Σ_n L f(l) b(m) / (fᵀθb).
/// Rows with zero forward mass keep their previous value (or throw EmptyRow).
Matrix ml_update(const Matrix& theta, const BlockDataset& data, EmptyRowPolicy policy = EmptyRowPolicy::keep);

/// One multiplicative minimum-divergence step followed by row normalization:
///   θ_lm ← θ_lm / (Σ_n L f(l)) · Σ_n L f(l) b(m) / (Σ_i θ_im f(i)).
/// Same empty-row handling as ml_update.
Matrix kl_update(const Matrix& theta, const BlockDataset& data, EmptyRowPolicy policy = EmptyRowPolicy::keep);

/// Batch count of argmax indicators (each floored by delta), row-normalized.
/// Rows that end up all zero become uniform.
Matrix vit_update(const BlockDataset& data, double delta);

/// Batch soft count θ_lm = α_lm + δ + Σ_n L f(l) b(m), row-normalized.
/// Rows that end up all zero become uniform.
Matrix var_update(const BlockDataset& data, double delta, const std::optional<Matrix>& prior_counts = std::nullopt);

/// Generalized divergence minimized by kl_update:
///   Σ_n L [ Σ_j b(j) log(b(j) / (θᵀf)(j)) + Σ_j (θᵀf)(j) ].
double generalized_divergence(const Matrix& theta, const BlockDataset& data);

/// Σ_n L Σ_y b(y) log f_Y(y) with f_Y = normalize(θᵀ f); a lower bound on
/// block_log_likelihood for row-stochastic θ.
double jensen_lower_bound(const Matrix& theta, const BlockDataset& data);

/// KKT multipliers of the nonnegativity constraints for the sample-averaged
/// ML cost, with the row-sum multiplier eliminated through complementary
/// slackness: λ_lm = Σ_k θ_lk G_lk − G_lm where
/// G_lm = (1/Σ_n L) Σ_n L f(l) b(m) / (fᵀθb).
/// At a stationary point λ ≥ 0 and λ ⊙ θ = 0.
Matrix kkt_multipliers(const Matrix& theta, const BlockDataset& data);

struct TrainConfig {
  Algorithm algorithm = Algorithm::ml;
  std::size_t epochs = 60;
  /// ML/KL iterations per M-step.
  std::size_t inner_iterations = 3;
  /// VIT/VAR floor.
  double delta = 1e-6;
  /// VAR prior counts keyed by block (or source) name.
  std::map<std::string, Matrix> prior_counts;
  std::uint64_t seed = 1;
  /// Stop early once |Δℓ| between epochs drops below this.
  std::optional<double> tol;
  Schedule schedule = Schedule::two_pass;
  /// Start every trainable block and prior from uniform rows.
  bool reset_trainable = true;
  bool keep_snapshots = false;
};

/// ML/KL: inner_iterations updates from block.theta. VIT/VAR: one batch
/// computation that ignores block.theta.
Matrix train_block(const SisoBlock& block, const BlockDataset& data, const TrainConfig& cfg);

/// Terminal evidence per sample plus the learning mask. Samples with mask 0
/// are propagated but excluded from M-steps; they form the test set.
struct TrainingData {
  std::vector<std::string> terminals;
  std::vector<Evidence> samples;
  std::vector<std::uint8_t> mask;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loglik = 0.0;
  /// Present when the mask leaves at least one test sample.
  std::optional<double> test_loglik;
  double wall_ms = 0.0;
  /// Samples whose evidence became contradictory under the current θ.
  std::size_t skipped_samples = 0;
};

struct TrainReport {
  std::vector<EpochRecord> epochs;
  /// θ of every trainable block (priors as 1-row matrices) after each epoch,
  /// when TrainConfig::keep_snapshots is set.
  std::vector<std::map<std::string, Matrix>> snapshots;
  GraphSpec learned;
};

/// EM over the whole graph. Messages start as independent uniform draws
/// (evidence clamped at terminals); each epoch runs an M-step on every
/// trainable block from the current message snapshot, then an E-step, then
/// records the aggregated log-likelihood at the data terminals.
TrainReport em_train(const GraphSpec& g, const TrainingData& data, const TrainConfig& cfg);

/// Harvests one block's (f_X, b_Y) pairs from per-sample message states.
/// Samples flagged in `skip` are left out.
BlockDataset harvest(const MessageState* states, std::size_t n, const std::string& input, const std::string& output,
                     const std::vector<std::uint8_t>& mask, const std::vector<std::uint8_t>& skip = {});

}  // namespace normalgraph
