#pragma once

// Topology of a normal-form factor graph: variables live on directed edges,
// nodes are sources (priors), SISO blocks (conditional matrices) and
// diverters (equality constraints). Value-semantic; nothing here propagates.

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "normalgraph/messages.hpp"

namespace normalgraph {

/// Row-stochastic conditional matrix P(Y|X); row i is the distribution of Y
/// given X = x^i.
struct SisoBlock {
  std::string name;
  Matrix theta;
  bool trainable = true;

  Alphabet input_alphabet() const { return Alphabet(static_cast<std::size_t>(theta.rows())); }
  Alphabet output_alphabet() const { return Alphabet(static_cast<std::size_t>(theta.cols())); }
};

/// Uniform-rows M_X × M_Y matrix.
Matrix uniform_rows(std::size_t rows, std::size_t cols);

/// True if every entry is in [0,1] and every row sums to one within
/// kNormTolerance.
bool is_row_stochastic(const Matrix& m);

struct SourceBlock {
  std::string name;
  Distribution prior;
  bool trainable = true;
};

struct Variable {
  std::string name;
  std::size_t size = 0;
};

struct SourceNode {
  SourceBlock source;
  std::string output;
};

struct BlockNode {
  SisoBlock block;
  std::string input;
  std::string output;
};

/// Equality constraint. `inputs[0]` is the inbound replica X^(0); any further
/// inputs are extra inbound replicas joining on the same variable (used where
/// expanders meet in a product space). `outputs` are the outbound replicas.
struct DiverterNode {
  std::string name;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
};

struct GraphSpec {
  std::vector<Variable> variables;
  std::vector<SourceNode> sources;
  std::vector<BlockNode> blocks;
  std::vector<DiverterNode> diverters;

  const Variable* find_variable(const std::string& name) const;
  SisoBlock* find_block(const std::string& name);
  const SisoBlock* find_block(const std::string& name) const;
  SourceBlock* find_source(const std::string& name);

  /// Variables consumed by no node; evidence may be injected there.
  std::vector<std::string> terminals() const;
};

/// P(X_j | X_1 ... X_D): the (ΠM_i) × M_j 0/1 matrix 1 ⊗ ... ⊗ I_{M_j} ⊗ ... ⊗ 1.
/// Product-space index is row-major over (X_1, ..., X_D). `j` is 1-based.
SisoBlock build_projector(const std::vector<std::size_t>& sizes, std::size_t j);

/// P((X_1 ... X_D)^(j) | X_j) = (M_j / ΠM_i) · projectorᵀ. `j` is 1-based.
SisoBlock build_expander(const std::vector<std::size_t>& sizes, std::size_t j);

enum class ViolationKind {
  cycle,
  alphabet_mismatch,
  dangling_edge,
  duplicate_name,
  unknown_variable,
  multiple_producers,
  multiple_consumers,
  parallel_edges,
  invalid_matrix,
  malformed_node,
};

struct Violation {
  ViolationKind kind;
  std::string message;
};

/// Structural check. Empty result means the graph is a valid cycle-free
/// normal graph.
std::vector<Violation> validate(const GraphSpec& g);

/// Throws InvalidGraph listing every violation.
void require_valid(const GraphSpec& g);

/// Inserts a three-port diverter on `variable`: the producer keeps writing
/// `variable`, the former consumer now reads `<variable>.2`, and the new
/// terminal replica is `tap` (default `<variable>.1`).
GraphSpec split_variable(const GraphSpec& g, const std::string& variable,
                         const std::optional<std::string>& tap = std::nullopt);

}  // namespace normalgraph
