#pragma once

// Exact sum-product message passing on cycle-free normal graphs.

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "normalgraph/block_data.hpp"
#include "normalgraph/graph.hpp"

namespace normalgraph {

class InvalidEvidence : public Error {
 public:
  explicit InvalidEvidence(const std::string& what) : Error("invalid-evidence", what) {}
};

/// Per-terminal evidence: a 0-based symbol (instantiation) or a soft
/// distribution. Terminals without an entry receive a uniform backward
/// message.
class Evidence {
 public:
  using Value = std::variant<std::size_t, Distribution>;

  Evidence& hard(const std::string& variable, std::size_t symbol);
  Evidence& soft(const std::string& variable, Distribution d);

  const std::map<std::string, Value>& values() const noexcept { return values_; }
  bool empty() const noexcept { return values_.empty(); }

 private:
  std::map<std::string, Value> values_;
};

/// Forward/backward message on every variable after propagation.
class MessageState {
 public:
  MessageState(std::shared_ptr<const std::vector<std::string>> names, std::vector<MessagePair> pairs,
               std::size_t epoch = 0);

  std::size_t size() const noexcept { return pairs_.size(); }
  const std::vector<std::string>& variables() const noexcept { return *names_; }
  std::size_t index(const std::string& variable) const;
  const MessagePair& at(const std::string& variable) const { return pairs_[index(variable)]; }
  const MessagePair& at(std::size_t i) const { return pairs_.at(i); }
  std::size_t epoch() const noexcept { return epoch_; }

 private:
  std::shared_ptr<const std::vector<std::string>> names_;
  std::vector<MessagePair> pairs_;
  std::size_t epoch_;
};

/// f_Y ∝ θᵀ f_X.
Distribution siso_forward(const SisoBlock& block, const Distribution& f_in);
/// b_X ∝ θ b_Y.
Distribution siso_backward(const SisoBlock& block, const Distribution& b_out);

struct DiverterOutput {
  Distribution backward;               // b on X^(0)
  std::vector<Distribution> forwards;  // f on X^(1) .. X^(D)
};

/// Equality-node rule for one inbound replica with forward f0 and D outbound
/// replicas with backward messages `backs`.
DiverterOutput diverter_out(const Distribution& f0, std::span<const Distribution> backs);

enum class Schedule { two_pass, flooding };

struct PropagateOptions {
  Schedule schedule = Schedule::two_pass;
  /// Root of the two-pass sweep; defaults to the lowest-named variable of each
  /// connected component. Results do not depend on it.
  std::optional<std::string> root;
  /// Synchronous flooding steps; 0 means the variable count, which is at
  /// least the graph diameter.
  std::size_t flooding_steps = 0;
};

/// Graph compiled once for repeated propagation with different evidence.
class Propagator {
 public:
  /// Throws InvalidGraph if validate(g) reports violations.
  explicit Propagator(const GraphSpec& g);

  MessageState run(const Evidence& ev, const PropagateOptions& opt = {}) const;

  /// Flooding started from `initial` rather than uniform messages.
  MessageState run_from(const Evidence& ev, const MessageState& initial, std::size_t steps) const;

  /// State with evidence clamped at terminals and every other message drawn
  /// from `uniform01` and normalized.
  MessageState initial_state(const Evidence& ev, const std::function<double()>& uniform01) const;

  const std::vector<std::string>& variables() const noexcept { return *names_; }
  std::size_t variable_index(const std::string& name) const;

 private:
  struct Port {
    std::size_t var;
    bool inbound;
  };
  enum class Kind { source, siso, diverter };
  struct Node {
    Kind kind;
    std::string name;
    std::vector<Port> ports;
    Matrix theta;  // siso only
    Vector prior;  // source only
  };
  struct Ends {
    std::size_t size;
    std::size_t producer, producer_port;
    std::optional<std::size_t> consumer, consumer_port;
  };
  struct MessageId {
    std::size_t var;
    bool forward;
  };

  std::vector<Vector> evidence_vectors(const Evidence& ev) const;
  Vector compute(const MessageId& m, const std::vector<Vector>& f, const std::vector<Vector>& b,
                 const std::vector<Vector>& evidence) const;
  Vector outgoing(const Node& node, std::size_t port, const std::vector<Vector>& f, const std::vector<Vector>& b) const;
  std::vector<MessageId> two_pass_order(const std::optional<std::string>& root) const;
  MessageState pack(std::vector<Vector>& f, std::vector<Vector>& b, std::size_t epoch = 0) const;

  std::shared_ptr<const std::vector<std::string>> names_;
  std::vector<Ends> ends_;
  std::vector<Node> nodes_;
  std::vector<MessageId> default_order_;
};

/// One-shot propagation: validates, compiles and runs.
MessageState propagate(const GraphSpec& g, const Evidence& ev, const PropagateOptions& opt = {});

/// p ∝ f ⊙ b at `variable`.
Distribution posterior(const MessageState& state, const std::string& variable);

/// Σ over states and terminals of log(1ᵀ(f ⊙ b)); -infinity if any inner
/// product vanishes.
double aggregated_log_likelihood(std::span<const MessageState> states, std::span<const std::string> terminals);

/// Σ_n L[n] log(f_X[n]ᵀ θ b_Y[n]); -infinity on a zero bilinear form.
double block_log_likelihood(const Matrix& theta, const BlockDataset& data);

}  // namespace normalgraph
