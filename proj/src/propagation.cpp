#include "normalgraph/propagation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace normalgraph {

Evidence& Evidence::hard(const std::string& variable, std::size_t symbol) {
  values_.insert_or_assign(variable, Value{symbol});
  return *this;
}

Evidence& Evidence::soft(const std::string& variable, Distribution d) {
  values_.insert_or_assign(variable, Value{std::move(d)});
  return *this;
}

MessageState::MessageState(std::shared_ptr<const std::vector<std::string>> names, std::vector<MessagePair> pairs,
                           std::size_t epoch)
    : names_(std::move(names)), pairs_(std::move(pairs)), epoch_(epoch) {}

std::size_t MessageState::index(const std::string& variable) const {
  auto it = std::find(names_->begin(), names_->end(), variable);
  if (it == names_->end()) throw UnknownVariable("no messages for variable '" + variable + "'");
  return static_cast<std::size_t>(it - names_->begin());
}

Distribution siso_forward(const SisoBlock& block, const Distribution& f_in) {
  if (static_cast<Eigen::Index>(f_in.size()) != block.theta.rows())
    throw AlphabetMismatch("forward message of size " + std::to_string(f_in.size()) + " into block '" + block.name + "'");
  return normalize(Vector(block.theta.transpose() * f_in.values()));
}

Distribution siso_backward(const SisoBlock& block, const Distribution& b_out) {
  if (static_cast<Eigen::Index>(b_out.size()) != block.theta.cols())
    throw AlphabetMismatch("backward message of size " + std::to_string(b_out.size()) + " into block '" + block.name +
                           "'");
  return normalize(Vector(block.theta * b_out.values()));
}

DiverterOutput diverter_out(const Distribution& f0, std::span<const Distribution> backs) {
  if (backs.empty()) throw std::invalid_argument("diverter needs at least one outbound replica");
  for (const auto& b : backs)
    if (b.size() != f0.size()) throw AlphabetMismatch("diverter replicas over different alphabets");

  const auto n = static_cast<Eigen::Index>(f0.size());
  Vector all = Vector::Ones(n);
  for (const auto& b : backs) all = all.cwiseProduct(b.values());

  auto checked = [](const Vector& v, const std::string& replica) {
    try {
      return normalize(v);
    } catch (const AllZeroVector&) {
      throw AllZeroVector("contradictory messages at diverter replica " + replica);
    }
  };
  Distribution b0 = checked(all, "X(0)");
  std::vector<Distribution> fwds;
  fwds.reserve(backs.size());
  for (std::size_t m = 0; m < backs.size(); ++m) {
    Vector v = f0.values();
    for (std::size_t j = 0; j < backs.size(); ++j)
      if (j != m) v = v.cwiseProduct(backs[j].values());
    fwds.push_back(checked(v, "X(" + std::to_string(m + 1) + ")"));
  }
  return {std::move(b0), std::move(fwds)};
}

Propagator::Propagator(const GraphSpec& g) {
  require_valid(g);
  auto names = std::make_shared<std::vector<std::string>>();
  std::map<std::string, std::size_t> index;
  for (const auto& v : g.variables) {
    index[v.name] = names->size();
    names->push_back(v.name);
  }
  ends_.resize(names->size());
  for (std::size_t i = 0; i < g.variables.size(); ++i) ends_[i].size = g.variables[i].size;

  auto attach = [&](Node& node, const std::string& var, bool inbound) {
    const std::size_t v = index.at(var);
    const std::size_t port = node.ports.size();
    node.ports.push_back({v, inbound});
    const std::size_t id = nodes_.size();
    if (inbound) {
      ends_[v].consumer = id;
      ends_[v].consumer_port = port;
    } else {
      ends_[v].producer = id;
      ends_[v].producer_port = port;
    }
  };
  for (const auto& s : g.sources) {
    Node n{Kind::source, s.source.name, {}, {}, s.source.prior.values()};
    attach(n, s.output, false);
    nodes_.push_back(std::move(n));
  }
  for (const auto& b : g.blocks) {
    Node n{Kind::siso, b.block.name, {}, b.block.theta, {}};
    attach(n, b.input, true);
    attach(n, b.output, false);
    nodes_.push_back(std::move(n));
  }
  for (const auto& d : g.diverters) {
    Node n{Kind::diverter, d.name, {}, {}, {}};
    for (const auto& v : d.inputs) attach(n, v, true);
    for (const auto& v : d.outputs) attach(n, v, false);
    nodes_.push_back(std::move(n));
  }
  names_ = std::move(names);
  default_order_ = two_pass_order(std::nullopt);
}

std::size_t Propagator::variable_index(const std::string& name) const {
  auto it = std::find(names_->begin(), names_->end(), name);
  if (it == names_->end()) throw UnknownVariable("unknown variable '" + name + "'");
  return static_cast<std::size_t>(it - names_->begin());
}

std::vector<Propagator::MessageId> Propagator::two_pass_order(const std::optional<std::string>& root) const {
  const std::size_t nv = ends_.size();
  constexpr std::size_t unset = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> depth(nv, unset), via(nv, unset);

  // Variables in name order; the first unvisited one roots its component.
  std::vector<std::size_t> by_name(nv);
  std::iota(by_name.begin(), by_name.end(), 0);
  std::sort(by_name.begin(), by_name.end(), [&](std::size_t a, std::size_t b) { return (*names_)[a] < (*names_)[b]; });
  if (root) {
    const std::size_t r = variable_index(*root);
    by_name.erase(std::find(by_name.begin(), by_name.end(), r));
    by_name.insert(by_name.begin(), r);
  }

  std::vector<MessageId> order;
  for (std::size_t r : by_name) {
    if (depth[r] != unset) continue;
    depth[r] = 0;
    std::vector<std::size_t> component{r};
    for (std::size_t head = 0; head < component.size(); ++head) {
      const std::size_t v = component[head];
      std::vector<std::size_t> adjacent{ends_[v].producer};
      if (ends_[v].consumer) adjacent.push_back(*ends_[v].consumer);
      for (std::size_t node : adjacent) {
        for (const Port& p : nodes_[node].ports) {
          if (depth[p.var] != unset) continue;
          depth[p.var] = depth[v] + 1;
          via[p.var] = node;
          component.push_back(p.var);
        }
      }
    }
    // Toward the root: a variable reached through its consumer sends f inward.
    auto inward_forward = [&](std::size_t v) { return ends_[v].consumer && *ends_[v].consumer == via[v]; };
    for (auto it = component.rbegin(); it != component.rend(); ++it) {
      if (*it == r) continue;
      order.push_back({*it, inward_forward(*it)});
    }
    order.push_back({r, true});
    order.push_back({r, false});
    for (std::size_t v : component) {
      if (v == r) continue;
      order.push_back({v, !inward_forward(v)});
    }
  }
  return order;
}

std::vector<Vector> Propagator::evidence_vectors(const Evidence& ev) const {
  std::vector<Vector> out(ends_.size());
  for (const auto& [name, value] : ev.values()) {
    const std::size_t v = variable_index(name);
    if (ends_[v].consumer)
      throw InvalidEvidence("evidence on '" + name + "', which is not a terminal (split it to add a tap)");
    if (const auto* sym = std::get_if<std::size_t>(&value)) {
      if (*sym >= ends_[v].size)
        throw InvalidEvidence("symbol " + std::to_string(*sym + 1) + " outside the alphabet of '" + name + "'");
      out[v] = Distribution::delta(ends_[v].size, *sym).values();
    } else {
      const auto& d = std::get<Distribution>(value);
      if (d.size() != ends_[v].size) throw AlphabetMismatch("soft evidence of wrong size for '" + name + "'");
      out[v] = d.values();
    }
  }
  return out;
}

Vector Propagator::outgoing(const Node& node, std::size_t port, const std::vector<Vector>& f,
                            const std::vector<Vector>& b) const {
  auto incoming = [&](const Port& p) -> const Vector& { return p.inbound ? f[p.var] : b[p.var]; };
  Vector v;
  switch (node.kind) {
    case Kind::source:
      v = node.prior;
      break;
    case Kind::siso:
      v = port == 1 ? Vector(node.theta.transpose() * incoming(node.ports[0]))
                    : Vector(node.theta * incoming(node.ports[1]));
      break;
    case Kind::diverter:
      v = Vector::Ones(static_cast<Eigen::Index>(ends_[node.ports[port].var].size));
      for (std::size_t j = 0; j < node.ports.size(); ++j)
        if (j != port) v = v.cwiseProduct(incoming(node.ports[j]));
      break;
  }
  const std::size_t var = node.ports[port].var;
  try {
    return normalize(v).values();
  } catch (const AllZeroVector&) {
    throw ContradictoryEvidence("contradictory evidence: all-zero message on '" + (*names_)[var] + "' leaving '" +
                                    node.name + "'",
                                (*names_)[var]);
  }
}

Vector Propagator::compute(const MessageId& m, const std::vector<Vector>& f, const std::vector<Vector>& b,
                           const std::vector<Vector>& evidence) const {
  const Ends& e = ends_[m.var];
  if (m.forward) return outgoing(nodes_[e.producer], e.producer_port, f, b);
  if (e.consumer) return outgoing(nodes_[*e.consumer], *e.consumer_port, f, b);
  if (evidence[m.var].size() > 0) {
    try {
      return normalize(evidence[m.var]).values();
    } catch (const AllZeroVector&) {
      throw ContradictoryEvidence("all-zero evidence on '" + (*names_)[m.var] + "'", (*names_)[m.var]);
    }
  }
  return Distribution::uniform(e.size).values();
}

MessageState Propagator::pack(std::vector<Vector>& f, std::vector<Vector>& b, std::size_t epoch) const {
  std::vector<MessagePair> pairs;
  pairs.reserve(f.size());
  for (std::size_t v = 0; v < f.size(); ++v) {
    if (!(f[v].dot(b[v]) > 0.0))
      throw ContradictoryEvidence("forward and backward messages on '" + (*names_)[v] + "' have disjoint support",
                                  (*names_)[v]);
    pairs.push_back({normalize(f[v]), normalize(b[v])});
  }
  return MessageState(names_, std::move(pairs), epoch);
}

MessageState Propagator::run(const Evidence& ev, const PropagateOptions& opt) const {
  const auto evidence = evidence_vectors(ev);
  const std::size_t nv = ends_.size();
  std::vector<Vector> f(nv), b(nv);
  for (std::size_t v = 0; v < nv; ++v) f[v] = b[v] = Distribution::uniform(ends_[v].size).values();

  if (opt.schedule == Schedule::flooding) {
    std::vector<MessagePair> init;
    for (std::size_t v = 0; v < nv; ++v)
      init.push_back({Distribution::uniform(ends_[v].size), Distribution::uniform(ends_[v].size)});
    return run_from(ev, MessageState(names_, std::move(init)), opt.flooding_steps);
  }

  const auto order = opt.root ? two_pass_order(opt.root) : default_order_;
  for (const MessageId& m : order) (m.forward ? f : b)[m.var] = compute(m, f, b, evidence);
  return pack(f, b);
}

MessageState Propagator::run_from(const Evidence& ev, const MessageState& initial, std::size_t steps) const {
  const auto evidence = evidence_vectors(ev);
  const std::size_t nv = ends_.size();
  if (initial.size() != nv) throw std::invalid_argument("initial message state does not match the graph");
  std::vector<Vector> f(nv), b(nv);
  for (std::size_t v = 0; v < nv; ++v) {
    f[v] = initial.at(v).forward.values();
    b[v] = initial.at(v).backward.values();
  }
  if (steps == 0) steps = nv;
  for (std::size_t s = 0; s < steps; ++s) {
    std::vector<Vector> nf(nv), nb(nv);
    for (std::size_t v = 0; v < nv; ++v) {
      nf[v] = compute({v, true}, f, b, evidence);
      nb[v] = compute({v, false}, f, b, evidence);
    }
    f = std::move(nf);
    b = std::move(nb);
  }
  return pack(f, b, initial.epoch() + 1);
}

MessageState Propagator::initial_state(const Evidence& ev, const std::function<double()>& uniform01) const {
  const auto evidence = evidence_vectors(ev);
  std::vector<MessagePair> pairs;
  for (std::size_t v = 0; v < ends_.size(); ++v) {
    const auto n = static_cast<Eigen::Index>(ends_[v].size);
    auto draw = [&] {
      Vector x(n);
      for (Eigen::Index i = 0; i < n; ++i) x[i] = uniform01();
      // A draw of exactly zero everywhere is astronomically unlikely; fall back to uniform.
      return x.sum() > 0.0 ? normalize(x) : Distribution::uniform(ends_[v].size);
    };
    Distribution fwd = draw();
    Distribution bwd = draw();
    if (!ends_[v].consumer && evidence[v].size() > 0) bwd = normalize(evidence[v]);
    pairs.push_back({std::move(fwd), std::move(bwd)});
  }
  return MessageState(names_, std::move(pairs));
}

MessageState propagate(const GraphSpec& g, const Evidence& ev, const PropagateOptions& opt) {
  return Propagator(g).run(ev, opt);
}

Distribution posterior(const MessageState& state, const std::string& variable) {
  const MessagePair& p = state.at(variable);
  try {
    return hadamard_posterior(p.forward, p.backward);
  } catch (const AllZeroVector&) {
    throw ContradictoryEvidence("forward and backward messages on '" + variable + "' have disjoint support", variable);
  }
}

double aggregated_log_likelihood(std::span<const MessageState> states, std::span<const std::string> terminals) {
  double total = 0.0;
  for (const auto& s : states)
    for (const auto& t : terminals) {
      const MessagePair& p = s.at(t);
      const double inner = p.forward.values().dot(p.backward.values());
      if (!(inner > 0.0)) return -std::numeric_limits<double>::infinity();
      total += std::log(inner);
    }
  return total;
}

double block_log_likelihood(const Matrix& theta, const BlockDataset& data) {
  if (theta.rows() != static_cast<Eigen::Index>(data.input_size()) ||
      theta.cols() != static_cast<Eigen::Index>(data.output_size()))
    throw AlphabetMismatch("matrix shape does not match the block dataset");
  double total = 0.0;
  for (std::size_t n = 0; n < data.size(); ++n) {
    if (!data.mask()[n]) continue;
    const double q = data.forward()[n].values().dot(theta * data.backward()[n].values());
    if (!(q > 0.0)) return -std::numeric_limits<double>::infinity();
    total += std::log(q);
  }
  return total;
}

}  // namespace normalgraph
