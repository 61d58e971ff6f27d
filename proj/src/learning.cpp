#include "normalgraph/learning.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <limits>

#include "normalgraph/random.hpp"

namespace normalgraph {

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::ml: return "ml";
    case Algorithm::kl: return "kl";
    case Algorithm::vit: return "vit";
    case Algorithm::var: return "var";
  }
  return "?";
}

Algorithm parse_algorithm(const std::string& s) {
  std::string lower = s;
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  if (lower == "ml") return Algorithm::ml;
  if (lower == "kl") return Algorithm::kl;
  if (lower == "vit") return Algorithm::vit;
  if (lower == "var") return Algorithm::var;
  throw std::invalid_argument("unknown algorithm '" + s + "' (expected ml, kl, vit or var)");
}

namespace {

void check_shape(const Matrix& theta, const BlockDataset& data) {
  if (theta.rows() != static_cast<Eigen::Index>(data.input_size()) ||
      theta.cols() != static_cast<Eigen::Index>(data.output_size()))
    throw AlphabetMismatch("matrix is " + std::to_string(theta.rows()) + "x" + std::to_string(theta.cols()) +
                           " but the block data is " + std::to_string(data.input_size()) + "x" +
                           std::to_string(data.output_size()));
}

// Divides row l of `raw` by the forward mass of that row, then
// row-normalizes. Rows without mass (or that vanish) fall back to `previous`.
Matrix finish_multiplicative(Matrix raw, const Matrix& previous, const Vector& row_mass, EmptyRowPolicy policy) {
  for (Eigen::Index l = 0; l < raw.rows(); ++l) {
    if (!(row_mass[l] > 0.0)) {
      if (policy == EmptyRowPolicy::raise)
        throw EmptyRow("row " + std::to_string(l + 1) + " receives no forward mass", static_cast<std::size_t>(l));
      raw.row(l) = previous.row(l);
      continue;
    }
    raw.row(l) /= row_mass[l];
    const double s = raw.row(l).sum();
    if (s > 0.0 && std::isfinite(s))
      raw.row(l) /= s;
    else
      raw.row(l) = previous.row(l);
  }
  return raw;
}

Matrix normalize_rows_or_uniform(Matrix m) {
  for (Eigen::Index l = 0; l < m.rows(); ++l) {
    const double s = m.row(l).sum();
    if (s > 0.0)
      m.row(l) /= s;
    else
      m.row(l).setConstant(1.0 / static_cast<double>(m.cols()));
  }
  return m;
}

}  // namespace

Matrix ml_update(const Matrix& theta, const BlockDataset& data, EmptyRowPolicy policy) {
  check_shape(theta, data);
  const Matrix f = data.forward_matrix().cwiseMax(kMessageFloor);
  const Matrix b = data.backward_matrix().cwiseMax(kMessageFloor);
  const Vector mask = data.mask_vector();

  Matrix acc = Matrix::Zero(theta.rows(), theta.cols());
  for (Eigen::Index n = 0; n < f.rows(); ++n) {
    if (mask[n] == 0.0) continue;
    const double q = f.row(n) * theta * b.row(n).transpose();
    if (!(q > 0.0)) continue;
    acc.noalias() += f.row(n).transpose() * b.row(n) / q;
  }
  const Vector row_mass = f.transpose() * mask;
  return finish_multiplicative(theta.cwiseProduct(acc), theta, row_mass, policy);
}

Matrix kl_update(const Matrix& theta, const BlockDataset& data, EmptyRowPolicy policy) {
  check_shape(theta, data);
  const Matrix f = data.forward_matrix().cwiseMax(kMessageFloor);
  const Matrix b = data.backward_matrix().cwiseMax(kMessageFloor);
  const Vector mask = data.mask_vector();

  // ratio(n, m) = L[n] b_n(m) / (θᵀ f_n)(m)
  const Matrix q = f * theta;
  Matrix ratio = Matrix::Zero(b.rows(), b.cols());
  for (Eigen::Index n = 0; n < b.rows(); ++n) {
    if (mask[n] == 0.0) continue;
    for (Eigen::Index m = 0; m < b.cols(); ++m)
      if (q(n, m) > 0.0) ratio(n, m) = b(n, m) / q(n, m);
  }
  const Vector row_mass = f.transpose() * mask;
  return finish_multiplicative(theta.cwiseProduct(f.transpose() * ratio), theta, row_mass, policy);
}

Matrix vit_update(const BlockDataset& data, double delta) {
  Matrix acc = Matrix::Zero(static_cast<Eigen::Index>(data.input_size()), static_cast<Eigen::Index>(data.output_size()));
  for (std::size_t n = 0; n < data.size(); ++n) {
    if (!data.mask()[n]) continue;
    acc.noalias() += max_indicator(data.forward()[n], delta) * max_indicator(data.backward()[n], delta).transpose();
  }
  return normalize_rows_or_uniform(std::move(acc));
}

Matrix var_update(const BlockDataset& data, double delta, const std::optional<Matrix>& prior_counts) {
  if (!(delta >= 0.0)) throw std::invalid_argument("VAR delta must be nonnegative");
  const auto rows = static_cast<Eigen::Index>(data.input_size());
  const auto cols = static_cast<Eigen::Index>(data.output_size());
  Matrix acc = Matrix::Constant(rows, cols, delta);
  if (prior_counts) {
    if (prior_counts->rows() != rows || prior_counts->cols() != cols)
      throw AlphabetMismatch("prior count matrix has the wrong shape");
    if ((prior_counts->array() < 0.0).any()) throw std::invalid_argument("prior counts must be nonnegative");
    acc += *prior_counts;
  }
  for (std::size_t n = 0; n < data.size(); ++n) {
    if (!data.mask()[n]) continue;
    acc.noalias() += data.forward()[n].values() * data.backward()[n].values().transpose();
  }
  return normalize_rows_or_uniform(std::move(acc));
}

double generalized_divergence(const Matrix& theta, const BlockDataset& data) {
  check_shape(theta, data);
  double total = 0.0;
  for (std::size_t n = 0; n < data.size(); ++n) {
    if (!data.mask()[n]) continue;
    const Vector q = theta.transpose() * data.forward()[n].values();
    const Vector& b = data.backward()[n].values();
    for (Eigen::Index j = 0; j < q.size(); ++j) {
      total += q[j];
      if (b[j] == 0.0) continue;
      if (!(q[j] > 0.0)) return std::numeric_limits<double>::infinity();
      total += b[j] * std::log(b[j] / q[j]);
    }
  }
  return total;
}

double jensen_lower_bound(const Matrix& theta, const BlockDataset& data) {
  check_shape(theta, data);
  double total = 0.0;
  for (std::size_t n = 0; n < data.size(); ++n) {
    if (!data.mask()[n]) continue;
    const Distribution fy = normalize(Vector(theta.transpose() * data.forward()[n].values()));
    const Vector& b = data.backward()[n].values();
    for (Eigen::Index j = 0; j < b.size(); ++j) {
      if (b[j] == 0.0) continue;
      if (!(fy[static_cast<std::size_t>(j)] > 0.0)) return -std::numeric_limits<double>::infinity();
      total += b[j] * std::log(fy[static_cast<std::size_t>(j)]);
    }
  }
  return total;
}

Matrix kkt_multipliers(const Matrix& theta, const BlockDataset& data) {
  check_shape(theta, data);
  const Matrix f = data.forward_matrix().cwiseMax(kMessageFloor);
  const Matrix b = data.backward_matrix().cwiseMax(kMessageFloor);
  const Vector mask = data.mask_vector();
  const double count = mask.sum();
  if (!(count > 0.0)) throw std::invalid_argument("KKT multipliers need at least one masked sample");

  Matrix grad = Matrix::Zero(theta.rows(), theta.cols());
  for (Eigen::Index n = 0; n < f.rows(); ++n) {
    if (mask[n] == 0.0) continue;
    const double q = f.row(n) * theta * b.row(n).transpose();
    grad.noalias() += f.row(n).transpose() * b.row(n) / q;
  }
  grad /= count;
  const Vector weighted = theta.cwiseProduct(grad).rowwise().sum();
  return (-grad).colwise() + weighted;
}

Matrix train_block(const SisoBlock& block, const BlockDataset& data, const TrainConfig& cfg) {
  if (!block.trainable) throw std::invalid_argument("block '" + block.name + "' is fixed");
  switch (cfg.algorithm) {
    case Algorithm::ml:
    case Algorithm::kl: {
      Matrix theta = block.theta;
      for (std::size_t it = 0; it < cfg.inner_iterations; ++it)
        theta = cfg.algorithm == Algorithm::ml ? ml_update(theta, data) : kl_update(theta, data);
      return theta;
    }
    case Algorithm::vit:
      return vit_update(data, cfg.delta);
    case Algorithm::var: {
      auto it = cfg.prior_counts.find(block.name);
      return var_update(data, cfg.delta, it == cfg.prior_counts.end() ? std::nullopt : std::optional<Matrix>(it->second));
    }
  }
  return block.theta;
}

BlockDataset harvest(const MessageState* states, std::size_t n, const std::string& input, const std::string& output,
                     const std::vector<std::uint8_t>& mask, const std::vector<std::uint8_t>& skip) {
  // Empty input name: a prior, fed by the constant message [1].
  const bool prior = input.empty();
  const std::size_t out_index = states[0].index(output);
  const std::size_t in_index = prior ? 0 : states[0].index(input);
  const std::size_t in_size = prior ? 1 : states[0].at(in_index).forward.size();
  BlockDataset data(in_size, states[0].at(out_index).backward.size());
  for (std::size_t s = 0; s < n; ++s) {
    if (!skip.empty() && skip[s]) continue;
    data.add(prior ? Distribution::uniform(1) : states[s].at(in_index).forward, states[s].at(out_index).backward,
             mask[s] != 0);
  }
  return data;
}

namespace {

struct Learnable {
  std::string name;
  std::string input;  // empty for priors
  std::string output;
  bool is_source;
};

double sample_loglik(const MessageState& s, const std::vector<std::size_t>& terminals) {
  double total = 0.0;
  for (std::size_t t : terminals) {
    const MessagePair& p = s.at(t);
    const double inner = p.forward.values().dot(p.backward.values());
    if (!(inner > 0.0)) return -std::numeric_limits<double>::infinity();
    total += std::log(inner);
  }
  return total;
}

}  // namespace

TrainReport em_train(const GraphSpec& g, const TrainingData& data, const TrainConfig& cfg) {
  require_valid(g);
  const std::size_t n = data.samples.size();
  if (data.mask.size() != n) throw std::invalid_argument("mask length differs from the number of samples");
  if ((cfg.algorithm == Algorithm::vit || cfg.algorithm == Algorithm::var) && !(cfg.delta > 0.0))
    throw std::invalid_argument("VIT and VAR need a positive delta");

  TrainReport report;
  report.learned = g;
  GraphSpec& graph = report.learned;
  if (cfg.epochs == 0) return report;

  std::vector<Learnable> learnables;
  for (auto& s : graph.sources) {
    if (!s.source.trainable) continue;
    if (cfg.reset_trainable) s.source.prior = Distribution::uniform(s.source.prior.size());
    learnables.push_back({s.source.name, "", s.output, true});
  }
  for (auto& b : graph.blocks) {
    if (!b.block.trainable) continue;
    if (cfg.reset_trainable)
      b.block.theta = uniform_rows(static_cast<std::size_t>(b.block.theta.rows()),
                                   static_cast<std::size_t>(b.block.theta.cols()));
    learnables.push_back({b.block.name, b.input, b.output, false});
  }
  if (n == 0) return report;

  auto propagator = std::make_unique<Propagator>(graph);
  std::vector<std::size_t> terminals;
  for (const auto& t : data.terminals) terminals.push_back(propagator->variable_index(t));

  // Evidence must be consistent with the starting parameters.
  for (std::size_t s = 0; s < n; ++s) {
    try {
      propagator->run(data.samples[s]);
    } catch (const ContradictoryEvidence& e) {
      throw ContradictoryEvidence("sample " + std::to_string(s + 1) + ": " + e.what(), e.variable(),
                                  static_cast<long>(s));
    }
  }

  RandomStream rng(cfg.seed, "initial-messages");
  const auto draw = [&rng] { return rng.uniform(); };
  std::vector<MessageState> states;
  states.reserve(n);
  for (std::size_t s = 0; s < n; ++s) states.push_back(propagator->initial_state(data.samples[s], draw));
  std::vector<std::uint8_t> skip(n, 0);
  const bool has_test = std::any_of(data.mask.begin(), data.mask.end(), [](std::uint8_t m) { return m == 0; });

  std::optional<double> previous;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();

    // M-step on a frozen snapshot of the messages.
    std::map<std::string, Matrix> updated;
    for (const auto& l : learnables) {
      BlockDataset block_data = harvest(states.data(), n, l.input, l.output, data.mask, skip);
      SisoBlock current;
      if (l.is_source) {
        const auto& prior = graph.find_source(l.name)->prior;
        current = {l.name, Matrix(prior.values().transpose()), true};
      } else {
        current = *graph.find_block(l.name);
      }
      updated[l.name] = train_block(current, block_data, cfg);
    }
    for (const auto& l : learnables) {
      const Matrix& theta = updated.at(l.name);
      if (l.is_source)
        graph.find_source(l.name)->prior = normalize(Vector(theta.row(0).transpose()));
      else
        graph.find_block(l.name)->theta = theta;
    }

    // E-step with the new parameters.
    propagator = std::make_unique<Propagator>(graph);
    std::fill(skip.begin(), skip.end(), 0);
    for (std::size_t s = 0; s < n; ++s) {
      try {
        states[s] = cfg.schedule == Schedule::flooding ? propagator->run_from(data.samples[s], states[s], 0)
                                                       : propagator->run(data.samples[s]);
      } catch (const ContradictoryEvidence&) {
        skip[s] = 1;
      }
    }

    EpochRecord rec;
    rec.epoch = epoch;
    double train = 0.0, test = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
      const double ll = skip[s] ? -std::numeric_limits<double>::infinity() : sample_loglik(states[s], terminals);
      (data.mask[s] ? train : test) += ll;
      rec.skipped_samples += skip[s];
    }
    rec.train_loglik = train;
    if (has_test) rec.test_loglik = test;
    rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    report.epochs.push_back(rec);
    if (cfg.keep_snapshots) report.snapshots.push_back(std::move(updated));

    if (cfg.tol && previous && std::abs(train - *previous) < *cfg.tol) break;
    previous = train;
  }
  return report;
}

}  // namespace normalgraph
