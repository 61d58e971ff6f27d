#include <doctest.h>

#include <cmath>
#include <random>

#include "normalgraph/experiments.hpp"
#include "normalgraph/graph_io.hpp"
#include "normalgraph/learning.hpp"
#include "normalgraph/synthgen.hpp"
#include "oracles.hpp"

using namespace normalgraph;

namespace {

Matrix m2(double a, double b, double c, double d) {
  Matrix m(2, 2);
  m << a, b, c, d;
  return m;
}

double max_diff(const Matrix& a, const Matrix& b) { return (a - b).cwiseAbs().maxCoeff(); }

bool row_stochastic(const Matrix& m) {
  if ((m.array() < 0.0).any() || (m.array() > 1.0).any()) return false;
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    if (std::abs(m.row(r).sum() - 1.0) > 1e-12) return false;
  return true;
}

BlockDataset single(std::initializer_list<double> f, std::initializer_list<double> b) {
  BlockDataset d(f.size(), b.size());
  d.add(normalize(f), normalize(b));
  return d;
}

BlockDataset swapped_deltas() {
  BlockDataset d(2, 2);
  d.add(Distribution::delta(2, 0), Distribution::delta(2, 1));
  d.add(Distribution::delta(2, 1), Distribution::delta(2, 0));
  return d;
}

BlockDataset smooth_data(std::mt19937_64& rng, std::size_t mx, std::size_t my, std::size_t n) {
  BlockDataset d(mx, my);
  for (std::size_t i = 0; i < n; ++i)
    d.add(normalize(oracle::random_simplex(rng, mx, false)), normalize(oracle::random_simplex(rng, my, false)));
  return d;
}

Matrix random_theta(std::mt19937_64& rng, std::size_t mx, std::size_t my) {
  Matrix t(static_cast<Eigen::Index>(mx), static_cast<Eigen::Index>(my));
  for (Eigen::Index r = 0; r < t.rows(); ++r) t.row(r) = oracle::random_simplex(rng, my, false).transpose();
  return t;
}

}  // namespace

TEST_CASE("algorithm names") {
  CHECK(parse_algorithm("ML") == Algorithm::ml);
  CHECK(parse_algorithm("var") == Algorithm::var);
  CHECK(to_string(Algorithm::vit) == "vit");
  CHECK_THROWS_AS(parse_algorithm("em"), std::invalid_argument);
}

TEST_CASE("ML update on small instances") {
  const Matrix u = uniform_rows(2, 2);
  CHECK(ml_update(u, single({0.5, 0.5}, {0.5, 0.5})) == u);
  CHECK(max_diff(ml_update(u, single({0.8, 0.2}, {0.6, 0.4})), m2(0.6, 0.4, 0.6, 0.4)) <= 1e-15);
  CHECK(max_diff(ml_update(u, swapped_deltas()), m2(0, 1, 1, 0)) <= 1e-15);
  CHECK_THROWS_AS(ml_update(uniform_rows(3, 2), swapped_deltas()), AlphabetMismatch);
}

TEST_CASE("KL update on small instances") {
  const Matrix u = uniform_rows(2, 2);
  CHECK(kl_update(u, single({0.5, 0.5}, {0.5, 0.5})) == u);
  CHECK(max_diff(kl_update(u, single({0.8, 0.2}, {0.6, 0.4})), m2(0.6, 0.4, 0.6, 0.4)) <= 1e-15);
  CHECK(max_diff(kl_update(u, swapped_deltas()), m2(0, 1, 1, 0)) <= 1e-15);
}

TEST_CASE("uniform rows are an exact fixed point on uniform data") {
  for (std::size_t mx = 1; mx <= 5; ++mx)
    for (std::size_t my = 1; my <= 5; ++my) {
      BlockDataset d(mx, my);
      for (int n = 0; n < 7; ++n) d.add(Distribution::uniform(mx), Distribution::uniform(my));
      const Matrix u = uniform_rows(mx, my);
      CHECK(ml_update(u, d) == u);
      CHECK(kl_update(u, d) == u);
    }
}

TEST_CASE("rows without forward mass") {
  BlockDataset d(3, 2);
  d.add(Distribution::delta(3, 0), Distribution::delta(2, 1));
  d.add(Distribution::delta(3, 1), Distribution::delta(2, 0));
  Matrix prev(3, 2);
  prev << 0.5, 0.5, 0.5, 0.5, 0.3, 0.7;
  // The message floor leaves the third row with a vanishing but nonzero mass,
  // so it keeps its value under the default policy either way.
  const Matrix next = ml_update(prev, d);
  CHECK(max_diff(next.row(2), prev.row(2)) <= 1e-12);
  CHECK(max_diff(kl_update(prev, d).row(2), prev.row(2)) <= 1e-12);

  BlockDataset masked(3, 2);
  masked.add(Distribution::delta(3, 0), Distribution::delta(2, 1), false);
  CHECK(ml_update(prev, masked) == prev);
  CHECK_THROWS_AS(ml_update(prev, masked, EmptyRowPolicy::raise), EmptyRow);
  CHECK_THROWS_AS(kl_update(prev, masked, EmptyRowPolicy::raise), EmptyRow);
}

TEST_CASE("VIT update") {
  CHECK(max_diff(vit_update(swapped_deltas(), 1e-9), m2(0, 1, 1, 0)) <= 1e-6);
  const double delta = 1e-6;
  const Matrix v = vit_update(single({0.8, 0.2}, {0.6, 0.4}), delta);
  // Both argmaxes at the first symbol: row 1 ∝ (1+δ)[1+δ, δ], row 2 ∝ δ[1+δ, δ].
  const double first = (1 + delta) / (1 + 2 * delta);
  CHECK(max_diff(v, m2(first, 1 - first, first, 1 - first)) <= 1e-15);
  BlockDataset masked(2, 3);
  masked.add(Distribution::delta(2, 0), Distribution::delta(3, 1), false);
  CHECK(max_diff(vit_update(masked, 0.01), uniform_rows(2, 3)) <= 1e-15);
  CHECK_THROWS_AS(vit_update(swapped_deltas(), 0.0), std::invalid_argument);
}

TEST_CASE("VAR update") {
  CHECK(max_diff(var_update(swapped_deltas(), 0.0), m2(0, 1, 1, 0)) == 0.0);
  CHECK(max_diff(var_update(single({0.8, 0.2}, {0.6, 0.4}), 0.0), m2(0.6, 0.4, 0.6, 0.4)) <= 1e-15);
  CHECK(var_update(BlockDataset(3, 2), 0.01) == uniform_rows(3, 2));
  // Prior counts add to the soft counts before normalization.
  const Matrix alpha = m2(2, 0, 0, 0);
  CHECK(max_diff(var_update(swapped_deltas(), 0.0, alpha), m2(2.0 / 3.0, 1.0 / 3.0, 1, 0)) <= 1e-15);
  CHECK_THROWS_AS(var_update(swapped_deltas(), -1.0), std::invalid_argument);
  CHECK_THROWS_AS(var_update(swapped_deltas(), 0.0, Matrix::Ones(3, 2)), AlphabetMismatch);
}

TEST_CASE("updates keep rows stochastic") {
  std::mt19937_64 rng(59);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t mx = 1 + rng() % 5, my = 1 + rng() % 5;
    const BlockDataset d = smooth_data(rng, mx, my, 1 + rng() % 30);
    const Matrix t = random_theta(rng, mx, my);
    CHECK(row_stochastic(ml_update(t, d)));
    CHECK(row_stochastic(kl_update(t, d)));
    CHECK(row_stochastic(vit_update(d, 1e-6)));
    CHECK(row_stochastic(var_update(d, 1e-6)));
  }
}

TEST_CASE("delta data reduces every algorithm to co-occurrence counting") {
  std::mt19937_64 rng(61);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t mx = 1 + rng() % 5, my = 1 + rng() % 5, n = 1 + rng() % 100;
    BlockDataset d(mx, my);
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t a = rng() % mx, b = rng() % my;
      pairs.emplace_back(a, b);
      d.add(Distribution::delta(mx, a), Distribution::delta(my, b));
    }
    const Matrix counts = oracle::count_table(pairs, mx, my);
    Matrix ml = uniform_rows(mx, my), kl = ml;
    for (int it = 0; it < 5; ++it) {
      ml = ml_update(ml, d);
      kl = kl_update(kl, d);
    }
    const Matrix vit = vit_update(d, 1e-9), var = var_update(d, 1e-9);
    // Rows that never occur have no count table; only their stochasticity is checked.
    for (Eigen::Index r = 0; r < counts.rows(); ++r) {
      if (counts.row(r).sum() == 0.0) continue;
      CHECK(max_diff(ml.row(r), counts.row(r)) <= 1e-6);
      CHECK(max_diff(kl.row(r), counts.row(r)) <= 1e-6);
      CHECK(max_diff(vit.row(r), counts.row(r)) <= 1e-6);
      CHECK(max_diff(var.row(r), counts.row(r)) <= 1e-6);
    }
    CHECK(row_stochastic(ml));
    CHECK(row_stochastic(vit));
  }
}

TEST_CASE("ML never decreases the block log-likelihood") {
  std::mt19937_64 rng(67);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t mx = 1 + rng() % 5, my = 1 + rng() % 5;
    const BlockDataset d = smooth_data(rng, mx, my, 5 + rng() % 50);
    Matrix t = uniform_rows(mx, my);
    double prev = block_log_likelihood(t, d);
    for (int it = 0; it < 30; ++it) {
      t = ml_update(t, d);
      const double next = block_log_likelihood(t, d);
      CHECK(next >= prev - 1e-10);
      prev = next;
    }
  }
}

TEST_CASE("KL never increases the generalized divergence") {
  std::mt19937_64 rng(71);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t mx = 1 + rng() % 5, my = 1 + rng() % 5;
    const BlockDataset d = smooth_data(rng, mx, my, 5 + rng() % 50);
    Matrix t = uniform_rows(mx, my);
    double prev = generalized_divergence(t, d);
    for (int it = 0; it < 30; ++it) {
      t = kl_update(t, d);
      const double next = generalized_divergence(t, d);
      CHECK(next <= prev + 1e-10);
      prev = next;
    }
  }
}

TEST_CASE("generalized divergence written out") {
  std::mt19937_64 rng(73);
  const BlockDataset d = smooth_data(rng, 3, 4, 10);
  const Matrix t = random_theta(rng, 3, 4);
  double expected = 0.0;
  for (std::size_t n = 0; n < d.size(); ++n) {
    const Vector fy = t.transpose() * d.forward()[n].values();
    for (std::size_t j = 0; j < 4; ++j) {
      const double b = d.backward()[n][j];
      expected += b * std::log(b / fy[static_cast<Eigen::Index>(j)]) + fy[static_cast<Eigen::Index>(j)];
    }
  }
  CHECK(generalized_divergence(t, d) == doctest::Approx(expected).epsilon(1e-13));
}

TEST_CASE("the log-likelihood dominates its Jensen bound") {
  std::mt19937_64 rng(79);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t mx = 1 + rng() % 5, my = 1 + rng() % 5;
    const BlockDataset d = smooth_data(rng, mx, my, 1 + rng() % 20);
    const Matrix t = random_theta(rng, mx, my);
    CHECK(block_log_likelihood(t, d) >= jensen_lower_bound(t, d) - 1e-10);
  }
}

TEST_CASE("KKT conditions hold at ML convergence") {
  std::mt19937_64 rng(83);
  int converged = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t mx = 2 + rng() % 3, my = 2 + rng() % 3;
    const BlockDataset d = smooth_data(rng, mx, my, 30);
    Matrix t = uniform_rows(mx, my);
    bool done = false;
    for (int it = 0; it < 200000 && !done; ++it) {
      const Matrix next = ml_update(t, d);
      done = max_diff(next, t) < 1e-10;
      t = next;
    }
    if (!done) continue;
    ++converged;
    const Matrix lambda = kkt_multipliers(t, d);
    CHECK(lambda.minCoeff() >= -1e-8);
    CHECK(lambda.cwiseProduct(t).cwiseAbs().maxCoeff() <= 1e-6);
  }
  CHECK(converged >= 10);
}

TEST_CASE("updates depend only on the normalized messages") {
  std::mt19937_64 rng(89);
  std::uniform_real_distribution<double> scale(1e-3, 1e3);
  for (int trial = 0; trial < 100; ++trial) {
    BlockDataset a(3, 2), b(3, 2);
    for (int n = 0; n < 10; ++n) {
      const Vector f = oracle::random_simplex(rng, 3, false), g = oracle::random_simplex(rng, 2, false);
      a.add(normalize(f), normalize(g));
      b.add(normalize(Vector(scale(rng) * f)), normalize(Vector(scale(rng) * g)));
    }
    const Matrix t = random_theta(rng, 3, 2);
    CHECK(max_diff(ml_update(t, a), ml_update(t, b)) <= 1e-12);
    CHECK(max_diff(kl_update(t, a), kl_update(t, b)) <= 1e-12);
  }
}

TEST_CASE("train_block") {
  TrainConfig cfg;
  cfg.algorithm = Algorithm::ml;
  cfg.inner_iterations = 3;
  const SisoBlock u{"b", uniform_rows(2, 2), true};
  CHECK(max_diff(train_block(u, swapped_deltas(), cfg), m2(0, 1, 1, 0)) <= 1e-15);

  std::mt19937_64 rng(97);
  const BlockDataset d = smooth_data(rng, 4, 3, 40);
  cfg.algorithm = Algorithm::var;
  CHECK(train_block({"b", uniform_rows(4, 3), true}, d, cfg) == train_block({"b", random_theta(rng, 4, 3), true}, d, cfg));
  cfg.prior_counts["b"] = Matrix::Constant(4, 3, 5.0);
  CHECK(train_block({"b", uniform_rows(4, 3), true}, d, cfg) == var_update(d, cfg.delta, Matrix(Matrix::Constant(4, 3, 5.0))));

  cfg.algorithm = Algorithm::kl;
  cfg.inner_iterations = 1;
  const Matrix one = train_block({"b", uniform_rows(4, 3), true}, d, cfg);
  cfg.inner_iterations = 5;
  const Matrix five = train_block({"b", uniform_rows(4, 3), true}, d, cfg);
  CHECK(block_log_likelihood(five, d) >= block_log_likelihood(one, d) - 1e-9);

  CHECK_THROWS_AS(train_block({"fixed", uniform_rows(2, 2), false}, d, cfg), std::invalid_argument);
}

TEST_CASE("harvest collects block messages and honours mask and skip") {
  const GraphSpec g = tree_generative_graph();
  const Propagator p(g);
  std::vector<MessageState> states;
  for (std::size_t s = 0; s < 3; ++s) {
    Evidence ev;
    ev.hard("X1", s % 2).hard("X2", 1).hard("X3", s);
    states.push_back(p.run(ev));
  }
  const BlockDataset d = harvest(states.data(), 3, "S.3", "X3", {1, 0, 1}, {0, 0, 1});
  REQUIRE(d.size() == 2);
  CHECK(d.mask() == std::vector<std::uint8_t>{1, 0});
  CHECK(d.forward()[0] == states[0].at("S.3").forward);
  CHECK(d.backward()[1] == Distribution::delta(3, 1));
  const BlockDataset prior = harvest(states.data(), 3, "", "S", {1, 1, 1});
  CHECK(prior.input_size() == 1);
  CHECK(prior.backward()[2] == states[2].at("S").backward);
}

TEST_CASE("EM with zero epochs leaves the graph alone") {
  const GraphSpec g = tree_generative_graph();
  const TrainingData data = to_training_data(ancestral_sample(g, 20, 3), 20);
  TrainConfig cfg;
  cfg.epochs = 0;
  const TrainReport r = em_train(g, data, cfg);
  CHECK(r.epochs.empty());
  CHECK(graph_to_json(r.learned) == graph_to_json(g));
}

TEST_CASE("EM recovers an observed identity channel") {
  GraphSpec g;
  g.variables = {{"S", 3}, {"X", 3}};
  g.sources.push_back({{"P(S)", normalize({0.2, 0.3, 0.5}), true}, "S"});
  g.blocks.push_back({{"P(X|S)", Matrix::Identity(3, 3), true}, "S", "X"});
  const GraphSpec observed = split_variable(g, "S");
  const SampleSet samples = ancestral_sample(observed, 50, 11);
  REQUIRE(samples.variables.size() == 2);
  for (const auto& row : samples.rows) CHECK(row[0] == row[1]);
  for (Algorithm a : {Algorithm::ml, Algorithm::kl, Algorithm::vit, Algorithm::var}) {
    TrainConfig cfg;
    cfg.algorithm = a;
    cfg.epochs = 10;
    const TrainReport r = em_train(observed, to_training_data(samples, 50), cfg);
    CHECK(max_diff(r.learned.find_block("P(X|S)")->theta, Matrix::Identity(3, 3)) <= 0.05);
  }
}

TEST_CASE("EM reports the sample that contradicts a fixed model") {
  GraphSpec g;
  g.variables = {{"S", 2}, {"X", 2}};
  g.sources.push_back({{"P(S)", Distribution::delta(2, 0), false}, "S"});
  g.blocks.push_back({{"id", Matrix::Identity(2, 2), false}, "S", "X"});
  TrainingData data;
  data.terminals = {"X"};
  for (std::size_t s : {0, 0, 1, 0}) {
    Evidence ev;
    ev.hard("X", s);
    data.samples.push_back(ev);
    data.mask.push_back(1);
  }
  try {
    em_train(g, data, {});
    FAIL("expected contradictory evidence");
  } catch (const ContradictoryEvidence& e) {
    CHECK(e.sample() == 2);
    CHECK_FALSE(e.variable().empty());
  }
}

TEST_CASE("EM on the tree benchmark") {
  const GraphSpec gen = tree_generative_graph();
  const SampleSet samples = ancestral_sample(gen, 120, 5);
  const TrainingData data = to_training_data(samples, 80);
  TrainConfig cfg;
  cfg.epochs = 15;
  cfg.keep_snapshots = true;
  const TrainReport a = em_train(tree_learning_graph(4), data, cfg);
  REQUIRE(a.epochs.size() == 15);
  REQUIRE(a.snapshots.size() == 15);
  CHECK(a.snapshots[0].count("P(S)") == 1);
  CHECK(a.snapshots[0].at("P(S)").rows() == 1);
  for (const auto& e : a.epochs) {
    CHECK(std::isfinite(e.train_loglik));
    REQUIRE(e.test_loglik.has_value());
    CHECK(std::isfinite(*e.test_loglik));
    CHECK(e.skipped_samples == 0);
  }
  for (const auto& b : a.learned.blocks) CHECK(row_stochastic(b.block.theta));

  const TrainReport again = em_train(tree_learning_graph(4), data, cfg);
  for (std::size_t i = 0; i < a.epochs.size(); ++i) CHECK(a.epochs[i].train_loglik == again.epochs[i].train_loglik);

  cfg.schedule = Schedule::flooding;
  const TrainReport flood = em_train(tree_learning_graph(4), data, cfg);
  CHECK(flood.epochs.back().train_loglik == doctest::Approx(a.epochs.back().train_loglik).epsilon(1e-9));

  cfg.schedule = Schedule::two_pass;
  cfg.tol = 1e300;
  CHECK(em_train(tree_learning_graph(4), data, cfg).epochs.size() == 2);
}

TEST_CASE("EM input checks") {
  const GraphSpec g = tree_learning_graph(3);
  TrainingData data = to_training_data(ancestral_sample(tree_generative_graph(), 5, 1), 5);
  data.mask.pop_back();
  CHECK_THROWS_AS(em_train(g, data, {}), std::invalid_argument);
  data.mask.push_back(1);
  TrainConfig cfg;
  cfg.algorithm = Algorithm::vit;
  cfg.delta = 0.0;
  CHECK_THROWS_AS(em_train(g, data, cfg), std::invalid_argument);
}
