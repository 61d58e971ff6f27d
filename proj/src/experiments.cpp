#include "normalgraph/experiments.hpp"

#include <cmath>
#include <stdexcept>

#include "normalgraph/random.hpp"

namespace normalgraph {

namespace {

Matrix rows_of(std::initializer_list<std::initializer_list<double>> rows) {
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
  Eigen::Index r = 0;
  for (const auto& row : rows) {
    Eigen::Index c = 0;
    for (double v : row) m(r, c++) = v;
    ++r;
  }
  return m;
}

GraphSpec tree_skeleton(std::size_t hidden, const Distribution& prior, const Matrix& t1, const Matrix& t2,
                        const Matrix& t3) {
  GraphSpec g;
  g.variables = {{"S", hidden}, {"S.1", hidden}, {"S.2", hidden}, {"S.3", hidden}, {"X1", 2}, {"X2", 2}, {"X3", 3}};
  g.sources.push_back({{"P(S)", prior, true}, "S"});
  g.diverters.push_back({"split:S", {"S"}, {"S.1", "S.2", "S.3"}});
  g.blocks.push_back({{"P(X1|S)", t1, true}, "S.1", "X1"});
  g.blocks.push_back({{"P(X2|S)", t2, true}, "S.2", "X2"});
  g.blocks.push_back({{"P(X3|S)", t3, true}, "S.3", "X3"});
  return g;
}

struct DeepBlock {
  const char* name;
  const char* from;
  const char* to;
  std::size_t rows;
  std::size_t cols;
};

constexpr DeepBlock kDeepTrainable[] = {
    {"P(Y1|S1)", "S1.1", "Y1", 4, 3},
    {"P(Y2|S1S2)", "S1S2", "Y2", 8, 4},
    {"P(X1|Y1)", "Y1.1", "X1", 3, 3},
    {"P(X2|Y1)", "Y1.2", "X2", 3, 2},
    {"P(X3|Y2S3)", "Y2S3", "X3", 12, 3},
};

GraphSpec deep_skeleton() {
  GraphSpec g;
  g.variables = {{"S1", 4},         {"S1.1", 4},   {"S1.2", 4},    {"S2", 2},       {"S3", 3},  {"S1S2.1", 8},
                 {"S1S2.2", 8},     {"S1S2", 8},   {"Y1", 3},      {"Y1.1", 3},     {"Y1.2", 3}, {"Y2", 4},
                 {"Y2S3.1", 12},    {"Y2S3.2", 12}, {"Y2S3", 12},  {"X1", 3},       {"X2", 2},  {"X3", 3}};
  g.sources.push_back({{"P(S1)", Distribution::uniform(4), true}, "S1"});
  g.sources.push_back({{"P(S2)", Distribution::uniform(2), true}, "S2"});
  g.sources.push_back({{"P(S3)", Distribution::uniform(3), true}, "S3"});
  g.diverters.push_back({"split:S1", {"S1"}, {"S1.1", "S1.2"}});
  g.diverters.push_back({"join:S1S2", {"S1S2.1", "S1S2.2"}, {"S1S2"}});
  g.diverters.push_back({"split:Y1", {"Y1"}, {"Y1.1", "Y1.2"}});
  g.diverters.push_back({"join:Y2S3", {"Y2S3.1", "Y2S3.2"}, {"Y2S3"}});
  for (const auto& b : kDeepTrainable) g.blocks.push_back({{b.name, uniform_rows(b.rows, b.cols), true}, b.from, b.to});
  g.blocks.push_back({build_expander({4, 2}, 1), "S1.2", "S1S2.1"});
  g.blocks.push_back({build_expander({4, 2}, 2), "S2", "S1S2.2"});
  g.blocks.push_back({build_expander({4, 3}, 1), "Y2", "Y2S3.1"});
  g.blocks.push_back({build_expander({4, 3}, 2), "S3", "Y2S3.2"});
  return g;
}

std::uint64_t child_seed(std::uint64_t seed, const std::string& stream) { return substream_seed(seed, stream); }

TrainConfig base_config(const ExperimentConfig& cfg, std::size_t epochs, std::size_t nit) {
  TrainConfig tc;
  tc.epochs = cfg.epochs.value_or(epochs);
  tc.inner_iterations = cfg.inner_iterations.value_or(nit);
  tc.delta = cfg.delta;
  tc.seed = cfg.seed;
  tc.tol = cfg.tol;
  tc.keep_snapshots = cfg.keep_snapshots;
  return tc;
}

std::size_t train_count(std::size_t n, double split) {
  if (!(split >= 0.0 && split <= 1.0)) throw std::invalid_argument("split fraction must be in [0, 1]");
  return static_cast<std::size_t>(std::llround(split * static_cast<double>(n)));
}

}  // namespace

GraphSpec tree_generative_graph() {
  return tree_skeleton(4, Distribution::uniform(4), rows_of({{0.1, 0.9}, {0.1, 0.9}, {0.9, 0.1}, {0.3, 0.7}}),
                       rows_of({{0.1, 0.9}, {0.99, 0.01}, {0.5, 0.5}, {0.2, 0.8}}),
                       rows_of({{0.1, 0.89, 0.01}, {0.3, 0.3, 0.4}, {0.8, 0.1, 0.1}, {0.1, 0.8, 0.1}}));
}

GraphSpec tree_learning_graph(std::size_t hidden_size) {
  if (hidden_size == 0) throw std::invalid_argument("hidden alphabet size must be positive");
  return tree_skeleton(hidden_size, Distribution::uniform(hidden_size), uniform_rows(hidden_size, 2),
                       uniform_rows(hidden_size, 2), uniform_rows(hidden_size, 3));
}

GraphSpec deep_generative_graph(std::uint64_t seed) {
  GraphSpec g = deep_skeleton();
  for (auto& s : g.sources) {
    const Matrix row = random_row_stochastic(1, s.source.prior.size(), child_seed(seed, "prior:" + s.source.name));
    s.source.prior = normalize(Vector(row.row(0).transpose()));
  }
  for (const auto& b : kDeepTrainable)
    g.find_block(b.name)->theta = random_row_stochastic(b.rows, b.cols, child_seed(seed, std::string("block:") + b.name));
  return g;
}

GraphSpec deep_learning_graph() { return deep_skeleton(); }

std::vector<AlgorithmRun> train_all(const GraphSpec& learning, const TrainingData& data,
                                    const std::vector<Algorithm>& algorithms, const TrainConfig& base) {
  std::vector<AlgorithmRun> out;
  for (Algorithm a : algorithms) {
    TrainConfig tc = base;
    tc.algorithm = a;
    out.push_back({a, em_train(learning, data, tc)});
  }
  return out;
}

std::vector<ExperimentRun> run_tree_experiment(const ExperimentConfig& cfg) {
  std::vector<std::size_t> sizes = cfg.hidden_sizes;
  std::size_t n = 400;
  double split = 1.0;
  switch (cfg.variant) {
    case 1:
      if (sizes.empty()) sizes = {4};
      break;
    case 2:
      if (sizes.empty()) sizes = {2, 7};
      break;
    case 3:
      if (sizes.empty()) sizes = {4, 9};
      n = 300;
      split = 0.5;
      break;
    default:
      throw std::invalid_argument("tree experiment variant must be 1, 2 or 3");
  }
  n = cfg.samples.value_or(n);
  split = cfg.split.value_or(split);

  const GraphSpec generative = tree_generative_graph();
  const SampleSet samples = ancestral_sample(generative, n, cfg.seed);
  const TrainingData data = to_training_data(samples, train_count(n, split));
  const TrainConfig base = base_config(cfg, 60, 3);

  std::vector<ExperimentRun> out;
  for (std::size_t ms : sizes)
    out.push_back({"ms" + std::to_string(ms), generative, samples, train_all(tree_learning_graph(ms), data, cfg.algorithms, base)});
  return out;
}

ExperimentRun run_deep_experiment(const ExperimentConfig& cfg) {
  const std::size_t n = cfg.samples.value_or(100);
  const GraphSpec generative = deep_generative_graph(cfg.seed);
  const SampleSet samples = ancestral_sample(generative, n, cfg.seed);
  const TrainingData data = to_training_data(samples, train_count(n, cfg.split.value_or(1.0)));
  return {"deep", generative, samples, train_all(deep_learning_graph(), data, cfg.algorithms, base_config(cfg, 600, 3))};
}

std::vector<SingleBlockRow> run_single_block(std::size_t mx, std::size_t my, std::size_t n, double ex, double ey,
                                             std::size_t iterations, std::uint64_t seed, double delta) {
  const BlockDataset data = random_message_pairs(mx, my, n, ex, ey, seed);
  std::vector<SingleBlockRow> rows;
  for (Algorithm a : {Algorithm::ml, Algorithm::kl}) {
    Matrix theta = uniform_rows(mx, my);
    for (std::size_t it = 1; it <= iterations; ++it) {
      theta = a == Algorithm::ml ? ml_update(theta, data) : kl_update(theta, data);
      rows.push_back({to_string(a), it, block_log_likelihood(theta, data)});
    }
  }
  rows.push_back({"vit", 1, block_log_likelihood(vit_update(data, delta), data)});
  rows.push_back({"var", 1, block_log_likelihood(var_update(data, delta), data)});
  rows.push_back({"ref", 1, block_log_likelihood(random_row_stochastic(mx, my, child_seed(seed, "reference")), data)});
  return rows;
}

std::string format_single_block(const std::vector<SingleBlockRow>& rows, const std::vector<std::string>& comments) {
  std::string s;
  for (const auto& c : comments) s += "# " + c + "\n";
  s += "algorithm,iteration,loglik\n";
  for (const auto& r : rows) s += r.algorithm + "," + std::to_string(r.iteration) + "," + format_real(r.loglik) + "\n";
  return s;
}

std::vector<SweepRow> run_nit_sweep(const ExperimentConfig& cfg, const std::vector<std::size_t>& nits,
                                    std::size_t repetitions) {
  const std::size_t n = cfg.samples.value_or(400);
  const SampleSet samples = ancestral_sample(tree_generative_graph(), n, cfg.seed);
  const TrainingData data = to_training_data(samples, train_count(n, cfg.split.value_or(1.0)));
  const std::size_t ms = cfg.hidden_sizes.empty() ? 4 : cfg.hidden_sizes.front();
  const GraphSpec learning = tree_learning_graph(ms);

  std::vector<SweepRow> out;
  for (std::size_t nit : nits) {
    for (std::size_t rep = 1; rep <= repetitions; ++rep) {
      TrainConfig tc = base_config(cfg, 60, nit);
      tc.inner_iterations = nit;
      tc.algorithm = Algorithm::ml;
      tc.keep_snapshots = false;
      tc.seed = child_seed(cfg.seed, "repetition:" + std::to_string(rep));
      const TrainReport r = em_train(learning, data, tc);
      out.push_back({nit, rep, r.epochs.empty() ? 0.0 : r.epochs.back().train_loglik});
    }
  }
  return out;
}

std::string format_sweep(const std::vector<SweepRow>& rows, const std::vector<std::string>& comments) {
  std::string s;
  for (const auto& c : comments) s += "# " + c + "\n";
  s += "nit,repetition,final_loglik\n";
  for (const auto& r : rows)
    s += std::to_string(r.inner_iterations) + "," + std::to_string(r.repetition) + "," + format_real(r.final_loglik) + "\n";
  return s;
}

std::vector<ResultRow> result_rows(const std::vector<AlgorithmRun>& runs) {
  std::vector<ResultRow> out;
  for (const auto& run : runs)
    for (const auto& e : run.report.epochs)
      out.push_back({to_string(run.algorithm), e.epoch, e.train_loglik, e.test_loglik, e.wall_ms});
  return out;
}

std::vector<CoefficientRow> coefficient_rows(const std::vector<AlgorithmRun>& runs) {
  std::vector<CoefficientRow> out;
  for (const auto& run : runs) {
    for (std::size_t e = 0; e < run.report.snapshots.size(); ++e) {
      for (const auto& [name, theta] : run.report.snapshots[e]) {
        for (Eigen::Index r = 0; r < theta.rows(); ++r)
          for (Eigen::Index c = 0; c < theta.cols(); ++c)
            out.push_back({to_string(run.algorithm), e + 1, name, static_cast<std::size_t>(r + 1),
                           static_cast<std::size_t>(c + 1), theta(r, c)});
      }
    }
  }
  return out;
}

std::string gnuplot_script(const std::string& csv_path, const std::vector<Algorithm>& algorithms, bool with_test) {
  std::string s = "set datafile separator ','\nset key bottom right\nset xlabel 'epoch'\nset ylabel 'log-likelihood'\n";
  s += "plot ";
  bool first = true;
  for (Algorithm a : algorithms) {
    const std::string name = to_string(a);
    const std::string filter = "(strcol(1) eq '" + name + "' ? $";
    if (!first) s += ", \\\n     ";
    first = false;
    s += "'" + csv_path + "' using 2:" + filter + "3 : 1/0) with lines title '" + name + " train'";
    if (with_test)
      s += ", \\\n     '" + csv_path + "' using 2:" + filter + "4 : 1/0) with lines dt 2 title '" + name + " test'";
  }
  s += "\npause -1\n";
  return s;
}

}  // namespace normalgraph
