// normalgraph: sample, train, evaluate and run the benchmark experiments on
// discrete normal-form factor graphs.

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "normalgraph/csv.hpp"
#include "normalgraph/experiments.hpp"
#include "normalgraph/graph_io.hpp"
#include "normalgraph/learning.hpp"
#include "normalgraph/synthgen.hpp"

namespace ng = normalgraph;

namespace {

struct Options {
  std::string graph;
  std::string data;
  std::string out;
  std::string learned;
  std::string algo = "all";
  std::size_t samples = 100;
  std::optional<std::size_t> samples_override;
  std::optional<std::size_t> epochs;
  std::optional<std::size_t> nit;
  double delta = 1e-6;
  std::optional<double> split;
  std::uint64_t seed = 1;
  std::vector<std::size_t> ms_override;
  std::string dump_coefficients;
  std::string emit_plot;
  std::optional<double> tol;
  std::string schedule = "two-pass";
  std::string experiment;
  int variant = 1;
  std::size_t mx = 4, my = 3;
  double ex = 1.0, ey = 1.0;
  std::size_t iterations = 100;
  bool nit_sweep = false;
  std::size_t repetitions = 10;
};

std::vector<ng::Algorithm> algorithms(const std::string& spec) {
  if (spec == "all") return {ng::Algorithm::ml, ng::Algorithm::kl, ng::Algorithm::vit, ng::Algorithm::var};
  std::vector<ng::Algorithm> out;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(ng::parse_algorithm(item));
  return out;
}

std::string with_suffix(const std::string& path, const std::string& suffix) {
  std::filesystem::path p(path);
  return (p.parent_path() / (p.stem().string() + suffix + p.extension().string())).string();
}

void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-")
    std::cout << text;
  else
    ng::write_text_file(path, text);
}

ng::TrainingData load_training_data(const ng::GraphSpec& g, const ng::SampleSet& samples, double split) {
  const auto terminals = g.terminals();
  const std::set<std::string> known(terminals.begin(), terminals.end());
  for (const auto& v : samples.variables)
    if (!known.count(v)) throw ng::UnknownVariable("dataset column '" + v + "' is not a terminal of the graph");
  if (!(split >= 0.0 && split <= 1.0)) throw std::invalid_argument("--split must be in [0, 1]");
  const auto n = samples.rows.size();
  return ng::to_training_data(samples, static_cast<std::size_t>(std::llround(split * static_cast<double>(n))));
}

ng::SampleSet load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ng::IoError("cannot open dataset '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ng::parse_dataset(ss.str(), path);
}

std::vector<std::string> header_comments(const Options& o, const std::string& what) {
  return {"seed=" + std::to_string(o.seed), "run=" + what};
}

void write_training_outputs(const Options& o, const std::vector<ng::AlgorithmRun>& runs,
                            const std::vector<std::string>& comments, const std::string& results_path,
                            const std::string& coef_path, const std::string& plot_path,
                            const std::vector<ng::Algorithm>& algos) {
  const auto rows = ng::result_rows(runs);
  emit(results_path, ng::format_results(rows, comments));
  if (!coef_path.empty()) ng::write_text_file(coef_path, ng::format_coefficients(ng::coefficient_rows(runs), comments));
  if (!plot_path.empty()) {
    const bool with_test = std::any_of(rows.begin(), rows.end(), [](const auto& r) { return r.test_loglik.has_value(); });
    ng::write_text_file(plot_path, ng::gnuplot_script(results_path.empty() ? "results.csv" : results_path, algos, with_test));
  }
  (void)o;
}

int cmd_generate(const Options& o) {
  const ng::GraphSpec g = ng::read_graph_file(o.graph);
  ng::require_valid(g);
  const ng::SampleSet s = ng::ancestral_sample(g, o.samples, o.seed);
  emit(o.out, ng::format_dataset(s, {"seed=" + std::to_string(o.seed), "graph=" + ng::graph_hash(g)}));
  return 0;
}

int cmd_train(const Options& o) {
  const ng::GraphSpec g = ng::read_graph_file(o.graph);
  ng::require_valid(g);
  const ng::TrainingData data = load_training_data(g, load_dataset(o.data), o.split.value_or(1.0));
  ng::TrainConfig tc;
  tc.epochs = o.epochs.value_or(60);
  tc.inner_iterations = o.nit.value_or(3);
  tc.delta = o.delta;
  tc.seed = o.seed;
  tc.tol = o.tol;
  tc.schedule = o.schedule == "flooding" ? ng::Schedule::flooding : ng::Schedule::two_pass;
  tc.keep_snapshots = !o.dump_coefficients.empty();
  const auto algos = algorithms(o.algo);
  const auto runs = ng::train_all(g, data, algos, tc);
  write_training_outputs(o, runs, {"seed=" + std::to_string(o.seed), "graph=" + ng::graph_hash(g)}, o.out,
                         o.dump_coefficients, o.emit_plot, algos);
  if (!o.learned.empty()) {
    for (const auto& r : runs) {
      const std::string path = runs.size() == 1 ? o.learned : with_suffix(o.learned, "." + ng::to_string(r.algorithm));
      ng::write_graph_file(r.report.learned, path);
    }
  }
  for (const auto& r : runs) {
    std::size_t skipped = r.report.epochs.empty() ? 0 : r.report.epochs.back().skipped_samples;
    if (skipped) std::cerr << "warning: " << ng::to_string(r.algorithm) << ": " << skipped << " samples contradict the learned model\n";
  }
  return 0;
}

int cmd_eval(const Options& o) {
  const ng::GraphSpec g = ng::read_graph_file(o.graph);
  const ng::Propagator prop(g);
  const ng::SampleSet samples = load_dataset(o.data);
  const ng::TrainingData data = load_training_data(g, samples, 1.0);
  std::vector<ng::MessageState> states;
  for (std::size_t s = 0; s < data.samples.size(); ++s) {
    try {
      states.push_back(prop.run(data.samples[s]));
    } catch (const ng::ContradictoryEvidence& e) {
      throw ng::ContradictoryEvidence("sample " + std::to_string(s + 1) + ": " + e.what(), e.variable(),
                                      static_cast<long>(s));
    }
  }
  const double ll = ng::aggregated_log_likelihood(states, data.terminals);
  emit(o.out, "loglik," + ng::format_real(ll) + "\n");
  return 0;
}

int cmd_experiment(const Options& o) {
  ng::ExperimentConfig cfg;
  cfg.experiment = o.experiment;
  cfg.variant = o.variant;
  cfg.hidden_sizes = o.ms_override;
  cfg.samples = o.samples_override;
  cfg.epochs = o.epochs;
  cfg.inner_iterations = o.nit;
  cfg.mx = o.mx;
  cfg.my = o.my;
  cfg.ex = o.ex;
  cfg.ey = o.ey;
  cfg.algorithms = algorithms(o.algo);
  cfg.split = o.split;
  cfg.seed = o.seed;
  cfg.delta = o.delta;
  cfg.tol = o.tol;
  cfg.keep_snapshots = !o.dump_coefficients.empty();

  if (o.nit_sweep) {
    const auto rows = ng::run_nit_sweep(cfg, {1, 3, 5, 10, 20}, o.repetitions);
    emit(o.out, ng::format_sweep(rows, header_comments(o, "nit-sweep")));
    return 0;
  }
  if (cfg.experiment == "single-block") {
    const auto rows = ng::run_single_block(cfg.mx, cfg.my, o.samples_override.value_or(100), cfg.ex, cfg.ey,
                                           o.nit.value_or(o.iterations), cfg.seed, cfg.delta);
    emit(o.out, ng::format_single_block(rows, header_comments(o, "single-block")));
    return 0;
  }
  if (cfg.experiment == "deep") {
    const auto run = ng::run_deep_experiment(cfg);
    write_training_outputs(o, run.runs, header_comments(o, "deep"), o.out, o.dump_coefficients, o.emit_plot,
                           cfg.algorithms);
    return 0;
  }
  if (cfg.experiment == "tree") {
    const auto runs = ng::run_tree_experiment(cfg);
    for (const auto& run : runs) {
      const bool many = runs.size() > 1;
      const auto suffix = many ? "_" + run.label : std::string();
      const auto path = [&](const std::string& p) { return p.empty() || !many || p == "-" ? p : with_suffix(p, suffix); };
      write_training_outputs(o, run.runs, header_comments(o, "tree-" + std::to_string(cfg.variant) + "-" + run.label),
                             path(o.out), path(o.dump_coefficients), path(o.emit_plot), cfg.algorithms);
    }
    return 0;
  }
  throw std::invalid_argument("unknown experiment '" + cfg.experiment + "' (expected single-block, tree or deep)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Discrete normal-form factor graphs: sampling, propagation and learning"};
  app.require_subcommand(1);
  Options o;

  const auto add_training_flags = [&o](CLI::App* c) {
    c->add_option("--algo", o.algo, "ml, kl, vit, var, a comma list, or all")->capture_default_str();
    c->add_option("--epochs", o.epochs, "EM epochs");
    c->add_option("--nit", o.nit, "ML/KL iterations per M-step");
    c->add_option("--delta", o.delta, "VIT/VAR floor")->capture_default_str();
    c->add_option("--split", o.split, "training fraction in [0, 1]")->check(CLI::Range(0.0, 1.0));
    c->add_option("--seed", o.seed, "random seed")->capture_default_str();
    c->add_option("--out", o.out, "results CSV (stdout if omitted)");
    c->add_option("--dump-coefficients", o.dump_coefficients, "per-epoch parameter CSV");
    c->add_option("--emit-plot", o.emit_plot, "gnuplot script path");
    c->add_option("--tol", o.tol, "stop once the log-likelihood changes less than this");
  };

  auto* gen = app.add_subcommand("generate", "sample a dataset from a graph");
  gen->add_option("--graph", o.graph, "graph file")->required();
  gen->add_option("-n,--samples", o.samples, "number of samples")->capture_default_str();
  gen->add_option("--seed", o.seed, "random seed")->capture_default_str();
  gen->add_option("--out", o.out, "dataset CSV (stdout if omitted)");

  auto* train = app.add_subcommand("train", "learn the trainable parameters of a graph");
  train->add_option("--graph", o.graph, "graph file")->required();
  train->add_option("--data", o.data, "dataset CSV")->required();
  train->add_option("--learned", o.learned, "learned graph file (one per algorithm when several run)");
  train->add_option("--schedule", o.schedule, "two-pass or flooding")
      ->check(CLI::IsMember({"two-pass", "flooding"}))
      ->capture_default_str();
  add_training_flags(train);

  auto* eval = app.add_subcommand("eval", "aggregated log-likelihood of a dataset under a graph");
  eval->add_option("--graph", o.graph, "graph file")->required();
  eval->add_option("--data", o.data, "dataset CSV")->required();
  eval->add_option("--out", o.out, "output file (stdout if omitted)");

  auto* exp = app.add_subcommand("experiment", "run a benchmark experiment");
  exp->add_option("name", o.experiment, "single-block, tree or deep")->required();
  exp->add_option("--variant", o.variant, "tree experiment 1, 2 or 3")->check(CLI::Range(1, 3))->capture_default_str();
  exp->add_option("--ms-override", o.ms_override, "hidden alphabet sizes (tree)")->delimiter(',');
  exp->add_option("-n,--samples", o.samples_override, "number of samples");
  exp->add_option("--mx", o.mx, "single-block input size")->capture_default_str();
  exp->add_option("--my", o.my, "single-block output size")->capture_default_str();
  exp->add_option("--ex", o.ex, "forward sharpening exponent")->capture_default_str();
  exp->add_option("--ey", o.ey, "backward sharpening exponent")->capture_default_str();
  exp->add_option("--iterations", o.iterations, "single-block ML/KL iterations")->capture_default_str();
  exp->add_flag("--nit-sweep", o.nit_sweep, "final ML log-likelihood for Nit in {1,3,5,10,20}");
  exp->add_option("--repetitions", o.repetitions, "repetitions per Nit in the sweep")->capture_default_str();
  add_training_flags(exp);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*gen) return cmd_generate(o);
    if (*train) return cmd_train(o);
    if (*eval) return cmd_eval(o);
    if (*exp) return cmd_experiment(o);
  } catch (const ng::Error& e) {
    std::cerr << "error [" << e.category() << "]: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error [invalid-argument]: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
