#include "normalgraph/synthgen.hpp"

#include <algorithm>
#include <map>
#include <optional>

#include "normalgraph/random.hpp"

namespace normalgraph {

std::uint64_t substream_seed(std::uint64_t seed, std::string_view stream) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : stream) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::uint64_t z = seed ^ h;
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::size_t RandomStream::categorical(const Vector& weights) {
  const double total = weights.sum();
  if (!(total > 0.0)) throw AllZeroVector("cannot sample from all-zero weights");
  const double u = uniform() * total;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < weights.size(); ++i) {
    acc += weights[i];
    if (u < acc) return static_cast<std::size_t>(i);
  }
  // u landed on the rounding slack above the last cumulative sum.
  for (Eigen::Index i = weights.size(); i-- > 0;)
    if (weights[i] > 0.0) return static_cast<std::size_t>(i);
  return 0;
}

std::size_t SampleSet::column(const std::string& variable) const {
  auto it = std::find(variables.begin(), variables.end(), variable);
  if (it == variables.end()) throw UnknownVariable("sample set has no column '" + variable + "'");
  return static_cast<std::size_t>(it - variables.begin());
}

SampleSet ancestral_sample_all(const GraphSpec& g, std::size_t n_samples, std::uint64_t seed) {
  require_valid(g);
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < g.variables.size(); ++i) index[g.variables[i].name] = i;
  const std::size_t nv = g.variables.size();

  // Producer firing order: a node fires once all its inbound variables exist.
  struct Step {
    enum { source, block, diverter } kind;
    std::size_t node;
  };
  std::vector<Step> order;
  std::vector<bool> known(nv, false);
  std::vector<bool> done_s(g.sources.size()), done_b(g.blocks.size()), done_d(g.diverters.size());
  for (bool progress = true; progress;) {
    progress = false;
    for (std::size_t i = 0; i < g.sources.size(); ++i)
      if (!done_s[i]) {
        done_s[i] = progress = true;
        known[index.at(g.sources[i].output)] = true;
        order.push_back({Step::source, i});
      }
    for (std::size_t i = 0; i < g.blocks.size(); ++i)
      if (!done_b[i] && known[index.at(g.blocks[i].input)]) {
        done_b[i] = progress = true;
        known[index.at(g.blocks[i].output)] = true;
        order.push_back({Step::block, i});
      }
    for (std::size_t i = 0; i < g.diverters.size(); ++i) {
      const auto& d = g.diverters[i];
      if (done_d[i] || !std::all_of(d.inputs.begin(), d.inputs.end(), [&](const auto& v) { return known[index.at(v)]; }))
        continue;
      done_d[i] = progress = true;
      for (const auto& v : d.outputs) known[index.at(v)] = true;
      order.push_back({Step::diverter, i});
    }
  }
  for (std::size_t v = 0; v < nv; ++v)
    if (!known[v]) throw InvalidGraph("variable '" + g.variables[v].name + "' is not reachable from any source");

  // Which block produced each variable, for resolving multi-input diverters.
  std::map<std::string, const BlockNode*> produced_by;
  for (const auto& b : g.blocks) produced_by[b.output] = &b;

  std::vector<RandomStream> streams;
  streams.reserve(nv);
  for (const auto& v : g.variables) streams.emplace_back(seed, "sample:" + v.name);

  SampleSet out;
  out.seed = seed;
  for (const auto& v : g.variables) out.variables.push_back(v.name);
  out.rows.reserve(n_samples);
  std::vector<std::size_t> value(nv);
  std::vector<std::optional<std::size_t>> parent_symbol(nv);
  for (std::size_t n = 0; n < n_samples; ++n) {
    for (const Step& step : order) {
      switch (step.kind) {
        case Step::source: {
          const auto& s = g.sources[step.node];
          const std::size_t v = index.at(s.output);
          value[v] = streams[v].categorical(s.source.prior.values());
          break;
        }
        case Step::block: {
          const auto& b = g.blocks[step.node];
          const std::size_t in = index.at(b.input);
          const std::size_t v = index.at(b.output);
          parent_symbol[v] = value[in];
          value[v] = streams[v].categorical(b.block.theta.row(static_cast<Eigen::Index>(value[in])).transpose());
          break;
        }
        case Step::diverter: {
          const auto& d = g.diverters[step.node];
          std::size_t symbol = value[index.at(d.inputs.front())];
          if (d.inputs.size() > 1) {
            // Intersect the inbound rows: for expanders exactly one symbol survives.
            Vector w = Vector::Ones(static_cast<Eigen::Index>(g.find_variable(d.inputs.front())->size));
            for (const auto& in : d.inputs) {
              auto it = produced_by.find(in);
              if (it == produced_by.end()) {
                w = w.cwiseProduct(Distribution::delta(static_cast<std::size_t>(w.size()), value[index.at(in)]).values());
              } else {
                const std::size_t parent = index.at(it->second->input);
                w = w.cwiseProduct(
                    it->second->block.theta.row(static_cast<Eigen::Index>(value[parent])).transpose());
              }
            }
            symbol = streams[index.at(d.inputs.front())].categorical(w);
            for (const auto& in : d.inputs) value[index.at(in)] = symbol;
          }
          for (const auto& o : d.outputs) value[index.at(o)] = symbol;
          break;
        }
      }
    }
    out.rows.push_back(value);
  }
  return out;
}

SampleSet ancestral_sample(const GraphSpec& g, std::size_t n_samples, std::uint64_t seed) {
  SampleSet all = ancestral_sample_all(g, n_samples, seed);
  SampleSet out;
  out.seed = seed;
  out.variables = g.terminals();
  std::vector<std::size_t> cols;
  for (const auto& t : out.variables) cols.push_back(all.column(t));
  out.rows.reserve(all.rows.size());
  for (const auto& row : all.rows) {
    std::vector<std::size_t> r;
    for (std::size_t c : cols) r.push_back(row[c]);
    out.rows.push_back(std::move(r));
  }
  return out;
}

namespace {

Distribution random_distribution(RandomStream& rng, std::size_t m) {
  Vector u(static_cast<Eigen::Index>(m));
  do {
    for (Eigen::Index i = 0; i < u.size(); ++i) u[i] = rng.uniform();
  } while (!(u.sum() > 0.0));
  return normalize(u);
}

}  // namespace

BlockDataset random_message_pairs(std::size_t mx, std::size_t my, std::size_t n, double ex, double ey,
                                  std::uint64_t seed) {
  if (!(ex > 0.0) || !(ey > 0.0)) throw std::invalid_argument("sharpening exponents must be positive");
  RandomStream fs(seed, "pairs:forward"), bs(seed, "pairs:backward");
  BlockDataset data(mx, my);
  for (std::size_t k = 0; k < n; ++k) {
    Distribution f = sharpen(random_distribution(fs, mx), ex);
    Distribution b = sharpen(random_distribution(bs, my), ey);
    data.add(std::move(f), std::move(b));
  }
  return data;
}

Matrix random_row_stochastic(std::size_t mx, std::size_t my, std::uint64_t seed) {
  RandomStream rng(seed, "row-stochastic");
  Matrix m(static_cast<Eigen::Index>(Alphabet(mx).size()), static_cast<Eigen::Index>(Alphabet(my).size()));
  for (Eigen::Index l = 0; l < m.rows(); ++l) m.row(l) = random_distribution(rng, my).values().transpose();
  return m;
}

TrainingData to_training_data(const SampleSet& samples, std::size_t train_count) {
  TrainingData d;
  d.terminals = samples.variables;
  for (std::size_t n = 0; n < samples.rows.size(); ++n) {
    Evidence e;
    for (std::size_t c = 0; c < samples.variables.size(); ++c) e.hard(samples.variables[c], samples.rows[n][c]);
    d.samples.push_back(std::move(e));
    d.mask.push_back(n < train_count ? 1 : 0);
  }
  return d;
}

}  // namespace normalgraph
