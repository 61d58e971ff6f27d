#pragma once

// Test-only reference computations. Nothing here calls into propagation or
// learning; they enumerate joint tables or count co-occurrences directly.

#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "normalgraph/block_data.hpp"
#include "normalgraph/graph.hpp"
#include "normalgraph/propagation.hpp"

namespace oracle {

using normalgraph::Matrix;
using normalgraph::Vector;

/// A directed tree of categorical variables in ordinary Bayesian-network
/// form: variable 0 is the root, parent[k] < k for the rest.
struct BayesTree {
  std::vector<std::size_t> size;
  std::vector<int> parent;                  // -1 for the root
  Vector root_prior;
  std::vector<Matrix> cpt;                  // cpt[k](parent symbol, own symbol)
  std::vector<std::string> name;
};

inline Vector random_simplex(std::mt19937_64& rng, std::size_t n, bool allow_zero) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Vector v(static_cast<Eigen::Index>(n));
  for (auto& x : v) x = u(rng);
  if (allow_zero && n > 1 && u(rng) < 0.2) v[static_cast<Eigen::Index>(rng() % n)] = 0.0;
  return v / v.sum();
}

inline BayesTree random_tree(std::mt19937_64& rng, std::size_t max_vars = 6, std::size_t max_size = 4) {
  BayesTree t;
  const std::size_t n = 2 + rng() % (max_vars - 1);
  for (std::size_t k = 0; k < n; ++k) {
    t.size.push_back(1 + rng() % max_size);
    t.name.push_back("V" + std::to_string(k));
    t.parent.push_back(k == 0 ? -1 : static_cast<int>(rng() % k));
  }
  t.root_prior = random_simplex(rng, t.size[0], true);
  t.cpt.resize(n);
  for (std::size_t k = 1; k < n; ++k) {
    const std::size_t ps = t.size[static_cast<std::size_t>(t.parent[k])];
    t.cpt[k] = Matrix(static_cast<Eigen::Index>(ps), static_cast<Eigen::Index>(t.size[k]));
    for (std::size_t r = 0; r < ps; ++r) t.cpt[k].row(static_cast<Eigen::Index>(r)) = random_simplex(rng, t.size[k], true).transpose();
  }
  return t;
}

/// Normal-form wiring of a BayesTree. A variable with several consumers gets
/// a diverter; `observe_all` adds an extra tap on every non-leaf so each
/// base variable has a terminal replica named "<V>.obs" (leaves are
/// terminals already).
inline normalgraph::GraphSpec to_normal_graph(const BayesTree& t, bool observe_all) {
  using namespace normalgraph;
  GraphSpec g;
  const std::size_t n = t.size.size();
  std::vector<std::vector<std::size_t>> children(n);
  for (std::size_t k = 1; k < n; ++k) children[static_cast<std::size_t>(t.parent[k])].push_back(k);
  std::map<std::size_t, std::vector<std::string>> feeds;  // replica names read by each child
  for (std::size_t k = 0; k < n; ++k) {
    g.variables.push_back({t.name[k], t.size[k]});
    std::size_t consumers = children[k].size() + ((observe_all && !children[k].empty()) ? 1 : 0);
    if (consumers <= 1) {
      if (!children[k].empty()) feeds[k].push_back(t.name[k]);
      continue;
    }
    DiverterNode d{"div:" + t.name[k], {t.name[k]}, {}};
    for (std::size_t c = 0; c < children[k].size(); ++c) {
      const std::string r = t.name[k] + ":" + std::to_string(c + 1);
      g.variables.push_back({r, t.size[k]});
      d.outputs.push_back(r);
      feeds[k].push_back(r);
    }
    if (observe_all) {
      g.variables.push_back({t.name[k] + ".obs", t.size[k]});
      d.outputs.push_back(t.name[k] + ".obs");
    }
    g.diverters.push_back(std::move(d));
  }
  g.sources.push_back({{"prior", normalgraph::normalize(t.root_prior), true}, t.name[0]});
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t c = 0; c < children[k].size(); ++c) {
      const std::size_t child = children[k][c];
      g.blocks.push_back({{"cpt:" + t.name[child], t.cpt[child], true}, feeds[k][c], t.name[child]});
    }
  }
  return g;
}

/// Terminal replica carrying the data of base variable k.
inline std::string observed_name(const BayesTree& t, std::size_t k) {
  for (std::size_t j = 1; j < t.size.size(); ++j)
    if (t.parent[j] == static_cast<int>(k)) return t.name[k] + ".obs";
  return t.name[k];
}

/// Posterior of every base variable given per-variable likelihood vectors
/// (absent = all ones), by enumerating the full joint table. Returns an empty
/// vector when the evidence has zero probability.
inline std::vector<Vector> brute_force_posteriors(const BayesTree& t, const std::map<std::size_t, Vector>& likelihood) {
  const std::size_t n = t.size.size();
  std::vector<Vector> post(n);
  for (std::size_t k = 0; k < n; ++k) post[k] = Vector::Zero(static_cast<Eigen::Index>(t.size[k]));
  std::vector<std::size_t> x(n, 0);
  double total = 0.0;
  while (true) {
    double p = t.root_prior[static_cast<Eigen::Index>(x[0])];
    for (std::size_t k = 1; k < n; ++k)
      p *= t.cpt[k](static_cast<Eigen::Index>(x[static_cast<std::size_t>(t.parent[k])]), static_cast<Eigen::Index>(x[k]));
    for (const auto& [k, l] : likelihood) p *= l[static_cast<Eigen::Index>(x[k])];
    total += p;
    for (std::size_t k = 0; k < n; ++k) post[k][static_cast<Eigen::Index>(x[k])] += p;
    std::size_t k = 0;
    while (k < n && ++x[k] == t.size[k]) x[k++] = 0;
    if (k == n) break;
  }
  if (!(total > 0.0)) return {};
  for (auto& v : post) v /= total;
  return post;
}

/// Normalized co-occurrence table of (input, output) symbol pairs. Rows with
/// no occurrences are left at zero.
inline Matrix count_table(const std::vector<std::pair<std::size_t, std::size_t>>& pairs, std::size_t mx, std::size_t my) {
  Matrix c = Matrix::Zero(static_cast<Eigen::Index>(mx), static_cast<Eigen::Index>(my));
  for (auto [a, b] : pairs) c(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) += 1.0;
  for (Eigen::Index r = 0; r < c.rows(); ++r)
    if (c.row(r).sum() > 0) c.row(r) /= c.row(r).sum();
  return c;
}

/// Per-sample block log-likelihood written out as explicit double sums.
inline double loglik_by_hand(const Matrix& theta, const normalgraph::BlockDataset& d) {
  double total = 0.0;
  for (std::size_t n = 0; n < d.size(); ++n) {
    if (!d.mask()[n]) continue;
    double s = 0.0;
    for (std::size_t l = 0; l < d.input_size(); ++l)
      for (std::size_t m = 0; m < d.output_size(); ++m)
        s += d.forward()[n][l] * theta(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(m)) * d.backward()[n][m];
    total += std::log(s);
  }
  return total;
}

}  // namespace oracle
