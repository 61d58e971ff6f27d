#include "normalgraph/graph.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <string>

namespace normalgraph {

Matrix uniform_rows(std::size_t rows, std::size_t cols) {
  Alphabet r(rows), c(cols);
  return Matrix::Constant(static_cast<Eigen::Index>(r.size()), static_cast<Eigen::Index>(c.size()),
                          1.0 / static_cast<double>(cols));
}

bool is_row_stochastic(const Matrix& m) {
  if (m.rows() == 0 || m.cols() == 0) return false;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      const double x = m(i, j);
      if (!(x >= 0.0 && x <= 1.0)) return false;
    }
    if (std::abs(m.row(i).sum() - 1.0) > kNormTolerance) return false;
  }
  return true;
}

const Variable* GraphSpec::find_variable(const std::string& name) const {
  auto it = std::find_if(variables.begin(), variables.end(), [&](const Variable& v) { return v.name == name; });
  return it == variables.end() ? nullptr : &*it;
}

SisoBlock* GraphSpec::find_block(const std::string& name) {
  for (auto& b : blocks)
    if (b.block.name == name) return &b.block;
  return nullptr;
}

const SisoBlock* GraphSpec::find_block(const std::string& name) const {
  return const_cast<GraphSpec*>(this)->find_block(name);
}

SourceBlock* GraphSpec::find_source(const std::string& name) {
  for (auto& s : sources)
    if (s.source.name == name) return &s.source;
  return nullptr;
}

std::vector<std::string> GraphSpec::terminals() const {
  std::set<std::string> consumed;
  for (const auto& b : blocks) consumed.insert(b.input);
  for (const auto& d : diverters) consumed.insert(d.inputs.begin(), d.inputs.end());
  std::vector<std::string> out;
  for (const auto& v : variables)
    if (!consumed.count(v.name)) out.push_back(v.name);
  return out;
}

namespace {

std::size_t checked_product(const std::vector<std::size_t>& sizes, std::size_t j) {
  if (sizes.empty()) throw InvalidIndex("product space needs at least one factor");
  if (j < 1 || j > sizes.size())
    throw InvalidIndex("factor index " + std::to_string(j) + " outside 1.." + std::to_string(sizes.size()));
  std::size_t total = 1;
  for (std::size_t m : sizes) total *= Alphabet(m).size();
  return total;
}

// Digit of factor j (0-based) in the row-major product index r.
std::size_t digit(const std::vector<std::size_t>& sizes, std::size_t r, std::size_t j) {
  std::size_t stride = 1;
  for (std::size_t k = sizes.size(); k-- > j + 1;) stride *= sizes[k];
  return (r / stride) % sizes[j];
}

std::string sizes_label(const std::vector<std::size_t>& sizes) {
  std::string s;
  for (std::size_t m : sizes) s += (s.empty() ? "" : "x") + std::to_string(m);
  return s;
}

}  // namespace

SisoBlock build_projector(const std::vector<std::size_t>& sizes, std::size_t j) {
  const std::size_t total = checked_product(sizes, j);
  const std::size_t mj = sizes[j - 1];
  Matrix m = Matrix::Zero(static_cast<Eigen::Index>(total), static_cast<Eigen::Index>(mj));
  for (std::size_t r = 0; r < total; ++r)
    m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(digit(sizes, r, j - 1))) = 1.0;
  return {"projector(" + sizes_label(sizes) + ";" + std::to_string(j) + ")", std::move(m), false};
}

SisoBlock build_expander(const std::vector<std::size_t>& sizes, std::size_t j) {
  const std::size_t total = checked_product(sizes, j);
  const std::size_t mj = sizes[j - 1];
  const double weight = static_cast<double>(mj) / static_cast<double>(total);
  Matrix m = Matrix::Zero(static_cast<Eigen::Index>(mj), static_cast<Eigen::Index>(total));
  for (std::size_t r = 0; r < total; ++r)
    m(static_cast<Eigen::Index>(digit(sizes, r, j - 1)), static_cast<Eigen::Index>(r)) = weight;
  return {"expander(" + sizes_label(sizes) + ";" + std::to_string(j) + ")", std::move(m), false};
}

namespace {

struct UnionFind {
  std::vector<std::size_t> parent;
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  bool unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent[a] = b;
    return true;
  }
};

}  // namespace

std::vector<Violation> validate(const GraphSpec& g) {
  std::vector<Violation> out;
  auto report = [&](ViolationKind k, std::string msg) { out.push_back({k, std::move(msg)}); };

  std::map<std::string, std::size_t> sizes;
  for (const auto& v : g.variables) {
    if (!sizes.emplace(v.name, v.size).second) report(ViolationKind::duplicate_name, "duplicate variable '" + v.name + "'");
    if (v.size == 0) report(ViolationKind::alphabet_mismatch, "variable '" + v.name + "' has an empty alphabet");
  }

  // Node ids: sources, then blocks, then diverters.
  std::vector<std::string> node_names;
  for (const auto& s : g.sources) node_names.push_back(s.source.name);
  for (const auto& b : g.blocks) node_names.push_back(b.block.name);
  for (const auto& d : g.diverters) node_names.push_back(d.name);
  {
    std::set<std::string> seen;
    for (const auto& n : node_names)
      if (!seen.insert(n).second) report(ViolationKind::duplicate_name, "duplicate node name '" + n + "'");
  }

  std::map<std::string, std::vector<std::size_t>> producers, consumers;
  auto attach = [&](const std::string& var, std::size_t node, bool produces, std::optional<std::size_t> expected) {
    auto it = sizes.find(var);
    if (it == sizes.end()) {
      report(ViolationKind::unknown_variable, "node '" + node_names[node] + "' references unknown variable '" + var + "'");
      return;
    }
    (produces ? producers : consumers)[var].push_back(node);
    if (expected && *expected != it->second)
      report(ViolationKind::alphabet_mismatch, "alphabet mismatch: node '" + node_names[node] + "' expects size " +
                                                   std::to_string(*expected) + " on variable '" + var + "' of size " +
                                                   std::to_string(it->second));
  };

  std::size_t id = 0;
  for (const auto& s : g.sources) {
    attach(s.output, id, true, s.source.prior.size());
    ++id;
  }
  for (const auto& b : g.blocks) {
    const Matrix& t = b.block.theta;
    if (t.rows() == 0 || t.cols() == 0) {
      report(ViolationKind::invalid_matrix, "block '" + b.block.name + "' has an empty matrix");
    } else {
      if (!is_row_stochastic(t)) report(ViolationKind::invalid_matrix, "block '" + b.block.name + "' is not row-stochastic");
    }
    attach(b.input, id, false, static_cast<std::size_t>(t.rows()));
    attach(b.output, id, true, static_cast<std::size_t>(t.cols()));
    ++id;
  }
  for (const auto& d : g.diverters) {
    if (d.inputs.empty() || d.inputs.size() + d.outputs.size() < 2)
      report(ViolationKind::malformed_node, "diverter '" + d.name + "' needs an inbound replica and degree >= 2");
    std::optional<std::size_t> shared;
    for (const auto& v : d.inputs)
      if (auto it = sizes.find(v); it != sizes.end() && !shared) shared = it->second;
    for (const auto& v : d.outputs)
      if (auto it = sizes.find(v); it != sizes.end() && !shared) shared = it->second;
    for (const auto& v : d.inputs) attach(v, id, false, shared);
    for (const auto& v : d.outputs) attach(v, id, true, shared);
    ++id;
  }

  for (const auto& v : g.variables) {
    const auto p = producers.find(v.name);
    const std::size_t np = p == producers.end() ? 0 : p->second.size();
    if (np == 0) report(ViolationKind::dangling_edge, "dangling edge: variable '" + v.name + "' has no producer");
    if (np > 1) report(ViolationKind::multiple_producers, "variable '" + v.name + "' has more than one producer");
    const auto c = consumers.find(v.name);
    if (c != consumers.end() && c->second.size() > 1)
      report(ViolationKind::multiple_consumers, "variable '" + v.name + "' feeds more than one node (use a diverter)");
  }

  // Undirected node graph: one edge per variable with both ends attached.
  UnionFind uf(node_names.size());
  std::set<std::pair<std::size_t, std::size_t>> pairs;
  bool cycle = false;
  for (const auto& v : g.variables) {
    auto p = producers.find(v.name);
    auto c = consumers.find(v.name);
    if (p == producers.end() || c == consumers.end()) continue;
    for (std::size_t a : p->second)
      for (std::size_t b : c->second) {
        if (!pairs.insert({std::min(a, b), std::max(a, b)}).second)
          report(ViolationKind::parallel_edges,
                 "nodes '" + node_names[a] + "' and '" + node_names[b] + "' are joined by more than one edge");
        if (!uf.unite(a, b)) cycle = true;
      }
  }
  if (cycle) report(ViolationKind::cycle, "cycle detected: the graph must be cycle-free");
  return out;
}

void require_valid(const GraphSpec& g) {
  const auto violations = validate(g);
  if (violations.empty()) return;
  std::string msg = "invalid graph:";
  for (const auto& v : violations) msg += "\n  " + v.message;
  throw InvalidGraph(msg);
}

GraphSpec split_variable(const GraphSpec& g, const std::string& variable, const std::optional<std::string>& tap) {
  const Variable* v = g.find_variable(variable);
  if (!v) throw UnknownVariable("cannot split unknown variable '" + variable + "'");
  const std::size_t size = v->size;

  GraphSpec out = g;
  bool consumed = false;
  for (const auto& b : g.blocks) consumed |= b.input == variable;
  for (const auto& d : g.diverters)
    for (const auto& in : d.inputs) consumed |= in == variable;
  for (const auto& d : g.diverters)
    for (const auto& o : d.outputs)
      if (o == variable && !consumed) throw InvalidGraph("'" + variable + "' is already a diverter tap");

  const std::string tap_name = tap.value_or(variable + ".1");
  const std::string downstream = variable + ".2";
  for (const auto& name : {tap_name, downstream})
    if (g.find_variable(name)) throw InvalidGraph("split would shadow existing variable '" + name + "'");

  for (auto& b : out.blocks)
    if (b.input == variable) b.input = downstream;
  for (auto& d : out.diverters)
    for (auto& in : d.inputs)
      if (in == variable) in = downstream;

  out.variables.push_back({tap_name, size});
  out.variables.push_back({downstream, size});
  out.diverters.push_back({"split:" + variable, {variable}, {tap_name, downstream}});
  return out;
}

}  // namespace normalgraph
