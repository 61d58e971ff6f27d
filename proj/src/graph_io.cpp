#include "normalgraph/graph_io.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace normalgraph {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& field, const std::string& what) {
  throw ParseError("field '" + field + "': " + what);
}

const json& member(const json& obj, const char* key, const std::string& path) {
  if (!obj.is_object()) fail(path, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) fail(path + "." + key, "missing");
  return *it;
}

std::string get_string(const json& obj, const char* key, const std::string& path) {
  const json& v = member(obj, key, path);
  if (!v.is_string()) fail(path + "." + key, "expected a string");
  return v.get<std::string>();
}

std::size_t get_size(const json& v, const std::string& path) {
  if (!v.is_number_integer() || v.get<long long>() < 1) fail(path, "expected a positive integer");
  return v.get<std::size_t>();
}

bool get_trainable(const json& obj, const std::string& path, bool fallback) {
  auto it = obj.find("trainable");
  if (it == obj.end()) return fallback;
  if (!it->is_boolean()) fail(path + ".trainable", "expected true or false");
  return it->get<bool>();
}

std::vector<std::string> get_names(const json& obj, const char* key, const std::string& path, bool required) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    if (required) fail(path + "." + key, "missing");
    return {};
  }
  if (!it->is_array()) fail(path + "." + key, "expected an array of variable names");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < it->size(); ++i) {
    if (!(*it)[i].is_string()) fail(path + "." + key + "[" + std::to_string(i) + "]", "expected a string");
    out.push_back((*it)[i].get<std::string>());
  }
  return out;
}

Vector get_vector(const json& v, const std::string& path) {
  if (!v.is_array() || v.empty()) fail(path, "expected a non-empty array of numbers");
  Vector out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) fail(path + "[" + std::to_string(i) + "]", "expected a number");
    out[static_cast<Eigen::Index>(i)] = v[i].get<double>();
  }
  return out;
}

std::size_t size_of(const GraphSpec& g, const std::string& var, const std::string& path) {
  const Variable* v = g.find_variable(var);
  if (!v) fail(path, "unknown variable '" + var + "'");
  return v->size;
}

}  // namespace

GraphSpec graph_from_json(const json& j) {
  if (!j.is_object()) fail("<root>", "expected an object");
  GraphSpec g;

  const json& vars = member(j, "variables", "<root>");
  if (!vars.is_array()) fail("variables", "expected an array");
  for (std::size_t i = 0; i < vars.size(); ++i) {
    const std::string path = "variables[" + std::to_string(i) + "]";
    g.variables.push_back({get_string(vars[i], "name", path), get_size(member(vars[i], "size", path), path + ".size")});
  }

  // Diverter taps may be implicit, so declare them before anything else.
  const json empty = json::array();
  const json& divs = j.contains("diverters") ? j["diverters"] : empty;
  if (!divs.is_array()) fail("diverters", "expected an array");
  for (std::size_t i = 0; i < divs.size(); ++i) {
    const std::string path = "diverters[" + std::to_string(i) + "]";
    const std::string var = get_string(divs[i], "variable", path);
    DiverterNode d;
    d.name = divs[i].contains("name") ? get_string(divs[i], "name", path) : "diverter:" + var;
    d.inputs.push_back(var);
    for (auto& extra : get_names(divs[i], "joins", path, false)) d.inputs.push_back(extra);
    d.outputs = get_names(divs[i], "taps", path, true);
    const std::size_t size = size_of(g, var, path + ".variable");
    for (const auto& name : d.inputs)
      if (!g.find_variable(name)) g.variables.push_back({name, size});
    for (const auto& name : d.outputs)
      if (!g.find_variable(name)) g.variables.push_back({name, size});
    g.diverters.push_back(std::move(d));
  }

  const json& srcs = j.contains("sources") ? j["sources"] : empty;
  if (!srcs.is_array()) fail("sources", "expected an array");
  for (std::size_t i = 0; i < srcs.size(); ++i) {
    const std::string path = "sources[" + std::to_string(i) + "]";
    const std::string var = get_string(srcs[i], "variable", path);
    const std::size_t size = size_of(g, var, path + ".variable");
    const json& prior = member(srcs[i], "prior", path);
    Distribution p = Distribution::uniform(size);
    if (prior.is_string()) {
      if (prior.get<std::string>() != "uniform") fail(path + ".prior", "expected \"uniform\" or an array");
    } else {
      Vector v = get_vector(prior, path + ".prior");
      try {
        p = normalize(v);
      } catch (const std::exception& e) {
        fail(path + ".prior", e.what());
      }
      if (std::abs(v.sum() - 1.0) > 1e-9) fail(path + ".prior", "entries must sum to one");
    }
    g.sources.push_back({{get_string(srcs[i], "name", path), std::move(p), get_trainable(srcs[i], path, true)}, var});
  }

  const json& blks = j.contains("blocks") ? j["blocks"] : empty;
  if (!blks.is_array()) fail("blocks", "expected an array");
  for (std::size_t i = 0; i < blks.size(); ++i) {
    const std::string path = "blocks[" + std::to_string(i) + "]";
    BlockNode b;
    b.block.name = get_string(blks[i], "name", path);
    b.input = get_string(blks[i], "from", path);
    b.output = get_string(blks[i], "to", path);
    const json& m = member(blks[i], "matrix", path);
    b.block.trainable = get_trainable(blks[i], path, true);
    if (m.is_string()) {
      if (m.get<std::string>() != "uniform") fail(path + ".matrix", "expected \"uniform\", an array or a builder");
      b.block.theta = uniform_rows(size_of(g, b.input, path + ".from"), size_of(g, b.output, path + ".to"));
    } else if (m.is_object()) {
      const std::string kind = get_string(m, "builder", path + ".matrix");
      const json& sz = member(m, "sizes", path + ".matrix");
      if (!sz.is_array() || sz.empty()) fail(path + ".matrix.sizes", "expected a non-empty array");
      std::vector<std::size_t> sizes;
      for (std::size_t k = 0; k < sz.size(); ++k)
        sizes.push_back(get_size(sz[k], path + ".matrix.sizes[" + std::to_string(k) + "]"));
      const std::size_t jj = get_size(member(m, "j", path + ".matrix"), path + ".matrix.j");
      try {
        if (kind == "expander")
          b.block.theta = build_expander(sizes, jj).theta;
        else if (kind == "projector")
          b.block.theta = build_projector(sizes, jj).theta;
        else
          fail(path + ".matrix.builder", "expected \"expander\" or \"projector\"");
      } catch (const InvalidIndex& e) {
        fail(path + ".matrix.j", e.what());
      }
      b.block.trainable = false;
    } else {
      if (!m.is_array() || m.empty()) fail(path + ".matrix", "expected a non-empty array of rows");
      const std::size_t cols = m[0].is_array() ? m[0].size() : 0;
      Matrix t(static_cast<Eigen::Index>(m.size()), static_cast<Eigen::Index>(cols));
      for (std::size_t r = 0; r < m.size(); ++r) {
        const std::string rp = path + ".matrix[" + std::to_string(r) + "]";
        Vector row = get_vector(m[r], rp);
        if (static_cast<std::size_t>(row.size()) != cols) fail(rp, "rows must all have the same length");
        t.row(static_cast<Eigen::Index>(r)) = row.transpose();
      }
      b.block.theta = std::move(t);
    }
    g.blocks.push_back(std::move(b));
  }
  return g;
}

json graph_to_json(const GraphSpec& g) {
  json j;
  j["variables"] = json::array();
  for (const auto& v : g.variables) j["variables"].push_back({{"name", v.name}, {"size", v.size}});

  j["sources"] = json::array();
  for (const auto& s : g.sources)
    j["sources"].push_back({{"name", s.source.name},
                            {"variable", s.output},
                            {"prior", s.source.prior.to_vector()},
                            {"trainable", s.source.trainable}});

  j["blocks"] = json::array();
  for (const auto& b : g.blocks) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < b.block.theta.rows(); ++r) {
      json row = json::array();
      for (Eigen::Index c = 0; c < b.block.theta.cols(); ++c) row.push_back(b.block.theta(r, c));
      rows.push_back(std::move(row));
    }
    j["blocks"].push_back({{"name", b.block.name},
                           {"from", b.input},
                           {"to", b.output},
                           {"matrix", std::move(rows)},
                           {"trainable", b.block.trainable}});
  }

  j["diverters"] = json::array();
  for (const auto& d : g.diverters) {
    json dj = {{"name", d.name}, {"variable", d.inputs.empty() ? "" : d.inputs.front()}, {"taps", d.outputs}};
    if (d.inputs.size() > 1) dj["joins"] = std::vector<std::string>(d.inputs.begin() + 1, d.inputs.end());
    j["diverters"].push_back(std::move(dj));
  }
  return j;
}

GraphSpec parse_graph(const std::string& text, const std::string& origin) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(origin + ": " + e.what());
  }
  try {
    return graph_from_json(j);
  } catch (const ParseError& e) {
    throw ParseError(origin + ": " + e.what());
  }
}

GraphSpec read_graph_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open graph file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_graph(ss.str(), path);
}

void write_graph_file(const GraphSpec& g, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write graph file '" + path + "'");
  out << graph_to_json(g).dump(2) << "\n";
  if (!out) throw IoError("failed writing graph file '" + path + "'");
}

std::string graph_hash(const GraphSpec& g) {
  const std::string s = graph_to_json(g).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace normalgraph
