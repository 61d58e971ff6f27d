#pragma once

// JSON graph files:
//   variables: [{name, size}]
//   sources:   [{name, variable, prior: [..] | "uniform", trainable}]
//   blocks:    [{name, from, to, matrix: [[..]..] | "uniform" |
//                {builder: "expander"|"projector", sizes: [..], j}, trainable}]
//   diverters: [{name?, variable, taps: [..], joins?: [..]}]
// Matrices are row-major with one row per input symbol. Taps not declared in
// `variables` inherit the diverter variable's size. `joins` lists extra
// inbound replicas (product-space junctions).

#include <string>

#include <json.hpp>

#include "normalgraph/graph.hpp"

namespace normalgraph {

GraphSpec graph_from_json(const nlohmann::json& j);
nlohmann::json graph_to_json(const GraphSpec& g);

GraphSpec read_graph_file(const std::string& path);
void write_graph_file(const GraphSpec& g, const std::string& path);

/// Parses text; errors carry `origin` (usually the file name).
GraphSpec parse_graph(const std::string& text, const std::string& origin = "<graph>");

/// 64-bit FNV-1a of the canonical JSON dump, printed as hex.
std::string graph_hash(const GraphSpec& g);

}  // namespace normalgraph
