#pragma once

// Model files: JSON documents
//
//   {"schema_version": 1, "n": 1, "T": 1.0,
//    "beta": [["0.2*x1"]], "lambda": "1",
//    "jumps": {"type": "atoms", "atoms": [{"weight": 1, "phi": ["0.1*x1"]}]},
//    "description": "..."}
//
// or "jumps": {"type": "density", "n_z": 64, "phi": ["z*x1"]}. Omitting
// "jumps" gives a single zero atom.

#include <string>

#include "jdconvex/model.hpp"

namespace jdconvex {

inline constexpr int kSchemaVersion = 1;

/// Throws SchemaError naming the offending field.
ModelSpec parse_model(const std::string& json_text);
ModelSpec load_model(const std::string& path);
std::string model_to_json(const ModelSpec& m);

/// Writes `content` to `path` through a temporary file and a rename.
void write_file_atomic(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

/// Shortest round-trip decimal form of v.
std::string format_double(double v);

}  // namespace jdconvex
