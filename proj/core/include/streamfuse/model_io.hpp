#pragma once

#include <string>

#include "streamfuse/types.hpp"

namespace streamfuse {

// Versioned, line-oriented model format:
//
//   STREAMFUSE-MODEL v1 u=<u> M=<M> acc=<float> partition=<id>
//   RULE pop=<float> weight=<float>
//   C <u floats>
//   SINV
//   <u rows of u floats>
//   W
//   <u+1 rows of M floats>
//   ... one RULE block per rule ...
//
// Floats carry 17 significant digits so a parse of the serialized text
// reproduces the exact double values.

std::string serialize_model(const Model& model);

/// Inverse of serialize_model. Throws ParseError on malformed input.
/// samples_seen / samples_trained are not part of the v1 format; they are
/// carried by the training manifest instead.
Model parse_model(const std::string& text);

void write_model_file(const Model& model, const std::string& path);
Model read_model_file(const std::string& path);

/// Canonical per-partition model filename, e.g. "model_3.sfm".
std::string model_filename(int partition_id);

}  // namespace streamfuse
