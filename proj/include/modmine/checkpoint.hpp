#pragma once

#include <filesystem>

#include "modmine/embedder.hpp"
#include "modmine/metric.hpp"

namespace modmine {

// Plain-text checkpoint, one token per line after the headers:
//
//   modmine-checkpoint 1
//   [embedder]
//   input_dim = <n>                     (config echo, fixed key order)
//   num_branches = <n>
//   overlap_fraction = <real>
//   branch_hidden_dims = <n, n, ...>
//   joint_hidden_dim = <n>
//   output_dim = <n>
//   tied_branches = true|false
//   seed = <n>
//   [metric]
//   rows = <n>
//   cols = <n>
//   [embedder_params]
//   count = <N>
//   <N values, EmbedderParams::visit order: branch blocks, joint, output;
//    each layer weight row-major then bias>
//   [metric_params]
//   count = <rows*cols>
//   <W row-major>
//
// Reals use the shortest decimal form that parses back to the same double,
// so a write/read round trip is exact.
struct Checkpoint {
  EmbedderParams embedder;
  MetricParams metric;
};

void write_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint read_checkpoint(const std::filesystem::path& path);

}  // namespace modmine
