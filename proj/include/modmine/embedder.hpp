#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "modmine/linalg.hpp"

namespace modmine {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DegenerateEmbeddingError : public NumericError {
 public:
  using NumericError::NumericError;
};

// Branched embedding network over overlapping input segments.
//
//   input -> split into num_branches overlapping segments
//         -> per-branch stack of affine+ReLU layers (branch_hidden_dims)
//         -> concatenate -> joint affine+ReLU (skipped when joint_hidden_dim == 0)
//         -> final affine (linear) -> L2 normalization
//
// Segment length L and overlap o satisfy num_branches*L - (num_branches-1)*o == input_dim
// with o == overlap_fraction * L; both must come out as integers.
struct EmbedderConfig {
  std::size_t input_dim = 30;
  std::size_t num_branches = 3;
  double overlap_fraction = 0.25;
  std::vector<std::size_t> branch_hidden_dims = {16};
  std::size_t joint_hidden_dim = 32;
  std::size_t output_dim = 16;
  bool tied_branches = false;
  std::uint64_t seed = 0;

  void validate() const;
  std::size_t segment_length() const;
  std::size_t segment_overlap() const;
  std::size_t segment_stride() const { return segment_length() - segment_overlap(); }
  std::size_t branch_output_dim() const;

  bool operator==(const EmbedderConfig&) const = default;
};

struct Layer {
  Matrix weight;  // out x in
  Vector bias;

  bool operator==(const Layer&) const = default;
};

// Also used as the gradient container (same shapes).
struct EmbedderParams {
  EmbedderConfig config;
  // One block per branch, or a single shared block when tied_branches.
  std::vector<std::vector<Layer>> branches;
  std::vector<Layer> joint;  // empty or one layer
  Layer output;

  std::size_t parameter_count() const;
  EmbedderParams zeros_like() const;

  // Visits every weight and bias tensor in a fixed order:
  // branch blocks (layer weight, bias), joint, output.
  template <typename F>
  void visit(F&& f) {
    auto layer = [&](Layer& l) {
      f(l.weight.data());
      f(std::span<double>(l.bias));
    };
    for (auto& block : branches)
      for (auto& l : block) layer(l);
    for (auto& l : joint) layer(l);
    layer(output);
  }
  template <typename F>
  void visit(F&& f) const {
    auto layer = [&](const Layer& l) {
      f(l.weight.data());
      f(std::span<const double>(l.bias));
    };
    for (const auto& block : branches)
      for (const auto& l : block) layer(l);
    for (const auto& l : joint) layer(l);
    layer(output);
  }

  std::vector<double> flatten() const;
  void assign(std::span<const double> flat);
  // this += scale * other
  void add_scaled(const EmbedderParams& other, double scale);
  bool all_finite() const;

  bool operator==(const EmbedderParams&) const = default;
};

EmbedderParams init_embedder(const EmbedderConfig& config);

// Copies branch 0's block into every other branch (untied params only).
void equalize_branches(EmbedderParams& params);

// Widens a tied variant's branch hidden layers so its parameter count lands
// within `tolerance` (relative) of the untied configuration's count.
EmbedderConfig match_tied_parameter_count(const EmbedderConfig& untied, double tolerance = 0.05);
std::size_t parameter_count(const EmbedderConfig& config);

std::vector<Vector> split_segments(std::span<const double> input, const EmbedderConfig& config);

struct ForwardTape {
  std::size_t parameter_count = 0;
  std::size_t input_dim = 0;
  // Per branch, per layer: input to the layer and its pre-activation.
  std::vector<std::vector<Vector>> branch_inputs;
  std::vector<std::vector<Vector>> branch_pre;
  Vector concat;
  Vector joint_pre;
  Vector output_input;
  Vector unnormalized;
  double unnormalized_norm = 0.0;
  Vector embedding;
};

struct ForwardResult {
  Vector embedding;
  ForwardTape tape;
};

ForwardResult forward(const EmbedderParams& params, std::span<const double> input);
Vector embed(const EmbedderParams& params, std::span<const double> input);

struct BackwardResult {
  EmbedderParams grads;
  Vector grad_input;
};

BackwardResult backward(const EmbedderParams& params, const ForwardTape& tape,
                        std::span<const double> grad_embedding);

// Adds parameter gradients into `grads`; returns the gradient w.r.t. the input.
Vector backward_accumulate(const EmbedderParams& params, const ForwardTape& tape,
                           std::span<const double> grad_embedding, EmbedderParams& grads);

}  // namespace modmine
