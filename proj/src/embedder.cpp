#include "modmine/embedder.hpp"

#include <cmath>
#include <random>

namespace modmine {

namespace {

constexpr double kIntegralTol = 1e-9;

bool near_integer(double x) { return std::abs(x - std::round(x)) <= kIntegralTol * std::max(1.0, std::abs(x)); }

std::size_t layer_params(std::size_t in, std::size_t out) { return in * out + out; }

Layer make_layer(std::size_t in, std::size_t out) { return {Matrix(out, in), Vector(out, 0.0)}; }

Vector relu(const Vector& pre) {
  Vector out(pre.size());
  for (std::size_t i = 0; i < pre.size(); ++i) out[i] = pre[i] > 0.0 ? pre[i] : 0.0;
  return out;
}

Vector affine(const Layer& layer, std::span<const double> x) {
  Vector y = matvec(layer.weight, x);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += layer.bias[i];
  return y;
}

// Accumulates dW += g x^T, db += g and returns W^T g.
Vector affine_backward(const Layer& layer, std::span<const double> x, std::span<const double> g,
                       Layer& grad) {
  for (std::size_t r = 0; r < g.size(); ++r) {
    const double gr = g[r];
    grad.bias[r] += gr;
    if (gr == 0.0) continue;
    for (std::size_t c = 0; c < x.size(); ++c) grad.weight(r, c) += gr * x[c];
  }
  return matvec_transposed(layer.weight, g);
}

void relu_backward(const Vector& pre, Vector& g) {
  for (std::size_t i = 0; i < g.size(); ++i)
    if (!(pre[i] > 0.0)) g[i] = 0.0;
}

}  // namespace

void EmbedderConfig::validate() const {
  if (input_dim < 1) throw ConfigError("embedder: input_dim must be >= 1");
  if (num_branches < 1) throw ConfigError("embedder: num_branches must be >= 1");
  if (output_dim < 1) throw ConfigError("embedder: output_dim must be >= 1");
  if (!(overlap_fraction >= 0.0 && overlap_fraction < 1.0))
    throw ConfigError("embedder: overlap_fraction must be in [0, 1)");
  for (auto h : branch_hidden_dims)
    if (h < 1) throw ConfigError("embedder: branch hidden dims must be >= 1");
  (void)segment_overlap();
}

std::size_t EmbedderConfig::segment_length() const {
  const double b = static_cast<double>(num_branches);
  const double length = static_cast<double>(input_dim) / (b - overlap_fraction * (b - 1.0));
  if (!near_integer(length) || std::round(length) < 1.0) {
    throw ConfigError("embedder: input_dim " + std::to_string(input_dim) + " cannot be split into " +
                      std::to_string(num_branches) + " segments with overlap fraction " +
                      std::to_string(overlap_fraction) + " (segment length " +
                      std::to_string(length) + " is not an integer)");
  }
  return static_cast<std::size_t>(std::llround(length));
}

std::size_t EmbedderConfig::segment_overlap() const {
  const std::size_t length = segment_length();
  const double overlap = overlap_fraction * static_cast<double>(length);
  if (!near_integer(overlap)) {
    throw ConfigError("embedder: overlap " + std::to_string(overlap) + " of segment length " +
                      std::to_string(length) + " is not an integer");
  }
  const auto o = static_cast<std::size_t>(std::llround(overlap));
  if (length * num_branches - o * (num_branches - 1) != input_dim)
    throw ConfigError("embedder: segments do not cover input_dim exactly");
  return o;
}

std::size_t EmbedderConfig::branch_output_dim() const {
  return branch_hidden_dims.empty() ? segment_length() : branch_hidden_dims.back();
}

std::size_t parameter_count(const EmbedderConfig& config) {
  config.validate();
  std::size_t block = 0;
  std::size_t in = config.segment_length();
  for (auto h : config.branch_hidden_dims) {
    block += layer_params(in, h);
    in = h;
  }
  std::size_t total = block * (config.tied_branches ? 1 : config.num_branches);
  std::size_t joint_in = config.num_branches * config.branch_output_dim();
  if (config.joint_hidden_dim > 0) {
    total += layer_params(joint_in, config.joint_hidden_dim);
    joint_in = config.joint_hidden_dim;
  }
  return total + layer_params(joint_in, config.output_dim);
}

std::size_t EmbedderParams::parameter_count() const {
  std::size_t n = 0;
  visit([&n](std::span<const double> t) { n += t.size(); });
  return n;
}

EmbedderParams EmbedderParams::zeros_like() const {
  EmbedderParams z = *this;
  z.visit([](std::span<double> t) { std::fill(t.begin(), t.end(), 0.0); });
  return z;
}

std::vector<double> EmbedderParams::flatten() const {
  std::vector<double> flat;
  flat.reserve(parameter_count());
  visit([&flat](std::span<const double> t) { flat.insert(flat.end(), t.begin(), t.end()); });
  return flat;
}

void EmbedderParams::assign(std::span<const double> flat) {
  if (flat.size() != parameter_count()) {
    throw ShapeError("embedder params expect " + std::to_string(parameter_count()) +
                     " values, got " + std::to_string(flat.size()));
  }
  std::size_t pos = 0;
  visit([&](std::span<double> t) {
    std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(pos), t.size(), t.begin());
    pos += t.size();
  });
}

void EmbedderParams::add_scaled(const EmbedderParams& other, double scale) {
  std::vector<std::span<const double>> src;
  other.visit([&src](std::span<const double> t) { src.push_back(t); });
  std::size_t i = 0;
  visit([&](std::span<double> t) {
    if (i >= src.size() || src[i].size() != t.size())
      throw ShapeError("embedder params shape mismatch in add_scaled");
    const auto& s = src[i++];
    for (std::size_t k = 0; k < t.size(); ++k) t[k] += scale * s[k];
  });
  if (i != src.size()) throw ShapeError("embedder params shape mismatch in add_scaled");
}

bool EmbedderParams::all_finite() const {
  bool ok = true;
  visit([&ok](std::span<const double> t) { ok = ok && modmine::all_finite(t); });
  return ok;
}

EmbedderParams init_embedder(const EmbedderConfig& config) {
  config.validate();
  std::mt19937_64 rng(config.seed);
  auto init_layer = [&rng](std::size_t in, std::size_t out) {
    Layer l = make_layer(in, out);
    std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(in)));
    for (double& w : l.weight.data()) w = normal(rng);
    return l;
  };

  EmbedderParams p;
  p.config = config;
  const std::size_t blocks = config.tied_branches ? 1 : config.num_branches;
  for (std::size_t b = 0; b < blocks; ++b) {
    std::vector<Layer> block;
    std::size_t in = config.segment_length();
    for (auto h : config.branch_hidden_dims) {
      block.push_back(init_layer(in, h));
      in = h;
    }
    p.branches.push_back(std::move(block));
  }
  std::size_t in = config.num_branches * config.branch_output_dim();
  if (config.joint_hidden_dim > 0) {
    p.joint.push_back(init_layer(in, config.joint_hidden_dim));
    in = config.joint_hidden_dim;
  }
  p.output = init_layer(in, config.output_dim);
  return p;
}

void equalize_branches(EmbedderParams& params) {
  for (std::size_t b = 1; b < params.branches.size(); ++b) params.branches[b] = params.branches[0];
}

EmbedderConfig match_tied_parameter_count(const EmbedderConfig& untied, double tolerance) {
  if (untied.branch_hidden_dims.empty())
    throw ConfigError("parameter matching needs at least one branch hidden layer to widen");
  EmbedderConfig reference = untied;
  reference.tied_branches = false;
  const double target = static_cast<double>(parameter_count(reference));

  EmbedderConfig best = untied;
  best.tied_branches = true;
  double best_gap = std::abs(static_cast<double>(parameter_count(best)) - target) / target;
  for (int step = 1; step <= 4000; ++step) {
    const double scale = 1.0 + 0.005 * step;
    EmbedderConfig candidate = best;
    for (std::size_t i = 0; i < untied.branch_hidden_dims.size(); ++i) {
      candidate.branch_hidden_dims[i] = static_cast<std::size_t>(
          std::llround(scale * static_cast<double>(untied.branch_hidden_dims[i])));
    }
    const double count = static_cast<double>(parameter_count(candidate));
    const double gap = std::abs(count - target) / target;
    if (gap < best_gap) {
      best_gap = gap;
      best.branch_hidden_dims = candidate.branch_hidden_dims;
    }
    if (count > target * (1.0 + tolerance)) break;
  }
  if (best_gap > tolerance) {
    throw ConfigError("could not match tied parameter count within " + std::to_string(tolerance));
  }
  return best;
}

std::vector<Vector> split_segments(std::span<const double> input, const EmbedderConfig& config) {
  if (input.size() != config.input_dim) {
    throw ShapeError("input has dimension " + std::to_string(input.size()) + ", embedder expects " +
                     std::to_string(config.input_dim));
  }
  const std::size_t length = config.segment_length();
  const std::size_t stride = config.segment_stride();
  std::vector<Vector> segments;
  segments.reserve(config.num_branches);
  for (std::size_t b = 0; b < config.num_branches; ++b) {
    const auto first = input.begin() + static_cast<std::ptrdiff_t>(b * stride);
    segments.emplace_back(first, first + static_cast<std::ptrdiff_t>(length));
  }
  return segments;
}

ForwardResult forward(const EmbedderParams& params, std::span<const double> input) {
  const auto& config = params.config;
  ForwardTape tape;
  tape.parameter_count = params.parameter_count();
  tape.input_dim = input.size();

  const auto segments = split_segments(input, config);
  tape.branch_inputs.resize(config.num_branches);
  tape.branch_pre.resize(config.num_branches);
  tape.concat.reserve(config.num_branches * config.branch_output_dim());
  for (std::size_t b = 0; b < config.num_branches; ++b) {
    const auto& block = params.branches[config.tied_branches ? 0 : b];
    Vector h = segments[b];
    for (const auto& layer : block) {
      Vector pre = affine(layer, h);
      tape.branch_inputs[b].push_back(std::move(h));
      h = relu(pre);
      tape.branch_pre[b].push_back(std::move(pre));
    }
    tape.concat.insert(tape.concat.end(), h.begin(), h.end());
  }

  Vector h = tape.concat;
  if (!params.joint.empty()) {
    tape.joint_pre = affine(params.joint[0], h);
    h = relu(tape.joint_pre);
  }
  tape.output_input = h;
  tape.unnormalized = affine(params.output, h);
  tape.unnormalized_norm = norm(tape.unnormalized);
  if (!(tape.unnormalized_norm > 0.0)) {
    throw DegenerateEmbeddingError("embedding is the zero vector before normalization");
  }
  tape.embedding = tape.unnormalized;
  for (double& v : tape.embedding) v /= tape.unnormalized_norm;
  Vector embedding = tape.embedding;
  return {std::move(embedding), std::move(tape)};
}

Vector embed(const EmbedderParams& params, std::span<const double> input) {
  return forward(params, input).embedding;
}

Vector backward_accumulate(const EmbedderParams& params, const ForwardTape& tape,
                           std::span<const double> grad_embedding, EmbedderParams& grads) {
  const auto& config = params.config;
  if (tape.parameter_count != params.parameter_count() || tape.input_dim != config.input_dim ||
      tape.branch_inputs.size() != config.num_branches) {
    throw ShapeError("forward tape does not match embedder parameters");
  }
  if (grad_embedding.size() != tape.embedding.size()) {
    throw ShapeError("embedding gradient has dimension " + std::to_string(grad_embedding.size()) +
                     ", expected " + std::to_string(tape.embedding.size()));
  }

  // d(y/|y|)/dy = (I - z z^T) / |y|
  const double zg = dot(tape.embedding, grad_embedding);
  Vector g(grad_embedding.size());
  for (std::size_t i = 0; i < g.size(); ++i)
    g[i] = (grad_embedding[i] - tape.embedding[i] * zg) / tape.unnormalized_norm;

  g = affine_backward(params.output, tape.output_input, g, grads.output);
  if (!params.joint.empty()) {
    relu_backward(tape.joint_pre, g);
    g = affine_backward(params.joint[0], tape.concat, g, grads.joint[0]);
  }

  const std::size_t branch_out = config.branch_output_dim();
  const std::size_t stride = config.segment_stride();
  Vector grad_input(config.input_dim, 0.0);
  for (std::size_t b = 0; b < config.num_branches; ++b) {
    const std::size_t slot = config.tied_branches ? 0 : b;
    const auto& block = params.branches[slot];
    auto& grad_block = grads.branches[slot];
    Vector gb(g.begin() + static_cast<std::ptrdiff_t>(b * branch_out),
              g.begin() + static_cast<std::ptrdiff_t>((b + 1) * branch_out));
    for (std::size_t l = block.size(); l-- > 0;) {
      relu_backward(tape.branch_pre[b][l], gb);
      gb = affine_backward(block[l], tape.branch_inputs[b][l], gb, grad_block[l]);
    }
    for (std::size_t i = 0; i < gb.size(); ++i) grad_input[b * stride + i] += gb[i];
  }
  return grad_input;
}

BackwardResult backward(const EmbedderParams& params, const ForwardTape& tape,
                        std::span<const double> grad_embedding) {
  BackwardResult out{params.zeros_like(), {}};
  out.grad_input = backward_accumulate(params, tape, grad_embedding, out.grads);
  return out;
}

}  // namespace modmine
