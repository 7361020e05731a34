#include <gtest/gtest.h>

#include <cmath>

#include "modmine/embedder.hpp"
#include "oracles.hpp"

using namespace modmine;

namespace {

EmbedderConfig small_config(bool tied = false) {
  EmbedderConfig c;
  c.input_dim = 9;
  c.num_branches = 2;
  c.overlap_fraction = 0.5;
  c.branch_hidden_dims = {5, 4};
  c.joint_hidden_dim = 6;
  c.output_dim = 3;
  c.tied_branches = tied;
  c.seed = 17;
  return c;
}

// Probe objective: r . embed(x).
double probe(const EmbedderParams& p, const Vector& x, const Vector& r) { return dot(embed(p, x), r); }

bool close(double a, double b, double rel, double abs_floor) {
  return std::abs(a - b) <= rel * std::max(std::abs(a), std::abs(b)) + abs_floor;
}

}  // namespace

TEST(EmbedderConfig, SegmentArithmetic) {
  EmbedderConfig c = small_config();
  EXPECT_EQ(c.segment_length(), 6u);
  EXPECT_EQ(c.segment_overlap(), 3u);
  c.input_dim = 8;
  EXPECT_THROW(c.validate(), ConfigError);
  c = EmbedderConfig{};
  EXPECT_EQ(c.segment_length(), 12u);
  EXPECT_EQ(c.segment_overlap(), 3u);
  c.overlap_fraction = 1.0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(SplitSegments, Partition) {
  EmbedderConfig c = small_config();
  c.input_dim = 12;
  c.num_branches = 3;
  c.overlap_fraction = 0.0;
  Vector x(12);
  for (std::size_t i = 0; i < 12; ++i) x[i] = static_cast<double>(i);
  const auto s = split_segments(x, c);
  ASSERT_EQ(s.size(), 3u);
  EXPECT_EQ(s[0], (Vector{0, 1, 2, 3}));
  EXPECT_EQ(s[1], (Vector{4, 5, 6, 7}));
  EXPECT_EQ(s[2], (Vector{8, 9, 10, 11}));
}

TEST(SplitSegments, OverlapLegalExample) {
  const EmbedderConfig c = small_config();
  Vector x(9);
  for (std::size_t i = 0; i < 9; ++i) x[i] = static_cast<double>(i);
  const auto s = split_segments(x, c);
  EXPECT_EQ(s[0], (Vector{0, 1, 2, 3, 4, 5}));
  EXPECT_EQ(s[1], (Vector{3, 4, 5, 6, 7, 8}));
  EXPECT_THROW(split_segments(Vector(8), c), ShapeError);
}

TEST(SplitSegments, ReconstructsInput) {
  std::mt19937_64 rng(1);
  const EmbedderConfig c{};  // 30 dims, 3 branches, overlap 0.25
  const auto x = oracle::random_vector(30, rng);
  const auto segs = split_segments(x, c);
  Vector rebuilt;
  for (std::size_t b = 0; b < segs.size(); ++b) {
    const std::size_t skip = b == 0 ? 0 : c.segment_overlap();
    // Overlapping part must agree with what is already there.
    for (std::size_t i = 0; i < skip; ++i) EXPECT_EQ(segs[b][i], rebuilt[rebuilt.size() - skip + i]);
    rebuilt.insert(rebuilt.end(), segs[b].begin() + static_cast<std::ptrdiff_t>(skip), segs[b].end());
  }
  EXPECT_EQ(rebuilt, x);
}

TEST(Init, DeterministicAndTied) {
  EXPECT_EQ(init_embedder(small_config()), init_embedder(small_config()));
  const auto tied = init_embedder(small_config(true));
  EXPECT_EQ(tied.branches.size(), 1u);
  auto other = small_config();
  other.seed = 18;
  EXPECT_NE(init_embedder(other), init_embedder(small_config()));
  EXPECT_EQ(init_embedder(small_config()).parameter_count(), parameter_count(small_config()));
  EXPECT_EQ(tied.parameter_count(), parameter_count(small_config(true)));
}

TEST(Init, FanInScaling) {
  EmbedderConfig c{};
  c.branch_hidden_dims = {40};
  c.joint_hidden_dim = 64;
  c.output_dim = 32;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    c.seed = seed;
    const auto p = init_embedder(c);
    auto check = [](const Layer& l) {
      double ss = 0;
      for (double v : l.weight.data()) ss += v * v;
      const double sd = std::sqrt(ss / static_cast<double>(l.weight.size()));
      const double want = 1.0 / std::sqrt(static_cast<double>(l.weight.cols()));
      EXPECT_NEAR(sd, want, 0.2 * want);
      for (double b : l.bias) EXPECT_EQ(b, 0.0);
    };
    for (const auto& block : p.branches)
      for (const auto& l : block) check(l);
    for (const auto& l : p.joint) check(l);
    check(p.output);
  }
}

TEST(Forward, ZeroParamsAreDegenerate) {
  auto p = init_embedder(small_config());
  p.assign(Vector(p.parameter_count(), 0.0));
  EXPECT_THROW(forward(p, Vector(9, 1.0)), DegenerateEmbeddingError);
}

TEST(Forward, UnitNorm) {
  std::mt19937_64 rng(2);
  std::vector<EmbedderParams> nets;
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    EmbedderConfig c{};
    c.seed = seed;
    c.tied_branches = seed % 2 == 0;
    nets.push_back(init_embedder(c));
  }
  for (int trial = 0; trial < 1000; ++trial) {
    const auto x = oracle::random_vector(30, rng, 3.0);
    EXPECT_NEAR(norm(embed(nets[static_cast<std::size_t>(trial) % 4], x)), 1.0, 1e-12);
  }
}

TEST(Forward, IdentityNetworkNormalizesInput) {
  EmbedderConfig c;
  c.input_dim = 4;
  c.num_branches = 1;
  c.overlap_fraction = 0.0;
  c.branch_hidden_dims = {};
  c.joint_hidden_dim = 0;
  c.output_dim = 4;
  auto p = init_embedder(c);
  p.output.weight = Matrix::identity(4);
  const Vector x{3.0, -4.0, 0.0, 12.0};
  const auto e = embed(p, x);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(e[i], x[i] / 13.0, 1e-15);
}

TEST(Backward, ZeroUpstreamGivesZeroGradients) {
  const auto p = init_embedder(small_config());
  std::mt19937_64 rng(3);
  const auto f = forward(p, oracle::random_vector(9, rng));
  const auto g = backward(p, f.tape, Vector(3, 0.0));
  for (double v : g.grads.flatten()) EXPECT_EQ(v, 0.0);
  for (double v : g.grad_input) EXPECT_EQ(v, 0.0);
}

TEST(Backward, TapeMismatchRejected) {
  const auto p = init_embedder(small_config());
  const auto f = forward(init_embedder(EmbedderConfig{}), Vector(30, 0.5));
  EXPECT_THROW(backward(p, f.tape, Vector(3, 1.0)), ShapeError);
}

class BackwardFiniteDifference : public ::testing::TestWithParam<bool> {};

TEST_P(BackwardFiniteDifference, EveryParameterAndInput) {
  const bool tied = GetParam();
  std::mt19937_64 rng(tied ? 40 : 41);
  for (int trial = 0; trial < 5; ++trial) {
    auto c = small_config(tied);
    c.seed = static_cast<std::uint64_t>(trial);
    auto p = init_embedder(c);
    // Non-zero biases so every code path carries signal.
    auto flat = p.flatten();
    for (double& v : flat) v += 0.05 * oracle::random_vector(1, rng)[0];
    p.assign(flat);
    const auto x = oracle::random_vector(9, rng);
    const auto r = oracle::random_vector(3, rng);

    const auto f = forward(p, x);
    const auto g = backward(p, f.tape, r);
    const auto analytic = g.grads.flatten();
    ASSERT_EQ(analytic.size(), flat.size());

    const double h = 1e-6;
    for (std::size_t i = 0; i < flat.size(); ++i) {
      auto plus = flat, minus = flat;
      plus[i] += h;
      minus[i] -= h;
      auto pp = p, pm = p;
      pp.assign(plus);
      pm.assign(minus);
      const double fd = (probe(pp, x, r) - probe(pm, x, r)) / (2 * h);
      EXPECT_TRUE(close(fd, analytic[i], 1e-5, 1e-8)) << "param " << i << " fd " << fd << " an " << analytic[i];
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
      auto xp = x, xm = x;
      xp[i] += h;
      xm[i] -= h;
      const double fd = (probe(p, xp, r) - probe(p, xm, r)) / (2 * h);
      EXPECT_TRUE(close(fd, g.grad_input[i], 1e-5, 1e-8)) << "input " << i;
    }
  }
}

INSTANTIATE_TEST_SUITE_P(TiedAndUntied, BackwardFiniteDifference, ::testing::Values(false, true));

TEST(Backward, NormalizationDirectionalDerivative) {
  // Single linear layer so the only nonlinearity is the normalization.
  EmbedderConfig c;
  c.input_dim = 5;
  c.num_branches = 1;
  c.overlap_fraction = 0.0;
  c.branch_hidden_dims = {};
  c.joint_hidden_dim = 0;
  c.output_dim = 5;
  c.seed = 4;
  const auto p = init_embedder(c);
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const auto x = oracle::random_vector(5, rng);
    const auto v = oracle::random_unit_vector(5, rng);
    const auto f = forward(p, x);
    const double h = 1e-6;
    auto xp = x, xm = x;
    for (std::size_t i = 0; i < 5; ++i) {
      xp[i] += h * v[i];
      xm[i] -= h * v[i];
    }
    const auto ep = embed(p, xp), em = embed(p, xm);
    // J v via J^T e_k for each output coordinate k.
    for (std::size_t k = 0; k < 5; ++k) {
      Vector ek(5, 0.0);
      ek[k] = 1.0;
      const double jv = dot(backward(p, f.tape, ek).grad_input, v);
      EXPECT_NEAR((ep[k] - em[k]) / (2 * h), jv, 1e-6);
    }
  }
}

TEST(Backward, TiedGradientIsSumOfUntiedBranchGradients) {
  std::mt19937_64 rng(6);
  auto untied = init_embedder(small_config(false));
  equalize_branches(untied);
  ASSERT_EQ(untied.branches[0], untied.branches[1]);
  auto tied = init_embedder(small_config(true));
  tied.branches = {untied.branches[0]};
  tied.joint = untied.joint;
  tied.output = untied.output;

  const auto x = oracle::random_vector(9, rng);
  const auto r = oracle::random_vector(3, rng);
  const auto gu = backward(untied, forward(untied, x).tape, r).grads;
  const auto gt = backward(tied, forward(tied, x).tape, r).grads;

  const double lr = 0.1;
  auto stepped_untied = untied;
  stepped_untied.add_scaled(gu, -lr);
  auto stepped_tied = tied;
  stepped_tied.add_scaled(gt, -lr);

  // Shared block after the tied step = start - lr * (sum of per-branch untied gradients).
  for (std::size_t l = 0; l < tied.branches[0].size(); ++l) {
    const auto& start = untied.branches[0][l];
    const auto& got = stepped_tied.branches[0][l];
    for (std::size_t i = 0; i < start.weight.size(); ++i) {
      const double want = start.weight.data()[i] - lr * (gu.branches[0][l].weight.data()[i] +
                                                         gu.branches[1][l].weight.data()[i]);
      EXPECT_NEAR(got.weight.data()[i], want, 1e-14);
    }
    for (std::size_t i = 0; i < start.bias.size(); ++i) {
      const double want = start.bias[i] - lr * (gu.branches[0][l].bias[i] + gu.branches[1][l].bias[i]);
      EXPECT_NEAR(got.bias[i], want, 1e-14);
    }
  }
  EXPECT_EQ(stepped_tied.output, stepped_untied.output);
}

TEST(ParameterMatching, TiedWithinFivePercent) {
  for (std::size_t branches : {2u, 3u}) {
    EmbedderConfig c{};
    c.num_branches = branches;
    c.overlap_fraction = branches == 2 ? 0.5 : 0.25;
    c.input_dim = branches == 2 ? 30 : 30;
    const auto tied = match_tied_parameter_count(c);
    EXPECT_TRUE(tied.tied_branches);
    const double a = static_cast<double>(parameter_count(c));
    const double b = static_cast<double>(parameter_count(tied));
    EXPECT_LE(std::abs(a - b) / a, 0.05) << a << " vs " << b;
  }
}
