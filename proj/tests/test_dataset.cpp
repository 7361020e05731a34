#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "modmine/dataset.hpp"
#include "modmine/linalg.hpp"

using namespace modmine;

namespace {

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("modmine_test_" + name);
}

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream(p) << text;
}

std::string load_error(const std::string& text) {
  const auto p = temp_file("bad.csv");
  write_file(p, text);
  try {
    load_delimited(p);
  } catch (const DataError& e) {
    std::filesystem::remove(p);
    return e.what();
  }
  std::filesystem::remove(p);
  return {};
}

std::set<int> ids(const Dataset& d) {
  const auto v = d.identities();
  return {v.begin(), v.end()};
}

}  // namespace

TEST(Synthetic, Counts) {
  SyntheticConfig c;
  c.num_identities = 3;
  c.samples_per_view = 3;
  const auto d = generate_synthetic(c);
  EXPECT_EQ(d.samples.size(), 18u);
  for (int id : d.identities()) {
    EXPECT_EQ(std::count_if(d.samples.begin(), d.samples.end(), [&](const Sample& s) { return s.identity == id; }), 6);
    EXPECT_EQ(std::count_if(d.samples.begin(), d.samples.end(),
                            [&](const Sample& s) { return s.identity == id && s.view == 2; }),
              3);
  }
  for (const auto& s : d.samples) EXPECT_EQ(s.features.size(), c.input_dim);
}

TEST(Synthetic, ZeroNoiseCollapsesIdentity) {
  SyntheticConfig c;
  c.intra_class_spread = 0.0;
  c.view_offset_magnitude = 0.0;
  const auto d = generate_synthetic(c);
  for (const auto& a : d.samples)
    for (const auto& b : d.samples)
      if (a.identity == b.identity) ASSERT_EQ(a.features, b.features);
}

TEST(Synthetic, Deterministic) {
  SyntheticConfig c;
  c.seed = 99;
  EXPECT_EQ(generate_synthetic(c), generate_synthetic(c));
  auto other = c;
  other.seed = 100;
  EXPECT_NE(generate_synthetic(c), generate_synthetic(other));
}

TEST(Synthetic, ViewOffsetIsSharedShift) {
  SyntheticConfig c;
  c.intra_class_spread = 0.0;
  c.view_offset_magnitude = 0.7;
  const auto d = generate_synthetic(c);
  std::vector<Vector> shifts;
  for (const auto& a : d.samples)
    for (const auto& b : d.samples)
      if (a.identity == b.identity && a.view == 1 && b.view == 2) {
        Vector s(a.features.size());
        for (std::size_t i = 0; i < s.size(); ++i) s[i] = b.features[i] - a.features[i];
        shifts.push_back(s);
      }
  ASSERT_FALSE(shifts.empty());
  EXPECT_NEAR(norm(shifts[0]), 0.7, 1e-12);
  for (const auto& s : shifts)
    for (std::size_t i = 0; i < s.size(); ++i) EXPECT_NEAR(s[i], shifts[0][i], 1e-12);
}

TEST(Synthetic, IntraClassDistanceGrowsWithSpread) {
  double previous = -1.0;
  for (double spread : {0.25, 1.0, 3.0}) {
    SyntheticConfig c;
    c.num_identities = 10;
    c.samples_per_view = 10;
    c.intra_class_spread = spread;
    c.view_offset_magnitude = 0.0;
    c.seed = 5;
    const auto d = generate_synthetic(c);
    double sum = 0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < d.samples.size(); ++i)
      for (std::size_t j = i + 1; j < d.samples.size(); ++j)
        if (d.samples[i].identity == d.samples[j].identity) {
          Vector diff(c.input_dim);
          for (std::size_t k = 0; k < diff.size(); ++k)
            diff[k] = d.samples[i].features[k] - d.samples[j].features[k];
          sum += norm(diff);
          ++pairs;
        }
    ASSERT_GE(pairs, 100u);
    const double mean = sum / static_cast<double>(pairs);
    EXPECT_GT(mean, previous);
    previous = mean;
  }
}

TEST(Synthetic, ConfigValidation) {
  SyntheticConfig c;
  c.num_identities = 1;
  EXPECT_THROW(generate_synthetic(c), DataError);
  c = SyntheticConfig{};
  c.input_dim = 1;
  EXPECT_THROW(generate_synthetic(c), DataError);
  c = SyntheticConfig{};
  c.intra_class_spread = -1;
  EXPECT_THROW(generate_synthetic(c), DataError);
}

TEST(Delimited, LoadsValidFile) {
  const auto p = temp_file("ok.csv");
  write_file(p, "identity,view,f0,f1\n0,1,0.5,1e-3\n1,2,-2,+3\n");
  const auto d = load_delimited(p);
  ASSERT_EQ(d.samples.size(), 2u);
  EXPECT_EQ(d.input_dim, 2u);
  EXPECT_EQ(d.samples[1], (Sample{1, 2, {-2.0, 3.0}}));
  std::filesystem::remove(p);
}

TEST(Delimited, ErrorsNameTheRow) {
  EXPECT_NE(load_error("identity,view,f0,f1,f2,f3\n0,1,1,2,3,4\n0,2,1,2,3,4,5\n").find("row 3"), std::string::npos);
  EXPECT_NE(load_error("identity,view,f0\n0,1,1\n0,1,abc\n").find("row 3"), std::string::npos);
  EXPECT_NE(load_error("identity,view,f0\n0,3,1\n").find("row 2"), std::string::npos);
  EXPECT_NE(load_error("identity,view,f0\n0,1,1\n1,2,1\n-4,1,1\n").find("row 4"), std::string::npos);
  EXPECT_THROW(load_delimited(temp_file("does_not_exist.csv")), DataError);
}

TEST(Delimited, RoundTrip) {
  SyntheticConfig c;
  c.seed = 3;
  const auto d = generate_synthetic(c);
  const auto p = temp_file("round.csv");
  write_delimited(d, p);
  const auto back = load_delimited(p);
  ASSERT_EQ(back.samples.size(), d.samples.size());
  EXPECT_EQ(back.input_dim, d.input_dim);
  for (std::size_t i = 0; i < d.samples.size(); ++i) {
    EXPECT_EQ(back.samples[i].identity, d.samples[i].identity);
    EXPECT_EQ(back.samples[i].view, d.samples[i].view);
    for (std::size_t k = 0; k < d.input_dim; ++k)
      EXPECT_NEAR(back.samples[i].features[k], d.samples[i].features[k], 1e-12);
  }
  EXPECT_EQ(back, d);  // shortest round-trip formatting is exact
  std::filesystem::remove(p);
}

TEST(Augment, ZeroAndLabels) {
  const Sample s{4, 2, {1.0, -2.0, 3.0}};
  Rng rng(1);
  EXPECT_EQ(augment(s, 0.0, rng), s);
  for (int i = 0; i < 100; ++i) {
    const auto a = augment(s, 5.0, rng);
    EXPECT_EQ(a.identity, 4);
    EXPECT_EQ(a.view, 2);
  }
  EXPECT_THROW(augment(s, -1.0, rng), std::invalid_argument);
}

TEST(Augment, PerturbationBounded) {
  const Sample s{0, 1, Vector(8, 0.25)};
  Rng rng(2);
  const double mag = 0.3;
  double max_seen = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const auto a = augment(s, mag, rng);
    for (std::size_t k = 0; k < 8; ++k) {
      const double delta = std::abs(a.features[k] - 0.25);
      ASSERT_LE(delta, mag);
      max_seen = std::max(max_seen, delta);
    }
  }
  EXPECT_GT(max_seen, 0.99 * mag);
}

TEST(Split, Counts) {
  SyntheticConfig c;
  c.num_identities = 10;
  const auto split = split_protocol(generate_synthetic(c), {0.8, 0.1, 0.1}, 0);
  EXPECT_EQ(split.train.identities().size(), 8u);
  EXPECT_EQ(split.validation.identities().size(), 1u);
  EXPECT_EQ(split.test.identities().size(), 1u);
}

TEST(Split, DisjointAndCoveringForEverySeed) {
  SyntheticConfig c;
  c.num_identities = 23;
  const auto d = generate_synthetic(c);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto s = split_protocol(d, {0.6, 0.2, 0.2}, seed);
    const auto a = ids(s.train), b = ids(s.validation), t = ids(s.test);
    EXPECT_FALSE(a.empty() || b.empty() || t.empty());
    for (int id : a) EXPECT_FALSE(b.contains(id) || t.contains(id));
    for (int id : b) EXPECT_FALSE(t.contains(id));
    EXPECT_EQ(a.size() + b.size() + t.size(), 23u);
    EXPECT_EQ(s.train.samples.size() + s.validation.samples.size() + s.test.samples.size(),
              d.samples.size());
  }
}

TEST(Split, SeedDeterminismAndVariation) {
  SyntheticConfig c;
  c.num_identities = 20;
  const auto d = generate_synthetic(c);
  const auto base = split_protocol(d, {0.6, 0.2, 0.2}, 0);
  EXPECT_EQ(split_protocol(d, {0.6, 0.2, 0.2}, 0).train, base.train);
  int differing = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed)
    if (ids(split_protocol(d, {0.6, 0.2, 0.2}, seed).train) != ids(base.train)) ++differing;
  EXPECT_EQ(differing, 20);
}

TEST(Split, Errors) {
  SyntheticConfig c;
  c.num_identities = 2;
  EXPECT_THROW(split_protocol(generate_synthetic(c), {0.6, 0.2, 0.2}, 0), DataError);
  c.num_identities = 10;
  const auto d = generate_synthetic(c);
  EXPECT_THROW(split_protocol(d, {0.6, 0.3, 0.2}, 0), DataError);
  EXPECT_THROW(split_protocol(d, {1.0, 0.0, 0.0}, 0), DataError);
}
