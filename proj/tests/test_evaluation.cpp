#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <numeric>
#include <set>

#include "modmine/evaluation.hpp"
#include "oracles.hpp"

using namespace modmine;

namespace {

EmbedderParams identity_embedder(std::size_t dim) {
  EmbedderConfig c;
  c.input_dim = dim;
  c.num_branches = 1;
  c.overlap_fraction = 0.0;
  c.branch_hidden_dims = {};
  c.joint_hidden_dim = 0;
  c.output_dim = dim;
  auto p = init_embedder(c);
  p.output.weight = Matrix::identity(dim);
  return p;
}

std::vector<std::vector<double>> random_distances(std::size_t probes, std::size_t gallery,
                                                  std::mt19937_64& rng, bool ties) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> coarse(0, 4);
  std::vector<std::vector<double>> d(probes, std::vector<double>(gallery));
  for (auto& row : d)
    for (auto& x : row) x = ties ? 0.25 * coarse(rng) : u(rng);
  return d;
}

Dataset test_data(std::size_t ids, std::uint64_t seed) {
  SyntheticConfig c;
  c.num_identities = ids;
  c.samples_per_view = 3;
  c.input_dim = 6;
  c.seed = seed;
  return generate_synthetic(c);
}

}  // namespace

TEST(OneShot, GalleryIsOneViewTwoSamplePerIdentity) {
  const auto d = test_data(10, 1);
  Rng rng(3);
  const auto s = build_one_shot(d, rng);
  EXPECT_EQ(s.gallery.size(), 10u);
  std::set<int> seen;
  for (const auto& g : s.gallery) {
    EXPECT_EQ(g.view, 2);
    EXPECT_TRUE(seen.insert(g.identity).second);
  }
  EXPECT_EQ(s.probes.size(), 30u);
  for (const auto& p : s.probes) {
    EXPECT_EQ(p.view, 1);
    EXPECT_TRUE(seen.contains(p.identity));
  }
  Rng a(5), b(5);
  EXPECT_EQ(build_one_shot(d, a).gallery, build_one_shot(d, b).gallery);
}

TEST(OneShot, MissingViewNamesIdentity) {
  Dataset d;
  d.input_dim = 1;
  d.samples = {{0, 1, {0}}, {0, 2, {0}}, {7, 1, {1}}};
  Rng rng(1);
  try {
    build_one_shot(d, rng);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("7"), std::string::npos) << e.what();
  }
}

TEST(Cmc, SingleGallery) {
  const auto c = cmc_from_distances({{0.3}, {0.9}}, std::vector<std::size_t>{0, 0});
  EXPECT_EQ(c.rates, std::vector<double>{1.0});
  EXPECT_EQ(c.num_probes, 2u);
}

TEST(Cmc, ConstructedSeparation) {
  const auto emb = identity_embedder(3);
  const MetricParams metric{Matrix::identity(3)};
  std::vector<Sample> gallery = {{0, 2, {1, 0, 0}}, {1, 2, {0, 1, 0}}, {2, 2, {0, 0, 1}}};
  std::vector<Sample> probes = {{0, 1, {1, 0.1, 0}}, {1, 1, {0, 1, 0.1}}, {2, 1, {0.1, 0, 1}}};
  const auto c = cmc(emb, metric, gallery, probes);
  EXPECT_EQ(rank_k(c, 1), 1.0);
}

TEST(Cmc, MatchesBruteForceWithTies) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t g = 1 + static_cast<std::size_t>(trial % 9), p = 1 + static_cast<std::size_t>(trial % 13);
    const auto d = random_distances(p, g, rng, trial % 2 == 0);
    std::vector<std::size_t> truth(p);
    std::uniform_int_distribution<std::size_t> pick(0, g - 1);
    for (auto& t : truth) t = pick(rng);
    const auto got = cmc_from_distances(d, truth);
    const auto want = oracle::brute_force_cmc(d, truth);
    ASSERT_EQ(got.rates.size(), want.size());
    for (std::size_t r = 0; r < want.size(); ++r) EXPECT_NEAR(got.rates[r], want[r], 1e-15);
    for (std::size_t r = 1; r < got.rates.size(); ++r) EXPECT_GE(got.rates[r], got.rates[r - 1]);
    EXPECT_EQ(got.rates.back(), 1.0);
  }
}

TEST(Cmc, TieBreakByGalleryIndex) {
  // Probe equidistant to all entries: rank equals 1 + gallery index of the true match.
  const std::vector<std::vector<double>> d = {{0.5, 0.5, 0.5}, {0.5, 0.5, 0.5}};
  const auto c = cmc_from_distances(d, std::vector<std::size_t>{0, 2});
  EXPECT_EQ(c.rates, (std::vector<double>{0.5, 0.5, 1.0}));
}

TEST(Cmc, GalleryPermutationInvariantWithoutTies) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    const auto d = random_distances(12, 7, rng, false);
    std::vector<std::size_t> truth(12);
    for (std::size_t i = 0; i < 12; ++i) truth[i] = i % 7;
    std::vector<std::size_t> perm(7);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    auto pd = d;
    auto pt = truth;
    for (std::size_t p = 0; p < 12; ++p)
      for (std::size_t g = 0; g < 7; ++g) pd[p][perm[g]] = d[p][g];
    for (auto& t : pt) t = perm[t];
    EXPECT_EQ(cmc_from_distances(d, truth), cmc_from_distances(pd, pt));
  }
}

TEST(Cmc, IdentityNetworkEqualsEuclideanOnRawFeatures) {
  std::mt19937_64 g(10);
  Dataset d;
  d.input_dim = 4;
  for (int id = 0; id < 8; ++id)
    for (int view = 1; view <= 2; ++view)
      for (int s = 0; s < 2; ++s) d.samples.push_back({id, view, oracle::random_unit_vector(4, g)});
  Rng rng(11);
  const auto shot = build_one_shot(d, rng);
  const auto got = cmc(identity_embedder(4), MetricParams{Matrix::identity(4)}, shot.gallery, shot.probes);

  std::vector<std::vector<double>> dist;
  std::vector<std::size_t> truth;
  for (const auto& p : shot.probes) {
    std::vector<double> row;
    for (std::size_t j = 0; j < shot.gallery.size(); ++j) {
      double acc = 0;
      for (std::size_t k = 0; k < 4; ++k)
        acc += (p.features[k] - shot.gallery[j].features[k]) * (p.features[k] - shot.gallery[j].features[k]);
      row.push_back(std::sqrt(acc));
      if (shot.gallery[j].identity == p.identity) truth.push_back(j);
    }
    dist.push_back(row);
  }
  const auto want = oracle::brute_force_cmc(dist, truth);
  for (std::size_t r = 0; r < want.size(); ++r) EXPECT_NEAR(got.rates[r], want[r], 1e-15);

  // Rank-1 as the fraction of probes whose nearest gallery sample shares their identity.
  std::size_t hits = 0;
  for (std::size_t p = 0; p < dist.size(); ++p) {
    const auto nearest = static_cast<std::size_t>(std::min_element(dist[p].begin(), dist[p].end()) - dist[p].begin());
    hits += shot.gallery[nearest].identity == shot.probes[p].identity;
  }
  EXPECT_NEAR(rank_k(got, 1), static_cast<double>(hits) / static_cast<double>(dist.size()), 1e-15);
}

TEST(RankK, RangeAndMonotone) {
  const auto c = cmc_from_distances({{0.2, 0.1, 0.3}, {0.1, 0.2, 0.3}}, std::vector<std::size_t>{0, 0});
  EXPECT_EQ(rank_k(c, 3), 1.0);
  EXPECT_LE(rank_k(c, 1), rank_k(c, 2));
  EXPECT_THROW(rank_k(c, 0), std::out_of_range);
  EXPECT_THROW(rank_k(c, 4), std::out_of_range);
}

TEST(EvaluateCmc, AveragesDraws) {
  const auto d = test_data(8, 2);
  EmbedderConfig ec;
  ec.input_dim = 6;
  ec.num_branches = 2;
  ec.overlap_fraction = 0.5;
  ec.branch_hidden_dims = {5};
  ec.joint_hidden_dim = 5;
  ec.output_dim = 4;
  const auto emb = init_embedder(ec);
  const auto metric = init_metric(4, MetricConfig{}, 1);
  const auto s = evaluate_cmc(emb, metric, d, 10, 77);
  ASSERT_EQ(s.rank1_per_draw.size(), 10u);
  const double mean = std::accumulate(s.rank1_per_draw.begin(), s.rank1_per_draw.end(), 0.0) / 10.0;
  EXPECT_NEAR(rank_k(s.mean, 1), mean, 1e-12);
  EXPECT_GE(s.rank1_sd, 0.0);
  const auto again = evaluate_cmc(emb, metric, d, 10, 77);
  EXPECT_EQ(again.mean, s.mean);
  for (std::size_t r = 1; r < s.mean.rates.size(); ++r) EXPECT_GE(s.mean.rates[r], s.mean.rates[r - 1]);
  EXPECT_NEAR(s.mean.rates.back(), 1.0, 1e-12);
}

TEST(CmcFile, RoundTrip) {
  std::mt19937_64 rng(12);
  const auto d = random_distances(9, 6, rng, false);
  const auto c = cmc_from_distances(d, std::vector<std::size_t>{0, 1, 2, 3, 4, 5, 0, 1, 2});
  const auto p = std::filesystem::temp_directory_path() / "modmine_test_cmc.csv";
  write_cmc(c, p);
  EXPECT_EQ(read_cmc(p).rates, c.rates);
  std::filesystem::remove(p);
}

TEST(Cmc, RejectsMalformedInput) {
  EXPECT_THROW(cmc_from_distances({{0.1, 0.2}}, std::vector<std::size_t>{2}), std::invalid_argument);
  EXPECT_THROW(cmc_from_distances({{0.1, 0.2}, {0.1}}, std::vector<std::size_t>{0, 0}), std::invalid_argument);
  EXPECT_THROW(cmc_from_distances({{0.1, 0.2}}, std::vector<std::size_t>{0, 1}), std::invalid_argument);
}
