#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "modmine/dataset.hpp"
#include "modmine/embedder.hpp"
#include "modmine/metric.hpp"

namespace modmine {

// rates[r - 1] is the identification rate at rank r.
struct CmcCurve {
  std::vector<double> rates;
  std::size_t num_probes = 0;

  std::size_t length() const { return rates.size(); }
  bool operator==(const CmcCurve&) const = default;
};

struct OneShot {
  std::vector<Sample> gallery;  // one view-2 sample per identity
  std::vector<Sample> probes;   // every view-1 sample
};

OneShot build_one_shot(const Dataset& test, Rng& rng);

// Ranks the gallery by ascending distance for every probe. A gallery entry
// with the same distance as the true match is ranked ahead of it only if its
// gallery index is lower.
CmcCurve cmc(const EmbedderParams& embedder, const MetricParams& metric,
             const std::vector<Sample>& gallery, const std::vector<Sample>& probes);

// Same ranking on precomputed distances: distances[p][g], true match index per probe.
CmcCurve cmc_from_distances(const std::vector<std::vector<double>>& distances,
                            std::span<const std::size_t> true_match);

double rank_k(const CmcCurve& curve, std::size_t k);

struct CmcSummary {
  CmcCurve mean;  // pointwise mean over gallery draws
  double rank1_sd = 0.0;
  std::vector<double> rank1_per_draw;
};

// Averages the CMC over `draws` seeded one-shot gallery draws.
CmcSummary evaluate_cmc(const EmbedderParams& embedder, const MetricParams& metric,
                        const Dataset& test, std::size_t draws, std::uint64_t seed);

// `rank,rate`
void write_cmc(const CmcCurve& curve, const std::filesystem::path& path);
CmcCurve read_cmc(const std::filesystem::path& path);

}  // namespace modmine
