#pragma once

#include <ostream>
#include <span>
#include <stdexcept>
#include <vector>

#include "modmine/dataset.hpp"
#include "modmine/embedder.hpp"
#include "modmine/metric.hpp"

namespace modmine {

class UnusableAnchorError : public DataError {
 public:
  using DataError::DataError;
};

// One anchor with k positives (same identity) and k negatives (other
// identities), all candidates taken from the anchor's opposite view.
struct MiniBatch {
  Sample anchor;
  std::vector<Sample> positives;
  std::vector<Sample> negatives;
  std::size_t k = 0;
};

struct MiningResult {
  std::size_t moderate_positive_index = 0;
  std::size_t hardest_negative_index = 0;
  double positive_distance = 0.0;
  double negative_distance = 0.0;
  bool fallback_used = false;

  bool operator==(const MiningResult&) const = default;
};

// Positives are drawn without replacement when the identity has at least k
// opposite-view samples, with replacement otherwise. Each negative picks an
// eligible identity uniformly, then one of its opposite-view samples uniformly.
MiniBatch build_minibatch(const Dataset& dataset, const Sample& anchor, std::size_t k, Rng& rng);

// argmin, ties to the lowest index.
std::size_t mine_hardest_negative(std::span<const double> distances_to_negatives);

struct ModeratePositive {
  std::size_t index = 0;
  bool fallback_used = false;
};

// Among positives no farther than the hardest negative, the farthest one;
// if none qualifies, the nearest positive (fallback). Ties to the lowest index.
ModeratePositive mine_moderate_positive(std::span<const double> distances_to_positives,
                                        double hardest_negative_distance);

// Hardest negative then moderate positive over precomputed distances.
MiningResult mine_distances(std::span<const double> positive_distances,
                            std::span<const double> negative_distances);

// Embeds the whole batch with the current parameters and mines it.
MiningResult mine(const EmbedderParams& embedder, const MetricParams& metric, const MiniBatch& batch);

// `anchor,positive_distance,negative_distance,fallback` audit trace.
void write_trace_header(std::ostream& os);
void write_trace_line(std::ostream& os, int anchor_identity, const MiningResult& result);

}  // namespace modmine
