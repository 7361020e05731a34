#include "modmine/mining.hpp"

#include <algorithm>
#include <map>
#include <numeric>

#include "modmine/io.hpp"

namespace modmine {

MiniBatch build_minibatch(const Dataset& dataset, const Sample& anchor, std::size_t k, Rng& rng) {
  if (k < 1) throw std::invalid_argument("mini-batch needs k >= 1");
  const int view = opposite_view(anchor.view);

  std::vector<const Sample*> positive_pool;
  std::map<int, std::vector<const Sample*>> by_identity;
  for (const auto& s : dataset.samples) {
    if (s.view != view) continue;
    if (s.identity == anchor.identity) positive_pool.push_back(&s);
    else by_identity[s.identity].push_back(&s);
  }
  std::vector<const std::vector<const Sample*>*> negative_pools;
  for (const auto& [id, pool] : by_identity) negative_pools.push_back(&pool);
  if (positive_pool.empty()) {
    throw UnusableAnchorError("identity " + std::to_string(anchor.identity) +
                              " has no samples in view " + std::to_string(view));
  }
  if (negative_pools.empty()) {
    throw UnusableAnchorError("no other identity has samples in view " + std::to_string(view));
  }

  MiniBatch batch;
  batch.anchor = anchor;
  batch.k = k;
  if (positive_pool.size() >= k) {
    std::vector<std::size_t> order(positive_pool.size());
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = 0; i < k; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, order.size() - 1);
      std::swap(order[i], order[pick(rng)]);
      batch.positives.push_back(*positive_pool[order[i]]);
    }
  } else {
    std::uniform_int_distribution<std::size_t> pick(0, positive_pool.size() - 1);
    for (std::size_t i = 0; i < k; ++i) batch.positives.push_back(*positive_pool[pick(rng)]);
  }

  std::uniform_int_distribution<std::size_t> pick_identity(0, negative_pools.size() - 1);
  for (std::size_t i = 0; i < k; ++i) {
    const auto& pool = *negative_pools[pick_identity(rng)];
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    batch.negatives.push_back(*pool[pick(rng)]);
  }
  return batch;
}

std::size_t mine_hardest_negative(std::span<const double> distances_to_negatives) {
  if (distances_to_negatives.empty()) throw std::invalid_argument("no negative distances to mine");
  std::size_t best = 0;
  for (std::size_t j = 1; j < distances_to_negatives.size(); ++j)
    if (distances_to_negatives[j] < distances_to_negatives[best]) best = j;
  return best;
}

ModeratePositive mine_moderate_positive(std::span<const double> distances_to_positives,
                                        double hardest_negative_distance) {
  if (distances_to_positives.empty()) throw std::invalid_argument("no positive distances to mine");
  bool found = false;
  std::size_t best = 0;
  for (std::size_t j = 0; j < distances_to_positives.size(); ++j) {
    const double d = distances_to_positives[j];
    if (d > hardest_negative_distance) continue;
    if (!found || d > distances_to_positives[best]) {
      best = j;
      found = true;
    }
  }
  if (found) return {best, false};

  best = 0;
  for (std::size_t j = 1; j < distances_to_positives.size(); ++j)
    if (distances_to_positives[j] < distances_to_positives[best]) best = j;
  return {best, true};
}

MiningResult mine_distances(std::span<const double> positive_distances,
                            std::span<const double> negative_distances) {
  MiningResult r;
  r.hardest_negative_index = mine_hardest_negative(negative_distances);
  r.negative_distance = negative_distances[r.hardest_negative_index];
  const auto pos = mine_moderate_positive(positive_distances, r.negative_distance);
  r.moderate_positive_index = pos.index;
  r.fallback_used = pos.fallback_used;
  r.positive_distance = positive_distances[pos.index];
  return r;
}

MiningResult mine(const EmbedderParams& embedder, const MetricParams& metric, const MiniBatch& batch) {
  const Vector anchor = embed(embedder, batch.anchor.features);
  auto distances = [&](const std::vector<Sample>& candidates) {
    std::vector<double> d;
    d.reserve(candidates.size());
    for (const auto& c : candidates) d.push_back(distance(metric, anchor, embed(embedder, c.features)));
    return d;
  };
  const auto pos = distances(batch.positives);
  const auto neg = distances(batch.negatives);
  return mine_distances(pos, neg);
}

void write_trace_header(std::ostream& os) {
  os << "anchor,positive_distance,negative_distance,fallback\n";
}

void write_trace_line(std::ostream& os, int anchor_identity, const MiningResult& result) {
  os << anchor_identity << ',' << format_double(result.positive_distance) << ','
     << format_double(result.negative_distance) << ',' << (result.fallback_used ? 1 : 0) << '\n';
}

}  // namespace modmine
