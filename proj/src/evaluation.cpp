#include "modmine/evaluation.hpp"

#include <cmath>
#include <map>

#include "modmine/io.hpp"

namespace modmine {

OneShot build_one_shot(const Dataset& test, Rng& rng) {
  std::map<int, std::vector<const Sample*>> view2;
  std::map<int, bool> has_view1;
  for (const auto& s : test.samples) {
    if (s.view == 2) view2[s.identity].push_back(&s);
    else has_view1[s.identity] = true;
  }
  for (int id : test.identities()) {
    if (!view2.contains(id) || !has_view1.contains(id)) {
      throw DataError("identity " + std::to_string(id) + " is missing a view for one-shot evaluation");
    }
  }

  OneShot out;
  for (const auto& [id, pool] : view2) {
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    out.gallery.push_back(*pool[pick(rng)]);
  }
  for (const auto& s : test.samples)
    if (s.view == 1) out.probes.push_back(s);
  return out;
}

CmcCurve cmc_from_distances(const std::vector<std::vector<double>>& distances,
                            std::span<const std::size_t> true_match) {
  if (distances.empty()) throw std::invalid_argument("cmc needs at least one probe");
  const std::size_t n_gallery = distances.front().size();
  if (n_gallery == 0) throw std::invalid_argument("cmc needs a nonempty gallery");
  if (true_match.size() != distances.size())
    throw std::invalid_argument("cmc: " + std::to_string(distances.size()) + " probes but " +
                                std::to_string(true_match.size()) + " true-match indices");
  std::vector<std::size_t> hits(n_gallery, 0);
  for (std::size_t p = 0; p < distances.size(); ++p) {
    const auto& row = distances[p];
    const std::size_t match = true_match[p];
    if (row.size() != n_gallery)
      throw std::invalid_argument("cmc: probe " + std::to_string(p) + " has " + std::to_string(row.size()) +
                                  " distances, expected " + std::to_string(n_gallery));
    if (match >= n_gallery)
      throw std::invalid_argument("cmc: probe " + std::to_string(p) + " true match " + std::to_string(match) +
                                  " outside the gallery");
    const double target = row[match];
    std::size_t rank = 0;  // zero-based
    for (std::size_t g = 0; g < n_gallery; ++g) {
      if (row[g] < target || (row[g] == target && g < match)) ++rank;
    }
    ++hits[rank];
  }
  CmcCurve curve;
  curve.num_probes = distances.size();
  curve.rates.resize(n_gallery);
  std::size_t cumulative = 0;
  for (std::size_t r = 0; r < n_gallery; ++r) {
    cumulative += hits[r];
    curve.rates[r] = static_cast<double>(cumulative) / static_cast<double>(distances.size());
  }
  return curve;
}

CmcCurve cmc(const EmbedderParams& embedder, const MetricParams& metric,
             const std::vector<Sample>& gallery, const std::vector<Sample>& probes) {
  if (gallery.empty() || probes.empty())
    throw std::invalid_argument("cmc needs a nonempty gallery and probe set");
  std::vector<Vector> gallery_emb;
  gallery_emb.reserve(gallery.size());
  for (const auto& g : gallery) gallery_emb.push_back(embed(embedder, g.features));

  std::vector<std::vector<double>> distances;
  std::vector<std::size_t> truth;
  for (const auto& probe : probes) {
    std::size_t match = gallery.size();
    for (std::size_t g = 0; g < gallery.size(); ++g) {
      if (gallery[g].identity == probe.identity) {
        match = g;
        break;
      }
    }
    if (match == gallery.size()) {
      throw DataError("probe identity " + std::to_string(probe.identity) + " has no gallery entry");
    }
    const Vector e = embed(embedder, probe.features);
    std::vector<double> row;
    row.reserve(gallery.size());
    for (const auto& ge : gallery_emb) row.push_back(distance(metric, e, ge));
    distances.push_back(std::move(row));
    truth.push_back(match);
  }
  return cmc_from_distances(distances, truth);
}

double rank_k(const CmcCurve& curve, std::size_t k) {
  if (k < 1 || k > curve.rates.size()) {
    throw std::out_of_range("rank " + std::to_string(k) + " outside 1.." +
                            std::to_string(curve.rates.size()));
  }
  return curve.rates[k - 1];
}

CmcSummary evaluate_cmc(const EmbedderParams& embedder, const MetricParams& metric,
                        const Dataset& test, std::size_t draws, std::uint64_t seed) {
  if (draws == 0) throw std::invalid_argument("evaluate_cmc needs at least one gallery draw");
  Rng rng(seed);
  CmcSummary out;
  for (std::size_t i = 0; i < draws; ++i) {
    const auto split = build_one_shot(test, rng);
    const auto curve = cmc(embedder, metric, split.gallery, split.probes);
    if (out.mean.rates.empty()) {
      out.mean.rates.assign(curve.rates.size(), 0.0);
      out.mean.num_probes = curve.num_probes;
    }
    for (std::size_t r = 0; r < curve.rates.size(); ++r) out.mean.rates[r] += curve.rates[r];
    out.rank1_per_draw.push_back(curve.rates[0]);
  }
  for (double& r : out.mean.rates) r /= static_cast<double>(draws);
  double mean1 = out.mean.rates[0];
  double var = 0.0;
  for (double r : out.rank1_per_draw) var += (r - mean1) * (r - mean1);
  out.rank1_sd = draws > 1 ? std::sqrt(var / static_cast<double>(draws - 1)) : 0.0;
  return out;
}

void write_cmc(const CmcCurve& curve, const std::filesystem::path& path) {
  std::string text = "rank,rate\n";
  for (std::size_t r = 0; r < curve.rates.size(); ++r)
    text += std::to_string(r + 1) + "," + format_double(curve.rates[r]) + "\n";
  write_text(path, text);
}

CmcCurve read_cmc(const std::filesystem::path& path) {
  const auto lines = read_lines(path);
  if (lines.empty() || trim(lines[0]) != "rank,rate")
    throw std::runtime_error(path.string() + ": missing header rank,rate");
  CmcCurve curve;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    const auto f = split(lines[i], ',');
    long long rank = 0;
    double rate = 0.0;
    if (f.size() != 2 || !parse_int(f[0], rank) || !parse_double(f[1], rate) ||
        rank != static_cast<long long>(curve.rates.size() + 1)) {
      throw std::runtime_error(path.string() + ": line " + std::to_string(i + 1) + ": malformed");
    }
    curve.rates.push_back(rate);
  }
  return curve;
}

}  // namespace modmine
