#include "modmine/dataset.hpp"

#include "modmine/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

namespace modmine {

std::vector<int> Dataset::identities() const {
  std::set<int> ids;
  for (const auto& s : samples) ids.insert(s.identity);
  return {ids.begin(), ids.end()};
}

void SyntheticConfig::validate() const {
  if (num_identities < 2) throw DataError("synthetic config: num_identities must be >= 2");
  if (samples_per_view < 1) throw DataError("synthetic config: samples_per_view must be >= 1");
  if (input_dim < 2) throw DataError("synthetic config: input_dim must be >= 2");
  if (!(manifold_curvature >= 0.0))
    throw DataError("synthetic config: manifold_curvature must be >= 0");
  if (!(intra_class_spread >= 0.0))
    throw DataError("synthetic config: intra_class_spread must be >= 0");
  if (!(view_offset_magnitude >= 0.0))
    throw DataError("synthetic config: view_offset_magnitude must be >= 0");
}

namespace {

constexpr std::size_t kHarmonics = 6;

Vector random_unit(std::size_t dim, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector v(dim);
  double n = 0.0;
  while (n < 1e-12) {
    for (double& x : v) x = normal(rng);
    n = norm(v);
  }
  for (double& x : v) x /= n;
  return v;
}

}  // namespace

BaseCurve::BaseCurve(std::size_t dim, double curvature, Rng& rng) : curvature_(curvature) {
  std::uniform_real_distribution<double> freq(1.0, 3.0);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * M_PI);
  directions_.push_back(random_unit(dim, rng));
  for (std::size_t h = 0; h < kHarmonics; ++h) {
    directions_.push_back(random_unit(dim, rng));
    frequencies_.push_back(freq(rng));
    phases_.push_back(phase(rng));
  }
}

Vector BaseCurve::at(double t) const {
  Vector p(directions_[0].size());
  for (std::size_t d = 0; d < p.size(); ++d) p[d] = t * directions_[0][d];
  for (std::size_t h = 0; h < frequencies_.size(); ++h) {
    const double amp = curvature_ * std::sin(frequencies_[h] * t + phases_[h]);
    const auto& u = directions_[h + 1];
    for (std::size_t d = 0; d < p.size(); ++d) p[d] += amp * u[d];
  }
  return p;
}

Dataset generate_synthetic(const SyntheticConfig& config) {
  config.validate();
  Rng rng(config.seed);
  const std::size_t dim = config.input_dim;
  BaseCurve curve(dim, config.manifold_curvature, rng);

  Vector view_offset = random_unit(dim, rng);
  for (double& x : view_offset) x *= config.view_offset_magnitude;

  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const double arc_length = 2.0 * M_PI;
  std::uniform_real_distribution<double> arc(0.0, arc_length);

  Dataset out;
  out.input_dim = dim;
  out.samples.reserve(config.num_identities * config.samples_per_view * 2);
  for (std::size_t id = 0; id < config.num_identities; ++id) {
    const double position = arc(rng);
    Vector displacement(dim);
    for (double& x : displacement) x = normal(rng);
    for (int view = 1; view <= 2; ++view) {
      for (std::size_t k = 0; k < config.samples_per_view; ++k) {
        const double t = position + config.intra_class_spread * unit(rng);
        Vector f = curve.at(t);
        for (std::size_t d = 0; d < dim; ++d) {
          f[d] += displacement[d] + 0.1 * config.intra_class_spread * normal(rng);
          if (view == 2) f[d] += view_offset[d];
        }
        out.samples.push_back({static_cast<int>(id), view, std::move(f)});
      }
    }
  }
  return out;
}

void write_delimited(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw DataError("cannot open " + path.string() + " for writing");
  os << "identity,view";
  for (std::size_t d = 0; d < dataset.input_dim; ++d) os << ",f" << d;
  os << '\n';
  for (const auto& s : dataset.samples) {
    os << s.identity << ',' << s.view;
    for (double v : s.features) os << ',' << format_double(v);
    os << '\n';
  }
  if (!os) throw DataError("write failed for " + path.string());
}

Dataset load_delimited(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open dataset file " + path.string());
  std::string line;
  if (!std::getline(is, line)) throw DataError(path.string() + ": empty file");
  const auto header = split(trim(line), ',');
  if (header.size() < 3 || trim(header[0]) != "identity" || trim(header[1]) != "view") {
    throw DataError(path.string() + ": row 1: header must start with identity,view,f0");
  }

  Dataset out;
  bool dim_known = false;
  std::size_t row = 1;
  while (std::getline(is, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto fields = split(line, ',');
    auto fail = [&](const std::string& why) {
      return DataError(path.string() + ": row " + std::to_string(row) + ": " + why);
    };
    if (fields.size() < 3) throw fail("expected identity, view and at least one feature");
    const std::size_t dim = fields.size() - 2;
    if (!dim_known) {
      out.input_dim = dim;
      dim_known = true;
    } else if (dim != out.input_dim) {
      throw fail("has " + std::to_string(dim) + " features, expected " +
                 std::to_string(out.input_dim));
    }
    Sample s;
    long long identity = 0;
    long long view = 0;
    if (!parse_int(fields[0], identity) || identity < 0 || identity > INT32_MAX)
      throw fail("identity must be a non-negative integer");
    if (!parse_int(fields[1], view) || (view != 1 && view != 2)) throw fail("view must be 1 or 2");
    s.identity = static_cast<int>(identity);
    s.view = static_cast<int>(view);
    s.features.resize(dim);
    for (std::size_t d = 0; d < dim; ++d) {
      if (!parse_double(fields[d + 2], s.features[d]) || !std::isfinite(s.features[d]))
        throw fail("feature f" + std::to_string(d) + " is not a finite number");
    }
    out.samples.push_back(std::move(s));
  }
  if (!dim_known) out.input_dim = header.size() - 2;
  return out;
}

Sample augment(const Sample& sample, double magnitude, Rng& rng) {
  if (!(magnitude >= 0.0)) throw std::invalid_argument("augment magnitude must be >= 0");
  Sample out = sample;
  if (magnitude == 0.0) return out;
  std::uniform_real_distribution<double> noise(-magnitude, magnitude);
  for (double& v : out.features) v += noise(rng);
  return out;
}

Dataset subset_by_identity(const Dataset& dataset, const std::vector<int>& identities) {
  const std::set<int> keep(identities.begin(), identities.end());
  Dataset out;
  out.input_dim = dataset.input_dim;
  for (const auto& s : dataset.samples)
    if (keep.contains(s.identity)) out.samples.push_back(s);
  return out;
}

ProtocolSplit split_protocol(const Dataset& dataset, std::array<double, 3> fractions,
                             std::uint64_t seed) {
  for (double f : fractions)
    if (!(f > 0.0)) throw DataError("split fractions must be positive");
  if (std::abs(fractions[0] + fractions[1] + fractions[2] - 1.0) > 1e-9)
    throw DataError("split fractions must sum to 1");

  std::vector<int> ids = dataset.identities();
  const std::size_t n = ids.size();
  if (n < 3) throw DataError("split needs at least 3 identities, got " + std::to_string(n));

  Rng rng(seed);
  std::shuffle(ids.begin(), ids.end(), rng);

  auto part = [n](double f) {
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(f * n)));
  };
  std::size_t n_val = part(fractions[1]);
  std::size_t n_test = part(fractions[2]);
  while (n_val + n_test > n - 1) {
    if (n_val >= n_test && n_val > 1) --n_val;
    else if (n_test > 1) --n_test;
    else break;
  }
  const std::size_t n_train = n - n_val - n_test;

  const auto first = ids.begin();
  std::vector<int> train_ids(first, first + n_train);
  std::vector<int> val_ids(first + n_train, first + n_train + n_val);
  std::vector<int> test_ids(first + n_train + n_val, ids.end());
  return {subset_by_identity(dataset, train_ids), subset_by_identity(dataset, val_ids),
          subset_by_identity(dataset, test_ids)};
}

}  // namespace modmine
