#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "modmine/linalg.hpp"

namespace modmine {

using Rng = std::mt19937_64;

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Sample {
  int identity = 0;
  int view = 1;  // camera index, 1 or 2
  Vector features;

  bool operator==(const Sample&) const = default;
};

inline int opposite_view(int view) { return view == 1 ? 2 : 1; }

struct Dataset {
  std::vector<Sample> samples;
  std::size_t input_dim = 0;

  std::vector<int> identities() const;  // sorted, unique
  bool operator==(const Dataset&) const = default;
};

// Samples live on a shared sinusoidal curve; see generate_synthetic.
struct SyntheticConfig {
  std::size_t num_identities = 50;
  std::size_t samples_per_view = 5;
  std::size_t input_dim = 30;
  double manifold_curvature = 1.0;
  double intra_class_spread = 1.0;
  double view_offset_magnitude = 0.5;
  std::uint64_t seed = 0;

  void validate() const;
};

struct ProtocolSplit {
  Dataset train;
  Dataset validation;
  Dataset test;
};

// Point on the shared base curve at arc parameter t:
//   gamma(t) = t * u0 + curvature * sum_h sin(omega_h * t + phi_h) * u_h
// with u_h random unit directions fixed by the dataset seed.
class BaseCurve {
 public:
  BaseCurve(std::size_t dim, double curvature, Rng& rng);
  Vector at(double t) const;

 private:
  double curvature_;
  std::vector<Vector> directions_;  // directions_[0] is the straight component
  std::vector<double> frequencies_;
  std::vector<double> phases_;
};

// Each identity gets an arc position s_i on the base curve and a fixed
// displacement c_i off it; a sample of identity i is
//   c_i + gamma(s_i + spread * e) + 0.1 * spread * n,  e ~ U(-1, 1), n ~ N(0, I)
// and view-2 samples are shifted by a single dataset-wide offset vector.
Dataset generate_synthetic(const SyntheticConfig& config);

// Delimited text: header `identity,view,f0,...,f{D-1}` then one sample per line.
void write_delimited(const Dataset& dataset, const std::filesystem::path& path);
Dataset load_delimited(const std::filesystem::path& path);

// Uniform per-coordinate noise in [-magnitude, magnitude].
Sample augment(const Sample& sample, double magnitude, Rng& rng);

// Partition BY IDENTITY into train/validation/test.
ProtocolSplit split_protocol(const Dataset& dataset, std::array<double, 3> fractions,
                             std::uint64_t seed);

// Restrict a dataset to the given identities (order of samples preserved).
Dataset subset_by_identity(const Dataset& dataset, const std::vector<int>& identities);

}  // namespace modmine
