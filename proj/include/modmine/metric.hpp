#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "modmine/linalg.hpp"

namespace modmine {

class ZeroDistanceError : public NumericError {
 public:
  using NumericError::NumericError;
};

struct MetricConfig {
  std::size_t metric_dim = 0;  // 0 means square: metric_dim = embedding dim
  double lambda = 1e-2;
  double margin = 2.0;

  void validate() const;
  bool operator==(const MetricConfig&) const = default;
};

// Learned Mahalanobis layer d(x1, x2) = |W^T (x1 - x2)|, M = W W^T.
// The affine bias of the W^T layer is fixed at zero and therefore not stored.
struct MetricParams {
  Matrix w;  // embedding_dim x metric_dim

  bool operator==(const MetricParams&) const = default;
};

// W = I (or its rectangular analogue) plus N(0, noise^2 / embedding_dim) entries.
MetricParams init_metric(std::size_t embedding_dim, const MetricConfig& config, std::uint64_t seed,
                         double noise = 1e-2);

double distance(const MetricParams& params, std::span<const double> x1, std::span<const double> x2);

Matrix metric_matrix(const MetricParams& params);

// (lambda / 2) * |W W^T - I|_F^2
double regularizer(const MetricParams& params, double lambda);

// Exact gradient of regularizer(): 2 * lambda * (W W^T - I) W
Matrix regularizer_grad(const MetricParams& params, double lambda);

struct DistanceGrads {
  double distance = 0.0;
  Matrix grad_w;
  Vector grad_x1;
  Vector grad_x2;
};

// Throws ZeroDistanceError when the distance vanishes.
DistanceGrads distance_grads(const MetricParams& params, std::span<const double> x1,
                             std::span<const double> x2);

// Eigenvalues of M, descending, negatives within tolerance clamped to zero.
std::vector<double> spectrum(const MetricParams& params);

// One eigenvalue per line, descending.
void write_spectrum(const std::vector<double>& eigenvalues, const std::filesystem::path& path);
std::vector<double> read_spectrum(const std::filesystem::path& path);

}  // namespace modmine
