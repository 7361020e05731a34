#include "modmine/metric.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "modmine/io.hpp"

namespace modmine {

void MetricConfig::validate() const {
  if (!(lambda >= 0.0)) throw std::invalid_argument("metric: lambda must be >= 0");
  if (!(margin > 0.0)) throw std::invalid_argument("metric: margin must be > 0");
}

MetricParams init_metric(std::size_t embedding_dim, const MetricConfig& config, std::uint64_t seed,
                         double noise) {
  config.validate();
  const std::size_t cols = config.metric_dim == 0 ? embedding_dim : config.metric_dim;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, noise / std::sqrt(static_cast<double>(embedding_dim)));
  MetricParams p{Matrix(embedding_dim, cols)};
  for (std::size_t i = 0; i < embedding_dim; ++i)
    for (std::size_t j = 0; j < cols; ++j) p.w(i, j) = (i == j ? 1.0 : 0.0) + normal(rng);
  return p;
}

namespace {

Vector difference(const MetricParams& params, std::span<const double> x1,
                  std::span<const double> x2) {
  if (x1.size() != params.w.rows() || x2.size() != params.w.rows()) {
    throw ShapeError("metric expects embeddings of dimension " + std::to_string(params.w.rows()) +
                     ", got " + std::to_string(x1.size()) + " and " + std::to_string(x2.size()));
  }
  Vector diff(x1.size());
  for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = x1[i] - x2[i];
  return diff;
}

}  // namespace

double distance(const MetricParams& params, std::span<const double> x1, std::span<const double> x2) {
  return norm(matvec_transposed(params.w, difference(params, x1, x2)));
}

Matrix metric_matrix(const MetricParams& params) { return matmul_transposed(params.w, params.w); }

double regularizer(const MetricParams& params, double lambda) {
  if (lambda == 0.0) return 0.0;
  return 0.5 * lambda * frobenius_sq_dist_to_identity(metric_matrix(params));
}

Matrix regularizer_grad(const MetricParams& params, double lambda) {
  Matrix dev = metric_matrix(params);
  for (std::size_t i = 0; i < dev.rows(); ++i) dev(i, i) -= 1.0;
  return (2.0 * lambda) * matmul(dev, params.w);
}

DistanceGrads distance_grads(const MetricParams& params, std::span<const double> x1,
                             std::span<const double> x2) {
  const Vector diff = difference(params, x1, x2);
  Vector u = matvec_transposed(params.w, diff);
  const double d = norm(u);
  if (!(d > 0.0)) throw ZeroDistanceError("distance gradient undefined at zero distance");
  for (double& v : u) v /= d;

  DistanceGrads g;
  g.distance = d;
  g.grad_x1 = matvec(params.w, u);
  g.grad_x2 = g.grad_x1;
  for (double& v : g.grad_x2) v = -v;
  g.grad_w = Matrix(params.w.rows(), params.w.cols());
  for (std::size_t i = 0; i < diff.size(); ++i)
    for (std::size_t j = 0; j < u.size(); ++j) g.grad_w(i, j) = diff[i] * u[j];
  return g;
}

std::vector<double> spectrum(const MetricParams& params) {
  auto eig = symmetric_eigenvalues(metric_matrix(params));
  for (double& v : eig) v = std::max(v, 0.0);
  return eig;
}

void write_spectrum(const std::vector<double>& eigenvalues, const std::filesystem::path& path) {
  std::string text;
  for (double v : eigenvalues) text += format_double(v) + "\n";
  write_text(path, text);
}

std::vector<double> read_spectrum(const std::filesystem::path& path) {
  std::vector<double> out;
  std::size_t row = 0;
  for (const auto& line : read_lines(path)) {
    ++row;
    if (trim(line).empty()) continue;
    double v = 0.0;
    if (!parse_double(line, v)) {
      throw std::runtime_error(path.string() + ": line " + std::to_string(row) +
                               ": not a number");
    }
    out.push_back(v);
  }
  return out;
}

}  // namespace modmine
