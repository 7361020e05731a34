#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace modmine {

using Vector = std::vector<double>;

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> entries);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool square() const { return rows_ == cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  const std::vector<double>& entries() const { return data_; }

  Matrix transposed() const;
  std::string shape_string() const;

  bool operator==(const Matrix& other) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix matmul(const Matrix& a, const Matrix& b);
// a * b^T without forming the transpose.
Matrix matmul_transposed(const Matrix& a, const Matrix& b);
Vector matvec(const Matrix& a, std::span<const double> x);
// a^T * x
Vector matvec_transposed(const Matrix& a, std::span<const double> x);

Matrix operator+(const Matrix& a, const Matrix& b);
Matrix operator-(const Matrix& a, const Matrix& b);
Matrix operator*(double s, const Matrix& a);

double dot(std::span<const double> a, std::span<const double> b);
double norm(std::span<const double> a);
double frobenius_norm(const Matrix& m);
double trace(const Matrix& m);
bool all_finite(std::span<const double> values);

// Sum over (m_ij - I_ij)^2.
double frobenius_sq_dist_to_identity(const Matrix& m);

struct EigenOptions {
  double tol = 1e-9;
  int max_sweeps = 100;
};

// Cyclic Jacobi eigenvalues of a symmetric matrix, sorted descending.
// Throws ShapeError for non-square or asymmetric (beyond tol) input and
// NumericError if the off-diagonal mass has not converged after max_sweeps.
std::vector<double> symmetric_eigenvalues(const Matrix& m, EigenOptions options = {});

// Central-difference gradient of a scalar function of a matrix.
Matrix finite_difference_gradient(const std::function<double(const Matrix&)>& f,
                                  const Matrix& at, double step);

}  // namespace modmine
