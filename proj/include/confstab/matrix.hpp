#pragma once

// Dense matrices for loss and confusion matrices, the spectral (operator)
// norm and the self-adjoint dilation [[0, A], [A^T, 0]].
//
// Class indices are 0-based everywhere in this library. File formats and
// user-facing messages use 1-based indices.

#include <cstddef>
#include <span>
#include <vector>

namespace confstab {

// Row-major dense real matrix. Sizes are expected to be small (Q <= ~100).
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);

  static Matrix identity(std::size_t n);
  static Matrix from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return data_.empty(); }
  bool is_square() const noexcept { return rows_ == cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  std::vector<std::vector<double>> to_rows() const;

  Matrix transpose() const;
  bool all_finite() const;

  Matrix& operator+=(const Matrix& other);
  Matrix& operator-=(const Matrix& other);
  Matrix& operator*=(double s);

  friend Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
  friend Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
  friend Matrix operator*(Matrix a, double s) { return a *= s; }
  friend Matrix operator*(double s, Matrix a) { return a *= s; }
  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix matmul(const Matrix& a, const Matrix& b);

// Eigenvalues of a symmetric matrix (cyclic Jacobi), ascending.
// Only the upper triangle is read.
std::vector<double> symmetric_eigenvalues(const Matrix& symmetric);

// Largest singular value, max_{v != 0} |Mv|_2 / |v|_2.
// Throws InvalidInputError on non-finite entries.
double operator_norm(const Matrix& m);

// 2Q x 2Q self-adjoint block matrix [[0, A], [A^T, 0]].
class SelfAdjointDilation {
 public:
  explicit SelfAdjointDilation(const Matrix& source);

  std::size_t source_dim() const noexcept { return source_dim_; }
  const Matrix& matrix() const noexcept { return entries_; }

 private:
  std::size_t source_dim_;
  Matrix entries_;
};

SelfAdjointDilation dilate(const Matrix& a);

// Q x Q loss matrix L(h, x, y): row `active_row` holds the per-class losses
// with the diagonal entry forced to zero; every other row is zero.
class LossMatrix {
 public:
  std::size_t q_count() const noexcept { return entries_.rows(); }
  std::size_t active_row() const noexcept { return active_row_; }
  const Matrix& matrix() const noexcept { return entries_; }

  friend LossMatrix loss_matrix(std::span<const double> losses, std::size_t y);

 private:
  LossMatrix(Matrix entries, std::size_t active_row)
      : entries_(std::move(entries)), active_row_(active_row) {}

  Matrix entries_;
  std::size_t active_row_;
};

// Throws IndexError if y >= losses.size(), InvalidInputError on negative or
// non-finite losses.
LossMatrix loss_matrix(std::span<const double> losses, std::size_t y);

// Nonnegative Q x Q matrix with an exactly zero diagonal.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t q) : entries_(q, q) {}
  // Validates nonnegativity and the zero diagonal.
  explicit ConfusionMatrix(Matrix entries);

  std::size_t q_count() const noexcept { return entries_.rows(); }
  const Matrix& matrix() const noexcept { return entries_; }
  double operator()(std::size_t r, std::size_t c) const { return entries_(r, c); }

 private:
  Matrix entries_;
};

// sum_q (1/m_q) sum_{i : y_i = q} L(h, X_i, q). Throws ConsistencyError if a
// loss matrix's active row differs from its label.
ConfusionMatrix empirical_confusion(std::span<const LossMatrix> loss_matrices,
                                    std::span<const int> labels);

// Streaming version of empirical_confusion over raw loss vectors. Also keeps
// per-entry second moments so the Monte Carlo standard error of each class
// row mean is available.
class ConfusionAccumulator {
 public:
  explicit ConfusionAccumulator(std::size_t q);

  void add(std::span<const double> losses, std::size_t y);

  std::size_t q_count() const noexcept { return q_; }
  std::size_t count(std::size_t y) const { return counts_[y]; }
  double max_entry() const noexcept { return max_entry_; }

  // Class-normalized confusion; classes with no samples contribute nothing.
  ConfusionMatrix confusion() const;
  // Standard error of each entry of confusion().
  Matrix standard_errors() const;

 private:
  std::size_t q_;
  std::vector<std::size_t> counts_;
  Matrix sum_;
  Matrix sum_sq_;
  double max_entry_ = 0.0;
};

}  // namespace confstab
