#include "confstab/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "confstab/error.hpp"

namespace confstab {

namespace {

// Above this size the operator norm switches from a full eigendecomposition
// of the dilation to power iteration on M^T M.
constexpr std::size_t kDenseEigenLimit = 64;
constexpr double kPowerTolerance = 1e-12;
constexpr int kPowerMaxIterations = 10'000;

void require_same_shape(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw InvalidInputError("matrix shape mismatch: " + std::to_string(a.rows()) + "x" +
                            std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) +
                            "x" + std::to_string(b.cols()));
  }
}

double power_iteration_norm(const Matrix& m) {
  const std::size_t n = m.cols();
  std::vector<double> v(n), mv(m.rows()), w(n);
  // Deterministic start with no special alignment to the coordinate axes.
  for (std::size_t i = 0; i < n; ++i) v[i] = 1.0 + 0.01 * static_cast<double>(i % 7);

  double theta = 0.0;
  for (int it = 0; it < kPowerMaxIterations; ++it) {
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (norm == 0.0) return 0.0;
    for (double& x : v) x /= norm;

    for (std::size_t r = 0; r < m.rows(); ++r) {
      double s = 0.0;
      auto row = m.row(r);
      for (std::size_t c = 0; c < n; ++c) s += row[c] * v[c];
      mv[r] = s;
    }
    std::fill(w.begin(), w.end(), 0.0);
    for (std::size_t r = 0; r < m.rows(); ++r) {
      auto row = m.row(r);
      for (std::size_t c = 0; c < n; ++c) w[c] += row[c] * mv[r];
    }
    double next = 0.0;
    for (std::size_t c = 0; c < n; ++c) next += v[c] * w[c];
    const bool done = std::abs(next - theta) <= kPowerTolerance * std::max(next, 1e-300);
    theta = next;
    v.swap(w);
    if (done) break;
  }
  return std::sqrt(std::max(theta, 0.0));
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return {};
  Matrix m(rows.size(), rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != m.cols()) {
      throw InvalidInputError("ragged matrix rows: row " + std::to_string(r + 1) + " has " +
                              std::to_string(rows[r].size()) + " entries, expected " +
                              std::to_string(m.cols()));
    }
    std::copy(rows[r].begin(), rows[r].end(), m.row(r).begin());
  }
  return m;
}

std::vector<std::vector<double>> Matrix::to_rows() const {
  std::vector<std::vector<double>> out(rows_);
  for (std::size_t r = 0; r < rows_; ++r) out[r].assign(row(r).begin(), row(r).end());
  return out;
}

Matrix Matrix::transpose() const {
  Matrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

bool Matrix::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

Matrix& Matrix::operator+=(const Matrix& other) {
  require_same_shape(*this, other);
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Matrix& Matrix::operator-=(const Matrix& other) {
  require_same_shape(*this, other);
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

Matrix& Matrix::operator*=(double s) {
  for (double& x : data_) x *= s;
  return *this;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw InvalidInputError("matmul: inner dimensions differ");
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto dst = out.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      auto src = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) dst[j] += aik * src[j];
    }
  }
  return out;
}

std::vector<double> symmetric_eigenvalues(const Matrix& symmetric) {
  if (!symmetric.is_square()) throw InvalidInputError("symmetric_eigenvalues: matrix is not square");
  const std::size_t n = symmetric.rows();
  Matrix a(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) a(i, j) = a(j, i) = symmetric(i, j);

  double total = 0.0;
  for (double x : a.data()) total += x * x;

  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off <= 1e-34 * total || off < 1e-300) break;

    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t r = 0; r < n; ++r) {
          if (r == p || r == q) continue;
          const double arp = a(r, p);
          const double arq = a(r, q);
          a(r, p) = a(p, r) = c * arp - s * arq;
          a(r, q) = a(q, r) = s * arp + c * arq;
        }
        a(p, p) -= t * apq;
        a(q, q) += t * apq;
        a(p, q) = a(q, p) = 0.0;
      }
    }
  }

  std::vector<double> eig(n);
  for (std::size_t i = 0; i < n; ++i) eig[i] = a(i, i);
  std::sort(eig.begin(), eig.end());
  return eig;
}

double operator_norm(const Matrix& m) {
  if (!m.all_finite()) throw InvalidInputError("operator_norm: matrix has non-finite entries");
  if (m.empty()) return 0.0;
  if (std::max(m.rows(), m.cols()) <= kDenseEigenLimit) {
    const auto eig = symmetric_eigenvalues(dilate(m).matrix());
    return std::max(std::abs(eig.front()), std::abs(eig.back()));
  }
  return power_iteration_norm(m);
}

SelfAdjointDilation::SelfAdjointDilation(const Matrix& source)
    : source_dim_(source.rows()), entries_(source.rows() + source.cols(), source.rows() + source.cols()) {
  if (!source.all_finite()) throw InvalidInputError("dilate: matrix has non-finite entries");
  const std::size_t r0 = source.rows();
  for (std::size_t r = 0; r < source.rows(); ++r) {
    for (std::size_t c = 0; c < source.cols(); ++c) {
      entries_(r, r0 + c) = source(r, c);
      entries_(r0 + c, r) = source(r, c);
    }
  }
}

SelfAdjointDilation dilate(const Matrix& a) { return SelfAdjointDilation(a); }

LossMatrix loss_matrix(std::span<const double> losses, std::size_t y) {
  const std::size_t q = losses.size();
  if (y >= q) {
    throw IndexError("loss_matrix: class " + std::to_string(y + 1) + " outside [1, " +
                     std::to_string(q) + "]");
  }
  Matrix m(q, q);
  for (std::size_t j = 0; j < q; ++j) {
    if (!std::isfinite(losses[j]) || losses[j] < 0.0) {
      throw InvalidInputError("loss_matrix: loss for class " + std::to_string(j + 1) +
                              " is negative or non-finite");
    }
    if (j != y) m(y, j) = losses[j];
  }
  return LossMatrix(std::move(m), y);
}

ConfusionMatrix::ConfusionMatrix(Matrix entries) : entries_(std::move(entries)) {
  if (!entries_.is_square()) throw InvalidInputError("confusion matrix must be square");
  for (std::size_t r = 0; r < entries_.rows(); ++r) {
    if (entries_(r, r) != 0.0) {
      throw InvalidInputError("confusion matrix diagonal entry " + std::to_string(r + 1) + " is nonzero");
    }
    for (double x : entries_.row(r)) {
      if (!std::isfinite(x) || x < 0.0) {
        throw InvalidInputError("confusion matrix row " + std::to_string(r + 1) +
                                " has a negative or non-finite entry");
      }
    }
  }
}

ConfusionMatrix empirical_confusion(std::span<const LossMatrix> loss_matrices,
                                    std::span<const int> labels) {
  if (loss_matrices.size() != labels.size()) {
    throw InvalidInputError("empirical_confusion: " + std::to_string(loss_matrices.size()) +
                            " loss matrices but " + std::to_string(labels.size()) + " labels");
  }
  if (loss_matrices.empty()) throw InvalidInputError("empirical_confusion: no samples");
  const std::size_t q = loss_matrices.front().q_count();
  ConfusionAccumulator acc(q);
  for (std::size_t i = 0; i < loss_matrices.size(); ++i) {
    const LossMatrix& l = loss_matrices[i];
    if (l.q_count() != q) throw InvalidInputError("empirical_confusion: mixed class counts");
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) != l.active_row()) {
      throw ConsistencyError("empirical_confusion: sample " + std::to_string(i + 1) + " has label " +
                             std::to_string(labels[i] + 1) + " but its loss matrix is active on row " +
                             std::to_string(l.active_row() + 1));
    }
    acc.add(l.matrix().row(l.active_row()), l.active_row());
  }
  return acc.confusion();
}

ConfusionAccumulator::ConfusionAccumulator(std::size_t q)
    : q_(q), counts_(q, 0), sum_(q, q), sum_sq_(q, q) {}

void ConfusionAccumulator::add(std::span<const double> losses, std::size_t y) {
  if (losses.size() != q_) throw InvalidInputError("ConfusionAccumulator: loss vector has wrong size");
  if (y >= q_) throw IndexError("ConfusionAccumulator: class " + std::to_string(y + 1) + " out of range");
  ++counts_[y];
  for (std::size_t j = 0; j < q_; ++j) {
    if (j == y) continue;
    const double l = losses[j];
    sum_(y, j) += l;
    sum_sq_(y, j) += l * l;
    max_entry_ = std::max(max_entry_, l);
  }
}

ConfusionMatrix ConfusionAccumulator::confusion() const {
  Matrix c(q_, q_);
  for (std::size_t y = 0; y < q_; ++y) {
    if (counts_[y] == 0) continue;
    const double inv = 1.0 / static_cast<double>(counts_[y]);
    for (std::size_t j = 0; j < q_; ++j)
      if (j != y) c(y, j) = sum_(y, j) * inv;
  }
  return ConfusionMatrix(std::move(c));
}

Matrix ConfusionAccumulator::standard_errors() const {
  Matrix se(q_, q_);
  for (std::size_t y = 0; y < q_; ++y) {
    const auto n = static_cast<double>(counts_[y]);
    if (counts_[y] < 2) continue;
    for (std::size_t j = 0; j < q_; ++j) {
      if (j == y) continue;
      const double mean = sum_(y, j) / n;
      const double var = std::max(0.0, (sum_sq_(y, j) - n * mean * mean) / (n - 1.0));
      se(y, j) = std::sqrt(var / n);
    }
  }
  return se;
}

}  // namespace confstab
