#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "confstab/matrix.hpp"

namespace confstab {

using FeatureVector = std::vector<double>;

enum class KernelKind { kGaussian, kLinear, kPolynomial };

// k(x, x') for one of the supported families:
//   gaussian:   exp(-gamma |x - x'|^2)
//   linear:     <x, x'>
//   polynomial: (<x, x'> + offset)^degree
struct Kernel {
  KernelKind kind = KernelKind::kGaussian;
  double gamma = 1.0;
  int degree = 2;
  double offset = 1.0;

  static Kernel gaussian(double gamma);
  static Kernel linear();
  static Kernel polynomial(int degree, double offset);

  double operator()(std::span<const double> a, std::span<const double> b) const;
  std::string name() const;

  friend bool operator==(const Kernel&, const Kernel&) = default;
};

// Smallest kappa with k(x, x) <= kappa^2 on the ball of the given radius.
// Gaussian kernels ignore the radius; linear and polynomial kernels throw
// UnboundedKernelError when no radius is supplied.
double kappa(const Kernel& kernel, std::optional<double> domain_radius = std::nullopt);

class GramMatrix {
 public:
  explicit GramMatrix(Matrix entries) : entries_(std::move(entries)) {}

  std::size_t point_count() const noexcept { return entries_.rows(); }
  const Matrix& matrix() const noexcept { return entries_; }
  double operator()(std::size_t i, std::size_t j) const { return entries_(i, j); }

 private:
  Matrix entries_;
};

// Throws InvalidInputError on inconsistent feature dimensions.
GramMatrix gram(const Kernel& kernel, std::span<const FeatureVector> points);

// Throws InvalidInputError unless every point has the same dimension;
// returns that dimension (0 for an empty list).
std::size_t common_dimension(std::span<const FeatureVector> points);

}  // namespace confstab
