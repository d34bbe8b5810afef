#include "confstab/kernel.hpp"

#include <cmath>

#include "confstab/error.hpp"

namespace confstab {

Kernel Kernel::gaussian(double gamma) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw InvalidInputError("gaussian kernel: gamma must be > 0");
  return Kernel{KernelKind::kGaussian, gamma, 2, 1.0};
}

Kernel Kernel::linear() { return Kernel{KernelKind::kLinear, 1.0, 1, 0.0}; }

Kernel Kernel::polynomial(int degree, double offset) {
  if (degree < 1) throw InvalidInputError("polynomial kernel: degree must be >= 1");
  if (!(offset >= 0.0)) throw InvalidInputError("polynomial kernel: offset must be >= 0");
  return Kernel{KernelKind::kPolynomial, 1.0, degree, offset};
}

double Kernel::operator()(std::span<const double> a, std::span<const double> b) const {
  if (a.size() != b.size()) {
    throw InvalidInputError("kernel: dimension mismatch (" + std::to_string(a.size()) + " vs " +
                            std::to_string(b.size()) + ")");
  }
  switch (kind) {
    case KernelKind::kGaussian: {
      double d2 = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        d2 += d * d;
      }
      return std::exp(-gamma * d2);
    }
    case KernelKind::kLinear:
    case KernelKind::kPolynomial: {
      double dot = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i) dot += a[i] * b[i];
      if (kind == KernelKind::kLinear) return dot;
      return std::pow(dot + offset, degree);
    }
  }
  return 0.0;
}

std::string Kernel::name() const {
  switch (kind) {
    case KernelKind::kGaussian: return "gaussian";
    case KernelKind::kLinear: return "linear";
    case KernelKind::kPolynomial: return "polynomial";
  }
  return "";
}

double kappa(const Kernel& kernel, std::optional<double> domain_radius) {
  if (kernel.kind == KernelKind::kGaussian) return 1.0;
  if (!domain_radius) {
    throw UnboundedKernelError(kernel.name() + " kernel is unbounded without a domain radius");
  }
  const double r = *domain_radius;
  if (!(r >= 0.0) || !std::isfinite(r)) throw InvalidInputError("domain radius must be finite and >= 0");
  if (kernel.kind == KernelKind::kLinear) return r;
  return std::pow(r * r + kernel.offset, 0.5 * kernel.degree);
}

std::size_t common_dimension(std::span<const FeatureVector> points) {
  if (points.empty()) return 0;
  const std::size_t d = points.front().size();
  for (std::size_t i = 1; i < points.size(); ++i) {
    if (points[i].size() != d) {
      throw InvalidInputError("point " + std::to_string(i + 1) + " has dimension " +
                              std::to_string(points[i].size()) + ", expected " + std::to_string(d));
    }
  }
  return d;
}

GramMatrix gram(const Kernel& kernel, std::span<const FeatureVector> points) {
  common_dimension(points);
  const std::size_t m = points.size();
  Matrix g(m, m);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i; j < m; ++j) {
      const double k = kernel(points[i], points[j]);
      g(i, j) = k;
      g(j, i) = k;
    }
  }
  return GramMatrix(std::move(g));
}

}  // namespace confstab
