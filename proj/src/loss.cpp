#include "confstab/loss.hpp"

#include <algorithm>
#include <cmath>

#include "confstab/error.hpp"

namespace confstab {

namespace {

void require_multiclass(int q, const char* who) {
  if (q < 2) throw InvalidInputError(std::string(who) + ": need at least 2 classes, got " + std::to_string(q));
}

double hinge(double z) { return z > 0.0 ? z : 0.0; }

}  // namespace

LossFamily::LossFamily(LossKind kind, int q, std::vector<double> sigma, std::optional<double> m)
    : kind_(kind), q_(q), sigma_(std::move(sigma)), range_bound_(m) {}

LossFamily LossFamily::llw(int q) {
  require_multiclass(q, "llw_loss");
  return LossFamily(LossKind::kLlw, q, std::vector<double>(q, 1.0), std::nullopt);
}

LossFamily LossFamily::ww(int q) {
  require_multiclass(q, "ww_loss");
  return LossFamily(LossKind::kWw, q, std::vector<double>(q, 1.0), std::nullopt);
}

LossFamily LossFamily::zero_one(int q) {
  require_multiclass(q, "zero_one_loss");
  return LossFamily(LossKind::kZeroOne, q,
                    std::vector<double>(q, std::numeric_limits<double>::infinity()), 1.0);
}

LossFamily LossFamily::from_key(std::string_view key, int q) {
  if (key == "llw") return llw(q);
  if (key == "ww") return ww(q);
  if (key == "zero_one") return zero_one(q);
  throw InvalidInputError("unknown loss family '" + std::string(key) + "' (expected llw, ww or zero_one)");
}

std::string_view LossFamily::key() const noexcept {
  switch (kind_) {
    case LossKind::kLlw: return "llw";
    case LossKind::kWw: return "ww";
    case LossKind::kZeroOne: return "zero_one";
  }
  return "";
}

LossFamily LossFamily::with_range_bound(double m) const {
  if (!(m >= 0.0)) throw InvalidInputError("range bound must be nonnegative");
  LossFamily copy = *this;
  copy.range_bound_ = m;
  return copy;
}

void LossFamily::evaluate(std::span<const double> scores, int y, std::span<double> out) const {
  const auto q = static_cast<std::size_t>(q_);
  if (scores.size() != q || out.size() != q) {
    throw InvalidInputError("loss evaluate: expected " + std::to_string(q_) + " scores, got " +
                            std::to_string(scores.size()));
  }
  if (y < 0 || y >= q_) throw IndexError("loss evaluate: class " + std::to_string(y + 1) + " out of range");

  switch (kind_) {
    case LossKind::kLlw: {
      const double shift = 1.0 / static_cast<double>(q_ - 1);
      for (std::size_t j = 0; j < q; ++j) out[j] = hinge(scores[j] + shift);
      break;
    }
    case LossKind::kWw: {
      const double hy = scores[y];
      for (std::size_t j = 0; j < q; ++j) out[j] = hinge(1.0 - hy + scores[j]);
      break;
    }
    case LossKind::kZeroOne: {
      std::fill(out.begin(), out.end(), 0.0);
      const auto pred = static_cast<std::size_t>(std::max_element(scores.begin(), scores.end()) - scores.begin());
      out[pred] = 1.0;
      break;
    }
  }
  out[static_cast<std::size_t>(y)] = 0.0;
}

std::vector<double> LossFamily::evaluate(std::span<const double> scores, int y) const {
  std::vector<double> out(scores.size());
  evaluate(scores, y, out);
  return out;
}

double LossFamily::total(std::span<const double> scores, int y) const {
  const auto v = evaluate(scores, y);
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

}  // namespace confstab
