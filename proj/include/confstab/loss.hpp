#pragma once

// Families of per-class losses l = (l_1, ..., l_Q). A family maps the
// hypothesis output h(x) in R^Q and the true class y to the loss vector whose
// j-th component (j != y) is the loss charged for confusing y with j. The
// component j = y is always reported as zero. Summing the vector gives the
// usual scalar multiclass loss of the underlying machine.

#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace confstab {

enum class LossKind { kLlw, kWw, kZeroOne };

class LossFamily {
 public:
  static LossFamily llw(int q);
  static LossFamily ww(int q);
  // Argmax prediction; ties go to the lowest class index.
  static LossFamily zero_one(int q);
  // "llw" | "ww" | "zero_one"
  static LossFamily from_key(std::string_view key, int q);

  LossKind kind() const noexcept { return kind_; }
  std::string_view key() const noexcept;
  int q_count() const noexcept { return q_; }

  // Multi-admissibility constants sigma_q. Infinite for losses that are not
  // Lipschitz in the scores (0-1 loss).
  const std::vector<double>& sigma() const noexcept { return sigma_; }

  // Range bound M: every loss component lies in [0, M].
  std::optional<double> range_bound() const noexcept { return range_bound_; }
  LossFamily with_range_bound(double m) const;

  void evaluate(std::span<const double> scores, int y, std::span<double> out) const;
  std::vector<double> evaluate(std::span<const double> scores, int y) const;
  // Sum over j != y of evaluate(scores, y)[j].
  double total(std::span<const double> scores, int y) const;

 private:
  LossFamily(LossKind kind, int q, std::vector<double> sigma, std::optional<double> m);

  LossKind kind_;
  int q_;
  std::vector<double> sigma_;
  std::optional<double> range_bound_;
};

}  // namespace confstab
