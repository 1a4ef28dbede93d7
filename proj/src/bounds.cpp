#include "soba/bounds.hpp"

#include <algorithm>
#include <cmath>

#include "soba/errors.hpp"

namespace soba {

void TuningInput::validate() const {
  if (!std::isfinite(loss) || !std::isfinite(horizon) || !std::isfinite(aggregate) ||
      !std::isfinite(competitor_sq_norm)) {
    throw ConfigError("tuning inputs must be finite");
  }
  if (loss < 0.0 || competitor_sq_norm < 0.0) throw ConfigError("L and U must be nonnegative");
  if (!(horizon > 0.0) || !(aggregate > 0.0)) throw ConfigError("T and H must be positive");
}

double theorem2_gamma(std::size_t k, std::size_t d, std::uint64_t horizon) noexcept {
  if (horizon < 2) return 1.0;
  const double t = static_cast<double>(horizon);
  const double kk = static_cast<double>(k);
  return std::min(1.0, std::sqrt(kk * kk * static_cast<double>(d) * std::log(t) / t));
}

double tuning_aggregate(std::size_t k, std::size_t d, double x_bound, std::uint64_t horizon) noexcept {
  const double kk = static_cast<double>(k);
  return static_cast<double>(d) * kk * kk * x_bound * x_bound * std::log(static_cast<double>(horizon));
}

FallbackTuning fallback_gamma(const TuningInput& in) {
  in.validate();
  const double threshold = (in.competitor_sq_norm + 1.0) * std::sqrt(in.aggregate * in.horizon);
  if (in.loss >= threshold) {
    return {std::min(std::cbrt(in.aggregate * in.loss / (in.horizon * in.horizon)), 1.0),
            FallbackCase::HighLoss};
  }
  return {std::min(std::sqrt(in.aggregate / in.horizon), 1.0), FallbackCase::LowLoss};
}

double fallback_objective(const TuningInput& in, double gamma) noexcept {
  const double uh = in.competitor_sq_norm * in.aggregate;
  return std::min(in.horizon, in.loss + gamma * in.horizon + uh / gamma + std::sqrt(uh * in.loss / gamma));
}

double fallback_case_bound(const TuningInput& in, FallbackCase which) noexcept {
  if (which == FallbackCase::LowLoss) {
    return in.loss + 3.0 * (in.competitor_sq_norm + 1.0) * std::sqrt(in.aggregate * in.horizon);
  }
  return in.loss +
         2.0 * (std::sqrt(in.competitor_sq_norm) + 1.0) * std::cbrt(in.aggregate * in.loss * in.horizon);
}

SelfConfidentSides selfconfident_sides(std::span<const double> c, double b, double a_coef) {
  if (!(b > 0.0)) throw ConfigError("b must be positive");
  double prefix = 0.0;
  double lhs = 0.0;
  for (std::size_t t = 1; t <= c.size(); ++t) {
    const double ct = c[t - 1];
    if (!(ct >= 0.0 && ct <= b)) throw ConfigError("sequence values must lie in [0, b]");
    const double gamma = std::min(std::sqrt((b + prefix) / static_cast<double>(t)), 1.0);
    lhs += gamma + a_coef * ct / gamma;
    prefix += ct;
  }
  const double horizon = static_cast<double>(c.size());
  const double rhs = (2.0 + 2.0 * a_coef) * std::sqrt(horizon) * std::sqrt(b + prefix) + a_coef * prefix;
  return {lhs, rhs};
}

bool selfconfident_check(std::span<const double> c, double b, double a_coef) {
  const auto [lhs, rhs] = selfconfident_sides(c, b, a_coef);
  // Relative slack for summation rounding only.
  return lhs <= rhs * (1.0 + 1e-12);
}

}  // namespace soba
