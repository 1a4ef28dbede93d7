#pragma once

// Closed-form exploration tunings and the lemma checks behind them.

#include <cstdint>
#include <span>

namespace soba {

/// Inputs of the fall-back tuning: competitor hinge loss L, horizon T,
/// aggregate H = d k^2 X^2 ln T, and U = ||U||_F^2.
struct TuningInput {
  double loss;
  double horizon;
  double aggregate;
  double competitor_sq_norm;

  void validate() const;
};

enum class FallbackCase {
  /// L >= (U+1) sqrt(HT): gamma = min((HL/T^2)^(1/3), 1).
  HighLoss,
  /// L < (U+1) sqrt(HT): gamma = min(sqrt(H/T), 1).
  LowLoss,
};

struct FallbackTuning {
  double gamma;
  FallbackCase which;
};

/// min(1, sqrt(k^2 d ln T / T)); 1 when T < 2.
double theorem2_gamma(std::size_t k, std::size_t d, std::uint64_t horizon) noexcept;

/// d k^2 X^2 ln T.
double tuning_aggregate(std::size_t k, std::size_t d, double x_bound, std::uint64_t horizon) noexcept;

FallbackTuning fallback_gamma(const TuningInput& in);

/// min(T, L + gamma T + UH/gamma + sqrt(UHL/gamma)).
double fallback_objective(const TuningInput& in, double gamma) noexcept;

/// The bound fallback_gamma guarantees for its case.
double fallback_case_bound(const TuningInput& in, FallbackCase which) noexcept;

/// Runs gamma_t = min(sqrt((b + sum_{s<t} c_s)/t), 1) over c and tests
/// sum (gamma_t + a c_t / gamma_t) <= (2 + 2a) sqrt(T) sqrt(b + sum c) + a sum c.
bool selfconfident_check(std::span<const double> c, double b, double a_coef);

struct SelfConfidentSides {
  double lhs;
  double rhs;
};
SelfConfidentSides selfconfident_sides(std::span<const double> c, double b, double a_coef);

}  // namespace soba
