#pragma once

// Second Order Banditron: gamma-greedy prediction, bandit feedback, and
// second-order updates gated by the running sum of n_s m_s.

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "soba/linalg.hpp"

namespace soba {

using Rng = std::mt19937_64;

/// Uniform double in [0, 1) from 53 random bits.
double uniform01(Rng& rng);

struct LearnerConfig {
  std::size_t k = 2;
  std::size_t d = 1;
  double a = 1.0;
  double gamma = 0.01;
  /// Replace the fixed gamma with min(sqrt(k (1 + sum z^T A^-1 z) / t), 1).
  bool adaptive_gamma = false;
  InverseKind inverse_kind = InverseKind::Full;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Exploration distribution of one round and the class sampled from it.
struct PredictionDist {
  std::vector<double> probs;
  std::size_t greedy = 0;
  std::size_t sampled = 0;
  double gamma = 0.0;
  /// Round this prediction belongs to; observe() consumes it.
  std::uint64_t ticket = 0;
};

/// probs = (1 - gamma) e_greedy + gamma/k, and a draw from it.
PredictionDist explore(std::span<const double> scores, double gamma, Rng& rng, std::uint64_t ticket);

/// What happened in one observe() call.
struct StepTrace {
  std::size_t greedy = 0;
  std::size_t sampled = 0;
  bool correct = false;
  std::optional<std::size_t> runner_up;
  std::optional<double> m_value;
  bool updated = false;
  std::optional<bool> q_flag;
  bool h_flag = false;
  double gamma_used = 0.0;
  /// z^T A_t^-1 z after the update, when one happened.
  std::optional<double> quad_term;
  /// z^T A_{t-1}^-1 z before the update, when z was formed.
  std::optional<double> quad_before;
  /// Probability of the sampled class.
  double p_sampled = 0.0;
};

class SobaLearner {
 public:
  explicit SobaLearner(LearnerConfig config);

  const LearnerConfig& config() const noexcept { return config_; }

  /// Greedy class, exploration distribution, and sampled class for x.
  PredictionDist predict(FeatureView x);

  /// Feedback for the last prediction: only whether the sampled class was right.
  StepTrace observe(FeatureView x, const PredictionDist& dist, bool correct);

  /// Exploration rate for the upcoming round.
  double current_gamma() const noexcept;

  /// Copy of W_t.
  RowMatrix greedy_model() const { return weights_; }
  const RowMatrix& weights() const noexcept { return weights_; }
  const Vector& theta() const noexcept { return theta_; }
  const InverseState& inverse() const noexcept { return inverse_; }
  double invariant_sum() const noexcept { return invariant_sum_; }
  double adaptive_accumulator() const noexcept { return accumulator_; }
  std::uint64_t step_count() const noexcept { return steps_; }
  std::uint64_t update_count() const noexcept { return updates_; }

  /// Route Full-kind kernels through the serial reference.
  void set_serial_kernels(bool serial) noexcept { inverse_.set_serial(serial); }

  /// JSON snapshot: config, weights (row-major), theta, inverse, invariant_sum,
  /// accumulator, step_count, rng state.
  std::string snapshot() const;
  static SobaLearner restore(std::string_view snapshot);

 private:
  void check_input(FeatureView x) const;

  LearnerConfig config_;
  RowMatrix weights_;
  InverseState inverse_;
  Vector theta_;
  double invariant_sum_ = 0.0;
  double accumulator_ = 0.0;
  std::uint64_t steps_ = 0;
  std::uint64_t updates_ = 0;
  Rng rng_;
  std::optional<std::uint64_t> pending_;
};

/// min(sqrt(k (1 + accumulator) / t), 1); 1 when t = 0.
double adaptive_gamma(std::size_t k, double accumulator, std::uint64_t t) noexcept;

}  // namespace soba
