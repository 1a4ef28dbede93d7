#pragma once

// First-order comparison algorithms: the full-information multiclass
// Perceptron and the bandit-feedback Banditron.

#include <cstdint>
#include <vector>

#include "soba/learner.hpp"
#include "soba/losses.hpp"

namespace soba {

class Dataset;

class Perceptron {
 public:
  Perceptron(std::size_t k, std::size_t d, bool keep_history = false);

  /// Predicts, then applies W += (e_y - e_yhat) (x) x on a mistake.
  bool step(FeatureView x, std::size_t label);

  std::size_t predict(FeatureView x) const;
  const RowMatrix& weights() const noexcept { return weights_; }
  std::uint64_t mistake_count() const noexcept { return mistakes_; }
  /// b_t per step, when history is kept.
  const std::vector<bool>& update_flags() const noexcept { return flags_; }

 private:
  RowMatrix weights_;
  std::uint64_t mistakes_ = 0;
  bool keep_history_;
  std::vector<bool> flags_;
};

class Banditron {
 public:
  Banditron(std::size_t k, std::size_t d, double gamma, std::uint64_t seed);

  PredictionDist predict(FeatureView x);
  /// W += 1[correct]/p_sampled e_sampled (x) x - e_greedy (x) x.
  bool observe(FeatureView x, const PredictionDist& dist, bool correct);

  const RowMatrix& weights() const noexcept { return weights_; }
  double gamma() const noexcept { return gamma_; }
  std::uint64_t step_count() const noexcept { return steps_; }

  /// The update Banditron would apply for a given outcome, as a k x d matrix.
  static RowMatrix update_for(std::size_t k, std::size_t d, FeatureView x, const PredictionDist& dist,
                              bool correct);

 private:
  RowMatrix weights_;
  double gamma_;
  Rng rng_;
  std::uint64_t steps_ = 0;
  std::optional<std::uint64_t> pending_;
};

/// M^(1-1/q) (sum_t hinge(U, x_t, y_t)^q)^(1/q) + ||U||_F X sqrt(2) sqrt(M),
/// the Perceptron mistake bound for q in [1, 2].  Returns 0 when M = 0.
double perceptron_bound_rhs(double q, std::uint64_t mistakes, const CompetitorModel& competitor,
                            const Dataset& data, double x_bound);

}  // namespace soba
