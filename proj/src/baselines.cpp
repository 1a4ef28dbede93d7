#include "soba/baselines.hpp"

#include <cmath>

#include "soba/dataset.hpp"
#include "soba/errors.hpp"

namespace soba {

Perceptron::Perceptron(std::size_t k, std::size_t d, bool keep_history)
    : weights_(RowMatrix::Zero(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(d))),
      keep_history_(keep_history) {
  if (k < 2 || d < 1) throw ConfigError("perceptron needs k >= 2 and d >= 1");
}

std::size_t Perceptron::predict(FeatureView x) const {
  const Vector s = class_scores(weights_, x);
  return argmax_class({s.data(), static_cast<std::size_t>(s.size())});
}

bool Perceptron::step(FeatureView x, std::size_t label) {
  if (label >= static_cast<std::size_t>(weights_.rows())) throw ConfigError("label out of range");
  const std::size_t guess = predict(x);
  const bool mistake = guess != label;
  if (mistake) {
    ++mistakes_;
    for (std::size_t a = 0; a < x.nnz(); ++a) {
      weights_(label, x.index[a]) += x.value[a];
      weights_(guess, x.index[a]) -= x.value[a];
    }
  }
  if (keep_history_) flags_.push_back(mistake);
  return mistake;
}

Banditron::Banditron(std::size_t k, std::size_t d, double gamma, std::uint64_t seed)
    : weights_(RowMatrix::Zero(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(d))),
      gamma_(gamma),
      rng_(seed) {
  if (k < 2 || d < 1) throw ConfigError("banditron needs k >= 2 and d >= 1");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("banditron gamma must lie in (0, 1]");
}

PredictionDist Banditron::predict(FeatureView x) {
  for (double v : x.value) {
    if (!std::isfinite(v)) throw InputError("non-finite feature value");
  }
  const Vector s = class_scores(weights_, x);
  pending_ = steps_ + 1;
  return explore({s.data(), static_cast<std::size_t>(s.size())}, gamma_, rng_, *pending_);
}

RowMatrix Banditron::update_for(std::size_t k, std::size_t d, FeatureView x, const PredictionDist& dist,
                                bool correct) {
  RowMatrix delta = RowMatrix::Zero(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(d));
  const double gain = correct ? 1.0 / dist.probs[dist.sampled] : 0.0;
  for (std::size_t a = 0; a < x.nnz(); ++a) {
    delta(dist.sampled, x.index[a]) += gain * x.value[a];
    delta(dist.greedy, x.index[a]) -= x.value[a];
  }
  return delta;
}

bool Banditron::observe(FeatureView x, const PredictionDist& dist, bool correct) {
  if (!pending_ || dist.ticket != *pending_) {
    throw ProtocolError("observe() must follow exactly one predict() on this learner");
  }
  pending_.reset();
  ++steps_;
  const double gain = correct ? 1.0 / dist.probs[dist.sampled] : 0.0;
  for (std::size_t a = 0; a < x.nnz(); ++a) {
    weights_(dist.sampled, x.index[a]) += gain * x.value[a];
    weights_(dist.greedy, x.index[a]) -= x.value[a];
  }
  const bool cancels = correct && dist.sampled == dist.greedy && gain == 1.0;
  return x.nnz() > 0 && !cancels;
}

double perceptron_bound_rhs(double q, std::uint64_t mistakes, const CompetitorModel& competitor,
                            const Dataset& data, double x_bound) {
  if (!(q >= 1.0 && q <= 2.0)) throw ConfigError("q must lie in [1, 2]");
  // The Hoelder factor is ||b||_p with b binary, which is 0 when b = 0 (also for p = inf).
  if (mistakes == 0) return 0.0;
  double loss_q = 0.0;
  for (const auto& ex : data) {
    loss_q += std::pow(multiclass_hinge(competitor.weights(), ex.x(), ex.label), q);
  }
  const double m = static_cast<double>(mistakes);
  return std::pow(m, 1.0 - 1.0 / q) * std::pow(loss_q, 1.0 / q) +
         competitor.frob_norm() * x_bound * std::sqrt(2.0) * std::sqrt(m);
}

}  // namespace soba
