#include "soba/learner.hpp"

#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

#include "soba/errors.hpp"
#include "soba/losses.hpp"

namespace soba {

double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

void LearnerConfig::validate() const {
  if (k < 2) throw ConfigError("need at least two classes");
  if (d < 1) throw ConfigError("feature dimension must be positive");
  if (!(a > 0.0) || !std::isfinite(a)) throw ConfigError("regularizer a must be positive");
  if (!adaptive_gamma && !(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("gamma must lie in [0, 1]");
}

PredictionDist explore(std::span<const double> scores, double gamma, Rng& rng, std::uint64_t ticket) {
  const std::size_t k = scores.size();
  PredictionDist dist;
  dist.greedy = argmax_class(scores);
  dist.gamma = gamma;
  dist.ticket = ticket;
  dist.probs.assign(k, gamma / static_cast<double>(k));
  dist.probs[dist.greedy] += 1.0 - gamma;

  const double u = uniform01(rng);
  double cumulative = 0.0;
  dist.sampled = dist.greedy;
  std::size_t last_positive = dist.greedy;
  for (std::size_t i = 0; i < k; ++i) {
    if (dist.probs[i] > 0.0) last_positive = i;
  }
  bool found = false;
  for (std::size_t i = 0; i < k; ++i) {
    cumulative += dist.probs[i];
    if (u < cumulative && dist.probs[i] > 0.0) {
      dist.sampled = i;
      found = true;
      break;
    }
  }
  // Rounding can leave the cumulative sum a hair below 1.
  if (!found) dist.sampled = last_positive;
  return dist;
}

double adaptive_gamma(std::size_t k, double accumulator, std::uint64_t t) noexcept {
  if (t == 0) return 1.0;
  return std::min(std::sqrt(static_cast<double>(k) * (1.0 + accumulator) / static_cast<double>(t)), 1.0);
}

SobaLearner::SobaLearner(LearnerConfig config)
    : config_((config.validate(), config)),
      weights_(RowMatrix::Zero(static_cast<Eigen::Index>(config.k), static_cast<Eigen::Index>(config.d))),
      inverse_(config.inverse_kind, config.k, config.d, config.a),
      theta_(Vector::Zero(static_cast<Eigen::Index>(config.k * config.d))),
      rng_(config.seed) {}

double SobaLearner::current_gamma() const noexcept {
  if (config_.adaptive_gamma) return adaptive_gamma(config_.k, accumulator_, steps_ + 1);
  return config_.gamma;
}

void SobaLearner::check_input(FeatureView x) const {
  if (x.index.size() != x.value.size()) throw InputError("feature index/value length mismatch");
  if (x.extent() > config_.d) throw ConfigError("feature index exceeds learner dimension");
  for (double v : x.value) {
    if (!std::isfinite(v)) throw InputError("non-finite feature value");
  }
}

PredictionDist SobaLearner::predict(FeatureView x) {
  check_input(x);
  const Vector scores = class_scores(weights_, x);
  pending_ = steps_ + 1;
  return explore({scores.data(), config_.k}, current_gamma(), rng_, *pending_);
}

StepTrace SobaLearner::observe(FeatureView x, const PredictionDist& dist, bool correct) {
  if (!pending_ || dist.ticket != *pending_) {
    throw ProtocolError("observe() must follow exactly one predict() on this learner");
  }
  if (dist.probs.size() != config_.k) throw ProtocolError("prediction has the wrong class count");
  pending_.reset();
  ++steps_;

  StepTrace trace;
  trace.greedy = dist.greedy;
  trace.sampled = dist.sampled;
  trace.correct = correct;
  trace.gamma_used = dist.gamma;
  trace.p_sampled = dist.probs[dist.sampled];
  if (!correct) return trace;

  // The sampled class is the true label.
  const std::size_t label = dist.sampled;
  const Vector scores = class_scores(weights_, x);
  const std::size_t runner_up = argmax_class_excluding({scores.data(), config_.k}, label);
  const double p = dist.probs[label];
  const double gap = scores(runner_up) - scores(label);

  const SparseKronVector z(runner_up, label, 1.0 / std::sqrt(p), x);
  const double w_dot_z = gap / std::sqrt(p);
  const double w_dot_g = gap / p;
  const double c = inverse_.quad_form(z);
  const double m = (w_dot_z * w_dot_z + 2.0 * w_dot_g) / (1.0 + c);
  const bool q = invariant_sum_ + m >= 0.0;

  trace.runner_up = runner_up;
  trace.m_value = m;
  trace.q_flag = q;
  trace.h_flag = dist.greedy != label || q;
  trace.quad_before = c;
  trace.updated = q;
  if (!q) return trace;

  inverse_.rank_one_update(z);
  const std::size_t d = config_.d;
  for (std::size_t a = 0; a < x.nnz(); ++a) {
    const double step = x.value[a] / p;
    theta_(runner_up * d + x.index[a]) -= step;
    theta_(label * d + x.index[a]) += step;
  }
  weights_ = vec_to_mat(inverse_.apply_inverse(theta_), config_.k, d);
  invariant_sum_ += m;
  ++updates_;

  const double quad_after =
      inverse_.kind() == InverseKind::Full ? c / (1.0 + c) : inverse_.quad_form(z);
  trace.quad_term = quad_after;
  if (config_.adaptive_gamma) accumulator_ += quad_after;
  return trace;
}

namespace {

using Json = nlohmann::ordered_json;

std::vector<double> to_std(const Eigen::Ref<const Vector>& v) { return {v.data(), v.data() + v.size()}; }

Vector from_std(const std::vector<double>& v) { return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size())); }

}  // namespace

std::string SobaLearner::snapshot() const {
  Json j;
  j["config"] = {{"k", config_.k},
                 {"d", config_.d},
                 {"a", config_.a},
                 {"gamma", config_.gamma},
                 {"adaptive_gamma", config_.adaptive_gamma},
                 {"inverse_kind", config_.inverse_kind == InverseKind::Full ? "full" : "diagonal"},
                 {"seed", config_.seed}};
  j["weights"] = to_std(mat_to_vec(weights_));
  j["theta"] = to_std(theta_);
  if (inverse_.kind() == InverseKind::Full) {
    j["inverse"] = {{"kind", "full"}, {"data", to_std(mat_to_vec(inverse_.full()))}};
  } else {
    j["inverse"] = {{"kind", "diagonal"}, {"data", to_std(inverse_.diagonal())}};
  }
  j["invariant_sum"] = invariant_sum_;
  j["accumulator"] = accumulator_;
  j["step_count"] = steps_;
  j["update_count"] = updates_;
  std::ostringstream rng_state;
  rng_state << rng_;
  j["rng_state"] = rng_state.str();
  return j.dump();
}

SobaLearner SobaLearner::restore(std::string_view snapshot) {
  const Json j = Json::parse(snapshot);
  const auto& c = j.at("config");
  LearnerConfig config;
  config.k = c.at("k").get<std::size_t>();
  config.d = c.at("d").get<std::size_t>();
  config.a = c.at("a").get<double>();
  config.gamma = c.at("gamma").get<double>();
  config.adaptive_gamma = c.at("adaptive_gamma").get<bool>();
  config.inverse_kind = c.at("inverse_kind").get<std::string>() == "full" ? InverseKind::Full : InverseKind::Diagonal;
  config.seed = c.at("seed").get<std::uint64_t>();

  SobaLearner learner(config);
  learner.weights_ = vec_to_mat(from_std(j.at("weights").get<std::vector<double>>()), config.k, config.d);
  learner.theta_ = from_std(j.at("theta").get<std::vector<double>>());
  if (static_cast<std::size_t>(learner.theta_.size()) != config.k * config.d) throw ConfigError("snapshot theta has wrong length");
  const auto& inv = j.at("inverse");
  Vector data = from_std(inv.at("data").get<std::vector<double>>());
  if (inv.at("kind").get<std::string>() == "full") {
    learner.inverse_ = InverseState::from_full(vec_to_mat(data, config.k * config.d), config.k, config.d);
  } else {
    learner.inverse_ = InverseState::from_diagonal(std::move(data), config.k, config.d);
  }
  learner.invariant_sum_ = j.at("invariant_sum").get<double>();
  learner.accumulator_ = j.at("accumulator").get<double>();
  learner.steps_ = j.at("step_count").get<std::uint64_t>();
  learner.updates_ = j.at("update_count").get<std::uint64_t>();
  std::istringstream rng_state(j.at("rng_state").get<std::string>());
  rng_state >> learner.rng_;
  return learner;
}

}  // namespace soba
