#include "soba/losses.hpp"

#include <algorithm>
#include <cmath>

#include "soba/dataset.hpp"
#include "soba/errors.hpp"

namespace soba {

EtaParam::EtaParam(double eta) : eta_(eta) {
  if (!(eta >= 0.0 && eta <= 1.0)) throw ConfigError("eta must lie in [0, 1]");
}

CompetitorModel::CompetitorModel(RowMatrix weights)
    : weights_(std::move(weights)),
      frob_norm_(weights_.norm()),
      max_row_norm_(weights_.rows() == 0 ? 0.0 : weights_.rowwise().norm().maxCoeff()) {}

double eta_quadratic(EtaParam p, double x) noexcept {
  const double eta = p.value();
  return 1.0 - (2.0 / (2.0 - eta)) * x + (eta / (2.0 - eta)) * x * x;
}

double eta_loss_scalar(EtaParam p, double x) noexcept {
  if (x > 1.0) return 0.0;
  // Exact hinge and squared hinge at the endpoints.
  if (p.value() == 0.0) return 1.0 - x;
  if (p.value() == 1.0) return (1.0 - x) * (1.0 - x);
  return eta_quadratic(p, x);
}

std::size_t argmax_class(std::span<const double> scores) {
  if (scores.empty()) throw ConfigError("no classes");
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[best]) best = i;
  }
  return best;
}

std::size_t argmax_class_excluding(std::span<const double> scores, std::size_t excluded) {
  if (scores.size() < 2) throw ConfigError("need at least two classes");
  std::size_t best = excluded == 0 ? 1 : 0;
  for (std::size_t i = best + 1; i < scores.size(); ++i) {
    if (i != excluded && scores[i] > scores[best]) best = i;
  }
  return best;
}

Vector class_scores(const RowMatrix& model, FeatureView x) {
  if (x.extent() > static_cast<std::size_t>(model.cols())) {
    throw ConfigError("feature index exceeds model dimension");
  }
  Vector s = Vector::Zero(model.rows());
  for (Eigen::Index i = 0; i < model.rows(); ++i) {
    const double* row = model.data() + i * model.cols();
    double acc = 0.0;
    for (std::size_t a = 0; a < x.nnz(); ++a) acc += row[x.index[a]] * x.value[a];
    s(i) = acc;
  }
  return s;
}

double multiclass_margin(const RowMatrix& model, FeatureView x, std::size_t y) {
  if (model.rows() < 2) throw ConfigError("multiclass margin needs k >= 2");
  if (y >= static_cast<std::size_t>(model.rows())) throw ConfigError("label out of range");
  const Vector s = class_scores(model, x);
  const std::span<const double> scores{s.data(), static_cast<std::size_t>(s.size())};
  return s(y) - s(argmax_class_excluding(scores, y));
}

double multiclass_hinge(const RowMatrix& model, FeatureView x, std::size_t y) {
  return std::max(0.0, 1.0 - multiclass_margin(model, x, y));
}

double eta_loss(const RowMatrix& model, const Example& example, EtaParam p) {
  return eta_loss_scalar(p, multiclass_margin(model, example.x(), example.label));
}

double cumulative_eta_loss(const RowMatrix& model, const Dataset& data, EtaParam p) {
  double total = 0.0;
  for (const auto& ex : data) total += eta_loss(model, ex, p);
  return total;
}

HalfOpenInterval eta_admissible_range(const CompetitorModel& model, double x_bound) {
  if (!(x_bound > 0.0)) throw ConfigError("x_bound must be positive");
  return {0.0, std::min(1.0, 2.0 / (2.0 * model.max_row_norm() * x_bound + 1.0))};
}

}  // namespace soba
