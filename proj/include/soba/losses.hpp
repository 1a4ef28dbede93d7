#pragma once

// The eta-loss family: hinge (eta = 0) through squared hinge (eta = 1),
// applied to the multiclass margin.

#include <cstddef>
#include <span>

#include "soba/linalg.hpp"

namespace soba {

struct Example;
class Dataset;

class EtaParam {
 public:
  explicit EtaParam(double eta);
  double value() const noexcept { return eta_; }

 private:
  double eta_;
};

/// A fixed competitor U with its norms cached.
class CompetitorModel {
 public:
  explicit CompetitorModel(RowMatrix weights);

  const RowMatrix& weights() const noexcept { return weights_; }
  double frob_norm() const noexcept { return frob_norm_; }
  double max_row_norm() const noexcept { return max_row_norm_; }

 private:
  RowMatrix weights_;
  double frob_norm_;
  double max_row_norm_;
};

/// Left-open interval (lower, upper].
struct HalfOpenInterval {
  double lower;
  double upper;
  bool contains(double v) const noexcept { return v > lower && v <= upper; }
};

/// 1 - 2/(2-eta) x + eta/(2-eta) x^2 for x <= 1, else 0.
double eta_loss_scalar(EtaParam p, double x) noexcept;

/// The unclipped quadratic behind eta_loss_scalar.
double eta_quadratic(EtaParam p, double x) noexcept;

/// Greedy class of M x; ties go to the lowest index.
std::size_t argmax_class(std::span<const double> scores);
/// Best class other than `excluded`; ties go to the lowest index.
std::size_t argmax_class_excluding(std::span<const double> scores, std::size_t excluded);

/// M x as a length-k vector.
Vector class_scores(const RowMatrix& model, FeatureView x);

/// (M x)_y - max_{i != y} (M x)_i.
double multiclass_margin(const RowMatrix& model, FeatureView x, std::size_t y);

/// max_{i != y} [1 - (M x)_y + (M x)_i]_+
double multiclass_hinge(const RowMatrix& model, FeatureView x, std::size_t y);

double eta_loss(const RowMatrix& model, const Example& example, EtaParam p);

/// Sum of eta_loss over the dataset, in order.
double cumulative_eta_loss(const RowMatrix& model, const Dataset& data, EtaParam p);

/// Etas for which the regret bound applies to this competitor:
/// (0, min(1, 2 / (2 max_i ||u_i|| X + 1))].
HalfOpenInterval eta_admissible_range(const CompetitorModel& model, double x_bound);

}  // namespace soba
