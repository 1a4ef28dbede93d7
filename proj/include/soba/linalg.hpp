#pragma once

// Structured vectors and the maintained inverse A^-1 behind every
// second-order update.  The kd-dimensional space is indexed row-major:
// coordinate (class i, feature j) lives at i*d + j.

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <vector>

namespace soba {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// Non-owning view of a sparse feature vector (0-based indices, strictly increasing).
struct FeatureView {
  std::span<const std::uint32_t> index;
  std::span<const double> value;

  std::size_t nnz() const noexcept { return index.size(); }
  double squared_norm() const noexcept;
  /// Largest index + 1, or 0 when empty.
  std::size_t extent() const noexcept { return index.empty() ? 0 : index.back() + 1; }
};

struct SparseVector {
  std::vector<std::uint32_t> index;
  std::vector<double> value;

  static SparseVector from_dense(std::span<const double> dense);
  std::vector<double> to_dense(std::size_t dim) const;
  FeatureView view() const noexcept { return {index, value}; }
  double squared_norm() const noexcept { return view().squared_norm(); }
  std::size_t nnz() const noexcept { return index.size(); }

  friend bool operator==(const SparseVector&, const SparseVector&) = default;
};

/// scale * (e_plus - e_minus) (x) features, never materialized.
class SparseKronVector {
 public:
  SparseKronVector(std::size_t plus_row, std::size_t minus_row, double scale,
                   FeatureView features);

  std::size_t plus_row() const noexcept { return plus_; }
  std::size_t minus_row() const noexcept { return minus_; }
  double scale() const noexcept { return scale_; }
  FeatureView features() const noexcept { return features_; }

  double squared_norm() const noexcept { return 2.0 * scale_ * scale_ * features_.squared_norm(); }
  /// <M, v> for a k x d matrix M, i.e. scale * ((M x)_plus - (M x)_minus).
  double inner(const RowMatrix& model) const;
  /// Dense length-k*d materialization; for tests and small problems only.
  Vector to_dense(std::size_t k, std::size_t d) const;

 private:
  std::size_t plus_;
  std::size_t minus_;
  double scale_;
  FeatureView features_;
};

enum class InverseKind { Full, Diagonal };

/// Maintained inverse of A = a*I + sum z z^T.  Full keeps the whole symmetric
/// kd x kd matrix A^-1; Diagonal keeps 1/diag(A) only.
class InverseState {
 public:
  InverseState(InverseKind kind, std::size_t k, std::size_t d, double a);

  /// Wraps an explicit symmetric positive-definite inverse (Full kind).
  static InverseState from_full(RowMatrix inverse, std::size_t k, std::size_t d);
  /// Wraps an explicit positive diagonal surrogate (Diagonal kind).
  static InverseState from_diagonal(Vector diagonal, std::size_t k, std::size_t d);

  InverseKind kind() const noexcept { return kind_; }
  std::size_t dim() const noexcept { return k_ * d_; }
  std::size_t classes() const noexcept { return k_; }
  std::size_t features() const noexcept { return d_; }

  /// Full kind only.
  const RowMatrix& full() const;
  /// Diagonal kind only.
  const Vector& diagonal() const;

  /// v^T A^-1 v; touches only the two affected row blocks.
  double quad_form(const SparseKronVector& v) const;
  /// A <- A + z z^T, maintained through Sherman-Morrison (Full) or the
  /// diagonal accumulation 1/(1/old + z_j^2) (Diagonal).
  void rank_one_update(const SparseKronVector& z);
  /// Dense special case of rank_one_update.
  void rank_one_update(std::span<const double> z);
  /// A^-1 theta.
  Vector apply_inverse(const Vector& theta) const;

  /// Route the Full kernels through the serial reference instead of OpenMP.
  void set_serial(bool serial) noexcept { serial_ = serial; }

 private:
  InverseState() = default;
  void check_dim(const SparseKronVector& v) const;

  InverseKind kind_ = InverseKind::Full;
  std::size_t k_ = 0;
  std::size_t d_ = 0;
  RowMatrix full_;
  Vector diag_;
  bool serial_ = false;
};

/// Row-major reshape of a length-k*d vector into k x d.
RowMatrix vec_to_mat(const Vector& v, std::size_t k, std::size_t d);
/// Same, with d inferred; the length must be divisible by k.
RowMatrix vec_to_mat(const Vector& v, std::size_t k);
/// Row-major flatten.
Vector mat_to_vec(const RowMatrix& m);

}  // namespace soba
