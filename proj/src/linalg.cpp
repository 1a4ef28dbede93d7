#include "soba/linalg.hpp"

#include <cmath>
#include <string>

#include "soba/errors.hpp"
#include "soba/kernels.hpp"

namespace soba {

double FeatureView::squared_norm() const noexcept {
  double acc = 0.0;
  for (double v : value) acc += v * v;
  return acc;
}

SparseVector SparseVector::from_dense(std::span<const double> dense) {
  SparseVector out;
  for (std::size_t j = 0; j < dense.size(); ++j) {
    if (dense[j] != 0.0) {
      out.index.push_back(static_cast<std::uint32_t>(j));
      out.value.push_back(dense[j]);
    }
  }
  return out;
}

std::vector<double> SparseVector::to_dense(std::size_t dim) const {
  std::vector<double> out(dim, 0.0);
  for (std::size_t a = 0; a < index.size(); ++a) {
    if (index[a] >= dim) throw ConfigError("sparse index exceeds dense dimension");
    out[index[a]] = value[a];
  }
  return out;
}

SparseKronVector::SparseKronVector(std::size_t plus_row, std::size_t minus_row, double scale,
                                   FeatureView features)
    : plus_(plus_row), minus_(minus_row), scale_(scale), features_(features) {
  if (plus_row == minus_row) throw ConfigError("structured vector needs two distinct rows");
  if (!(scale >= 0.0)) throw ConfigError("structured vector scale must be nonnegative");
}

double SparseKronVector::inner(const RowMatrix& model) const {
  if (plus_ >= static_cast<std::size_t>(model.rows()) ||
      minus_ >= static_cast<std::size_t>(model.rows()) ||
      features_.extent() > static_cast<std::size_t>(model.cols())) {
    throw ConfigError("structured vector does not fit the model shape");
  }
  double acc = 0.0;
  for (std::size_t a = 0; a < features_.nnz(); ++a) {
    const auto j = features_.index[a];
    acc += features_.value[a] * (model(plus_, j) - model(minus_, j));
  }
  return scale_ * acc;
}

Vector SparseKronVector::to_dense(std::size_t k, std::size_t d) const {
  if (plus_ >= k || minus_ >= k || features_.extent() > d) {
    throw ConfigError("structured vector does not fit k x d");
  }
  Vector out = Vector::Zero(static_cast<Eigen::Index>(k * d));
  for (std::size_t a = 0; a < features_.nnz(); ++a) {
    const auto j = features_.index[a];
    out(plus_ * d + j) += scale_ * features_.value[a];
    out(minus_ * d + j) -= scale_ * features_.value[a];
  }
  return out;
}

InverseState::InverseState(InverseKind kind, std::size_t k, std::size_t d, double a)
    : kind_(kind), k_(k), d_(d) {
  if (!(a > 0.0) || !std::isfinite(a)) throw ConfigError("regularizer a must be positive");
  if (k == 0 || d == 0) throw ConfigError("inverse dimension must be positive");
  const auto n = static_cast<Eigen::Index>(k * d);
  if (kind == InverseKind::Full) {
    full_ = RowMatrix::Identity(n, n) / a;
  } else {
    diag_ = Vector::Constant(n, 1.0 / a);
  }
}

InverseState InverseState::from_full(RowMatrix inverse, std::size_t k, std::size_t d) {
  const auto n = static_cast<Eigen::Index>(k * d);
  if (inverse.rows() != n || inverse.cols() != n) throw ConfigError("inverse has wrong shape");
  InverseState s;
  s.kind_ = InverseKind::Full;
  s.k_ = k;
  s.d_ = d;
  s.full_ = std::move(inverse);
  return s;
}

InverseState InverseState::from_diagonal(Vector diagonal, std::size_t k, std::size_t d) {
  if (diagonal.size() != static_cast<Eigen::Index>(k * d)) throw ConfigError("diagonal has wrong length");
  if ((diagonal.array() <= 0.0).any()) throw ConfigError("diagonal surrogate must be positive");
  InverseState s;
  s.kind_ = InverseKind::Diagonal;
  s.k_ = k;
  s.d_ = d;
  s.diag_ = std::move(diagonal);
  return s;
}

const RowMatrix& InverseState::full() const {
  if (kind_ != InverseKind::Full) throw ConfigError("not a full inverse");
  return full_;
}

const Vector& InverseState::diagonal() const {
  if (kind_ != InverseKind::Diagonal) throw ConfigError("not a diagonal inverse");
  return diag_;
}

void InverseState::check_dim(const SparseKronVector& v) const {
  if (v.plus_row() >= k_ || v.minus_row() >= k_ || v.features().extent() > d_) {
    throw ConfigError("structured vector of shape (" + std::to_string(v.plus_row()) + "," +
                      std::to_string(v.minus_row()) + ", extent " +
                      std::to_string(v.features().extent()) + ") does not fit k=" +
                      std::to_string(k_) + ", d=" + std::to_string(d_));
  }
}

namespace {

kernels::KronBlocks blocks(const SparseKronVector& v, std::size_t d) {
  return {v.plus_row() * d, v.minus_row() * d, v.scale(), v.features()};
}

std::span<const double> as_span(const RowMatrix& m) { return {m.data(), static_cast<std::size_t>(m.size())}; }
std::span<double> as_span(RowMatrix& m) { return {m.data(), static_cast<std::size_t>(m.size())}; }

}  // namespace

double InverseState::quad_form(const SparseKronVector& v) const {
  check_dim(v);
  if (v.scale() == 0.0) return 0.0;
  if (kind_ == InverseKind::Diagonal) {
    const auto x = v.features();
    double acc = 0.0;
    for (std::size_t a = 0; a < x.nnz(); ++a) {
      const auto j = x.index[a];
      acc += x.value[a] * x.value[a] * (diag_(v.plus_row() * d_ + j) + diag_(v.minus_row() * d_ + j));
    }
    return v.scale() * v.scale() * acc;
  }
  const auto z = blocks(v, d_);
  return serial_ ? kernels::serial::quad_form(as_span(full_), dim(), z)
                 : kernels::parallel::quad_form(as_span(full_), dim(), z);
}

void InverseState::rank_one_update(const SparseKronVector& z) {
  check_dim(z);
  if (z.scale() == 0.0) return;
  if (kind_ == InverseKind::Diagonal) {
    const auto x = z.features();
    const double s2 = z.scale() * z.scale();
    for (std::size_t a = 0; a < x.nnz(); ++a) {
      const double zj2 = s2 * x.value[a] * x.value[a];
      for (std::size_t row : {z.plus_row(), z.minus_row()}) {
        double& entry = diag_(row * d_ + x.index[a]);
        entry = 1.0 / (1.0 / entry + zj2);
      }
    }
    return;
  }
  const std::size_t n = dim();
  const auto kb = blocks(z, d_);
  std::vector<double> u(n);
  double c = 0.0;
  if (serial_) {
    kernels::serial::mul_kron(as_span(full_), n, kb, u);
  } else {
    kernels::parallel::mul_kron(as_span(full_), n, kb, u);
  }
  // z^T A^-1 z from u, reading only the two affected blocks.
  for (std::size_t a = 0; a < kb.x.nnz(); ++a) {
    const auto j = kb.x.index[a];
    c += kb.x.value[a] * (u[kb.plus_offset + j] - u[kb.minus_offset + j]);
  }
  c *= kb.scale;
  if (serial_) {
    kernels::serial::symmetric_downdate(as_span(full_), n, u, 1.0 + c);
  } else {
    kernels::parallel::symmetric_downdate(as_span(full_), n, u, 1.0 + c);
  }
}

void InverseState::rank_one_update(std::span<const double> z) {
  const std::size_t n = dim();
  if (z.size() != n) throw ConfigError("dense update has wrong length");
  if (kind_ == InverseKind::Diagonal) {
    for (std::size_t j = 0; j < n; ++j) diag_(j) = 1.0 / (1.0 / diag_(j) + z[j] * z[j]);
    return;
  }
  std::vector<double> u(n);
  if (serial_) {
    kernels::serial::matvec(as_span(full_), n, z, u);
  } else {
    kernels::parallel::matvec(as_span(full_), n, z, u);
  }
  double c = 0.0;
  for (std::size_t j = 0; j < n; ++j) c += z[j] * u[j];
  if (c == 0.0) return;
  if (serial_) {
    kernels::serial::symmetric_downdate(as_span(full_), n, u, 1.0 + c);
  } else {
    kernels::parallel::symmetric_downdate(as_span(full_), n, u, 1.0 + c);
  }
}

Vector InverseState::apply_inverse(const Vector& theta) const {
  const std::size_t n = dim();
  if (static_cast<std::size_t>(theta.size()) != n) throw ConfigError("theta has wrong length");
  if (kind_ == InverseKind::Diagonal) return diag_.cwiseProduct(theta);
  Vector out(static_cast<Eigen::Index>(n));
  std::span<const double> in{theta.data(), n};
  std::span<double> dst{out.data(), n};
  if (serial_) {
    kernels::serial::matvec(as_span(full_), n, in, dst);
  } else {
    kernels::parallel::matvec(as_span(full_), n, in, dst);
  }
  return out;
}

RowMatrix vec_to_mat(const Vector& v, std::size_t k, std::size_t d) {
  if (static_cast<std::size_t>(v.size()) != k * d) {
    throw ConfigError("vector of length " + std::to_string(v.size()) + " cannot be reshaped to " +
                      std::to_string(k) + "x" + std::to_string(d));
  }
  return Eigen::Map<const RowMatrix>(v.data(), static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(d));
}

RowMatrix vec_to_mat(const Vector& v, std::size_t k) {
  if (k == 0 || static_cast<std::size_t>(v.size()) % k != 0) {
    throw ConfigError("vector length " + std::to_string(v.size()) + " not divisible by " + std::to_string(k));
  }
  return vec_to_mat(v, k, static_cast<std::size_t>(v.size()) / k);
}

Vector mat_to_vec(const RowMatrix& m) {
  return Eigen::Map<const Vector>(m.data(), m.size());
}

}  // namespace soba
