#include "soba/kernels.hpp"

#include <vector>

namespace soba::kernels {
namespace {

// Per-element bodies shared by both builds so the arithmetic order matches.

// sum_b x_b * (M[p+a, p+b] - M[p+a, m+b] - M[m+a, p+b] + M[m+a, m+b])
inline double block_row_sum(const double* m, std::size_t n, const KronBlocks& z, std::size_t a) {
  const std::size_t ia = z.x.index[a];
  const double* row_p = m + (z.plus_offset + ia) * n;
  const double* row_m = m + (z.minus_offset + ia) * n;
  double acc = 0.0;
  for (std::size_t b = 0; b < z.x.nnz(); ++b) {
    const std::size_t ib = z.x.index[b];
    acc += z.x.value[b] * ((row_p[z.plus_offset + ib] - row_p[z.minus_offset + ib]) -
                           (row_m[z.plus_offset + ib] - row_m[z.minus_offset + ib]));
  }
  return acc;
}

inline double finish_quad(const std::vector<double>& partial, const KronBlocks& z) {
  double acc = 0.0;
  for (std::size_t a = 0; a < partial.size(); ++a) acc += z.x.value[a] * partial[a];
  return z.scale * z.scale * acc;
}

// (M z)_r = scale * sum_a x_a (M[r, p+a] - M[r, m+a])
inline double kron_row(const double* m, std::size_t n, const KronBlocks& z, std::size_t r) {
  const double* row = m + r * n;
  double acc = 0.0;
  for (std::size_t a = 0; a < z.x.nnz(); ++a) {
    const std::size_t ia = z.x.index[a];
    acc += z.x.value[a] * (row[z.plus_offset + ia] - row[z.minus_offset + ia]);
  }
  return z.scale * acc;
}

inline double dot_row(const double* m, std::size_t n, const double* v, std::size_t r) {
  const double* row = m + r * n;
  double acc = 0.0;
  for (std::size_t c = 0; c < n; ++c) acc += row[c] * v[c];
  return acc;
}

inline void downdate_row(double* m, std::size_t n, const double* u, double denom, std::size_t i) {
  double* row = m + i * n;
  const double ui = u[i];
  for (std::size_t j = i; j < n; ++j) {
    const double value = row[j] - ui * u[j] / denom;
    row[j] = value;
    m[j * n + i] = value;
  }
}

}  // namespace

namespace serial {

double quad_form(std::span<const double> m, std::size_t n, const KronBlocks& z) {
  std::vector<double> partial(z.x.nnz());
  for (std::size_t a = 0; a < partial.size(); ++a) partial[a] = block_row_sum(m.data(), n, z, a);
  return finish_quad(partial, z);
}

void mul_kron(std::span<const double> m, std::size_t n, const KronBlocks& z, std::span<double> out) {
  for (std::size_t r = 0; r < n; ++r) out[r] = kron_row(m.data(), n, z, r);
}

void matvec(std::span<const double> m, std::size_t n, std::span<const double> v, std::span<double> out) {
  for (std::size_t r = 0; r < n; ++r) out[r] = dot_row(m.data(), n, v.data(), r);
}

void symmetric_downdate(std::span<double> m, std::size_t n, std::span<const double> u, double denom) {
  for (std::size_t i = 0; i < n; ++i) downdate_row(m.data(), n, u.data(), denom, i);
}

}  // namespace serial

namespace parallel {

double quad_form(std::span<const double> m, std::size_t n, const KronBlocks& z) {
  const std::ptrdiff_t nnz = static_cast<std::ptrdiff_t>(z.x.nnz());
  std::vector<double> partial(z.x.nnz());
#pragma omp parallel for schedule(static) if (z.x.nnz() >= kParallelThreshold)
  for (std::ptrdiff_t a = 0; a < nnz; ++a) partial[a] = block_row_sum(m.data(), n, z, a);
  return finish_quad(partial, z);
}

void mul_kron(std::span<const double> m, std::size_t n, const KronBlocks& z, std::span<double> out) {
  const std::ptrdiff_t rows = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static) if (n >= kParallelThreshold)
  for (std::ptrdiff_t r = 0; r < rows; ++r) out[r] = kron_row(m.data(), n, z, r);
}

void matvec(std::span<const double> m, std::size_t n, std::span<const double> v, std::span<double> out) {
  const std::ptrdiff_t rows = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static) if (n >= kParallelThreshold)
  for (std::ptrdiff_t r = 0; r < rows; ++r) out[r] = dot_row(m.data(), n, v.data(), r);
}

void symmetric_downdate(std::span<double> m, std::size_t n, std::span<const double> u, double denom) {
  const std::ptrdiff_t rows = static_cast<std::ptrdiff_t>(n);
  // Row i writes the upper part of row i and the lower part of column i;
  // no two rows touch the same element.
#pragma omp parallel for schedule(dynamic, 16) if (n >= kParallelThreshold)
  for (std::ptrdiff_t i = 0; i < rows; ++i) downdate_row(m.data(), n, u.data(), denom, i);
}

}  // namespace parallel
}  // namespace soba::kernels
