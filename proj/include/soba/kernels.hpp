#pragma once

// Dense kernels on a row-major symmetric n x n matrix, in two builds: a serial
// reference and an OpenMP version.  Both compute every output element with
// the same operation order, so their results are bitwise identical whatever
// the thread count.

#include <cstddef>
#include <span>

#include "soba/linalg.hpp"

namespace soba::kernels {

/// Block coordinates of a structured vector scale*(e_p - e_m) (x) x.
struct KronBlocks {
  std::size_t plus_offset;
  std::size_t minus_offset;
  double scale;
  FeatureView x;
};

namespace serial {
double quad_form(std::span<const double> m, std::size_t n, const KronBlocks& z);
void mul_kron(std::span<const double> m, std::size_t n, const KronBlocks& z, std::span<double> out);
void matvec(std::span<const double> m, std::size_t n, std::span<const double> v, std::span<double> out);
/// m <- m - u u^T / denom on the upper triangle, mirrored into the lower one.
void symmetric_downdate(std::span<double> m, std::size_t n, std::span<const double> u, double denom);
}  // namespace serial

namespace parallel {
double quad_form(std::span<const double> m, std::size_t n, const KronBlocks& z);
void mul_kron(std::span<const double> m, std::size_t n, const KronBlocks& z, std::span<double> out);
void matvec(std::span<const double> m, std::size_t n, std::span<const double> v, std::span<double> out);
void symmetric_downdate(std::span<double> m, std::size_t n, std::span<const double> u, double denom);
}  // namespace parallel

/// Below this dimension the OpenMP versions run on one thread.
inline constexpr std::size_t kParallelThreshold = 128;

}  // namespace soba::kernels
