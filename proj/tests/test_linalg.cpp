#include "doctest.h"

#include <cmath>

#include "soba/errors.hpp"
#include "soba/kernels.hpp"
#include "soba/linalg.hpp"
#include "test_util.hpp"

using namespace soba;
using soba::testing::random_dense;
using soba::testing::random_pair;
using soba::testing::random_spd;

namespace {

// Dense oracle: materialize v and multiply.
double dense_quad(const RowMatrix& inv, const Vector& v) { return v.dot(inv * v); }

double max_abs(const RowMatrix& a, const RowMatrix& b) { return (a - b).cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("quad_form on the initial inverse is the squared norm over a") {
  const SparseVector x = SparseVector::from_dense(std::vector<double>{1.0, 1.0, 1.0});
  InverseState inv(InverseKind::Full, 2, 3, 1.0);
  const SparseKronVector v(0, 1, 1.0, x.view());
  CHECK(inv.quad_form(v) == doctest::Approx(6.0).epsilon(1e-15));
  CHECK(v.squared_norm() == doctest::Approx(6.0));

  InverseState diag(InverseKind::Diagonal, 2, 3, 1.0);
  CHECK(diag.quad_form(v) == doctest::Approx(6.0));

  InverseState scaled(InverseKind::Full, 2, 3, 4.0);
  CHECK(scaled.quad_form(v) == doctest::Approx(1.5));
}

TEST_CASE("quad_form of a zero-scale vector is zero") {
  std::mt19937_64 rng(7);
  const auto spd = random_spd(rng, 6);
  const auto inv = InverseState::from_full(spd.inverse(), 3, 2);
  const SparseVector x = SparseVector::from_dense(random_dense(rng, 2));
  CHECK(inv.quad_form(SparseKronVector(2, 0, 0.0, x.view())) == 0.0);
}

TEST_CASE("quad_form matches dense materialization") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const RowMatrix inverse = random_spd(rng, 6).inverse();
    const auto inv = InverseState::from_full(inverse, 3, 2);
    const SparseVector x = SparseVector::from_dense(random_dense(rng, 2));
    const auto [p, m] = random_pair(rng, 3);
    const SparseKronVector v(p, m, 0.3 + trial * 0.1, x.view());
    CHECK(std::abs(inv.quad_form(v) - dense_quad(inverse, v.to_dense(3, 2))) <= 1e-10);
  }
}

TEST_CASE("dimension mismatches are configuration errors") {
  InverseState inv(InverseKind::Full, 3, 2, 1.0);
  const SparseVector too_long = SparseVector::from_dense(std::vector<double>{1.0, 2.0, 3.0});
  CHECK_THROWS_AS(inv.quad_form(SparseKronVector(0, 1, 1.0, too_long.view())), ConfigError);
  const SparseVector ok = SparseVector::from_dense(std::vector<double>{1.0, 2.0});
  CHECK_THROWS_AS(inv.quad_form(SparseKronVector(0, 3, 1.0, ok.view())), ConfigError);
  CHECK_THROWS_AS(inv.apply_inverse(Vector::Zero(5)), ConfigError);
  CHECK_THROWS_AS(SparseKronVector(1, 1, 1.0, ok.view()), ConfigError);
  CHECK_THROWS_AS(InverseState(InverseKind::Full, 2, 2, 0.0), ConfigError);
  CHECK_THROWS_AS(InverseState(InverseKind::Diagonal, 2, 2, -1.0), ConfigError);
}

TEST_CASE("rank_one_update special cases") {
  SUBCASE("zero vector leaves the inverse unchanged") {
    InverseState inv(InverseKind::Full, 3, 2, 1.0);
    const SparseVector x = SparseVector::from_dense(std::vector<double>{0.5, -1.0});
    inv.rank_one_update(SparseKronVector(0, 2, 0.0, x.view()));
    CHECK(inv.full() == RowMatrix::Identity(6, 6));
    inv.rank_one_update(std::vector<double>(6, 0.0));
    CHECK(inv.full() == RowMatrix::Identity(6, 6));
  }
  SUBCASE("axis-aligned dense update on I2") {
    InverseState inv(InverseKind::Full, 2, 1, 1.0);
    inv.rank_one_update(std::vector<double>{1.0, 0.0});
    CHECK(inv.full()(0, 0) == doctest::Approx(0.5));
    CHECK(inv.full()(1, 1) == doctest::Approx(1.0));
    CHECK(inv.full()(0, 1) == 0.0);
    CHECK(inv.full()(1, 0) == 0.0);

    InverseState diag(InverseKind::Diagonal, 2, 1, 1.0);
    diag.rank_one_update(std::vector<double>{1.0, 0.0});
    CHECK(diag.diagonal()(0) == doctest::Approx(0.5));
    CHECK(diag.diagonal()(1) == doctest::Approx(1.0));
  }
}

TEST_CASE("Sherman-Morrison sequence agrees with direct inversion") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t k = 2 + soba::testing::random_index(rng, 4);      // 2..5
    const std::size_t d = 1 + soba::testing::random_index(rng, 30 / k);  // kd <= 30
    const double a = 0.5 + trial * 0.25;
    InverseState inv(InverseKind::Full, k, d, a);
    RowMatrix forward = a * RowMatrix::Identity(k * d, k * d);
    std::vector<SparseVector> keep;
    for (int step = 0; step < 50; ++step) {
      keep.push_back(SparseVector::from_dense(random_dense(rng, d)));
      const auto [p, m] = random_pair(rng, k);
      const SparseKronVector z(p, m, 0.5 + 0.1 * (step % 7), keep.back().view());
      const Vector zd = z.to_dense(k, d);
      const double before = inv.quad_form(z);
      forward += zd * zd.transpose();
      inv.rank_one_update(z);
      // Discount identity: 1 - z^T A_t^-1 z = 1 / (1 + z^T A_{t-1}^-1 z).
      CHECK(std::abs((1.0 - inv.quad_form(z)) - 1.0 / (1.0 + before)) <= 1e-8);
    }
    CHECK(max_abs(inv.full(), forward.inverse()) <= 1e-8);
    CHECK(inv.full() == inv.full().transpose());
  }
}

TEST_CASE("apply_inverse") {
  InverseState inv(InverseKind::Full, 2, 3, 2.0);
  Vector theta(6);
  theta << 1, -2, 3, 4, 0.5, -6;
  CHECK((inv.apply_inverse(theta) - theta / 2.0).cwiseAbs().maxCoeff() == 0.0);
  CHECK(inv.apply_inverse(Vector::Zero(6)).isZero(0.0));

  InverseState diag(InverseKind::Diagonal, 2, 3, 2.0);
  CHECK((diag.apply_inverse(theta) - theta / 2.0).cwiseAbs().maxCoeff() == 0.0);

  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const RowMatrix spd = random_spd(rng, 12);
    const auto full = InverseState::from_full(spd.inverse(), 4, 3);
    const auto t = random_dense(rng, 12);
    const Vector th = Eigen::Map<const Vector>(t.data(), 12);
    const Vector solved = spd.ldlt().solve(th);
    CHECK((full.apply_inverse(th) - solved).cwiseAbs().maxCoeff() <= 1e-8);
  }
}

TEST_CASE("vec/mat bridge is a row-major reshape") {
  Vector v(4);
  v << 1, 2, 3, 4;
  const RowMatrix m = vec_to_mat(v, 2, 2);
  CHECK(m(0, 0) == 1);
  CHECK(m(0, 1) == 2);
  CHECK(m(1, 0) == 3);
  CHECK(m(1, 1) == 4);
  CHECK(mat_to_vec(m) == v);
  CHECK(vec_to_mat(v, 2) == m);
  CHECK_THROWS_AS(vec_to_mat(v, 3), ConfigError);
  CHECK_THROWS_AS(vec_to_mat(v, 3, 2), ConfigError);

  std::mt19937_64 rng(9);
  const RowMatrix r = soba::testing::random_matrix(rng, 4, 5);
  CHECK(vec_to_mat(mat_to_vec(r), 4, 5) == r);

  // <M, (e_i - e_j) (x) x> = (M x)_i - (M x)_j
  for (int trial = 0; trial < 10; ++trial) {
    const SparseVector x = SparseVector::from_dense(random_dense(rng, 5));
    const auto [i, j] = random_pair(rng, 4);
    const SparseKronVector e(i, j, 1.0, x.view());
    const auto xd = x.to_dense(5);
    const Vector mx = r * Eigen::Map<const Vector>(xd.data(), 5);
    CHECK(std::abs(mat_to_vec(r).dot(e.to_dense(4, 5)) - (mx(i) - mx(j))) <= 1e-12);
    CHECK(std::abs(e.inner(r) - (mx(i) - mx(j))) <= 1e-12);
  }
}

TEST_CASE("quad_form stays within [0, ||v||^2 / a] as the state grows") {
  std::mt19937_64 rng(31);
  const double a = 1.5;
  InverseState inv(InverseKind::Full, 3, 4, a);
  InverseState diag(InverseKind::Diagonal, 3, 4, a);
  std::vector<SparseVector> keep;
  for (int step = 0; step < 100; ++step) {
    keep.push_back(SparseVector::from_dense(random_dense(rng, 4)));
    const auto [p, m] = random_pair(rng, 3);
    const SparseKronVector z(p, m, 1.3, keep.back().view());
    const double q = inv.quad_form(z);
    CHECK(q >= 0.0);
    CHECK(q <= z.squared_norm() / a * (1 + 1e-12));

    const Vector before = diag.diagonal();
    diag.rank_one_update(z);
    CHECK((diag.diagonal().array() <= before.array()).all());
    CHECK((diag.diagonal().array() > 0.0).all());
    inv.rank_one_update(z);
  }
}

TEST_CASE("serial and OpenMP kernels agree bitwise") {
  std::mt19937_64 rng(77);
  const std::size_t k = 5, d = 40;  // kd = 200 crosses the parallel threshold
  InverseState par(InverseKind::Full, k, d, 1.0);
  InverseState ser(InverseKind::Full, k, d, 1.0);
  ser.set_serial(true);
  std::vector<SparseVector> keep;
  for (int step = 0; step < 30; ++step) {
    keep.push_back(SparseVector::from_dense(random_dense(rng, d)));
    const auto [p, m] = random_pair(rng, k);
    const SparseKronVector z(p, m, 1.1, keep.back().view());
    CHECK(par.quad_form(z) == ser.quad_form(z));
    par.rank_one_update(z);
    ser.rank_one_update(z);
  }
  CHECK(par.full() == ser.full());
  const auto t = random_dense(rng, k * d);
  const Vector th = Eigen::Map<const Vector>(t.data(), static_cast<Eigen::Index>(k * d));
  CHECK(par.apply_inverse(th) == ser.apply_inverse(th));
}
