#include "doctest.h"

#include <cmath>

#include "soba/dataset.hpp"
#include "soba/errors.hpp"
#include "soba/losses.hpp"
#include "test_util.hpp"

using namespace soba;

TEST_CASE("eta_loss_scalar examples") {
  CHECK(eta_loss_scalar(EtaParam(0.0), 0.0) == 1.0);
  for (double eta : {0.0, 0.25, 0.5, 0.9, 1.0}) {
    CHECK(eta_loss_scalar(EtaParam(eta), 1.0) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(eta_loss_scalar(EtaParam(eta), 2.0) == 0.0);
  }
  CHECK(eta_loss_scalar(EtaParam(1.0), -1.0) == 4.0);
  CHECK_THROWS_AS(EtaParam(-0.1), ConfigError);
  CHECK_THROWS_AS(EtaParam(1.5), ConfigError);
}

TEST_CASE("endpoints are hinge and squared hinge") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> margin(-10.0, 10.0);
  for (int i = 0; i < 1000; ++i) {
    const double x = margin(rng);
    const double hinge = std::max(0.0, 1.0 - x);
    CHECK(eta_loss_scalar(EtaParam(0.0), x) == hinge);
    CHECK(eta_loss_scalar(EtaParam(1.0), x) == hinge * hinge);
  }
}

TEST_CASE("quadratic has roots at 1 and (2-eta)/eta") {
  for (int i = 1; i <= 10; ++i) {
    const EtaParam p(0.1 * i);
    CHECK(std::abs(eta_quadratic(p, 1.0)) <= 1e-12);
    CHECK(std::abs(eta_quadratic(p, (2.0 - p.value()) / p.value())) <= 1e-12);
  }
}

TEST_CASE("dominance, 0-1 upper bound, and monotonicity") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> margin(-10.0, 10.0), eta(0.0, 1.0);
  for (int i = 0; i < 2000; ++i) {
    const double x = margin(rng);
    const EtaParam p(eta(rng));
    const double l = eta_loss_scalar(p, x);
    const double upper = std::max(eta_loss_scalar(EtaParam(0.0), x), eta_loss_scalar(EtaParam(1.0), x));
    CHECK(l <= upper + 1e-12);
    CHECK((x < 0.0 ? 1.0 : 0.0) <= l);
    const double x2 = std::min(1.0, x + 0.01);
    if (x <= 1.0) CHECK(eta_loss_scalar(p, x2) <= l + 1e-12);
  }
}

TEST_CASE("multiclass margin") {
  RowMatrix zero = RowMatrix::Zero(3, 2);
  const SparseVector x = SparseVector::from_dense(std::vector<double>{1.0, 0.0});
  CHECK(multiclass_margin(zero, x.view(), 1) == 0.0);

  // Scores (2, 5, 1) with the example in the first coordinate.
  RowMatrix m(3, 2);
  m << 2, 7, 5, -1, 1, 3;
  CHECK(multiclass_margin(m, x.view(), 0) == -3.0);
  CHECK(multiclass_margin(m, x.view(), 1) == 3.0);

  // Adding the same row to every class changes nothing.
  RowMatrix shifted = m;
  shifted.rowwise() += Eigen::RowVector2d(4.0, -2.5);
  const SparseVector x2 = SparseVector::from_dense(std::vector<double>{0.3, 1.7});
  CHECK(multiclass_margin(shifted, x2.view(), 2) == doctest::Approx(multiclass_margin(m, x2.view(), 2)));

  RowMatrix single = RowMatrix::Zero(1, 2);
  CHECK_THROWS_AS(multiclass_margin(single, x.view(), 0), ConfigError);
}

TEST_CASE("eta_loss and cumulative loss") {
  std::mt19937_64 rng(12);
  const Example ex{SparseVector::from_dense(std::vector<double>{0.2, -0.4, 1.0}), 2};
  CHECK(eta_loss(RowMatrix::Zero(4, 3), ex, EtaParam(0.4)) == 1.0);

  const Dataset empty({}, 3, 2);
  CHECK(cumulative_eta_loss(RowMatrix::Zero(3, 2), empty, EtaParam(0.5)) == 0.0);

  // 200 random triples: eta-loss sits between the 0-1 loss and the larger endpoint.
  std::uniform_real_distribution<double> eta(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    const RowMatrix model = soba::testing::random_matrix(rng, 4, 3);
    const Example e{SparseVector::from_dense(soba::testing::random_dense(rng, 3)),
                    static_cast<std::uint32_t>(soba::testing::random_index(rng, 4))};
    const double l = eta_loss(model, e, EtaParam(eta(rng)));
    const double l0 = eta_loss(model, e, EtaParam(0.0));
    const double l1 = eta_loss(model, e, EtaParam(1.0));
    CHECK(l <= std::max(l0, l1) + 1e-12);
    CHECK((multiclass_margin(model, e.x(), e.label) < 0.0 ? 1.0 : 0.0) <= l);
  }

  // eta = 0 against an independent hinge summation.
  std::vector<Example> examples;
  for (int i = 0; i < 50; ++i) {
    examples.push_back({SparseVector::from_dense(soba::testing::random_dense(rng, 3)),
                        static_cast<std::uint32_t>(soba::testing::random_index(rng, 4))});
  }
  const Dataset data(examples, 4, 3);
  const RowMatrix model = soba::testing::random_matrix(rng, 4, 3);
  double hinge_sum = 0.0;
  for (const auto& e : examples) {
    const auto xd = e.features.to_dense(3);
    const Vector s = model * Eigen::Map<const Vector>(xd.data(), 3);
    double worst = 0.0;
    for (int i = 0; i < 4; ++i) {
      if (i != static_cast<int>(e.label)) worst = std::max(worst, 1.0 - s(e.label) + s(i));
    }
    hinge_sum += worst;
  }
  CHECK(cumulative_eta_loss(model, data, EtaParam(0.0)) == doctest::Approx(hinge_sum).epsilon(1e-12));
}

TEST_CASE("admissible eta range") {
  const CompetitorModel zero(RowMatrix::Zero(3, 2));
  auto r = eta_admissible_range(zero, 1.0);
  CHECK(r.upper == 1.0);
  CHECK_FALSE(r.contains(0.0));
  CHECK(r.contains(1.0));

  RowMatrix u = RowMatrix::Zero(3, 2);
  u(1, 0) = 1.0;
  r = eta_admissible_range(CompetitorModel(u), 1.0);
  CHECK(r.upper == doctest::Approx(2.0 / 3.0));

  double last = 2.0;
  for (double norm = 0.0; norm < 5.0; norm += 0.5) {
    RowMatrix v = RowMatrix::Zero(2, 2);
    v(0, 0) = norm;
    const double upper = eta_admissible_range(CompetitorModel(v), 2.0).upper;
    CHECK(upper <= last);
    last = upper;
  }
  CHECK_THROWS_AS(eta_admissible_range(zero, 0.0), ConfigError);
}
