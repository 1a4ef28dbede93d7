#include "doctest.h"

#include <cmath>
#include <random>

#include "soba/bounds.hpp"
#include "soba/errors.hpp"

using namespace soba;

TEST_CASE("theorem2_gamma") {
  CHECK(theorem2_gamma(9, 400, 0) == 1.0);
  CHECK(theorem2_gamma(9, 400, 1) == 1.0);
  CHECK(theorem2_gamma(9, 400, 10) == 1.0);
  CHECK(theorem2_gamma(9, 400, 100000) == 1.0);
  const double g = theorem2_gamma(2, 1, 1000000);
  CHECK(g == doctest::Approx(std::sqrt(4.0 * std::log(1e6) / 1e6)));
  CHECK(g < 1.0);
}

TEST_CASE("tuning aggregate") {
  CHECK(tuning_aggregate(3, 10, 2.0, 100) == doctest::Approx(10 * 9 * 4 * std::log(100.0)));
}

TEST_CASE("fallback gamma cases") {
  TuningInput zero{0.0, 10000.0, 50.0, 1.0};
  auto t = fallback_gamma(zero);
  CHECK(t.which == FallbackCase::LowLoss);
  CHECK(t.gamma == doctest::Approx(std::sqrt(50.0 / 10000.0)));

  TuningInput heavy{1e6, 100.0, 500.0, 0.0};
  t = fallback_gamma(heavy);
  CHECK(t.which == FallbackCase::HighLoss);
  CHECK(t.gamma == 1.0);

  TuningInput bad{-1.0, 10.0, 1.0, 1.0};
  CHECK_THROWS_AS(fallback_gamma(bad), ConfigError);
  bad = {1.0, 0.0, 1.0, 1.0};
  CHECK_THROWS_AS(fallback_gamma(bad), ConfigError);
}

TEST_CASE("fallback objective stays under the case bound on a grid") {
  for (double u : {0.0, 1.0, 10.0}) {
    for (int i = 0; i < 10; ++i) {
      for (int j = 0; j < 10; ++j) {
        for (int l = 0; l < 10; ++l) {
          const double horizon = std::pow(10.0, 1.0 + 5.0 * j / 9.0);
          const double h = std::pow(10.0, -1.0 + 6.0 * l / 9.0);
          const double loss = horizon * i / 9.0;
          const TuningInput in{loss, horizon, h, u};
          const auto t = fallback_gamma(in);
          CHECK(t.gamma > 0.0);
          CHECK(t.gamma <= 1.0);
          CHECK(fallback_objective(in, t.gamma) <= fallback_case_bound(in, t.which) * (1 + 1e-12));
        }
      }
    }
  }
}

TEST_CASE("self-confident lemma") {
  const std::vector<double> zeros(300, 0.0);
  auto sides = selfconfident_sides(zeros, 1.0, 1.0);
  double sum_gamma = 0.0;
  for (int t = 1; t <= 300; ++t) sum_gamma += std::min(std::sqrt(1.0 / t), 1.0);
  CHECK(sides.lhs == doctest::Approx(sum_gamma));
  CHECK(sides.lhs <= 2.0 * std::sqrt(300.0));
  CHECK(selfconfident_check(zeros, 1.0, 1.0));

  const std::vector<double> full(300, 2.0);
  CHECK(selfconfident_check(full, 2.0, 0.5));

  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> len(1, 500);
  for (int trial = 0; trial < 1000; ++trial) {
    const double b = 0.1 + 10.0 * unit(rng);
    std::vector<double> c(len(rng));
    for (auto& v : c) v = b * unit(rng) * (unit(rng) < 0.3 ? 0.0 : 1.0);
    const double a = 5.0 * unit(rng);
    const auto s = selfconfident_sides(c, b, a);
    CHECK(s.lhs <= s.rhs);
  }
}
