#pragma once

// Straight-line dense transcription of the second-order banditron, used as a
// test oracle.  A is kept as the forward kd x kd matrix and every quantity is
// obtained by direct solves; nothing here shares code with the structured
// implementation except the RNG stream, which both draw from identically.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "soba/dataset.hpp"

namespace soba::testing {

struct DenseStep {
  std::size_t greedy;
  std::size_t sampled;
  bool updated;
  double m_value;  // NaN unless the sampled label was correct
};

struct DenseRun {
  std::vector<DenseStep> steps;
  Eigen::MatrixXd weights;  // k x d
  Eigen::MatrixXd forward;  // A_T
  double invariant_sum = 0.0;
};

inline DenseRun dense_reference_run(const Dataset& data, double a, double gamma, std::uint64_t seed) {
  const auto k = static_cast<Eigen::Index>(data.classes());
  const auto d = static_cast<Eigen::Index>(data.dim());
  const Eigen::Index n = k * d;
  std::mt19937_64 rng(seed);

  Eigen::MatrixXd A = a * Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(n);
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(k, d);
  double sum_nm = 0.0;
  DenseRun run;

  for (const auto& ex : data) {
    const auto xs = ex.features.to_dense(static_cast<std::size_t>(d));
    const Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(xs.data(), d);
    const Eigen::VectorXd scores = W * x;

    std::size_t greedy = 0;
    for (Eigen::Index i = 1; i < k; ++i)
      if (scores(i) > scores(static_cast<Eigen::Index>(greedy))) greedy = static_cast<std::size_t>(i);

    Eigen::VectorXd p = Eigen::VectorXd::Constant(k, gamma / static_cast<double>(k));
    p(static_cast<Eigen::Index>(greedy)) += 1.0 - gamma;

    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    std::size_t sampled = greedy;
    std::size_t last_positive = greedy;
    for (Eigen::Index i = 0; i < k; ++i)
      if (p(i) > 0.0) last_positive = static_cast<std::size_t>(i);
    double cum = 0.0;
    bool found = false;
    for (Eigen::Index i = 0; i < k; ++i) {
      cum += p(i);
      if (u < cum && p(i) > 0.0) {
        sampled = static_cast<std::size_t>(i);
        found = true;
        break;
      }
    }
    if (!found) sampled = last_positive;

    DenseStep step{greedy, sampled, false, std::nan("")};
    if (sampled == ex.label) {
      const auto y = static_cast<Eigen::Index>(ex.label);
      Eigen::Index ybar = -1;
      for (Eigen::Index i = 0; i < k; ++i) {
        if (i == y) continue;
        if (ybar < 0 || scores(i) > scores(ybar)) ybar = i;
      }
      const double py = p(y);
      Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
      e.segment(ybar * d, d) += x;
      e.segment(y * d, d) -= x;
      const Eigen::VectorXd g = e / py;
      const Eigen::VectorXd z = std::sqrt(py) * g;
      const Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(Eigen::MatrixXd(W.transpose()).data(), n);
      const double wz = w.dot(z);
      const double wg = w.dot(g);
      const double quad = z.dot(A.ldlt().solve(z));
      const double m = (wz * wz + 2.0 * wg) / (1.0 + quad);
      step.m_value = m;
      if (m + sum_nm >= 0.0) {
        step.updated = true;
        sum_nm += m;
        A += z * z.transpose();
        theta -= g;
        const Eigen::VectorXd flat = A.ldlt().solve(theta);
        for (Eigen::Index i = 0; i < k; ++i) W.row(i) = flat.segment(i * d, d).transpose();
      }
    }
    run.steps.push_back(step);
  }
  run.weights = W;
  run.forward = A;
  run.invariant_sum = sum_nm;
  return run;
}

}  // namespace soba::testing
