#include "soba/checks.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include <Eigen/Dense>

#include "soba/baselines.hpp"
#include "soba/bounds.hpp"
#include "soba/dataset.hpp"
#include "soba/harness.hpp"
#include "soba/learner.hpp"
#include "soba/linalg.hpp"
#include "soba/losses.hpp"

namespace soba {

namespace {

using Dense = Eigen::MatrixXd;

double unit(std::mt19937_64& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

std::size_t pick(std::mt19937_64& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

std::vector<double> gaussian(std::mt19937_64& rng, std::size_t n) {
  std::normal_distribution<double> g;
  std::vector<double> v(n);
  for (auto& x : v) x = g(rng);
  return v;
}

void record(CheckResult& r, double amount) {
  ++r.violations;
  r.worst = std::max(r.worst, amount);
}

std::string describe(const CheckResult& r, const std::string& extra = {}) {
  std::ostringstream out;
  out << r.trials << " trials, " << r.violations << " violations";
  if (!extra.empty()) out << ", " << extra;
  return out.str();
}

}  // namespace

InvariantReport check_learner_invariants(std::size_t runs, std::size_t horizon, std::uint64_t seed) {
  InvariantReport rep;
  rep.invariants.name = "learner invariants";
  rep.logdet.name = "log-det bound";
  const std::size_t ks[] = {2, 3, 9};
  const std::size_t ds[] = {2, 5, 20};
  const double gammas[] = {0.02, 0.1, 0.3, 0.7};
  double worst_gap = -INFINITY;

  for (std::size_t r = 0; r < runs; ++r) {
    const std::size_t k = ks[r % 3];
    const std::size_t d = ds[(r / 3) % 3];
    DatasetSpec spec = (r % 2 == 0) ? DatasetSpec::synsep(horizon, k, d, seed * 1000 + r)
                                    : DatasetSpec::synnonsep(horizon, k, d, seed * 1000 + r, 0.1);
    spec.margin = 0.05;
    const Dataset data = spec.kind == DatasetKind::SynSep ? generate_synsep(spec) : generate_synnonsep(spec);

    LearnerConfig config;
    config.k = k;
    config.d = d;
    config.a = 1.0;
    config.gamma = gammas[r % 4];
    config.seed = seed + r;
    SobaLearner learner(config);

    const std::size_t n = k * d;
    const bool track_det = n <= 30;
    Dense forward = config.a * Dense::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    double quad_sum = 0.0;

    for (const auto& ex : data) {
      const auto dist = learner.predict(ex.x());
      const bool correct = dist.sampled == ex.label;
      const auto trace = learner.observe(ex.x(), dist, correct);
      ++rep.invariants.trials;
      if (learner.invariant_sum() < 0.0) record(rep.invariants, -learner.invariant_sum());
      if (trace.updated && !correct) record(rep.invariants, 1.0);
      if (correct && trace.greedy != ex.label && !trace.updated) record(rep.invariants, 1.0);

      if (track_det && trace.updated) {
        // z = (1/sqrt(p_y)) (e_ybar - e_y) (x) x
        Eigen::VectorXd z = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
        const double s = 1.0 / std::sqrt(trace.p_sampled);
        const auto xv = ex.x();
        for (std::size_t j = 0; j < xv.nnz(); ++j) {
          z(static_cast<Eigen::Index>(*trace.runner_up * d + xv.index[j])) += s * xv.value[j];
          z(static_cast<Eigen::Index>(ex.label * d + xv.index[j])) -= s * xv.value[j];
        }
        forward += z * z.transpose();
        quad_sum += *trace.quad_term;
      }
    }
    if (track_det) {
      ++rep.logdet.trials;
      const Eigen::LLT<Dense> llt(forward);
      const double logdet = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum() -
                            static_cast<double>(n) * std::log(config.a);
      const double gap = quad_sum - logdet;
      worst_gap = std::max(worst_gap, gap);
      if (gap > 1e-6) record(rep.logdet, gap);
    }
  }
  rep.invariants.detail = describe(rep.invariants, "steps checked");
  std::ostringstream extra;
  extra << "max (sum - logdet) = " << worst_gap;
  rep.logdet.detail = describe(rep.logdet, extra.str());
  return rep;
}

CheckResult check_inverse_oracle(std::size_t sequences, std::size_t length, std::uint64_t seed) {
  CheckResult r;
  r.name = "inverse vs direct inversion";
  std::mt19937_64 rng(seed);
  double worst_inv = 0.0, worst_disc = 0.0;
  for (std::size_t s = 0; s < sequences; ++s) {
    const std::size_t k = 2 + pick(rng, 4);
    const std::size_t d = 1 + pick(rng, 30 / k);
    const double a = 0.25 + 2.0 * unit(rng);
    InverseState inv(InverseKind::Full, k, d, a);
    const auto n = static_cast<Eigen::Index>(k * d);
    Dense forward = a * Dense::Identity(n, n);
    for (std::size_t step = 0; step < length; ++step) {
      const SparseVector x = SparseVector::from_dense(gaussian(rng, d));
      std::size_t p = pick(rng, k), m = pick(rng, k - 1);
      if (m >= p) ++m;
      const SparseKronVector z(p, m, 0.2 + 2.0 * unit(rng), x.view());
      const Eigen::VectorXd zd = z.to_dense(k, d);
      const double before = inv.quad_form(z);
      forward += zd * zd.transpose();
      inv.rank_one_update(z);
      const double disc = std::abs((1.0 - inv.quad_form(z)) - 1.0 / (1.0 + before));
      worst_disc = std::max(worst_disc, disc);
      ++r.trials;
      if (disc > 1e-8) record(r, disc);
    }
    const double err = (inv.full() - forward.inverse()).cwiseAbs().maxCoeff();
    worst_inv = std::max(worst_inv, err);
    ++r.trials;
    if (err > 1e-8) record(r, err);
  }
  std::ostringstream extra;
  extra << "max inverse err " << worst_inv << ", max discount err " << worst_disc;
  r.detail = describe(r, extra.str());
  return r;
}

CheckResult check_loss_identities(std::size_t samples, std::uint64_t seed) {
  CheckResult r;
  r.name = "eta-loss identities";
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> margin(-10.0, 10.0);
  for (std::size_t i = 0; i < samples; ++i) {
    const double x = margin(rng);
    const double hinge = std::max(0.0, 1.0 - x);
    ++r.trials;
    if (eta_loss_scalar(EtaParam(0.0), x) != hinge) record(r, std::abs(eta_loss_scalar(EtaParam(0.0), x) - hinge));
    if (eta_loss_scalar(EtaParam(1.0), x) != hinge * hinge)
      record(r, std::abs(eta_loss_scalar(EtaParam(1.0), x) - hinge * hinge));
  }
  for (int i = 1; i <= 10; ++i) {
    const EtaParam p(0.1 * i);
    const double r1 = std::abs(eta_quadratic(p, 1.0));
    const double r2 = std::abs(eta_quadratic(p, (2.0 - p.value()) / p.value()));
    ++r.trials;
    if (r1 > 1e-12) record(r, r1);
    if (r2 > 1e-12) record(r, r2);
  }
  for (std::size_t i = 0; i < samples; ++i) {
    const double x = margin(rng);
    const EtaParam p(unit(rng));
    const double l = eta_loss_scalar(p, x);
    const double upper = std::max(eta_loss_scalar(EtaParam(0.0), x), eta_loss_scalar(EtaParam(1.0), x));
    ++r.trials;
    if (l > upper + 1e-12) record(r, l - upper);
    if (x < 0.0 && l < 1.0) record(r, 1.0 - l);
  }
  r.detail = describe(r);
  return r;
}

CheckResult check_perceptron_bound(std::size_t datasets, std::uint64_t seed) {
  CheckResult r;
  r.name = "perceptron realized bound";
  double min_slack = INFINITY;
  for (std::size_t i = 0; i < datasets; ++i) {
    DatasetSpec spec = (i % 2 == 0) ? DatasetSpec::synsep(1000, 4, 10, seed * 100 + i)
                                    : DatasetSpec::synnonsep(1000, 4, 10, seed * 100 + i, 0.1);
    spec.margin = 0.5;
    const Dataset data = spec.kind == DatasetKind::SynSep ? generate_synsep(spec) : generate_synnonsep(spec);
    // Scale the planted model so its margin is at least 1 on clean labels.
    const CompetitorModel u(*data.planted() / spec.margin);
    Perceptron p(4, 10);
    for (const auto& ex : data) p.step(ex.x(), ex.label);
    for (double q : {1.0, 1.25, 1.5, 1.75, 2.0}) {
      const double rhs = perceptron_bound_rhs(q, p.mistake_count(), u, data, data.x_bound());
      const double slack = rhs - static_cast<double>(p.mistake_count());
      min_slack = std::min(min_slack, slack);
      ++r.trials;
      if (slack < -1e-9) record(r, -slack);
    }
  }
  std::ostringstream extra;
  extra << "min slack " << min_slack;
  r.detail = describe(r, extra.str());
  return r;
}

CheckResult check_least_squares_step(std::size_t instances, std::uint64_t seed) {
  CheckResult r;
  r.name = "online least squares per-step";
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  double min_slack = INFINITY;
  for (std::size_t i = 0; i < instances; ++i) {
    const auto n = static_cast<Eigen::Index>(1 + pick(rng, 12));
    const std::size_t horizon = 10 + pick(rng, 41);
    const double a = 0.1 + 2.0 * unit(rng);
    Dense prev = a * Dense::Identity(n, n);
    Eigen::VectorXd w = Eigen::VectorXd::Zero(n);
    const Eigen::VectorXd u = Eigen::VectorXd::NullaryExpr(n, [&] { return 2.0 * g(rng); });
    for (std::size_t t = 0; t < horizon; ++t) {
      const Eigen::VectorXd z = Eigen::VectorXd::NullaryExpr(n, [&] { return g(rng); }) * (0.1 + 2.0 * unit(rng));
      const double alpha = 3.0 * g(rng);
      const Dense cur = prev + z * z.transpose();
      const auto solver = cur.ldlt();
      const Eigen::VectorXd next = solver.solve(prev * w - alpha * z);
      const double pred = w.dot(z) + alpha;
      const double comp = u.dot(z) + alpha;
      const double lhs = 0.5 * pred * pred * (1.0 - z.dot(solver.solve(z))) - 0.5 * comp * comp;
      const Eigen::VectorXd du0 = u - w, du1 = u - next;
      const double rhs = 0.5 * du0.dot(prev * du0) - 0.5 * du1.dot(cur * du1);
      const double slack = rhs - lhs;
      min_slack = std::min(min_slack, slack);
      ++r.trials;
      if (slack < -1e-8) record(r, -slack);
      prev = cur;
      w = next;
    }
  }
  std::ostringstream extra;
  extra << "min slack " << min_slack;
  r.detail = describe(r, extra.str());
  return r;
}

CheckResult check_selfconfident(std::size_t sequences, std::uint64_t seed) {
  CheckResult r;
  r.name = "self-confident tuning";
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < sequences; ++i) {
    const double b = 0.05 + 20.0 * unit(rng);
    std::vector<double> c(1 + pick(rng, 500));
    const int shape = static_cast<int>(i % 4);
    for (auto& v : c) {
      switch (shape) {
        case 0: v = b * unit(rng); break;
        case 1: v = b; break;
        case 2: v = 0.0; break;
        default: v = unit(rng) < 0.1 ? b : 0.0; break;
      }
    }
    const double a = 10.0 * unit(rng);
    const auto sides = selfconfident_sides(c, b, a);
    ++r.trials;
    if (!selfconfident_check(c, b, a)) record(r, sides.lhs - sides.rhs);
  }
  r.detail = describe(r);
  return r;
}

CheckResult check_fallback_grid(std::size_t points) {
  CheckResult r;
  r.name = "fallback tuning grid";
  for (double u : {0.0, 1.0, 10.0}) {
    for (std::size_t j = 0; j < points; ++j) {
      const double horizon = std::pow(10.0, 1.0 + 5.0 * j / (points - 1.0));
      for (std::size_t l = 0; l < points; ++l) {
        const double h = std::pow(10.0, -1.0 + 7.0 * l / (points - 1.0));
        for (std::size_t i = 0; i < points; ++i) {
          const double loss = horizon * i / (points - 1.0);
          const TuningInput in{loss, horizon, h, u};
          const auto tuning = fallback_gamma(in);
          const double f = fallback_objective(in, tuning.gamma);
          const double bound = fallback_case_bound(in, tuning.which);
          ++r.trials;
          if (f > bound * (1.0 + 1e-12)) record(r, f - bound);
        }
      }
    }
  }
  r.detail = describe(r);
  return r;
}

CheckResult check_banditron_unbiased(std::size_t states, std::uint64_t seed) {
  CheckResult r;
  r.name = "banditron unbiasedness";
  std::mt19937_64 rng(seed);
  double worst = 0.0;
  for (std::size_t s = 0; s < states; ++s) {
    const std::size_t k = 2 + pick(rng, 9);
    const std::size_t d = 1 + pick(rng, 8);
    const double gamma = 0.01 + 0.99 * unit(rng);
    RowMatrix w(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(d));
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = gaussian(rng, 1)[0];
    const auto xd = gaussian(rng, d);
    const SparseVector x = SparseVector::from_dense(xd);
    const std::size_t label = pick(rng, k);
    const Vector scores = w * Eigen::Map<const Vector>(xd.data(), static_cast<Eigen::Index>(d));
    Rng stream(s);
    PredictionDist dist = explore(std::vector<double>(scores.data(), scores.data() + k), gamma, stream, 1);

    RowMatrix expected = RowMatrix::Zero(w.rows(), w.cols());
    for (std::size_t i = 0; i < k; ++i) {
      dist.sampled = i;
      expected += dist.probs[i] * Banditron::update_for(k, d, x.view(), dist, i == label);
    }
    RowMatrix full = RowMatrix::Zero(w.rows(), w.cols());
    for (std::size_t j = 0; j < d; ++j) {
      full(static_cast<Eigen::Index>(label), static_cast<Eigen::Index>(j)) += xd[j];
      full(static_cast<Eigen::Index>(dist.greedy), static_cast<Eigen::Index>(j)) -= xd[j];
    }
    const double err = (expected - full).cwiseAbs().maxCoeff();
    worst = std::max(worst, err);
    ++r.trials;
    if (err > 1e-12) record(r, err);
  }
  std::ostringstream extra;
  extra << "max err " << worst;
  r.detail = describe(r, extra.str());
  return r;
}

CheckResult check_uniform_exploration(std::size_t horizon, std::uint64_t seed) {
  CheckResult r;
  r.name = "gamma = 1 uniform guessing";
  std::ostringstream extra;
  const std::pair<std::size_t, std::size_t> shapes[] = {{2, 5}, {4, 10}, {9, 20}};
  for (const auto& [k, d] : shapes) {
    auto spec = DatasetSpec::synnonsep(horizon, k, d, seed + k, 0.05);
    spec.margin = 0.05;
    const Dataset data = generate_synnonsep(spec);
    const double expect = (k - 1.0) / k;
    const double sigma = std::sqrt(expect * (1.0 - expect) / static_cast<double>(horizon));
    for (auto alg : {Algorithm::Soba, Algorithm::SobaDiag, Algorithm::Banditron}) {
      const auto rec = run_one({alg, 1.0, seed}, 1.0, data, Checkpoints::log_spaced(10));
      const double z = std::abs(rec.final_error() - expect) / sigma;
      ++r.trials;
      if (rec.aborted || z > 4.0) record(r, z);
      extra << algorithm_name(alg) << "@k=" << k << ":" << rec.final_error() << " ";
    }
  }
  r.detail = describe(r, extra.str());
  return r;
}

CheckResult check_kernel_agreement(std::uint64_t seed) {
  CheckResult r;
  r.name = "serial/parallel kernel agreement";
  std::mt19937_64 rng(seed);
  const std::size_t k = 6, d = 50;
  InverseState par(InverseKind::Full, k, d, 1.0);
  InverseState ser(InverseKind::Full, k, d, 1.0);
  ser.set_serial(true);
  for (int step = 0; step < 40; ++step) {
    const auto xd = gaussian(rng, d);
    const SparseVector x = SparseVector::from_dense(xd);
    std::size_t p = pick(rng, k), m = pick(rng, k - 1);
    if (m >= p) ++m;
    const SparseKronVector z(p, m, 0.7, x.view());
    ++r.trials;
    if (par.quad_form(z) != ser.quad_form(z)) record(r, std::abs(par.quad_form(z) - ser.quad_form(z)));
    par.rank_one_update(z);
    ser.rank_one_update(z);
  }
  ++r.trials;
  if (par.full() != ser.full()) record(r, (par.full() - ser.full()).cwiseAbs().maxCoeff());
  r.detail = describe(r);
  return r;
}

std::vector<CheckResult> run_all_checks() {
  std::vector<CheckResult> out;
  auto inv = check_learner_invariants();
  out.push_back(std::move(inv.invariants));
  out.push_back(std::move(inv.logdet));
  out.push_back(check_inverse_oracle());
  out.push_back(check_loss_identities());
  out.push_back(check_perceptron_bound());
  out.push_back(check_least_squares_step());
  out.push_back(check_selfconfident());
  out.push_back(check_fallback_grid());
  out.push_back(check_banditron_unbiased());
  out.push_back(check_uniform_exploration());
  out.push_back(check_kernel_agreement());
  return out;
}

}  // namespace soba
