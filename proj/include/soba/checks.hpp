#pragma once

// Self-checks run by `soba check` and the acceptance driver.  Each one
// compares the structured code path against a dense or closed-form oracle
// on seeded random instances.

#include <cstdint>
#include <string>
#include <vector>

namespace soba {

struct CheckResult {
  std::string name;
  std::size_t trials = 0;
  std::size_t violations = 0;
  /// Largest observed violation amount (or error), for the report line.
  double worst = 0.0;
  std::string detail;
  bool passed() const noexcept { return violations == 0 && trials > 0; }
};

/// Learner invariants over seeded runs: nonnegative running sum of m_t,
/// updated => correct, (correct and greedy wrong) => updated.  The log-det
/// inequality is checked on the same runs where kd <= 30.
struct InvariantReport {
  CheckResult invariants;
  CheckResult logdet;
};
InvariantReport check_learner_invariants(std::size_t runs = 50, std::size_t horizon = 2000, std::uint64_t seed = 1);

/// Maintained inverse vs direct inversion, plus the discount identity.
CheckResult check_inverse_oracle(std::size_t sequences = 20, std::size_t length = 100, std::uint64_t seed = 2);

/// Endpoint, root, dominance and 0-1 bound properties of the eta-loss family.
CheckResult check_loss_identities(std::size_t samples = 10000, std::uint64_t seed = 3);

/// Realized Perceptron bound with the planted competitor.
CheckResult check_perceptron_bound(std::size_t datasets = 20, std::uint64_t seed = 4);

/// Per-step online least squares inequality, with A_0 = a I.
CheckResult check_least_squares_step(std::size_t instances = 1000, std::uint64_t seed = 5);

/// Self-confident tuning on random sequences.
CheckResult check_selfconfident(std::size_t sequences = 1000, std::uint64_t seed = 6);

/// F(gamma*) against the case bound on a (L, T, H) grid for U in {0, 1, 10}.
CheckResult check_fallback_grid(std::size_t points = 10);

/// Exact enumeration: E[Banditron update] equals the full-information update.
CheckResult check_banditron_unbiased(std::size_t states = 100, std::uint64_t seed = 7);

/// gamma = 1 gives error (k-1)/k within 4 binomial sigma for every bandit learner.
CheckResult check_uniform_exploration(std::size_t horizon = 10000, std::uint64_t seed = 8);

/// Serial and OpenMP kernels produce bitwise-identical states.
CheckResult check_kernel_agreement(std::uint64_t seed = 9);

std::vector<CheckResult> run_all_checks();

}  // namespace soba
