#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "lis/bounds.hpp"
#include "lis/oracle.hpp"

using namespace lis;
using fixtures::k1;
using fixtures::k2;
using fixtures::k3;

TEST(ExactOscillation, MarkovTwoSites) {
  const auto h = Observable::indicator(Alphabet::binary(), 1, 1);
  EXPECT_NEAR(exact_oscillation_of_average(k1(), Window{0, 1}, h, -1), 0.16, 1e-15);
  EXPECT_EQ(exact_oscillation_of_average(k1(), Window{0, 1}, h, 0), 0.0);
}

TEST(ExactOscillation, IidHasNoPastDependence) {
  Rng rng(71);
  const Observable h = random_observable(Alphabet::binary(), Window{0, 2}, rng);
  for (Site j = -3; j < 0; ++j) EXPECT_NEAR(exact_oscillation_of_average(k3(), Window{0, 2}, h, j), 0.0, 1e-15);
}

TEST(ExactOscillation, DominatedByMemoryBound) {
  Rng rng(73);
  for (int t = 0; t < 40; ++t) {
    const KernelSpec f = fixtures::random_kernel(rng);
    const auto alpha = build_sensitivity_matrix(f);
    const Window w{0, static_cast<Site>(uniform_index(rng, 3))};
    const Observable h = random_observable(f.alphabet(), w, rng);
    for (Site j = -static_cast<Site>(std::max<std::size_t>(f.memory_depth(), 1)); j < 0; ++j) {
      EXPECT_LE(exact_oscillation_of_average(f, w, h, j), memory_bound_general(alpha, w, h, j) + 1e-12);
    }
  }
}

TEST(Dusting, MarkovSingleSitePasses) {
  const auto r = verify_dusting(k1(), Window{0, 0}, build_sensitivity_matrix(k1()), 500, 7);
  EXPECT_EQ(r.instances, 500u);
  EXPECT_EQ(r.violations, 0u);
  EXPECT_GE(r.min_slack, -1e-12);
}

TEST(Dusting, ZeroedAlphaIsCaught) {
  const auto r = verify_dusting(k1(), Window{0, 0}, SensitivityMatrix::zero(1), 100, 7);
  EXPECT_GT(r.violations, 0u);
}

TEST(Dusting, IidReducesToPlainOscillation) {
  const auto r = verify_dusting(k3(), Window{0, 1}, build_sensitivity_matrix(k3()), 100, 7);
  EXPECT_EQ(r.violations, 0u);
}

TEST(Dusting, ParallelRunMatchesSerial) {
  const auto alpha = build_sensitivity_matrix(k2());
  const auto a = verify_dusting(k2(), Window{0, 1}, alpha, 60, 3, {}, 1);
  const auto b = verify_dusting(k2(), Window{0, 1}, alpha, 60, 3, {}, 4);
  EXPECT_EQ(a.instances, b.instances);
  EXPECT_EQ(a.violations, 0u);
  EXPECT_EQ(a.min_slack, b.min_slack);
}

TEST(StationaryMeasure, SymmetricMarkov) {
  const auto mu = stationary_measure(k1());
  EXPECT_NEAR(mu[0], 0.5, 1e-14);
  EXPECT_NEAR(mu[1], 0.5, 1e-14);
}

TEST(StationaryMeasure, IidAndAsymmetric) {
  const auto mu = stationary_measure(KernelSpec::iid(Alphabet::binary(), {0.8, 0.2}));
  EXPECT_NEAR(mu[1], 0.2, 1e-14);
  const auto nu = stationary_measure(two_state_markov(0.31, 0.7));
  EXPECT_NEAR(nu[1], 0.31 / (0.31 + 0.3), 1e-13);
}

TEST(StationaryMeasure, InvariantUnderTheKernel) {
  Rng rng(79);
  for (int t = 0; t < 20; ++t) {
    const KernelSpec f = fixtures::random_kernel(rng);
    const auto mu = stationary_measure(f);
    const BlockChain chain(f);
    const auto pushed = chain.push(mu.weights());
    for (std::size_t s = 0; s < pushed.size(); ++s) EXPECT_NEAR(pushed[s], mu[s], 1e-12);
    // mu(f_{i} h) = mu(h) for h on the window ending at site 0
    const std::size_t k = chain.block_length();
    const Observable h = random_observable(f.alphabet(), Window{-static_cast<Site>(k), 0}, rng);
    const Observable avg = average_observable(f, Window{0, 0}, h, -static_cast<Site>(k));
    EXPECT_NEAR(stationary_expectation(f, mu, avg), stationary_expectation(f, mu, h), 1e-12);
  }
}

TEST(StationaryMeasure, ReducibleAndPeriodicChainsAreRejected) {
  const KernelSpec stuck = two_state_markov(0.0, 1.0);
  EXPECT_THROW(stationary_measure(stuck), InvalidInput);
  EXPECT_THROW(stationary_measure(fixtures::flip()), InvalidInput);
  // one absorbing class reached from a transient state is fine
  const auto mu = stationary_measure(two_state_markov(0.5, 1.0));
  EXPECT_NEAR(mu[1], 1.0, 1e-12);
}

TEST(StationaryMeasure, BudgetExhaustionReports) {
  StationaryOptions opts;
  opts.max_iterations = 3;
  EXPECT_THROW(stationary_measure(two_state_markov(0.01, 0.98), opts), ConvergenceFailure);
}

TEST(ExactCorrelation, MarkovLagsAndVariance) {
  const auto h = Observable::indicator(Alphabet::binary(), 0, 1);
  EXPECT_NEAR(exact_correlation(k1(), h, h, 3), 0.016, 1e-12);
  EXPECT_NEAR(exact_covariance(k1(), h, h, 0), 0.25, 1e-12);
  for (std::size_t n = 1; n <= 8; ++n) EXPECT_NEAR(exact_covariance(k1(), h, h, n), 0.25 * std::pow(0.4, double(n)), 1e-12);
}

TEST(ExactCorrelation, IidIsZero) {
  Rng rng(83);
  const Observable a = random_observable(Alphabet::binary(), Window{0, 1}, rng);
  const Observable b = random_observable(Alphabet::binary(), Window{-1, 0}, rng);
  EXPECT_NEAR(exact_correlation(k3(), a, b, 1), 0.0, 1e-14);
  EXPECT_NEAR(exact_correlation(k3(), a, b, 5), 0.0, 1e-14);
}

TEST(ExactCorrelation, DirectAndTransferRoutesAgree) {
  Rng rng(89);
  const KernelSpec f = fixtures::random_table(Alphabet::discrete({"0", "1", "2"}), 2, rng);
  const Observable a = random_observable(f.alphabet(), Window{0, 1}, rng);
  const Observable b = random_observable(f.alphabet(), Window{0, 1}, rng);
  // lag 2 puts a on [2,3], adjacent to b: transfer route with zero steps
  const double transfer = exact_covariance(f, a, b, 2);
  const auto mu = stationary_measure(f);
  const Observable a2 = a.shifted(2);
  const Observable prod = Observable::from_function(f.alphabet(), Window{0, 3}, [&](std::span<const Symbol> s) {
    return a2.value_in(0, s) * b.value_in(0, s);
  });
  const double direct = stationary_expectation(f, mu, prod) - stationary_expectation(f, mu, a2) * stationary_expectation(f, mu, b);
  EXPECT_NEAR(transfer, direct, 1e-13);
}

TEST(FiniteVolume, MarkovConvergesFromBothSides) {
  const auto h = Observable::indicator(Alphabet::binary(), 0, 1);
  const auto lo = finite_volume_sequence(k1(), h, PastConfig{{0}}, 10);
  const auto hi = finite_volume_sequence(k1(), h, PastConfig{{1}}, 10);
  ASSERT_EQ(lo.size(), 11u);
  for (std::size_t n = 0; n <= 10; ++n) {
    EXPECT_NEAR(hi[n] - lo[n], std::pow(0.4, double(n + 1)), 1e-14);
    EXPECT_LE(lo[n], 0.5);
    EXPECT_GE(hi[n], 0.5);
  }
}

TEST(FiniteVolume, IidConstantAndPowerLawStabilizes) {
  const auto h = Observable::indicator(Alphabet::binary(), 0, 1);
  for (double v : finite_volume_sequence(k3(), h, PastConfig{}, 5)) EXPECT_DOUBLE_EQ(v, 0.5);
  const auto s = finite_volume_sequence(k2(), h, PastConfig::uniform(4, 1), 8);
  EXPECT_EQ(s.size(), 9u);
  EXPECT_NE(s[0], s[8]);
}

TEST(BoundaryRatio, MarkovAboveConstant) {
  const double c = std::exp(-0.4 / 0.3);
  for (Site len = 1; len <= 5; ++len) {
    EXPECT_GE(boundary_ratio_infimum(k1(), Window{0, len - 1}), c);
    EXPECT_NEAR(boundary_ratio_infimum(k1(), Window{0, len - 1}), 0.3 / 0.7, 1e-12);
  }
}
