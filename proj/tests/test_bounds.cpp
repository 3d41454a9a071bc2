#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "lis/bounds.hpp"
#include "lis/oracle.hpp"

using namespace lis;
using fixtures::k1;
using fixtures::k2;
using fixtures::k3;

namespace {

// Dense reference: sum_{l=1}^{|L|} (P_L alpha)^l over rows in L and columns
// [L.lo - R, L.hi], by plain matrix products.
std::vector<std::vector<double>> dense_series(const SensitivityMatrix& alpha, const Window& w) {
  const std::size_t r = alpha.depth();
  const Site col_lo = w.lo - static_cast<Site>(r);
  const std::size_t n = w.length() + r;
  std::vector<std::vector<double>> a(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    const Site si = col_lo + static_cast<Site>(i);
    if (!w.contains(si)) continue;
    for (std::size_t j = 0; j < n; ++j) a[i][j] = alpha.entry(si, col_lo + static_cast<Site>(j));
  }
  auto power = a, sum = a;
  for (std::size_t l = 2; l <= w.length(); ++l) {
    std::vector<std::vector<double>> next(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < n; ++k)
        for (std::size_t j = 0; j < n; ++j) next[i][j] += power[i][k] * a[k][j];
    power = next;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) sum[i][j] += power[i][j];
  }
  return sum;
}

SensitivityMatrix random_sub_dobrushin(Rng& rng, std::size_t depth) {
  std::vector<double> lags(depth);
  double total = 0.0;
  for (double& a : lags) {
    a = uniform01(rng);
    total += a;
  }
  const double target = 0.95 * uniform01(rng);
  for (double& a : lags) a *= target / total;
  return SensitivityMatrix::stationary(lags);
}

}  // namespace

TEST(DecaySpec, TriangleInequality) {
  EXPECT_TRUE((DecaySpec{DecaySpec::Family::exponential, 0.7}).triangle_holds(15));
  EXPECT_TRUE((DecaySpec{DecaySpec::Family::power_log, 2.5}).triangle_holds(15));
  EXPECT_DOUBLE_EQ((DecaySpec{DecaySpec::Family::power_log, 2.0}).F(3, 0), 2.0 * std::log(4.0));
}

TEST(Neumann, MarkovBandedPowers) {
  const auto alpha = build_sensitivity_matrix(k1());
  const auto ns = neumann_series(alpha, Window{0, 5});
  EXPECT_NEAR(ns.at(3, 0), 0.064, 1e-15);
  for (Site k = 0; k <= 5; ++k)
    for (Site j = -1; j < k; ++j) EXPECT_NEAR(ns.at(k, j), std::pow(0.4, double(k - j)), 1e-15);
  EXPECT_EQ(ns.at(2, 3), 0.0);
  EXPECT_FALSE(ns.divergent);
  EXPECT_EQ(ns.tail_bound, 0.0);
}

TEST(Neumann, ZeroMatrix) {
  const auto ns = neumann_series(SensitivityMatrix::zero(2), Window{0, 3});
  for (double v : ns.values) EXPECT_EQ(v, 0.0);
}

TEST(Neumann, RowSumOneIsFlagged) {
  EXPECT_TRUE(neumann_series(SensitivityMatrix::stationary({1.0}), Window{0, 4}).divergent);
  EXPECT_FALSE(neumann_series(SensitivityMatrix::stationary({0.99}), Window{0, 4}).divergent);
}

TEST(Neumann, EarlyStopCarriesTailBound) {
  const auto alpha = SensitivityMatrix::stationary({0.3, 0.2});
  const auto full = neumann_series(alpha, Window{0, 9});
  const auto cut = neumann_series(alpha, Window{0, 9}, 1e-3);
  EXPECT_LT(cut.terms, full.terms);
  EXPECT_GT(cut.tail_bound, 0.0);
  for (Site k = 0; k <= 9; ++k)
    for (Site j = -2; j < k; ++j) EXPECT_LE(full.at(k, j) - cut.at(k, j), cut.tail_bound + 1e-15);
}

TEST(Neumann, MatchesDenseMatrixPowers) {
  Rng rng(53);
  for (int t = 0; t < 30; ++t) {
    const auto alpha = random_sub_dobrushin(rng, 1 + uniform_index(rng, 4));
    const Window w{0, static_cast<Site>(uniform_index(rng, 6))};
    const auto ns = neumann_series(alpha, w);
    const auto dense = dense_series(alpha, w);
    for (std::size_t i = 0; i < dense.size(); ++i)
      for (std::size_t j = 0; j < dense.size(); ++j)
        EXPECT_NEAR(ns.at(ns.col_lo + Site(i), ns.col_lo + Site(j)), dense[i][j], 1e-14);
  }
}

TEST(PathWeights, RenewalEqualsNeumannColumn) {
  const auto alpha = SensitivityMatrix::stationary({0.3, 0.1, 0.05});
  const PathWeights g(alpha);
  const auto ns = neumann_series(alpha, Window{0, 10});
  for (Site k = 0; k <= 10; ++k) EXPECT_NEAR(g(k, -1), ns.at(k, -1), 1e-15);
  EXPECT_NEAR(g.row_sum_bound(), 0.45 / 0.55, 1e-15);
}

TEST(PathWeights, BandedColumnMatchesNeumann) {
  const auto alpha = SensitivityMatrix::banded({0.3, 0.1}, {{2, {0.6, 0.2}}, {4, {0.0, 0.5}}});
  const PathWeights g(alpha);
  for (Site j = -2; j < 3; ++j) {
    // paths down to j may pass through every site above it
    const auto ns = neumann_series(alpha, Window{j + 1, 8});
    for (Site k = j + 1; k <= 8; ++k) EXPECT_NEAR(g(k, j), ns.at(k, j), 1e-15);
  }
}

TEST(MemoryBound, MarkovGeometric) {
  const auto alpha = build_sensitivity_matrix(k1());
  for (Site n = 1; n <= 8; ++n) {
    const auto h = Observable::indicator(Alphabet::binary(), n, 1);
    EXPECT_NEAR(memory_bound_general(alpha, Window{0, n}, h, -1), std::pow(0.4, double(n + 1)), 1e-15);
  }
  EXPECT_NEAR(memory_bound_general(alpha, Window{0, 1}, Observable::indicator(Alphabet::binary(), 1, 1), -1), 0.16,
              1e-15);
}

TEST(MemoryBound, ConstantObservableGivesZero) {
  const auto alpha = build_sensitivity_matrix(k2());
  EXPECT_EQ(memory_bound_general(alpha, Window{0, 3}, Observable::constant(Alphabet::binary(), 2, 4.0), -1), 0.0);
}

TEST(MemoryBound, PowerLawMatchesDensePowers) {
  const auto alpha = build_sensitivity_matrix(k2());
  const Window w{0, 2};
  const auto dense = dense_series(alpha, w);
  // row for site 2, column for site -1
  const double expected = dense[2 + 4][-1 + 4];
  EXPECT_NEAR(memory_bound_general(alpha, w, Observable::indicator(Alphabet::binary(), 2, 1), -1), expected, 1e-15);
}

TEST(MemoryBound, RejectsBadArguments) {
  const auto alpha = build_sensitivity_matrix(k1());
  const auto h = Observable::indicator(Alphabet::binary(), 3, 1);
  EXPECT_THROW(memory_bound_general(alpha, Window{0, 2}, h, -1), InvalidInput);
  EXPECT_THROW(memory_bound_general(alpha, Window{0, 3}, h, 0), InvalidInput);
}

TEST(MemoryBound, LinearInOscillations) {
  Rng rng(59);
  const auto alpha = build_sensitivity_matrix(k2());
  const Observable h = random_observable(Alphabet::binary(), Window{0, 3}, rng);
  const double b = memory_bound_general(alpha, Window{0, 3}, h, -2);
  EXPECT_NEAR(memory_bound_general(alpha, Window{0, 3}, h.scaled(2.5), -2), 2.5 * b, 1e-14);
}

TEST(MemoryBoundExponential, MarkovExample) {
  const auto alpha = build_sensitivity_matrix(k1());
  const DecaySpec f{DecaySpec::Family::exponential, 0.5};
  const auto r = memory_bound_exponential(alpha, f, Window{0, 3}, Observable::indicator(Alphabet::binary(), 3, 1), -1);
  const double gamma = 0.4 * std::exp(0.5);
  EXPECT_NEAR(r.gamma, gamma, 1e-15);
  EXPECT_NEAR(r.bound, gamma / (1 - gamma) * std::exp(-2.0), 1e-14);
  EXPECT_NEAR(r.bound, 0.262, 1e-3);
}

TEST(MemoryBoundExponential, RateTooLargeAndZeroAlpha) {
  const auto alpha = build_sensitivity_matrix(k1());
  const auto h = Observable::indicator(Alphabet::binary(), 3, 1);
  try {
    memory_bound_exponential(alpha, {DecaySpec::Family::exponential, std::log(2.6)}, Window{0, 3}, h, -1);
    FAIL() << "expected CriterionNotMet";
  } catch (const CriterionNotMet& e) {
    EXPECT_NEAR(e.value(), 0.4 * 2.6, 1e-12);
  }
  const auto z = memory_bound_exponential(SensitivityMatrix::zero(1), {DecaySpec::Family::exponential, 3.0},
                                          Window{0, 3}, h, -1);
  EXPECT_EQ(z.bound, 0.0);
  EXPECT_EQ(z.gamma, 0.0);
}

TEST(FitDecayRate, MarkovAndEdgeCases) {
  const auto d = fit_decay_rate(build_sensitivity_matrix(k1()), DecaySpec::Family::exponential);
  EXPECT_LT(d.rate, std::log(2.5));
  EXPECT_GT(d.rate, std::log(2.5) - 1e-5);
  EXPECT_EQ(fit_decay_rate(SensitivityMatrix::zero(3), DecaySpec::Family::exponential).rate, 50.0);
  EXPECT_THROW(fit_decay_rate(SensitivityMatrix::stationary({1.0}), DecaySpec::Family::exponential), CriterionNotMet);
  const auto c = fit_decay_rate(build_sensitivity_matrix(k1()), DecaySpec::Family::exponential, 0.7);
  EXPECT_NEAR(c.rate, std::log(0.7 / 0.4), 1e-9);
  EXPECT_THROW(fit_decay_rate(SensitivityMatrix::zero(3), DecaySpec::Family::exponential, 1.0), InvalidInput);
}

TEST(FitDecayRate, PowerLawFamily) {
  const KernelSpec f = power_law_kernel(0.5, 16);
  const auto alpha = build_sensitivity_matrix(f);
  const auto d = fit_decay_rate(alpha, DecaySpec::Family::power_log);
  double gamma = 0.0;
  for (std::size_t n = 1; n <= 16; ++n) gamma += alpha.lags()[n - 1] * std::pow(1.0 + double(n), d.rate);
  EXPECT_LE(gamma, 1.0 - 1e-6);
  double above = 0.0;
  for (std::size_t n = 1; n <= 16; ++n) above += alpha.lags()[n - 1] * std::pow(1.0 + double(n), d.rate + 1e-4);
  EXPECT_GT(above, 1.0 - 1e-6);
}

TEST(SeriesDecay, MarkovEntry) {
  const auto alpha = build_sensitivity_matrix(k1());
  const auto r = series_decay_bound(alpha, {DecaySpec::Family::exponential, 0.5}, Window{0, 3});
  EXPECT_TRUE(r.holds);
  for (const auto& e : r.entries) {
    if (e.k == 3 && e.j == 0) {
      EXPECT_NEAR(e.neumann, 0.064, 1e-15);
      EXPECT_NEAR(e.bound, r.gamma / (1 - r.gamma) * std::exp(-1.5), 1e-14);
    }
  }
}

TEST(SeriesDecay, RandomSubDobrushinMatrices) {
  Rng rng(61);
  for (int t = 0; t < 100; ++t) {
    const auto alpha = random_sub_dobrushin(rng, 1 + uniform_index(rng, 4));
    const auto decay = fit_decay_rate(alpha, DecaySpec::Family::exponential);
    const auto r = series_decay_bound(alpha, decay, Window{0, 6});
    EXPECT_TRUE(r.holds);
    // the exponential memory bound dominates the general one entrywise
    Rng hr(trial_seed(61, t));
    const Observable h = random_observable(Alphabet::binary(), Window{0, 6}, hr);
    const Site j = -1 - static_cast<Site>(uniform_index(rng, alpha.depth()));
    EXPECT_LE(memory_bound_general(alpha, Window{0, 6}, h, j),
              memory_bound_exponential(alpha, decay, Window{0, 6}, h, j).bound * (1 + 1e-12));
  }
}

TEST(CorrelationBound, MarkovDominatesExactAndDecays) {
  const KernelSpec f = k1();
  const auto alpha = build_sensitivity_matrix(f);
  const auto h0 = Observable::indicator(Alphabet::binary(), 0, 1);
  const auto b3 = correlation_bound(alpha, Window{3, 3}, Window{0, 0}, Observable::indicator(Alphabet::binary(), 3, 1), h0, 1.0);
  // window-filled projection: (1/4) 0.4^m (1 + 0.16 / 0.84)
  EXPECT_NEAR(b3.value, 0.25 * 0.064 * (1 + 0.16 / 0.84), 1e-12);
  EXPECT_GE(b3.value, 0.016);
  EXPECT_LT(b3.tail_certificate, 1e-11);
}

TEST(CorrelationBound, ConstantAndIidGiveZero) {
  const auto alpha = build_sensitivity_matrix(k1());
  const auto c = Observable::constant(Alphabet::binary(), 3, 1.0);
  const auto h0 = Observable::indicator(Alphabet::binary(), 0, 1);
  EXPECT_EQ(correlation_bound(alpha, Window{3, 3}, Window{0, 0}, c, h0, 1.0).value, 0.0);
  const auto a3 = build_sensitivity_matrix(k3());
  EXPECT_EQ(correlation_bound(a3, Window{3, 3}, Window{0, 0}, Observable::indicator(Alphabet::binary(), 3, 1), h0, 1.0).value,
            0.0);
}

TEST(CorrelationBound, RejectsOrderingAndNonDobrushin) {
  const auto h0 = Observable::indicator(Alphabet::binary(), 0, 1);
  const auto h3 = Observable::indicator(Alphabet::binary(), 3, 1);
  EXPECT_THROW(correlation_bound(build_sensitivity_matrix(k1()), Window{0, 0}, Window{3, 3}, h0, h3, 1.0), InvalidInput);
  EXPECT_THROW(correlation_bound(SensitivityMatrix::stationary({1.0}), Window{3, 3}, Window{0, 0}, h3, h0, 1.0),
               CriterionNotMet);
}

TEST(CorrelationBound, WithExactPastFactorIsTighterButStillValid) {
  const KernelSpec f = k1();
  const auto alpha = build_sensitivity_matrix(f);
  const auto h0 = Observable::indicator(Alphabet::binary(), 0, 1);
  const auto mu = stationary_measure(f);
  for (Site m = 1; m <= 6; ++m) {
    const auto hm = Observable::indicator(Alphabet::binary(), m, 1);
    auto exact_factor = [&](Site k) -> std::optional<double> {
      if (k >= 0) return h0.oscillation(k);
      if (k < -6) return std::nullopt;
      return exact_oscillation_of_average(f, Window{k + 1, 0}, h0, k);
    };
    const auto tight = correlation_bound_with_past_factor(alpha, Window{m, m}, 0, hm, h0, 1.0, exact_factor);
    const auto loose = correlation_bound(alpha, Window{m, m}, Window{0, 0}, hm, h0, 1.0);
    const double exact = exact_correlation(f, h0, h0, static_cast<std::size_t>(m), {}, &mu);
    EXPECT_GE(tight.value, exact - 1e-12);
    EXPECT_LE(tight.value, loose.value + 1e-12);
  }
}

TEST(ComparisonBound, IdenticalKernelsGiveZero) {
  const auto h = Observable::indicator(Alphabet::binary(), 0, 1);
  EXPECT_EQ(comparison_bound(k1(), k1(), Window{0, 0}, h).sum.value, 0.0);
}

TEST(ComparisonBound, MarkovPerturbation) {
  const KernelSpec g = two_state_markov(0.31, 0.7);
  const auto h = Observable::indicator(Alphabet::binary(), 0, 1);
  const auto cb = comparison_bound(k1(), g, Window{0, 0}, h);
  EXPECT_NEAR(cb.b_max, 0.01, 1e-15);
  EXPECT_NEAR(cb.sum.value, 0.01 / 0.6, 1e-10);
  const auto mu = stationary_measure(k1()), nu = stationary_measure(g);
  EXPECT_LE(std::abs(mu[1] - nu[1]), cb.sum.value);
}

TEST(ComparisonBound, IidPair) {
  const KernelSpec f = KernelSpec::iid(Alphabet::binary(), {0.6, 0.4});
  const KernelSpec g = KernelSpec::iid(Alphabet::binary(), {0.45, 0.55});
  const auto h = Observable::indicator(Alphabet::binary(), 0, 1);
  const auto cb = comparison_bound(f, g, Window{0, 0}, h);
  EXPECT_NEAR(cb.sum.value, 0.15, 1e-15);
}

TEST(ComparisonBound, RejectsAlphabetMismatchAndNonDobrushin) {
  const auto h = Observable::indicator(Alphabet::binary(), 0, 1);
  const KernelSpec three = KernelSpec::iid(Alphabet::discrete({"a", "b", "c"}), {0.2, 0.3, 0.5});
  EXPECT_THROW(comparison_bound(k1(), three, Window{0, 0}, h), InvalidInput);
  EXPECT_THROW(comparison_bound(fixtures::flip(), k1(), Window{0, 0}, h), CriterionNotMet);
}
