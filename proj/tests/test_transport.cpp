#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "lis/transport.hpp"

using namespace lis;

namespace {

FiniteDistribution random_law(std::size_t n, Rng& rng) { return FiniteDistribution(fixtures::random_row(n, rng, 0.0)); }

// Exhaustive coupling search on a 2x2 grid: the coupling is fixed by its
// (0,0) mass.
double coupling_search_2x2(const FiniteDistribution& p, const FiniteDistribution& q, const Alphabet& e) {
  const double lo = std::max(0.0, p[0] - q[1]), hi = std::min(p[0], q[0]);
  auto cost = [&](double x) {
    return e.distance(0, 1) * (p[0] - x) + e.distance(1, 0) * (q[0] - x);
  };
  return std::min(cost(lo), cost(hi));
}

}  // namespace

TEST(Vkr, DiscreteMetricExample) {
  const Alphabet e = Alphabet::binary();
  EXPECT_NEAR(vkr_distance(FiniteDistribution({0.3, 0.7}), FiniteDistribution({0.7, 0.3}), e), 0.4, 1e-15);
}

TEST(Vkr, IdenticalLawsAreAtDistanceZero) {
  const Alphabet e = fixtures::line_metric(4);
  const FiniteDistribution p({0.1, 0.2, 0.3, 0.4});
  EXPECT_NEAR(vkr_distance(p, p, e), 0.0, 1e-15);
  EXPECT_NEAR(transport_cost_simplex(p, p, e), 0.0, 1e-15);
}

TEST(Vkr, ScaledMetricDoublesCost) {
  const Alphabet e = Alphabet::with_metric({"0", "1"}, {{0, 2}, {2, 0}});
  const FiniteDistribution p({0.3, 0.7}), q({0.7, 0.3});
  EXPECT_NEAR(vkr_distance(p, q, e), 0.8, 1e-15);
  EXPECT_NEAR(coupling_search_2x2(p, q, e), 0.8, 1e-15);
}

TEST(Vkr, LineMetricIsCdfDistance) {
  Rng rng(17);
  for (std::size_t n = 3; n <= 6; ++n) {
    const Alphabet e = fixtures::line_metric(n);
    for (int t = 0; t < 30; ++t) {
      const auto p = random_law(n, rng), q = random_law(n, rng);
      double w1 = 0.0, cp = 0.0, cq = 0.0;
      for (std::size_t i = 0; i + 1 < n; ++i) {
        cp += p[i];
        cq += q[i];
        w1 += std::abs(cp - cq);
      }
      EXPECT_NEAR(vkr_distance(p, q, e), w1, 1e-12);
    }
  }
}

TEST(Vkr, SimplexMatchesVertexEnumeration) {
  Rng rng(23);
  for (std::size_t n = 2; n <= 4; ++n) {
    for (int t = 0; t < 40; ++t) {
      // random metric: shortest paths of random positive weights
      std::vector<std::vector<double>> d(n, std::vector<double>(n, 0.0));
      for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = a + 1; b < n; ++b) d[a][b] = d[b][a] = 0.1 + uniform01(rng);
      for (std::size_t k = 0; k < n; ++k)
        for (std::size_t a = 0; a < n; ++a)
          for (std::size_t b = 0; b < n; ++b) d[a][b] = std::min(d[a][b], d[a][k] + d[k][b]);
      std::vector<std::string> labels;
      for (std::size_t a = 0; a < n; ++a) labels.push_back(std::to_string(a));
      const Alphabet e = Alphabet::with_metric(labels, d);
      const auto p = random_law(n, rng), q = random_law(n, rng);
      EXPECT_NEAR(transport_cost_simplex(p, q, e), transport_cost_vertices(p, q, e), 1e-12);
    }
  }
}

TEST(Vkr, SimplexHandlesDegenerateSupports) {
  const Alphabet e = fixtures::line_metric(5);
  const FiniteDistribution p({1.0, 0.0, 0.0, 0.0, 0.0}), q({0.0, 0.0, 0.0, 0.0, 1.0});
  EXPECT_NEAR(transport_cost_simplex(p, q, e), 4.0, 1e-12);
  const FiniteDistribution r({0.5, 0.0, 0.0, 0.0, 0.5});
  EXPECT_NEAR(transport_cost_simplex(p, r, e), 2.0, 1e-12);
  EXPECT_NEAR(transport_cost_vertices(FiniteDistribution({0.5, 0.5, 0, 0}), FiniteDistribution({0, 0, 0.5, 0.5}),
                                      fixtures::line_metric(4)),
              2.0, 1e-12);
}

TEST(Vkr, MetricAxiomsOnRandomTriples) {
  Rng rng(29);
  const Alphabet e = fixtures::line_metric(5);
  for (int t = 0; t < 200; ++t) {
    const auto p = random_law(5, rng), q = random_law(5, rng), r = random_law(5, rng);
    const double pq = vkr_distance(p, q, e), qp = vkr_distance(q, p, e);
    EXPECT_NEAR(pq, qp, 1e-12);
    EXPECT_GE(pq, 0.0);
    EXPECT_LE(vkr_distance(p, r, e), pq + vkr_distance(q, r, e) + 1e-12);
  }
}

TEST(Vkr, DiscreteIsHalfL1) {
  Rng rng(31);
  for (std::size_t n = 2; n <= 16; n += 3) {
    std::vector<std::string> labels;
    for (std::size_t a = 0; a < n; ++a) labels.push_back(std::to_string(a));
    const Alphabet e = Alphabet::discrete(labels);
    for (int t = 0; t < 20; ++t) {
      const auto p = random_law(n, rng), q = random_law(n, rng);
      double l1 = 0.0;
      for (std::size_t i = 0; i < n; ++i) l1 += std::abs(p[i] - q[i]);
      EXPECT_NEAR(vkr_distance(p, q, e), 0.5 * l1, 1e-12);
      EXPECT_NEAR(transport_cost_simplex(p, q, e), 0.5 * l1, 1e-12);
    }
  }
}

TEST(Vkr, RejectsMismatchedSizes) {
  EXPECT_THROW(vkr_distance(FiniteDistribution({1.0}), FiniteDistribution({0.5, 0.5}), Alphabet::binary()), InvalidInput);
  EXPECT_THROW(transport_cost_vertices(FiniteDistribution(std::vector<double>(5, 0.2)),
                                       FiniteDistribution(std::vector<double>(5, 0.2)), fixtures::line_metric(5)),
               InvalidInput);
}
