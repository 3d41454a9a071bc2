#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "lis/kernels.hpp"
#include "lis/random.hpp"

namespace fixtures {

using namespace lis;

// f(1|0) = 0.3, f(1|1) = 0.7
inline KernelSpec k1() { return two_state_markov(0.3, 0.7, "K1"); }

// linear power law, eps = 0.5, R = 4, normalized over the first four lags
inline KernelSpec k2(std::size_t depth = 4) {
  return power_law_kernel(0.5, depth, PowerLawNormalization::truncated);
}

// fair coin
inline KernelSpec k3() { return KernelSpec::iid(Alphabet::binary(), {0.5, 0.5}, "K3"); }

inline KernelSpec flip() { return two_state_markov(1.0, 0.0, "flip"); }

inline Alphabet line_metric(std::size_t n) {
  std::vector<std::string> labels;
  std::vector<std::vector<double>> d(n, std::vector<double>(n));
  for (std::size_t a = 0; a < n; ++a) {
    labels.push_back(std::string(1, static_cast<char>('a' + a)));
    for (std::size_t b = 0; b < n; ++b) d[a][b] = std::abs(static_cast<double>(a) - static_cast<double>(b));
  }
  return Alphabet::with_metric(labels, d);
}

// Strictly positive random row on n symbols.
inline std::vector<double> random_row(std::size_t n, Rng& rng, double floor = 0.02) {
  std::vector<double> row(n);
  double total = 0.0;
  for (double& p : row) {
    p = floor + uniform01(rng);
    total += p;
  }
  for (double& p : row) p /= total;
  // absorb rounding in the last entry so the row sums to 1
  double head = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) head += row[i];
  row[n - 1] = 1.0 - head;
  return row;
}

inline KernelSpec random_table(const Alphabet& alphabet, std::size_t depth, Rng& rng, double floor = 0.02) {
  std::vector<std::vector<double>> rows(power_count(alphabet.size(), depth));
  for (auto& r : rows) r = random_row(alphabet.size(), rng, floor);
  return KernelSpec::general(alphabet, depth, std::move(rows), "random");
}

// Random kernel with |E| in {2, 3}, R in {0, 1, 2}; discrete or line metric.
inline KernelSpec random_kernel(Rng& rng) {
  const std::size_t n = 2 + uniform_index(rng, 2);
  const std::size_t depth = uniform_index(rng, 3);
  const Alphabet alphabet =
      uniform01(rng) < 0.5 ? Alphabet::discrete(n == 2 ? std::vector<std::string>{"0", "1"}
                                                       : std::vector<std::string>{"0", "1", "2"})
                           : line_metric(n);
  return random_table(alphabet, depth, rng);
}

// Random range-1 kernel on a binary or ternary alphabet whose Dobrushin
// row sum stays below one.
inline KernelSpec random_range1(Rng& rng) {
  const std::size_t n = 2 + uniform_index(rng, 2);
  const Alphabet alphabet = n == 2 ? Alphabet::binary() : Alphabet::discrete({"0", "1", "2"});
  return random_table(alphabet, 1, rng, 0.3);
}

}  // namespace fixtures
