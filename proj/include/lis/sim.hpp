#pragma once

// Forward sampling of finite-memory chains and time-average correlation
// estimates with batch-means standard errors.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "lis/analysis.hpp"
#include "lis/core.hpp"
#include "lis/kernels.hpp"
#include "lis/random.hpp"

namespace lis {

inline constexpr std::size_t kBatchCount = 32;

/// Symbols at sites 0..length-1, drawn site by site by inverse CDF with one
/// uniform per site. The initial past defaults to R copies of the first symbol.
inline std::vector<Symbol> sample_path(const KernelSpec& f, std::size_t length, std::uint64_t seed,
                                       std::optional<PastConfig> initial_past = std::nullopt) {
  if (length == 0) throw InvalidInput("path length must be at least 1");
  const std::size_t r = f.memory_depth();
  const PastConfig past = initial_past.value_or(PastConfig::uniform(r, 0));
  if (past.size() < r) throw InvalidInput("initial past is shorter than the memory depth");
  for (Symbol s : past.symbols)
    if (s >= f.alphabet().size()) throw InvalidInput("initial past contains an unknown symbol");
  const std::size_t p = past.size();
  std::vector<Symbol> buf(past.symbols);
  buf.reserve(p + length);
  Rng rng(seed);
  const std::size_t n = f.alphabet().size();
  std::array<double, kMaxAlphabetSize> probs{};
  for (std::size_t t = 0; t < length; ++t) {
    f.conditional(static_cast<Site>(t), std::span<const Symbol>(buf.data(), buf.size()),
                  std::span<double>(probs.data(), n));
    const double u = uniform01(rng);
    double acc = 0.0;
    Symbol x = static_cast<Symbol>(n - 1);
    for (std::size_t s = 0; s < n; ++s) {
      acc += probs[s];
      if (u < acc) {
        x = static_cast<Symbol>(s);
        break;
      }
    }
    // never land on a zero-probability tail symbol through rounding
    while (probs[x] == 0.0 && x > 0) --x;
    buf.push_back(x);
  }
  return std::vector<Symbol>(buf.begin() + static_cast<std::ptrdiff_t>(p), buf.end());
}

struct CorrelationEstimate {
  double estimate = 0.0;        // signed covariance
  double standard_error = 0.0;  // from kBatchCount batch means
  std::size_t samples = 0;
};

/// Time average of h_future(tau^{t+lag}) h_past(tau^t) minus the product of
/// the averages, over times t >= burn_in where both supports fit in the path.
inline CorrelationEstimate estimate_correlation(std::span<const Symbol> path, const Observable& h_future,
                                                const Observable& h_past, std::size_t lag, std::size_t burn_in) {
  const Window a = h_past.support();
  const Window b{h_future.support().lo + static_cast<Site>(lag), h_future.support().hi + static_cast<Site>(lag)};
  const Site first = std::max<Site>(static_cast<Site>(burn_in), -std::min(a.lo, b.lo));
  const Site last = static_cast<Site>(path.size()) - 1 - std::max(a.hi, b.hi);
  if (last - first + 1 < static_cast<Site>(2 * kBatchCount)) throw InvalidInput("path too short for the estimate");
  const auto count = static_cast<std::size_t>(last - first + 1);
  const std::size_t per_batch = count / kBatchCount;

  auto cov_over = [&](Site t0, Site t1) {
    double sx = 0.0, sy = 0.0, sxy = 0.0;
    for (Site t = t0; t < t1; ++t) {
      const double x = h_past.value(path.subspan(static_cast<std::size_t>(a.lo + t), a.length()));
      const double y = h_future.value(path.subspan(static_cast<std::size_t>(b.lo + t), b.length()));
      sx += x;
      sy += y;
      sxy += x * y;
    }
    const double m = static_cast<double>(t1 - t0);
    return std::array<double, 3>{sx / m, sy / m, sxy / m};
  };

  CorrelationEstimate out;
  std::vector<double> batch(kBatchCount);
  double mx = 0.0, my = 0.0, mxy = 0.0;
  for (std::size_t k = 0; k < kBatchCount; ++k) {
    const Site t0 = first + static_cast<Site>(k * per_batch);
    const auto [bx, by, bxy] = cov_over(t0, t0 + static_cast<Site>(per_batch));
    batch[k] = bxy - bx * by;
    mx += bx;
    my += by;
    mxy += bxy;
  }
  const double kb = static_cast<double>(kBatchCount);
  mx /= kb;
  my /= kb;
  mxy /= kb;
  out.estimate = mxy - mx * my;
  double mean = 0.0;
  for (double v : batch) mean += v;
  mean /= kb;
  double var = 0.0;
  for (double v : batch) var += (v - mean) * (v - mean);
  var /= kb - 1.0;
  out.standard_error = std::sqrt(var / kb);
  out.samples = per_batch * kBatchCount;
  return out;
}

/// Heuristic burn-in 10 R / (1 - gamma), with gamma the ergodic coefficient
/// for range-1 Markov kernels and the Dobrushin row sum otherwise.
inline std::size_t default_burn_in(const KernelSpec& f, const EnumerationCap& cap = {}) {
  const std::size_t r = f.memory_depth();
  if (r == 0) return 0;
  double gamma = 1.0;
  if (f.stationary() && r <= 1) {
    gamma = ergodic_coefficient(f);
  } else {
    gamma = build_sensitivity_matrix(f, cap).sup_row_sum();
  }
  if (!(gamma < 1.0)) throw InvalidInput("no default burn-in without a contraction; pass one explicitly");
  return static_cast<std::size_t>(std::ceil(10.0 * static_cast<double>(r) / (1.0 - gamma)));
}

}  // namespace lis
