#pragma once

// Brute-force ground truth at desk scale. Nothing here goes through the
// sensitivity-matrix machinery of bounds.hpp: oscillations are taken from
// enumerated kernel averages and stationary laws come from the block chain.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "lis/analysis.hpp"
#include "lis/core.hpp"
#include "lis/kernels.hpp"
#include "lis/parallel.hpp"
#include "lis/random.hpp"

namespace lis {

class ConvergenceFailure : public std::runtime_error {
 public:
  ConvergenceFailure(const std::string& what, std::size_t iterations, double residual)
      : std::runtime_error(what), iterations_(iterations), residual_(residual) {}
  std::size_t iterations() const noexcept { return iterations_; }
  double residual() const noexcept { return residual_; }

 private:
  std::size_t iterations_;
  double residual_;
};

/// delta_j(f_window h), from the table of f_window h over every relevant past.
inline double exact_oscillation_of_average(const KernelSpec& f, const Window& window, const Observable& h, Site j,
                                           const EnumerationCap& cap = {}) {
  if (h.support().hi > window.hi) throw InvalidInput("observable depends on sites right of the window");
  if (j >= window.lo) return 0.0;
  const Site l = window.lo;
  const Site lo = std::min({j, h.support().lo, l - static_cast<Site>(std::max<std::size_t>(f.memory_depth(), 1))});
  const Observable avg = average_observable(f, window, h, lo, cap);
  return oscillation(avg, j, f.alphabet());
}

struct DustingReport {
  std::size_t instances = 0;   // (h, j) pairs checked
  std::size_t violations = 0;
  double min_slack = std::numeric_limits<double>::infinity();
};

namespace detail {

// Total weight of descending paths from k in V down to j < V.lo whose
// intermediate sites all lie in V.
inline std::vector<double> paths_into(const SensitivityMatrix& alpha, const Window& v, Site j) {
  std::vector<double> w(v.length(), 0.0);
  for (Site i = v.lo; i <= v.hi; ++i) {
    double s = alpha.entry(i, j);
    for (Site m = v.lo; m < i; ++m) s += alpha.entry(i, m) * w[static_cast<std::size_t>(m - v.lo)];
    w[static_cast<std::size_t>(i - v.lo)] = s;
  }
  return w;
}

}  // namespace detail

/// Checks delta_j(f_V h) <= delta_j(h) + sum_{k in V} delta_k(h) W_kj for
/// random h on V plus a strip of its past, at every strip site j. For a
/// single site W = alpha; for longer V, W sums the descending paths inside V.
inline DustingReport verify_dusting(const KernelSpec& f, const Window& v, const SensitivityMatrix& alpha,
                                    std::size_t trials, std::uint64_t seed = 1, const EnumerationCap& cap = {},
                                    std::size_t threads = 1) {
  const std::size_t r = f.memory_depth();
  const std::size_t strip = std::max<std::size_t>(r, 1);
  const Site l = v.lo;
  auto one = [&](std::size_t t) {
    Rng rng(trial_seed(seed, t));
    std::size_t extra = uniform_index(rng, strip + 1);
    while (extra > 0 && !cap.allows(f.alphabet().size(), v.length() + extra)) --extra;
    const Observable h = random_observable(f.alphabet(), Window{l - static_cast<Site>(extra), v.hi}, rng, cap);
    const Site lo = l - static_cast<Site>(strip);
    const Observable avg = average_observable(f, v, h, lo, cap);
    DustingReport rep;
    for (Site j = lo; j < l; ++j) {
      const auto w = detail::paths_into(alpha, v, j);
      double rhs = h.oscillation(j);
      for (Site k = v.lo; k <= v.hi; ++k) rhs += h.oscillation(k) * w[static_cast<std::size_t>(k - v.lo)];
      const double lhs = oscillation(avg, j, f.alphabet());
      const double slack = rhs - lhs;
      ++rep.instances;
      rep.min_slack = std::min(rep.min_slack, slack);
      if (slack < -1e-12) ++rep.violations;
    }
    return rep;
  };
  const auto parts = parallel_map(trials, one, threads);
  DustingReport total;
  for (const auto& p : parts) {
    total.instances += p.instances;
    total.violations += p.violations;
    total.min_slack = std::min(total.min_slack, p.min_slack);
  }
  return total;
}

/// The chain on blocks of k = max(R, 1) consecutive symbols, oldest first.
class BlockChain {
 public:
  explicit BlockChain(const KernelSpec& f, const EnumerationCap& cap = {}) {
    if (!f.stationary()) throw InvalidInput("block chains need a stationary kernel");
    k_ = std::max<std::size_t>(f.memory_depth(), 1);
    n_ = f.alphabet().size();
    cap.check(n_, k_);
    states_ = power_count(n_, k_);
    probs_.resize(states_ * n_);
    std::vector<Symbol> block(k_);
    for (std::size_t s = 0; s < states_; ++s) {
      detail::index_to_config(s, n_, block);
      f.conditional(0, block, std::span<double>(probs_.data() + s * n_, n_));
    }
  }

  std::size_t block_length() const noexcept { return k_; }
  std::size_t states() const noexcept { return states_; }
  std::size_t next(std::size_t s, Symbol x) const { return (s * n_) % states_ + x; }
  double prob(std::size_t s, Symbol x) const { return probs_[s * n_ + x]; }

  /// mu -> mu P
  std::vector<double> push(const std::vector<double>& mu) const {
    std::vector<double> out(states_, 0.0);
    for (std::size_t s = 0; s < states_; ++s) {
      if (mu[s] == 0.0) continue;
      for (std::size_t x = 0; x < n_; ++x) out[next(s, static_cast<Symbol>(x))] += mu[s] * prob(s, static_cast<Symbol>(x));
    }
    return out;
  }

  /// g -> P g
  std::vector<double> pull(const std::vector<double>& g) const {
    std::vector<double> out(states_, 0.0);
    for (std::size_t s = 0; s < states_; ++s) {
      double v = 0.0;
      for (std::size_t x = 0; x < n_; ++x) v += prob(s, static_cast<Symbol>(x)) * g[next(s, static_cast<Symbol>(x))];
      out[s] = v;
    }
    return out;
  }

  /// Throws unless the transition graph has exactly one closed class and it is aperiodic.
  void check_ergodic() const {
    std::vector<std::vector<std::size_t>> adj(states_), radj(states_);
    for (std::size_t s = 0; s < states_; ++s)
      for (std::size_t x = 0; x < n_; ++x)
        if (prob(s, static_cast<Symbol>(x)) > 0.0) {
          adj[s].push_back(next(s, static_cast<Symbol>(x)));
          radj[next(s, static_cast<Symbol>(x))].push_back(s);
        }
    // Kosaraju: finishing order on the graph, then components on the reverse
    std::vector<std::size_t> order;
    std::vector<char> seen(states_, 0);
    for (std::size_t s0 = 0; s0 < states_; ++s0) {
      if (seen[s0]) continue;
      std::vector<std::pair<std::size_t, std::size_t>> stack{{s0, 0}};
      seen[s0] = 1;
      while (!stack.empty()) {
        auto& [s, e] = stack.back();
        if (e < adj[s].size()) {
          const std::size_t t = adj[s][e++];
          if (!seen[t]) {
            seen[t] = 1;
            stack.push_back({t, 0});
          }
        } else {
          order.push_back(s);
          stack.pop_back();
        }
      }
    }
    constexpr std::size_t kNone = static_cast<std::size_t>(-1);
    std::vector<std::size_t> comp(states_, kNone);
    std::size_t ncomp = 0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      if (comp[*it] != kNone) continue;
      std::vector<std::size_t> stack{*it};
      comp[*it] = ncomp;
      while (!stack.empty()) {
        const std::size_t s = stack.back();
        stack.pop_back();
        for (std::size_t t : radj[s])
          if (comp[t] == kNone) {
            comp[t] = ncomp;
            stack.push_back(t);
          }
      }
      ++ncomp;
    }
    std::vector<char> open(ncomp, 0);
    for (std::size_t s = 0; s < states_; ++s)
      for (std::size_t t : adj[s])
        if (comp[t] != comp[s]) open[comp[s]] = 1;
    std::size_t closed = 0, root = 0;
    for (std::size_t c = 0; c < ncomp; ++c)
      if (!open[c]) {
        ++closed;
        root = c;
      }
    if (closed != 1) throw InvalidInput("block chain is reducible: " + std::to_string(closed) + " closed classes");
    // period of the closed class: gcd of level differences along its edges
    std::size_t start = 0;
    while (comp[start] != root) ++start;
    std::vector<long> level(states_, -1);
    std::vector<std::size_t> queue{start};
    level[start] = 0;
    long g = 0;
    for (std::size_t q = 0; q < queue.size(); ++q) {
      const std::size_t s = queue[q];
      for (std::size_t t : adj[s]) {
        if (comp[t] != root) continue;
        if (level[t] < 0) {
          level[t] = level[s] + 1;
          queue.push_back(t);
        } else {
          g = std::gcd(g, std::abs(level[s] + 1 - level[t]));
        }
      }
    }
    if (g != 1) throw InvalidInput("block chain is periodic with period " + std::to_string(g));
  }

 private:
  std::size_t k_ = 1, n_ = 2, states_ = 0;
  std::vector<double> probs_;
};

struct StationaryOptions {
  std::size_t max_iterations = 2000000;
  double residual = 1e-14;
};

/// Stationary law of the block chain, over E^{max(R,1)} in enumerate_configs order.
inline FiniteDistribution stationary_measure(const KernelSpec& f, const StationaryOptions& opts = {},
                                             const EnumerationCap& cap = {}) {
  const BlockChain chain(f, cap);
  chain.check_ergodic();
  std::vector<double> mu(chain.states(), 1.0 / static_cast<double>(chain.states()));
  double res = 0.0;
  for (std::size_t it = 0; it < opts.max_iterations; ++it) {
    std::vector<double> next = chain.push(mu);
    const double total = std::accumulate(next.begin(), next.end(), 0.0);
    res = 0.0;
    for (std::size_t s = 0; s < next.size(); ++s) {
      next[s] /= total;
      res = std::max(res, std::abs(next[s] - mu[s]));
    }
    mu.swap(next);
    if (res < opts.residual) {
      for (double& v : mu) v = std::max(v, 0.0);
      const double z = std::accumulate(mu.begin(), mu.end(), 0.0);
      for (double& v : mu) v /= z;
      return FiniteDistribution(std::move(mu));
    }
  }
  throw ConvergenceFailure("power iteration did not reach the residual target", opts.max_iterations, res);
}

namespace detail {

// Stationary law of the configuration on [lo, lo + len - 1] for len >= k,
// in enumerate_configs order.
inline std::vector<double> stationary_window_law(const KernelSpec& f, const FiniteDistribution& mu, std::size_t k,
                                                 std::size_t len, const EnumerationCap& cap) {
  cap.check(f.alphabet().size(), len);
  const std::size_t n = f.alphabet().size();
  std::vector<double> law;
  law.reserve(power_count(n, len));
  std::vector<Symbol> block(k);
  for (std::size_t s = 0; s < mu.size(); ++s) {
    detail::index_to_config(s, n, block);
    if (len == k) {
      law.push_back(mu[s]);
      continue;
    }
    const FiniteDistribution rest = marginal_distribution(f, Window{0, static_cast<Site>(len - k) - 1}, PastConfig{block}, cap);
    for (double w : rest.weights()) law.push_back(mu[s] * w);
  }
  return law;
}

inline Observable product(const Observable& a, const Observable& b, const EnumerationCap& cap) {
  const Window u{std::min(a.support().lo, b.support().lo), std::max(a.support().hi, b.support().hi)};
  return Observable::from_function(
      a.alphabet(), u,
      [&](std::span<const Symbol> c) { return a.value_in(u.lo, c) * b.value_in(u.lo, c); }, cap);
}

}  // namespace detail

/// mu(h) under the stationary chain of a stationary finite-memory kernel.
inline double stationary_expectation(const KernelSpec& f, const FiniteDistribution& mu, const Observable& h,
                                     const EnumerationCap& cap = {}) {
  const std::size_t k = std::max<std::size_t>(f.memory_depth(), 1);
  const std::size_t len = std::max(k, h.support().length());
  const Site lo = h.support().hi - static_cast<Site>(len) + 1;
  const auto law = detail::stationary_window_law(f, mu, k, len, cap);
  double e = 0.0;
  std::size_t idx = 0;
  for (const auto& cfg : enumerate_configs(Window{lo, h.support().hi}, f.alphabet(), cap)) {
    e += law[idx++] * h.value_in(lo, cfg);
  }
  return e;
}

/// Signed covariance mu(h1' h2) - mu(h1') mu(h2), where h1' is h_future
/// shifted right by n sites.
inline double exact_covariance(const KernelSpec& f, const Observable& h_future, const Observable& h_past,
                               std::size_t n, const EnumerationCap& cap = {}, const FiniteDistribution* mu_in = nullptr) {
  const FiniteDistribution mu = mu_in ? *mu_in : stationary_measure(f, {}, cap);
  const Observable h1 = h_future.shifted(static_cast<Site>(n));
  const double e1 = stationary_expectation(f, mu, h1, cap);
  const double e2 = stationary_expectation(f, mu, h_past, cap);
  const Window a = h_past.support();
  const Window b = h1.support();
  double joint = 0.0;
  if (b.lo <= a.hi) {
    joint = stationary_expectation(f, mu, detail::product(h1, h_past, cap), cap);
  } else {
    // condition h1 on the block ending at b.lo - 1, then carry it back to a.hi
    const BlockChain chain(f, cap);
    const std::size_t k = chain.block_length();
    std::vector<double> g(chain.states());
    std::vector<Symbol> block(k);
    for (std::size_t s = 0; s < g.size(); ++s) {
      detail::index_to_config(s, f.alphabet().size(), block);
      g[s] = compose_window(f, b, PastConfig{block}, h1, cap);
    }
    for (Site step = a.hi; step < b.lo - 1; ++step) g = chain.pull(g);
    const std::size_t len = std::max(k, a.length());
    const Site lo = a.hi - static_cast<Site>(len) + 1;
    const auto law = detail::stationary_window_law(f, mu, k, len, cap);
    std::size_t idx = 0;
    for (const auto& cfg : enumerate_configs(Window{lo, a.hi}, f.alphabet(), cap)) {
      const std::size_t last = detail::config_index(std::span<const Symbol>(cfg).last(k), f.alphabet().size());
      joint += law[idx++] * h_past.value_in(lo, cfg) * g[last];
    }
  }
  return joint - e1 * e2;
}

inline double exact_correlation(const KernelSpec& f, const Observable& h_future, const Observable& h_past,
                                std::size_t n, const EnumerationCap& cap = {}, const FiniteDistribution* mu = nullptr) {
  return std::abs(exact_covariance(f, h_future, h_past, n, cap, mu));
}

/// f_[-n, h.hi] h(past) for n = 0..max_n, with the past ending at -n-1.
inline std::vector<double> finite_volume_sequence(const KernelSpec& f, const Observable& h, const PastConfig& past,
                                                  std::size_t max_n, const EnumerationCap& cap = {}) {
  std::vector<double> out;
  for (std::size_t n = 0; n <= max_n; ++n) {
    const Window w{-static_cast<Site>(n), h.support().hi};
    if (h.support().lo < w.lo) continue;
    out.push_back(compose_window(f, w, past, h, cap));
  }
  return out;
}

/// inf over configurations s of the window and pasts xi, eta of
/// f_window(s | xi) / f_window(s | eta); 0/0 pairs are skipped.
inline double boundary_ratio_infimum(const KernelSpec& f, const Window& window, const EnumerationCap& cap = {}) {
  const std::size_t r = std::max<std::size_t>(f.memory_depth(), 1);
  std::vector<std::vector<double>> laws;
  for (const auto& cfg : enumerate_configs(Window{window.lo - static_cast<Site>(r), window.lo - 1}, f.alphabet(), cap)) {
    laws.push_back(marginal_distribution(f, window, PastConfig{cfg}, cap).weights());
  }
  double inf = std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < laws.front().size(); ++s) {
    double mn = std::numeric_limits<double>::infinity(), mx = 0.0;
    for (const auto& w : laws) {
      mn = std::min(mn, w[s]);
      mx = std::max(mx, w[s]);
    }
    if (mx == 0.0) continue;
    inf = std::min(inf, mn / mx);
  }
  return inf;
}

}  // namespace lis
