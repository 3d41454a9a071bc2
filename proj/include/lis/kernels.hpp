#pragma once

// Singleton kernel families and the interval kernels they generate. An
// interval kernel is the ordered product of singleton kernels over the
// window, evaluated here by exact enumeration.

#include <array>
#include <cmath>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "lis/core.hpp"
#include "lis/random.hpp"

namespace lis {

class KernelSpec;

/// p(x | last `range` symbols); rows indexed lexicographically by the
/// conditioning symbols, oldest first.
struct MarkovTable {
  std::size_t range = 0;
  std::vector<std::vector<double>> rows;
};

/// Binary alphabet: f(1 | past) = intercept + sum_k coefficients[k-1] * past_{-k}.
/// `declared_tail` is the coefficient mass dropped beyond the depth.
struct LinearLongMemory {
  double intercept = 0.0;
  std::vector<double> coefficients;
  double declared_tail = 0.0;
};

/// Full table over E x E^R.
struct GeneralTable {
  std::vector<std::vector<double>> rows;
};

struct SiteIndexed {
  std::shared_ptr<const KernelSpec> fallback;
  std::map<Site, std::shared_ptr<const KernelSpec>> overrides;
};

enum class Validation { strict, skip };

class KernelSpec {
 public:
  using Family = std::variant<MarkovTable, LinearLongMemory, GeneralTable, SiteIndexed>;

  static KernelSpec markov(const Alphabet& alphabet, std::size_t range, std::vector<std::vector<double>> rows,
                           std::optional<std::size_t> memory_depth = std::nullopt, std::string label = {},
                           Validation validation = Validation::strict) {
    const std::size_t depth = memory_depth.value_or(range);
    if (range > depth) throw InvalidInput("markov range exceeds the declared memory depth");
    check_rows(alphabet, rows, power_count(alphabet.size(), range), validation);
    return KernelSpec(alphabet, depth, MarkovTable{range, std::move(rows)}, std::move(label));
  }

  static KernelSpec iid(const Alphabet& alphabet, std::vector<double> probabilities, std::string label = {}) {
    return markov(alphabet, 0, {std::move(probabilities)}, 0, std::move(label));
  }

  static KernelSpec general(const Alphabet& alphabet, std::size_t depth, std::vector<std::vector<double>> rows,
                            std::string label = {}, Validation validation = Validation::strict) {
    check_rows(alphabet, rows, power_count(alphabet.size(), depth), validation);
    return KernelSpec(alphabet, depth, GeneralTable{std::move(rows)}, std::move(label));
  }

  static KernelSpec linear(const Alphabet& alphabet, double intercept, std::vector<double> coefficients,
                           double declared_tail = 0.0, std::string label = {}) {
    if (alphabet.size() != 2) throw InvalidInput("linear long-memory kernels need a binary alphabet");
    double sum = 0.0;
    for (double a : coefficients) {
      if (!(a >= 0.0) || !std::isfinite(a)) throw InvalidInput("linear coefficients must be non-negative");
      sum += a;
    }
    if (!(intercept >= 0.0)) throw InvalidInput("linear intercept must be non-negative");
    if (!(sum < 1.0)) throw InvalidInput("linear coefficients must sum to less than 1");
    if (intercept + sum > 1.0 + kNormalizationTolerance) {
      throw InvalidInput("linear intercept plus coefficients must not exceed 1");
    }
    if (!(declared_tail >= 0.0)) throw InvalidInput("declared tail must be non-negative");
    const std::size_t depth = coefficients.size();
    return KernelSpec(alphabet, depth, LinearLongMemory{intercept, std::move(coefficients), declared_tail},
                      std::move(label));
  }

  static KernelSpec site_indexed(const KernelSpec& fallback, const std::map<Site, KernelSpec>& overrides,
                                 std::string label = {}) {
    if (std::holds_alternative<SiteIndexed>(fallback.family_)) {
      throw InvalidInput("site-indexed kernels cannot be nested");
    }
    SiteIndexed s;
    s.fallback = std::make_shared<const KernelSpec>(fallback);
    std::size_t depth = fallback.depth_;
    for (const auto& [site, k] : overrides) {
      if (!(k.alphabet_ == fallback.alphabet_)) throw InvalidInput("site override uses a different alphabet");
      if (std::holds_alternative<SiteIndexed>(k.family_)) throw InvalidInput("site-indexed kernels cannot be nested");
      depth = std::max(depth, k.depth_);
      s.overrides.emplace(site, std::make_shared<const KernelSpec>(k));
    }
    return KernelSpec(fallback.alphabet_, depth, std::move(s), std::move(label));
  }

  const Alphabet& alphabet() const noexcept { return alphabet_; }
  std::size_t memory_depth() const noexcept { return depth_; }
  const std::string& label() const noexcept { return label_; }
  const Family& family() const noexcept { return family_; }
  bool stationary() const noexcept { return !std::holds_alternative<SiteIndexed>(family_); }

  /// The non-site-indexed kernel acting at site i.
  const KernelSpec& at_site(Site i) const {
    if (const auto* s = std::get_if<SiteIndexed>(&family_)) {
      auto it = s->overrides.find(i);
      return it == s->overrides.end() ? *s->fallback : *it->second;
    }
    return *this;
  }

  /// Sites carrying an override, or nullopt for stationary kernels.
  std::optional<Window> override_span() const {
    const auto* s = std::get_if<SiteIndexed>(&family_);
    if (!s || s->overrides.empty()) return std::nullopt;
    return Window{s->overrides.begin()->first, s->overrides.rbegin()->first};
  }

  /// Conditional law at site i. `history` ends at site i-1 and holds at least
  /// the depth of the kernel acting at i.
  void conditional(Site i, std::span<const Symbol> history, std::span<double> out) const {
    const KernelSpec& k = at_site(i);
    const std::size_t n = alphabet_.size();
    std::visit(
        [&](const auto& fam) {
          using T = std::decay_t<decltype(fam)>;
          if constexpr (std::is_same_v<T, MarkovTable>) {
            const auto& row = fam.rows[detail::config_index(history.last(fam.range), n)];
            std::copy(row.begin(), row.end(), out.begin());
          } else if constexpr (std::is_same_v<T, GeneralTable>) {
            const auto& row = fam.rows[detail::config_index(history.last(k.depth_), n)];
            std::copy(row.begin(), row.end(), out.begin());
          } else if constexpr (std::is_same_v<T, LinearLongMemory>) {
            double p1 = fam.intercept;
            const std::size_t h = history.size();
            for (std::size_t lag = 1; lag <= fam.coefficients.size(); ++lag) {
              p1 += fam.coefficients[lag - 1] * static_cast<double>(history[h - lag]);
            }
            out[0] = 1.0 - p1;
            out[1] = p1;
          } else {
            throw std::logic_error("unresolved site-indexed kernel");
          }
        },
        k.family_);
  }

  double probability(Site i, std::span<const Symbol> history, Symbol x) const {
    std::array<double, kMaxAlphabetSize> buf{};
    conditional(i, history, std::span<double>(buf.data(), alphabet_.size()));
    return buf[x];
  }

  /// Coefficient mass not represented at the declared depth (linear family).
  double truncation_tail() const {
    if (const auto* lin = std::get_if<LinearLongMemory>(&family_)) return lin->declared_tail;
    if (const auto* s = std::get_if<SiteIndexed>(&family_)) {
      double t = s->fallback->truncation_tail();
      for (const auto& [site, k] : s->overrides) t = std::max(t, k->truncation_tail());
      return t;
    }
    return 0.0;
  }

 private:
  KernelSpec(Alphabet alphabet, std::size_t depth, Family family, std::string label)
      : alphabet_(std::move(alphabet)), depth_(depth), family_(std::move(family)), label_(std::move(label)) {}

  static void check_rows(const Alphabet& alphabet, const std::vector<std::vector<double>>& rows,
                         std::size_t expected_rows, Validation validation) {
    if (rows.size() != expected_rows) {
      throw InvalidInput("kernel table has " + std::to_string(rows.size()) + " rows, expected " +
                         std::to_string(expected_rows));
    }
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (rows[r].size() != alphabet.size()) throw InvalidInput("kernel row " + std::to_string(r) + " has wrong length");
      if (validation == Validation::skip) continue;
      double total = 0.0;
      for (double p : rows[r]) {
        if (!(p >= 0.0) || !std::isfinite(p)) throw InvalidInput("kernel row " + std::to_string(r) + " has a negative entry");
        total += p;
      }
      if (std::abs(total - 1.0) > kNormalizationTolerance) {
        throw InvalidInput("kernel row " + std::to_string(r) + " sums to " + std::to_string(total));
      }
    }
  }

  Alphabet alphabet_;
  std::size_t depth_ = 0;
  Family family_;
  std::string label_;
};

// ---------------------------------------------------------------------------
// Builtin families

/// Two-state chain with f(1|0) = p01 and f(1|1) = p11.
inline KernelSpec two_state_markov(double p01, double p11, std::string label = "markov") {
  return KernelSpec::markov(Alphabet::binary(), 1, {{1.0 - p01, p01}, {1.0 - p11, p11}}, 1, std::move(label));
}

enum class PowerLawNormalization {
  infinite,   // M = sum over all k >= 1; coefficients beyond the depth are dropped
  truncated,  // M = sum over k <= depth; coefficients sum to exactly 1 - epsilon
};

/// Power-law coefficients a_{-k} = (1 - eps) / (M k^{1+eps}), k = 1..depth.
inline KernelSpec power_law_kernel(double epsilon, std::size_t depth,
                                   PowerLawNormalization norm = PowerLawNormalization::infinite,
                                   double intercept = 0.0) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw InvalidInput("epsilon must lie in (0, 1)");
  if (depth == 0) throw InvalidInput("power-law depth must be positive");
  const double s = 1.0 + epsilon;
  double partial = 0.0;
  for (std::size_t k = depth; k >= 1; --k) partial += std::pow(static_cast<double>(k), -s);
  const double zeta = std::riemann_zeta(s);
  const double m = norm == PowerLawNormalization::infinite ? zeta : partial;
  std::vector<double> a(depth);
  for (std::size_t k = 1; k <= depth; ++k) a[k - 1] = (1.0 - epsilon) / (m * std::pow(static_cast<double>(k), s));
  const double tail = norm == PowerLawNormalization::infinite ? (1.0 - epsilon) * (zeta - partial) / zeta : 0.0;
  return KernelSpec::linear(Alphabet::binary(), intercept, std::move(a), tail,
                            "power-law eps=" + std::to_string(epsilon) + " R=" + std::to_string(depth));
}

// ---------------------------------------------------------------------------
// Interval kernels

namespace detail {

// Depth-first walk over E^len for the sites l..l+len-1, visiting leaves in
// lexicographic order with the product weight of the singleton kernels.
template <class Leaf>
void walk_window(const KernelSpec& f, Site l, std::size_t len, std::vector<Symbol>& buf, std::size_t past_len,
                 std::size_t depth, double weight, bool skip_zero, Leaf& leaf) {
  if (depth == len) {
    leaf(static_cast<const std::vector<Symbol>&>(buf), weight);
    return;
  }
  const std::size_t n = f.alphabet().size();
  std::array<double, kMaxAlphabetSize> probs{};
  const std::size_t pos = past_len + depth;
  f.conditional(l + static_cast<Site>(depth), std::span<const Symbol>(buf.data(), pos),
                std::span<double>(probs.data(), n));
  for (std::size_t x = 0; x < n; ++x) {
    if (skip_zero && probs[x] == 0.0) continue;
    buf[pos] = static_cast<Symbol>(x);
    walk_window(f, l, len, buf, past_len, depth + 1, weight * probs[x], skip_zero, leaf);
  }
}

inline void check_past(const KernelSpec& f, const PastConfig& past, std::size_t needed) {
  if (past.size() < needed) {
    throw InvalidInput("past has " + std::to_string(past.size()) + " symbols, need at least " +
                       std::to_string(needed));
  }
  for (Symbol s : past.symbols) {
    if (s >= f.alphabet().size()) throw InvalidInput("past contains an unknown symbol");
  }
}

}  // namespace detail

/// Law of the symbol at site i given exactly the R preceding symbols.
inline FiniteDistribution eval_singleton(const KernelSpec& f, Site i, const PastConfig& past) {
  if (past.size() != f.memory_depth()) {
    throw InvalidInput("past has " + std::to_string(past.size()) + " symbols, kernel depth is " +
                       std::to_string(f.memory_depth()));
  }
  detail::check_past(f, past, f.memory_depth());
  std::vector<double> w(f.alphabet().size());
  f.conditional(i, past.symbols, w);
  return FiniteDistribution(std::move(w));
}

/// (f_window h)(past): expectation of h under the interval kernel, where the
/// past ends at window.lo - 1 and covers both the kernel depth and any
/// dependence of h left of the window.
inline double compose_window(const KernelSpec& f, const Window& window, const PastConfig& past, const Observable& h,
                             const EnumerationCap& cap = {}) {
  if (h.support().hi > window.hi) throw InvalidInput("observable depends on sites right of the window");
  const Site l = window.lo;
  const std::size_t needed =
      std::max<std::size_t>(f.memory_depth(), h.support().lo < l ? static_cast<std::size_t>(l - h.support().lo) : 0);
  detail::check_past(f, past, needed);
  cap.check(f.alphabet().size(), window.length());

  const std::size_t p = past.size();
  std::vector<Symbol> buf(p + window.length());
  std::copy(past.symbols.begin(), past.symbols.end(), buf.begin());
  const Site buf_lo = l - static_cast<Site>(p);
  double total = 0.0;
  auto leaf = [&](const std::vector<Symbol>& cfg, double w) { total += w * h.value_in(buf_lo, cfg); };
  detail::walk_window(f, l, window.length(), buf, p, 0, 1.0, true, leaf);
  return total;
}

/// Product-of-singletons law on E^window given the past, in enumerate_configs order.
inline FiniteDistribution marginal_distribution(const KernelSpec& f, const Window& window, const PastConfig& past,
                                                const EnumerationCap& cap = {}) {
  detail::check_past(f, past, f.memory_depth());
  cap.check(f.alphabet().size(), window.length());
  const std::size_t p = past.size();
  std::vector<Symbol> buf(p + window.length());
  std::copy(past.symbols.begin(), past.symbols.end(), buf.begin());
  std::vector<double> weights;
  weights.reserve(power_count(f.alphabet().size(), window.length()));
  auto leaf = [&](const std::vector<Symbol>&, double w) { weights.push_back(w); };
  detail::walk_window(f, window.lo, window.length(), buf, p, 0, 1.0, false, leaf);
  return FiniteDistribution(std::move(weights));
}

/// f_window h tabulated as an observable on [lo, window.lo - 1].
inline Observable average_observable(const KernelSpec& f, const Window& window, const Observable& h, Site lo,
                                     const EnumerationCap& cap = {}) {
  const Site l = window.lo;
  if (lo > l - static_cast<Site>(f.memory_depth()) || lo > l - 1) {
    throw InvalidInput("averaged observable window does not cover the kernel depth");
  }
  if (h.support().lo < lo) throw InvalidInput("averaged observable window does not cover the observable");
  const Window past_window{lo, l - 1};
  std::vector<double> table;
  for (const auto& cfg : enumerate_configs(past_window, f.alphabet(), cap)) {
    table.push_back(compose_window(f, window, PastConfig{cfg}, h, cap));
  }
  return Observable(f.alphabet(), past_window, std::move(table));
}

struct ResidualReport {
  std::size_t checks = 0;
  double max_residual = 0.0;
  double tolerance = 0.0;
  bool passed() const noexcept { return max_residual <= tolerance; }
};

namespace detail {

// Random observable on [l_outer - extra, top] plus a past long enough for it.
inline std::pair<Observable, PastConfig> random_instance(const KernelSpec& f, Site outer_lo, Site top, Rng& rng,
                                                         const EnumerationCap& cap) {
  const std::size_t r = f.memory_depth();
  std::size_t extra = uniform_index(rng, r + 1);
  const std::size_t span = static_cast<std::size_t>(top - outer_lo + 1);
  while (extra > 0 && !cap.allows(f.alphabet().size(), span + extra)) --extra;
  const Window support{outer_lo - static_cast<Site>(extra), top};
  Observable h = random_observable(f.alphabet(), support, rng, cap);
  PastConfig past = random_past(f.alphabet(), std::max(r, extra) + 1, rng);
  return {std::move(h), std::move(past)};
}

inline Site averaged_lo(const KernelSpec& f, const Window& inner, const Observable& h) {
  return std::min(h.support().lo, inner.lo - static_cast<Site>(std::max<std::size_t>(f.memory_depth(), 1)));
}

}  // namespace detail

/// Checks f_outer(f_inner h) = f_outer h on random pasts and observables
/// measurable on (-inf, inner.hi].
inline ResidualReport verify_consistency(const KernelSpec& f, const Window& outer, const Window& inner,
                                         std::size_t trials, double tol, std::uint64_t seed = 1,
                                         const EnumerationCap& cap = {}) {
  if (!outer.contains(inner)) throw InvalidInput("inner window must lie inside the outer window");
  ResidualReport rep;
  rep.tolerance = tol;
  for (std::size_t t = 0; t < trials; ++t) {
    Rng rng(trial_seed(seed, t));
    auto [h, past] = detail::random_instance(f, outer.lo, inner.hi, rng, cap);
    const Observable inner_avg = average_observable(f, inner, h, detail::averaged_lo(f, inner, h), cap);
    const double lhs = compose_window(f, outer, past, inner_avg, cap);
    const double rhs = compose_window(f, outer, past, h, cap);
    rep.max_residual = std::max(rep.max_residual, std::abs(lhs - rhs));
    ++rep.checks;
  }
  return rep;
}

/// Checks f_[l,m] h = f_[l,n](f_[n+1,m] h) for every split point n.
inline ResidualReport verify_factorization(const KernelSpec& f, const Window& window, std::size_t trials, double tol,
                                           std::uint64_t seed = 1, const EnumerationCap& cap = {}) {
  ResidualReport rep;
  rep.tolerance = tol;
  for (std::size_t t = 0; t < trials; ++t) {
    Rng rng(trial_seed(seed, t));
    auto [h, past] = detail::random_instance(f, window.lo, window.hi, rng, cap);
    const double whole = compose_window(f, window, past, h, cap);
    for (Site n = window.lo; n < window.hi; ++n) {
      const Window right{n + 1, window.hi};
      const Observable inner = average_observable(f, right, h, detail::averaged_lo(f, right, h), cap);
      const double split = compose_window(f, Window{window.lo, n}, past, inner, cap);
      rep.max_residual = std::max(rep.max_residual, std::abs(whole - split));
      ++rep.checks;
    }
  }
  return rep;
}

}  // namespace lis
