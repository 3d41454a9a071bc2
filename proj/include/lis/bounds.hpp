#pragma once

// Loss-of-memory, correlation and comparison bounds driven by a sensitivity
// matrix. Every bound here is a function of alpha and of the oscillation
// vector of the observable; none of them looks at the chain itself except
// comparison_bound, which needs the two singleton kernels for b_k.

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "lis/analysis.hpp"
#include "lis/core.hpp"
#include "lis/kernels.hpp"
#include "lis/transport.hpp"

namespace lis {

/// Raised when a bound's hypothesis (gamma < 1, Dobrushin) does not hold.
class CriterionNotMet : public std::domain_error {
 public:
  CriterionNotMet(const std::string& what, double value) : std::domain_error(what), value_(value) {}
  double value() const noexcept { return value_; }

 private:
  double value_;
};

/// Distance-like weight F(i,j) = lambda |i-j| or c log(1 + |i-j|).
struct DecaySpec {
  enum class Family { exponential, power_log };
  Family family = Family::exponential;
  double rate = 0.0;

  double weight(std::size_t lag) const {
    const double n = static_cast<double>(lag);
    return family == Family::exponential ? rate * n : rate * std::log1p(n);
  }
  double F(Site i, Site j) const { return weight(static_cast<std::size_t>(i > j ? i - j : j - i)); }

  /// Checks F(i,j) <= F(i,k) + F(k,j) on a grid of sites.
  bool triangle_holds(Site radius = 40) const {
    for (Site i = -radius; i <= radius; ++i)
      for (Site j = -radius; j <= radius; ++j)
        for (Site k = -radius; k <= radius; ++k)
          if (F(i, j) > F(i, k) + F(k, j) + 1e-12) return false;
    return true;
  }
};

inline const char* to_string(DecaySpec::Family f) {
  return f == DecaySpec::Family::exponential ? "exponential" : "power_log";
}

/// [P_L alpha / (1 - P_L alpha)] restricted to rows in L and columns
/// [L.lo - R, L.hi]; zero elsewhere.
struct NeumannSeries {
  Window rows;
  Site col_lo = 0;
  std::size_t cols = 0;
  std::vector<double> values;
  std::size_t terms = 0;
  double row_sum = 0.0;
  double tail_bound = 0.0;
  bool divergent = false;

  double at(Site k, Site j) const {
    if (!rows.contains(k) || j < col_lo || j >= col_lo + static_cast<Site>(cols)) return 0.0;
    return values[static_cast<std::size_t>(k - rows.lo) * cols + static_cast<std::size_t>(j - col_lo)];
  }
};

/// Sums (P_L alpha)^n for n >= 1 until the sup-norm of a term drops below
/// `tol` or the term vanishes. The band is strictly lower triangular, so the
/// series terminates after |L| terms; the geometric tail bound covers an
/// early stop. Row sums >= 1 set the divergence flag, since no geometric
/// certificate exists then.
inline NeumannSeries neumann_series(const SensitivityMatrix& alpha, const Window& window, double tol = 0.0) {
  NeumannSeries ns;
  const std::size_t r = alpha.depth();
  ns.rows = window;
  ns.col_lo = window.lo - static_cast<Site>(r);
  ns.cols = window.length() + r;
  const std::size_t nrows = window.length();
  ns.values.assign(nrows * ns.cols, 0.0);
  for (Site i = window.lo; i <= window.hi; ++i) ns.row_sum = std::max(ns.row_sum, alpha.row_sum(i));

  auto col_of = [&](Site j) { return static_cast<std::size_t>(j - ns.col_lo); };
  // first power: alpha restricted to rows in the window
  std::vector<double> term(nrows * ns.cols, 0.0);
  for (Site k = window.lo; k <= window.hi; ++k)
    for (std::size_t lag = 1; lag <= r; ++lag)
      term[static_cast<std::size_t>(k - window.lo) * ns.cols + col_of(k - static_cast<Site>(lag))] =
          alpha.entry(k, k - static_cast<Site>(lag));

  double partial_max = 0.0;
  while (true) {
    double sup = 0.0;
    for (std::size_t e = 0; e < term.size(); ++e) {
      ns.values[e] += term[e];
      sup = std::max(sup, term[e]);
      partial_max = std::max(partial_max, ns.values[e]);
    }
    ++ns.terms;
    if (sup == 0.0 || sup < tol || ns.terms >= nrows + 1) {
      if (sup != 0.0 && ns.terms < nrows + 1) {
        ns.tail_bound = ns.row_sum < 1.0 ? std::pow(ns.row_sum, static_cast<double>(ns.terms + 1)) / (1.0 - ns.row_sum)
                                         : std::numeric_limits<double>::infinity();
      }
      break;
    }
    // next power: term * (P_L alpha); intermediate sites must lie in the window
    std::vector<double> next(term.size(), 0.0);
    for (std::size_t k = 0; k < nrows; ++k) {
      for (Site i = window.lo; i <= window.hi; ++i) {
        const double t = term[k * ns.cols + col_of(i)];
        if (t == 0.0) continue;
        for (std::size_t lag = 1; lag <= r; ++lag) {
          const Site j = i - static_cast<Site>(lag);
          next[k * ns.cols + col_of(j)] += t * alpha.entry(i, j);
        }
      }
    }
    term.swap(next);
  }
  ns.divergent = ns.row_sum >= 1.0 || (tol > 0.0 && partial_max > 1.0 / tol);
  return ns;
}

/// Weights of all strictly descending paths, G = sum_{n>=1} alpha^n, which is
/// the Neumann series for windows [j+1, top] evaluated at column j.
class PathWeights {
 public:
  explicit PathWeights(const SensitivityMatrix& alpha) : alpha_(alpha) {}

  /// g[t] = G_{j+t, j} for t = 1..top-j, with g[0] = 1.
  std::vector<double> column(Site j, Site top) const {
    const std::size_t len = top >= j ? static_cast<std::size_t>(top - j) + 1 : 1;
    const std::size_t r = alpha_.depth();
    if (alpha_.is_stationary()) {
      renewal(len - 1);
      return std::vector<double>(renewal_.begin(), renewal_.begin() + static_cast<std::ptrdiff_t>(len));
    }
    std::vector<double> g(len, 0.0);
    g[0] = 1.0;
    for (std::size_t t = 1; t < len; ++t) {
      const Site i = j + static_cast<Site>(t);
      const auto& lags = alpha_.row_lags(i);
      double s = 0.0;
      for (std::size_t p = 1; p <= std::min(t, r); ++p) s += lags[p - 1] * g[t - p];
      g[t] = s;
    }
    return g;
  }

  double operator()(Site i, Site j) const {
    if (i <= j) return 0.0;
    if (alpha_.is_stationary()) return renewal(static_cast<std::size_t>(i - j));
    return column(j, i).back();
  }

  /// Accessor for G_{k+t, k}, t >= 0, with g[0] = 1; O(1) amortized when
  /// alpha is stationary.
  class Column {
   public:
    double operator[](std::size_t t) const { return owner_->alpha_.is_stationary() ? owner_->renewal(t) : g_[t]; }

   private:
    friend class PathWeights;
    const PathWeights* owner_ = nullptr;
    std::vector<double> g_;
  };

  Column column_view(Site j, Site top) const {
    Column c;
    c.owner_ = this;
    if (!alpha_.is_stationary()) c.g_ = column(j, top);
    return c;
  }

  /// Upper bound on every row sum of G, finite under Dobrushin.
  double row_sum_bound() const {
    const double s = alpha_.sup_row_sum();
    return s < 1.0 ? s / (1.0 - s) : std::numeric_limits<double>::infinity();
  }

 private:
  double renewal(std::size_t t) const {
    const auto& a = alpha_.lags();
    if (renewal_.empty()) renewal_.push_back(1.0);
    while (renewal_.size() <= t) {
      const std::size_t t = renewal_.size();
      double s = 0.0;
      for (std::size_t p = 1; p <= std::min(t, a.size()); ++p) s += a[p - 1] * renewal_[t - p];
      renewal_.push_back(s);
    }
    return renewal_[t];
  }

  const SensitivityMatrix& alpha_;
  mutable std::vector<double> renewal_;
};

namespace detail {

inline void require_support_within(const Observable& h, const Window& w, const char* what) {
  if (!w.contains(h.support())) throw InvalidInput(std::string(what) + " must be supported inside its window");
}

inline double require_dobrushin(const SensitivityMatrix& alpha) {
  const double s = alpha.sup_row_sum();
  if (!(s < 1.0)) throw CriterionNotMet("Dobrushin condition fails: row sum " + std::to_string(s), s);
  return s;
}

}  // namespace detail

/// sum_{k in L} delta_k(h) [sum_{l=1}^{|L|} (P_L alpha)^l]_{kj}, for h
/// supported in L and j < L.lo.
inline double memory_bound_general(const SensitivityMatrix& alpha, const Window& window, const Observable& h, Site j) {
  detail::require_support_within(h, window, "observable");
  if (j >= window.lo) throw InvalidInput("memory bound needs a site left of the window");
  const NeumannSeries ns = neumann_series(alpha, window);
  double bound = 0.0;
  for (Site k = window.lo; k <= window.hi; ++k) bound += h.oscillation(k) * ns.at(k, j);
  return bound;
}

/// Same bound for an observable that may also depend on sites left of the
/// window: adds the direct term delta_j(h).
inline double memory_bound_with_past(const SensitivityMatrix& alpha, const Window& window, const Observable& h, Site j) {
  if (h.support().hi > window.hi) throw InvalidInput("observable depends on sites right of the window");
  if (j >= window.lo) throw InvalidInput("memory bound needs a site left of the window");
  const NeumannSeries ns = neumann_series(alpha, window);
  double bound = h.oscillation(j);
  for (Site k = window.lo; k <= window.hi; ++k) bound += h.oscillation(k) * ns.at(k, j);
  return bound;
}

namespace detail {

inline double gamma_row(const std::vector<double>& lags, const DecaySpec& decay) {
  double g = 0.0;
  for (std::size_t n = 1; n <= lags.size(); ++n) g += lags[n - 1] * std::exp(decay.weight(n));
  return g;
}

inline double gamma_over(const SensitivityMatrix& alpha, const DecaySpec& decay, const Window& window) {
  double g = 0.0;
  for (Site i = window.lo; i <= window.hi; ++i) g = std::max(g, gamma_row(alpha.row_lags(i), decay));
  return g;
}

inline double gamma_sup(const SensitivityMatrix& alpha, const DecaySpec& decay) {
  double g = gamma_row(alpha.lags(), decay);
  for (const auto& [site, lags] : alpha.rows()) g = std::max(g, gamma_row(lags, decay));
  return g;
}

}  // namespace detail

struct ExponentialMemoryBound {
  double bound = 0.0;
  double gamma = 0.0;
};

/// (gamma_L / (1 - gamma_L)) sum_{k in L} delta_k(h) e^{-F(k,j)}.
inline ExponentialMemoryBound memory_bound_exponential(const SensitivityMatrix& alpha, const DecaySpec& decay,
                                                       const Window& window, const Observable& h, Site j) {
  detail::require_support_within(h, window, "observable");
  if (j >= window.lo) throw InvalidInput("memory bound needs a site left of the window");
  ExponentialMemoryBound out;
  out.gamma = detail::gamma_over(alpha, decay, window);
  if (!(out.gamma < 1.0)) throw CriterionNotMet("gamma = " + std::to_string(out.gamma) + " is not below 1", out.gamma);
  double s = 0.0;
  for (Site k = window.lo; k <= window.hi; ++k) s += h.oscillation(k) * std::exp(-decay.F(k, j));
  out.bound = out.gamma / (1.0 - out.gamma) * s;
  return out;
}

/// Largest rate on a 40-step bisection of [0, 50] keeping sup_i gamma_i <= 1 - 1e-6.
/// Largest rate with gamma at most `ceiling`.
inline DecaySpec fit_decay_rate(const SensitivityMatrix& alpha, DecaySpec::Family family,
                                double ceiling = 1.0 - 1e-6) {
  if (!(ceiling > 0.0 && ceiling < 1.0)) throw InvalidInput("decay ceiling must lie in (0, 1)");
  auto feasible = [&](double rate) { return detail::gamma_sup(alpha, DecaySpec{family, rate}) <= ceiling; };
  double lo = 0.0, hi = 50.0;
  if (feasible(hi)) return DecaySpec{family, hi};
  if (!feasible(lo)) {
    const double s = alpha.sup_row_sum();
    throw CriterionNotMet("no decay rate keeps gamma below 1: row sum " + std::to_string(s), s);
  }
  for (int step = 0; step < 40; ++step) {
    const double mid = 0.5 * (lo + hi);
    (feasible(mid) ? lo : hi) = mid;
  }
  return DecaySpec{family, lo};
}

struct DecayEntry {
  Site k = 0;
  Site j = 0;
  double neumann = 0.0;
  double bound = 0.0;
};

struct SeriesDecayCheck {
  double gamma = 0.0;
  std::vector<DecayEntry> entries;
  bool holds = true;
};

/// Every nonzero entry of P_L alpha / (1 - P_L alpha) against
/// (gamma_L / (1 - gamma_L)) e^{-F(k,j)}.
inline SeriesDecayCheck series_decay_bound(const SensitivityMatrix& alpha, const DecaySpec& decay,
                                           const Window& window) {
  SeriesDecayCheck out;
  out.gamma = detail::gamma_over(alpha, decay, window);
  if (!(out.gamma < 1.0)) throw CriterionNotMet("gamma = " + std::to_string(out.gamma) + " is not below 1", out.gamma);
  const NeumannSeries ns = neumann_series(alpha, window);
  const double factor = out.gamma / (1.0 - out.gamma);
  for (Site k = window.lo; k <= window.hi; ++k) {
    for (Site j = ns.col_lo; j < k; ++j) {
      DecayEntry e{k, j, ns.at(k, j), factor * std::exp(-decay.F(k, j))};
      if (e.neumann > e.bound * (1.0 + 1e-12) + 1e-300) out.holds = false;
      out.entries.push_back(e);
    }
  }
  return out;
}

struct TruncatedSum {
  double value = 0.0;             // partial + tail_certificate
  double partial = 0.0;
  double tail_certificate = 0.0;  // rigorous bound on the omitted terms
  std::size_t terms = 0;
};

struct SeriesOptions {
  double term_tolerance = 1e-12;
  std::size_t max_terms = 200000;
};

namespace detail {

// Running sums of G_{l,k} over the processed columns k, per row l; the
// difference to the row-sum bound certifies the unprocessed tail.
class RowTails {
 public:
  RowTails(const Window& rows, double row_bound) : rows_(rows), done_(rows.length(), 0.0), bound_(row_bound) {}
  void add(Site l, double g) { done_[static_cast<std::size_t>(l - rows_.lo)] += g; }
  double tail(Site l) const { return std::max(0.0, bound_ - done_[static_cast<std::size_t>(l - rows_.lo)]); }

 private:
  Window rows_;
  std::vector<double> done_;
  double bound_;
};

}  // namespace detail

/// Covariance bound for h1 on L and h2 on D with D.hi < L.lo:
///   (Dm^2/4) sum_{l in D, m in L} delta_m(h1) delta_l(h2) A_ml,
///   A_ml = G_ml + sum_{k < l} G_mk G_lk,
/// where G collects all descending paths between the two sites. The k-sum
/// runs into the infinite past and is truncated with a tail certificate.
inline TruncatedSum correlation_bound(const SensitivityMatrix& alpha, const Window& future, const Window& past,
                                      const Observable& h1, const Observable& h2, double diameter,
                                      const SeriesOptions& opts = {}) {
  if (!(past.hi < future.lo)) throw InvalidInput("correlation bound needs the past window strictly before the future one");
  detail::require_support_within(h1, future, "future observable");
  detail::require_support_within(h2, past, "past observable");
  detail::require_dobrushin(alpha);
  const PathWeights paths(alpha);
  const double row_bound = paths.row_sum_bound();
  const double scale = diameter * diameter / 4.0;

  double osc1 = 0.0, osc2 = 0.0;
  for (Site m = future.lo; m <= future.hi; ++m) osc1 += h1.oscillation(m);
  for (Site l = past.lo; l <= past.hi; ++l) osc2 += h2.oscillation(l);

  TruncatedSum out;
  double direct = 0.0;
  for (Site l = past.lo; l <= past.hi; ++l) {
    if (h2.oscillation(l) == 0.0) continue;
    const auto g = paths.column_view(l, future.hi);
    for (Site m = future.lo; m <= future.hi; ++m) direct += h1.oscillation(m) * h2.oscillation(l) * g[static_cast<std::size_t>(m - l)];
  }

  detail::RowTails tails(past, row_bound);
  double series = 0.0;
  for (Site k = past.hi - 1;; --k) {
    const auto g = paths.column_view(k, future.hi);
    double a = 0.0, b = 0.0;
    for (Site m = future.lo; m <= future.hi; ++m) a += h1.oscillation(m) * g[static_cast<std::size_t>(m - k)];
    for (Site l = std::max(past.lo, k + 1); l <= past.hi; ++l) {
      const double glk = g[static_cast<std::size_t>(l - k)];
      b += h2.oscillation(l) * glk;
      tails.add(l, glk);
    }
    const double term = a * b;
    series += term;
    ++out.terms;
    double tail = 0.0;
    for (Site l = past.lo; l <= past.hi; ++l) tail += h2.oscillation(l) * tails.tail(l);
    const double certificate = osc1 * row_bound * tail;
    if ((term < opts.term_tolerance && certificate < opts.term_tolerance && k < past.lo) || out.terms >= opts.max_terms) {
      out.tail_certificate = scale * certificate;
      break;
    }
  }
  (void)osc2;
  out.partial = scale * (direct + series);
  out.value = out.partial + out.tail_certificate;
  return out;
}

/// Covariance bound with the past-side factor supplied per site:
///   (Dm^2/4) sum_{k <= D.hi} [sum_{m in L} delta_m(h1) G_mk] * E_k,
/// where `past_factor(k)` returns delta_k(f_[k+1, D.hi] h2) when it can be
/// computed exactly (nullopt otherwise, in which case the propagated bound
/// delta_k(h2) + sum_l delta_l(h2) G_lk is used).
template <class PastFactor>
TruncatedSum correlation_bound_with_past_factor(const SensitivityMatrix& alpha, const Window& future, Site past_hi,
                                                const Observable& h1, const Observable& h2, double diameter,
                                                PastFactor&& past_factor, const SeriesOptions& opts = {}) {
  if (!(past_hi < future.lo)) throw InvalidInput("correlation bound needs the past window strictly before the future one");
  detail::require_support_within(h1, future, "future observable");
  if (h2.support().hi > past_hi) throw InvalidInput("past observable extends beyond the past window");
  detail::require_dobrushin(alpha);
  const PathWeights paths(alpha);
  const double row_bound = paths.row_sum_bound();
  const double scale = diameter * diameter / 4.0;
  const Window h1_rows = future;
  detail::RowTails tails(h1_rows, row_bound);
  // columns between the two windows never enter the series
  for (Site m = future.lo; m <= future.hi; ++m)
    for (Site k = past_hi + 1; k < m; ++k) tails.add(m, paths(m, k));
  double osc2 = 0.0;
  for (Site l = h2.support().lo; l <= h2.support().hi; ++l) osc2 += h2.oscillation(l);

  TruncatedSum out;
  double series = 0.0;
  for (Site k = past_hi;; --k) {
    const auto g = paths.column_view(k, future.hi);
    double a = 0.0;
    for (Site m = future.lo; m <= future.hi; ++m) {
      const double gmk = g[static_cast<std::size_t>(m - k)];
      a += h1.oscillation(m) * gmk;
      tails.add(m, gmk);
    }
    double e = 0.0;
    if (std::optional<double> exact = past_factor(k)) {
      e = *exact;
    } else {
      e = h2.oscillation(k);
      for (Site l = std::max(h2.support().lo, k + 1); l <= h2.support().hi; ++l)
        e += h2.oscillation(l) * g[static_cast<std::size_t>(l - k)];
    }
    const double term = a * e;
    series += term;
    ++out.terms;
    double tail = 0.0;
    for (Site m = future.lo; m <= future.hi; ++m) tail += h1.oscillation(m) * tails.tail(m);
    const double certificate = tail * osc2 * std::max(1.0, row_bound);
    if ((term < opts.term_tolerance && certificate < opts.term_tolerance && k < h2.support().lo) ||
        out.terms >= opts.max_terms) {
      out.tail_certificate = scale * certificate;
      break;
    }
  }
  out.partial = scale * series;
  out.value = out.partial + out.tail_certificate;
  return out;
}

struct ComparisonBound {
  TruncatedSum sum;
  double b_max = 0.0;  // largest sup_omega transport distance between the two singleton laws
};

namespace detail {

// sup over pasts of the transport distance between f_k and g_k at site k.
inline double singleton_gap(const KernelSpec& f, const KernelSpec& g, Site k, const EnumerationCap& cap) {
  const KernelSpec& fk = f.at_site(k);
  const KernelSpec& gk = g.at_site(k);
  const std::size_t r = std::max(fk.memory_depth(), gk.memory_depth());
  const Alphabet& alphabet = f.alphabet();
  const std::size_t n = alphabet.size();
  cap.check(n, r);
  std::vector<Symbol> past(r);
  std::vector<double> p(n), q(n);
  double best = 0.0;
  for (std::size_t idx = 0; idx < power_count(n, r); ++idx) {
    detail::index_to_config(idx, n, past);
    fk.conditional(k, past, p);
    gk.conditional(k, past, q);
    best = std::max(best, vkr_distance(FiniteDistribution(p), FiniteDistribution(q), alphabet));
  }
  return best;
}

}  // namespace detail

/// Bound on |mu(h) - mu~(h)| for the unique chain mu of f and any chain of
/// f~, with b_k replaced by its supremum over pasts and the oscillation of
/// f_[k+1, L.hi] h bounded by propagation through G.
inline ComparisonBound comparison_bound(const KernelSpec& f, const KernelSpec& other, const Window& window,
                                        const Observable& h, const SeriesOptions& opts = {},
                                        const EnumerationCap& cap = {}) {
  if (!(f.alphabet() == other.alphabet())) throw InvalidInput("compared kernels must share the alphabet");
  detail::require_support_within(h, window, "observable");
  const SensitivityMatrix alpha = build_sensitivity_matrix(f, cap);
  detail::require_dobrushin(alpha);
  const PathWeights paths(alpha);
  const double row_bound = paths.row_sum_bound();

  // b_k is constant away from the site overrides of either kernel
  std::optional<Window> special = f.override_span();
  if (auto o = other.override_span()) {
    special = special ? Window{std::min(special->lo, o->lo), std::max(special->hi, o->hi)} : *o;
  }
  const double b_far = detail::singleton_gap(f, other, special ? special->lo - 1 : window.lo, cap);
  auto b_at = [&](Site k) {
    if (special && special->contains(k)) return detail::singleton_gap(f, other, k, cap);
    return b_far;
  };
  ComparisonBound out;
  out.b_max = b_far;
  if (special)
    for (Site k = special->lo; k <= special->hi; ++k) out.b_max = std::max(out.b_max, b_at(k));

  double osc = 0.0;
  for (Site m = window.lo; m <= window.hi; ++m) osc += h.oscillation(m);
  detail::RowTails tails(window, row_bound);
  TruncatedSum& s = out.sum;
  for (Site k = window.hi;; --k) {
    const auto g = paths.column_view(k, window.hi);
    double factor = h.oscillation(k);
    for (Site m = std::max(window.lo, k + 1); m <= window.hi; ++m) {
      const double gmk = g[static_cast<std::size_t>(m - k)];
      factor += h.oscillation(m) * gmk;
      tails.add(m, gmk);
    }
    const double term = b_at(k) * factor;
    s.partial += term;
    ++s.terms;
    double tail = 0.0;
    for (Site m = window.lo; m <= window.hi; ++m) tail += h.oscillation(m) * tails.tail(m);
    const double certificate = out.b_max * tail;
    const bool past_specials = !special || k < special->lo;
    if ((k < window.lo && past_specials && term < opts.term_tolerance && certificate < opts.term_tolerance) ||
        s.terms >= opts.max_terms) {
      s.tail_certificate = certificate;
      break;
    }
  }
  (void)osc;
  s.value = s.partial + s.tail_certificate;
  return out;
}

}  // namespace lis
