#pragma once

// Variations, sensitivity estimators and the two uniqueness criteria
// (one-sided Dobrushin and one-sided boundary uniformity).

#include <array>
#include <cmath>
#include <map>
#include <numeric>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "lis/core.hpp"
#include "lis/kernels.hpp"
#include "lis/transport.hpp"

namespace lis {

enum class Provenance { vkr_estimator, user_supplied };

/// Nonnegative, strictly lower-triangular matrix alpha_ij (j < i, i - j <= R).
/// Stationary form stores alpha(n) = alpha_{i,i-n}; the banded form adds
/// explicit rows for a finite set of sites on top of a stationary fallback.
class SensitivityMatrix {
 public:
  static SensitivityMatrix stationary(std::vector<double> lags, Provenance provenance = Provenance::user_supplied) {
    check(lags);
    SensitivityMatrix s;
    s.fallback_ = std::move(lags);
    s.provenance_ = provenance;
    return s;
  }

  static SensitivityMatrix banded(std::vector<double> fallback, std::map<Site, std::vector<double>> rows,
                                  Provenance provenance = Provenance::user_supplied) {
    check(fallback);
    std::size_t depth = fallback.size();
    for (const auto& [site, lags] : rows) {
      check(lags);
      depth = std::max(depth, lags.size());
    }
    fallback.resize(depth, 0.0);
    for (auto& [site, lags] : rows) lags.resize(depth, 0.0);
    SensitivityMatrix s;
    s.fallback_ = std::move(fallback);
    s.rows_ = std::move(rows);
    s.provenance_ = provenance;
    return s;
  }

  static SensitivityMatrix zero(std::size_t depth) { return stationary(std::vector<double>(depth, 0.0)); }

  std::size_t depth() const noexcept { return fallback_.size(); }
  bool is_stationary() const noexcept { return rows_.empty(); }
  Provenance provenance() const noexcept { return provenance_; }
  const std::vector<double>& lags() const noexcept { return fallback_; }
  const std::map<Site, std::vector<double>>& rows() const noexcept { return rows_; }

  /// alpha(n) for row i, n = 1..depth at index n - 1.
  const std::vector<double>& row_lags(Site i) const {
    auto it = rows_.find(i);
    return it == rows_.end() ? fallback_ : it->second;
  }

  double entry(Site i, Site j) const {
    if (j >= i) return 0.0;
    const auto lag = static_cast<std::size_t>(i - j);
    const auto& r = row_lags(i);
    return lag <= r.size() ? r[lag - 1] : 0.0;
  }

  double row_sum(Site i) const {
    const auto& r = row_lags(i);
    return std::accumulate(r.begin(), r.end(), 0.0);
  }

  /// sup_i sum_{j<i} alpha_ij over every distinct row.
  double sup_row_sum() const {
    double s = std::accumulate(fallback_.begin(), fallback_.end(), 0.0);
    for (const auto& [site, lags] : rows_) s = std::max(s, std::accumulate(lags.begin(), lags.end(), 0.0));
    return s;
  }

  /// Copy with alpha_{i,i-lag} replaced (promotes to banded form for one row).
  SensitivityMatrix with_entry(Site i, std::size_t lag, double value) const {
    if (lag == 0 || lag > depth()) throw InvalidInput("lag outside the band");
    auto rows = rows_;
    auto [it, inserted] = rows.emplace(i, fallback_);
    it->second[lag - 1] = value;
    return banded(fallback_, std::move(rows), provenance_);
  }

 private:
  static void check(const std::vector<double>& lags) {
    for (double a : lags) {
      if (!(a >= 0.0) || !std::isfinite(a)) throw InvalidInput("sensitivity entries must be finite and non-negative");
    }
  }

  std::vector<double> fallback_;
  std::map<Site, std::vector<double>> rows_;
  Provenance provenance_ = Provenance::user_supplied;
};

struct CriterionVerdict {
  std::string criterion;
  bool satisfied = false;
  std::vector<std::pair<std::string, double>> scalars;
  double truncation_tail = 0.0;
  std::size_t depth = 0;
  std::vector<std::string> notes;

  double scalar(const std::string& name) const {
    for (const auto& [k, v] : scalars)
      if (k == name) return v;
    throw std::out_of_range("verdict has no scalar '" + name + "'");
  }
};

namespace detail {

// Conditional laws of a non-site-indexed kernel for every past in E^R,
// indexed lexicographically (oldest symbol most significant).
inline std::vector<std::array<double, kMaxAlphabetSize>> all_conditionals(const KernelSpec& k, Site i,
                                                                         const EnumerationCap& cap) {
  const std::size_t n = k.alphabet().size();
  const std::size_t r = k.memory_depth();
  cap.check(n, r);
  std::vector<std::array<double, kMaxAlphabetSize>> out(power_count(n, r));
  std::vector<Symbol> past(r);
  for (std::size_t idx = 0; idx < out.size(); ++idx) {
    detail::index_to_config(idx, n, past);
    k.conditional(i, past, std::span<double>(out[idx].data(), n));
  }
  return out;
}

inline const LinearLongMemory* as_linear(const KernelSpec& k) { return std::get_if<LinearLongMemory>(&k.family()); }

// inf over pasts and symbols of the conditional probability.
inline double min_probability(const KernelSpec& k, Site i, const EnumerationCap& cap) {
  if (const auto* lin = as_linear(k)) {
    const double sum = std::accumulate(lin->coefficients.begin(), lin->coefficients.end(), 0.0);
    return std::min(lin->intercept, 1.0 - lin->intercept - sum);
  }
  double m = 1.0;
  for (const auto& row : all_conditionals(k, i, cap))
    for (std::size_t x = 0; x < k.alphabet().size(); ++x) m = std::min(m, row[x]);
  return m;
}

}  // namespace detail

/// var_j(f_i): worst change of f_i(xi_i | .) over pasts agreeing on [j, i-1],
/// for j <= i. Lags at or beyond the depth give 0.
inline double variation(const KernelSpec& f, Site i, Site j, const EnumerationCap& cap = {}) {
  if (j > i) throw InvalidInput("variation needs j <= i");
  const KernelSpec& k = f.at_site(i);
  const auto lag = static_cast<std::size_t>(i - j);
  const std::size_t r = k.memory_depth();
  if (lag >= r) return 0.0;
  if (const auto* lin = detail::as_linear(k)) {
    // affine in the past with nonnegative weights: free lags contribute fully
    double s = 0.0;
    for (std::size_t l = lag + 1; l <= r; ++l) s += lin->coefficients[l - 1];
    return s;
  }
  const std::size_t n = k.alphabet().size();
  const auto conds = detail::all_conditionals(k, i, cap);
  // pasts agree on the `lag` most recent symbols, i.e. on idx mod n^lag
  const std::size_t classes = power_count(n, lag);
  std::vector<double> hi(classes * n, -1.0), lo(classes * n, 2.0);
  for (std::size_t idx = 0; idx < conds.size(); ++idx) {
    const std::size_t key = idx % classes;
    for (std::size_t x = 0; x < n; ++x) {
      hi[key * n + x] = std::max(hi[key * n + x], conds[idx][x]);
      lo[key * n + x] = std::min(lo[key * n + x], conds[idx][x]);
    }
  }
  double best = 0.0;
  for (std::size_t c = 0; c < classes * n; ++c) best = std::max(best, hi[c] - lo[c]);
  return best;
}

/// VKR d-estimator C_ij: max over pasts equal off j of the transport distance
/// between the two conditional laws, divided by d(xi_j, eta_j).
inline double sensitivity_estimator(const KernelSpec& f, Site i, Site j, const EnumerationCap& cap = {}) {
  if (j >= i) throw InvalidInput("sensitivity estimator needs j < i");
  const KernelSpec& k = f.at_site(i);
  const auto lag = static_cast<std::size_t>(i - j);
  const std::size_t r = k.memory_depth();
  if (lag > r) return 0.0;
  if (const auto* lin = detail::as_linear(k)) {
    // binary alphabet: transport cost is d(0,1)|dp|, and dp = a_lag exactly
    return lin->coefficients[lag - 1];
  }
  const Alphabet& alphabet = k.alphabet();
  const std::size_t n = alphabet.size();
  const auto conds = detail::all_conditionals(k, i, cap);
  const std::size_t stride = power_count(n, lag - 1);
  double best = 0.0;
  for (std::size_t idx = 0; idx < conds.size(); ++idx) {
    const auto a = static_cast<Symbol>((idx / stride) % n);
    const FiniteDistribution p(std::vector<double>(conds[idx].begin(), conds[idx].begin() + n));
    for (auto b = static_cast<Symbol>(a + 1); b < n; ++b) {
      const std::size_t other = idx + (b - a) * stride;
      const FiniteDistribution q(std::vector<double>(conds[other].begin(), conds[other].begin() + n));
      best = std::max(best, vkr_distance(p, q, alphabet) / alphabet.distance(a, b));
    }
  }
  return best;
}

/// Sensitivity matrix from the VKR estimators of every singleton kernel.
inline SensitivityMatrix build_sensitivity_matrix(const KernelSpec& f, const EnumerationCap& cap = {}) {
  const std::size_t r = f.memory_depth();
  auto lags_at = [&](const KernelSpec& k, Site i) {
    std::vector<double> lags(r, 0.0);
    for (std::size_t n = 1; n <= k.memory_depth(); ++n) lags[n - 1] = sensitivity_estimator(k, i, i - static_cast<Site>(n), cap);
    return lags;
  };
  if (f.stationary()) return SensitivityMatrix::stationary(lags_at(f, 0), Provenance::vkr_estimator);
  const auto& si = std::get<SiteIndexed>(f.family());
  std::map<Site, std::vector<double>> rows;
  for (const auto& [site, k] : si.overrides) rows.emplace(site, lags_at(*k, site));
  return SensitivityMatrix::banded(lags_at(*si.fallback, 0), std::move(rows), Provenance::vkr_estimator);
}

/// sup_i sum_{j<i} alpha_ij < 1 (strict).
inline CriterionVerdict dobrushin_check(const SensitivityMatrix& alpha, double truncation_tail = 0.0) {
  CriterionVerdict v;
  v.criterion = "dobrushin";
  const double sum = alpha.sup_row_sum();
  v.satisfied = sum < 1.0;
  v.scalars = {{"row_sum_sup", sum}, {"margin", 1.0 - sum}};
  v.truncation_tail = truncation_tail;
  v.depth = alpha.depth();
  if (truncation_tail > 0.0) {
    v.notes.push_back("coefficient mass beyond the memory depth is not represented in the row sum");
  }
  return v;
}

/// Uniform non-nullness m(f) plus summed variations V(f) over a horizon of N
/// sites; reports c = exp(-V/m) as the boundary-uniformity constant.
inline CriterionVerdict boundary_uniformity_check(const KernelSpec& f, std::size_t horizon,
                                                  const EnumerationCap& cap = {}) {
  const std::size_t r = f.memory_depth();
  if (horizon < r) throw InvalidInput("horizon must be at least the memory depth");
  auto summed_variation = [&](Site n) {
    double s = 0.0;
    for (Site i = n; i <= n + static_cast<Site>(horizon); ++i) s += variation(f, i, n, cap);
    return s;
  };
  double m = 0.0, v = 0.0;
  if (f.stationary()) {
    m = detail::min_probability(f, 0, cap);
    v = summed_variation(0);
  } else {
    const auto& si = std::get<SiteIndexed>(f.family());
    const Window span = *f.override_span();
    m = detail::min_probability(*si.fallback, 0, cap);
    for (const auto& [site, k] : si.overrides) m = std::min(m, detail::min_probability(*k, site, cap));
    // rows far from the overrides behave like the fallback
    const Site far = span.lo - static_cast<Site>(horizon + r) - 2;
    v = summed_variation(far);
    for (Site n = far + 1; n <= span.hi + 1; ++n) v = std::max(v, summed_variation(n));
  }
  CriterionVerdict verdict;
  verdict.criterion = "boundary_uniformity";
  verdict.satisfied = m > 0.0 && std::isfinite(v);
  const double c = m > 0.0 ? std::exp(-v / m) : 0.0;
  verdict.scalars = {{"m", m}, {"V", v}, {"c", c}, {"horizon", static_cast<double>(horizon)}};
  verdict.truncation_tail = f.truncation_tail();
  verdict.depth = r;
  if (m <= 0.0) verdict.notes.push_back("kernel is not uniformly non-null");
  return verdict;
}

/// Dobrushin ergodic coefficient 1 - min over pasts of the overlap of the two
/// conditional laws. Stationary kernels of depth at most one only.
inline double ergodic_coefficient(const KernelSpec& f) {
  if (!f.stationary() || f.memory_depth() > 1) {
    throw InvalidInput("ergodic coefficient needs a stationary kernel of range at most 1");
  }
  const std::size_t n = f.alphabet().size();
  const auto conds = detail::all_conditionals(f, 0, EnumerationCap{});
  double min_overlap = 1.0;
  for (const auto& p : conds)
    for (const auto& q : conds) {
      double overlap = 0.0;
      for (std::size_t x = 0; x < n; ++x) overlap += std::min(p[x], q[x]);
      min_overlap = std::min(min_overlap, overlap);
    }
  return 1.0 - min_overlap;
}

}  // namespace lis
