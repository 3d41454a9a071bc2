#pragma once

// Shared vocabulary: alphabets with a bounded metric, site windows,
// configurations, finite distributions and local observables.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace lis {

using Site = std::int64_t;
using Symbol = std::uint8_t;

inline constexpr double kTolerance = 1e-9;
inline constexpr double kNormalizationTolerance = 1e-12;
inline constexpr std::size_t kMaxAlphabetSize = 16;
inline constexpr std::size_t kDefaultConfigurationCap = 4096;  // 12 binary sites

class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class CapExceeded : public std::runtime_error {
 public:
  CapExceeded(std::size_t sites, std::size_t symbols, std::size_t cap)
      : std::runtime_error("enumeration of " + std::to_string(sites) + " sites over " +
                           std::to_string(symbols) + " symbols exceeds the cap of " +
                           std::to_string(cap) + " configurations"),
        sites_(sites) {}
  std::size_t sites() const noexcept { return sites_; }

 private:
  std::size_t sites_;
};

// |E|^n, saturating at SIZE_MAX.
inline std::size_t power_count(std::size_t base, std::size_t exponent) {
  std::size_t r = 1;
  for (std::size_t i = 0; i < exponent; ++i) {
    if (base != 0 && r > std::numeric_limits<std::size_t>::max() / base) {
      return std::numeric_limits<std::size_t>::max();
    }
    r *= base;
  }
  return r;
}

struct EnumerationCap {
  std::size_t max_configurations = kDefaultConfigurationCap;

  void check(std::size_t symbols, std::size_t sites) const {
    if (power_count(symbols, sites) > max_configurations) {
      throw CapExceeded(sites, symbols, max_configurations);
    }
  }
  bool allows(std::size_t symbols, std::size_t sites) const {
    return power_count(symbols, sites) <= max_configurations;
  }
};

/// Finite symbol set with a bounded metric. Symbols are addressed by their
/// index in the label list; the metric is stored row-major.
class Alphabet {
 public:
  static Alphabet discrete(std::vector<std::string> labels) {
    const std::size_t n = labels.size();
    std::vector<std::vector<double>> rows(n, std::vector<double>(n, 1.0));
    for (std::size_t i = 0; i < n; ++i) rows[i][i] = 0.0;
    return with_metric(std::move(labels), rows);
  }

  static Alphabet binary() { return discrete({"0", "1"}); }

  static Alphabet with_metric(std::vector<std::string> labels,
                              const std::vector<std::vector<double>>& metric) {
    const std::size_t n = labels.size();
    if (n < 2 || n > kMaxAlphabetSize) {
      throw InvalidInput("alphabet must have between 2 and 16 symbols, got " + std::to_string(n));
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        if (labels[i] == labels[j]) throw InvalidInput("duplicate symbol label '" + labels[i] + "'");
      }
    }
    validate_metric(metric, n);
    Alphabet a;
    a.labels_ = std::move(labels);
    a.metric_.reserve(n * n);
    for (const auto& row : metric) a.metric_.insert(a.metric_.end(), row.begin(), row.end());
    a.diameter_ = *std::max_element(a.metric_.begin(), a.metric_.end());
    a.min_distance_ = std::numeric_limits<double>::infinity();
    a.discrete_ = true;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (i == j) continue;
        a.min_distance_ = std::min(a.min_distance_, a.metric_[i * n + j]);
        if (a.metric_[i * n + j] != 1.0) a.discrete_ = false;
      }
    }
    return a;
  }

  /// Throws InvalidInput describing the first violated metric axiom.
  static void validate_metric(const std::vector<std::vector<double>>& d, std::size_t n) {
    if (d.size() != n) throw InvalidInput("metric must have one row per symbol");
    for (std::size_t i = 0; i < n; ++i) {
      if (d[i].size() != n) throw InvalidInput("metric row " + std::to_string(i) + " has wrong length");
      for (std::size_t j = 0; j < n; ++j) {
        const double v = d[i][j];
        if (!std::isfinite(v) || v < 0.0) throw InvalidInput("metric entries must be finite and non-negative");
        if (i == j && v != 0.0) throw InvalidInput("metric must vanish on the diagonal");
        if (i != j && v <= 0.0) throw InvalidInput("metric must be positive off the diagonal");
        if (std::abs(v - d[j][i]) > kNormalizationTolerance) throw InvalidInput("metric must be symmetric");
      }
    }
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = 0; b < n; ++b)
        for (std::size_t c = 0; c < n; ++c)
          if (d[a][c] > d[a][b] + d[b][c] + kNormalizationTolerance) {
            throw InvalidInput("metric violates the triangle inequality at (" + std::to_string(a) + "," +
                               std::to_string(b) + "," + std::to_string(c) + ")");
          }
  }

  std::size_t size() const noexcept { return labels_.size(); }
  const std::string& label(Symbol s) const { return labels_.at(s); }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  double distance(Symbol a, Symbol b) const noexcept { return metric_[a * size() + b]; }
  double diameter() const noexcept { return diameter_; }
  double min_distance() const noexcept { return min_distance_; }
  bool is_discrete() const noexcept { return discrete_; }

  std::vector<std::vector<double>> metric_rows() const {
    std::vector<std::vector<double>> rows(size());
    for (std::size_t i = 0; i < size(); ++i)
      rows[i].assign(metric_.begin() + static_cast<std::ptrdiff_t>(i * size()),
                     metric_.begin() + static_cast<std::ptrdiff_t>((i + 1) * size()));
    return rows;
  }

  std::optional<Symbol> index_of(const std::string& label) const {
    auto it = std::find(labels_.begin(), labels_.end(), label);
    if (it == labels_.end()) return std::nullopt;
    return static_cast<Symbol>(it - labels_.begin());
  }

  /// Parses a string of single-character labels ("0110") into symbols.
  std::vector<Symbol> parse_word(const std::string& word) const {
    std::vector<Symbol> out;
    out.reserve(word.size());
    for (char c : word) {
      auto s = index_of(std::string(1, c));
      if (!s) throw InvalidInput(std::string("unknown symbol '") + c + "'");
      out.push_back(*s);
    }
    return out;
  }

  bool operator==(const Alphabet& o) const { return labels_ == o.labels_ && metric_ == o.metric_; }

 private:
  Alphabet() = default;
  std::vector<std::string> labels_;
  std::vector<double> metric_;
  double diameter_ = 0.0;
  double min_distance_ = 0.0;
  bool discrete_ = true;
};

/// Finite interval of sites [lo, hi].
struct Window {
  Site lo = 0;
  Site hi = 0;

  static Window of(Site lo, Site hi) {
    if (lo > hi) throw InvalidInput("window lower end exceeds upper end");
    return Window{lo, hi};
  }
  static Window single(Site s) { return Window{s, s}; }

  std::size_t length() const noexcept { return static_cast<std::size_t>(hi - lo + 1); }
  bool contains(Site s) const noexcept { return lo <= s && s <= hi; }
  bool contains(const Window& w) const noexcept { return lo <= w.lo && w.hi <= hi; }
  bool operator==(const Window&) const = default;
};

/// Mixed-radix counter over E^n in lexicographic order (first digit most significant).
class Odometer {
 public:
  Odometer(std::size_t length, std::size_t base) : digits_(length, 0), base_(base) {}

  const std::vector<Symbol>& digits() const noexcept { return digits_; }
  bool done() const noexcept { return done_; }

  void advance() {
    for (std::size_t i = digits_.size(); i-- > 0;) {
      if (++digits_[i] < base_) return;
      digits_[i] = 0;
    }
    done_ = true;
  }

 private:
  std::vector<Symbol> digits_;
  std::size_t base_;
  bool done_ = false;
};

/// Input range over every configuration of a window.
class ConfigurationRange {
 public:
  class iterator {
   public:
    using value_type = std::vector<Symbol>;
    using difference_type = std::ptrdiff_t;
    iterator() = default;
    explicit iterator(Odometer* o) : odo_(o) {}
    const std::vector<Symbol>& operator*() const { return odo_->digits(); }
    iterator& operator++() {
      odo_->advance();
      return *this;
    }
    void operator++(int) { ++*this; }
    bool operator==(std::default_sentinel_t) const { return odo_ == nullptr || odo_->done(); }

   private:
    Odometer* odo_ = nullptr;
  };

  ConfigurationRange(std::size_t length, std::size_t base) : odo_(length, base) {}
  iterator begin() { return iterator(&odo_); }
  std::default_sentinel_t end() const { return {}; }

 private:
  Odometer odo_;
};

/// Every configuration of E^window exactly once, lexicographically.
inline ConfigurationRange enumerate_configs(const Window& window, const Alphabet& alphabet,
                                            const EnumerationCap& cap = {}) {
  cap.check(alphabet.size(), window.length());
  return ConfigurationRange(window.length(), alphabet.size());
}

/// Symbols on consecutive sites starting at `lo`.
struct Configuration {
  Site lo = 0;
  std::vector<Symbol> symbols;

  Site hi() const noexcept { return lo + static_cast<Site>(symbols.size()) - 1; }
  Symbol at(Site s) const { return symbols.at(static_cast<std::size_t>(s - lo)); }
};

/// The symbols immediately preceding a window, oldest first. The last symbol
/// sits at l - 1. It may be longer than the kernel depth when an observable
/// reaches further into the past.
struct PastConfig {
  std::vector<Symbol> symbols;

  static PastConfig uniform(std::size_t length, Symbol s) { return {std::vector<Symbol>(length, s)}; }
  std::size_t size() const noexcept { return symbols.size(); }
};

class FiniteDistribution {
 public:
  FiniteDistribution() = default;
  explicit FiniteDistribution(std::vector<double> weights) : weights_(std::move(weights)) {
    double total = 0.0;
    for (double w : weights_) {
      if (!(w >= 0.0) || !std::isfinite(w)) throw InvalidInput("distribution weights must be finite and non-negative");
      total += w;
    }
    if (std::abs(total - 1.0) > kNormalizationTolerance) {
      throw InvalidInput("distribution weights sum to " + std::to_string(total) + ", expected 1");
    }
  }

  std::size_t size() const noexcept { return weights_.size(); }
  double operator[](std::size_t i) const { return weights_[i]; }
  const std::vector<double>& weights() const noexcept { return weights_; }

 private:
  std::vector<double> weights_;
};

namespace detail {

inline std::size_t config_index(std::span<const Symbol> symbols, std::size_t base) {
  std::size_t idx = 0;
  for (Symbol s : symbols) idx = idx * base + s;
  return idx;
}

inline void index_to_config(std::size_t idx, std::size_t base, std::span<Symbol> out) {
  for (std::size_t i = out.size(); i-- > 0;) {
    out[i] = static_cast<Symbol>(idx % base);
    idx /= base;
  }
}

}  // namespace detail

class Observable;
double oscillation(const Observable& h, Site j, const Alphabet& alphabet);

/// Local function on a finite window, stored as a value table indexed in
/// enumerate_configs order. Oscillations are cached at construction.
class Observable {
 public:
  Observable(const Alphabet& alphabet, Window support, std::vector<double> table)
      : alphabet_(alphabet), support_(support), table_(std::move(table)) {
    const std::size_t expected = power_count(alphabet.size(), support.length());
    if (table_.size() != expected) {
      throw InvalidInput("observable table has " + std::to_string(table_.size()) + " entries, expected " +
                         std::to_string(expected));
    }
    for (double v : table_) {
      if (!std::isfinite(v)) throw InvalidInput("observable values must be finite");
    }
    oscillations_.resize(support_.length());
    for (Site j = support_.lo; j <= support_.hi; ++j) {
      oscillations_[static_cast<std::size_t>(j - support_.lo)] = lis::oscillation(*this, j, alphabet_);
    }
  }

  template <class Fn>
  static Observable from_function(const Alphabet& alphabet, Window support, Fn&& fn,
                                  const EnumerationCap& cap = {}) {
    std::vector<double> table;
    table.reserve(power_count(alphabet.size(), support.length()));
    for (const auto& cfg : enumerate_configs(support, alphabet, cap)) {
      table.push_back(fn(std::span<const Symbol>(cfg)));
    }
    return Observable(alphabet, support, std::move(table));
  }

  static Observable indicator(const Alphabet& alphabet, Site site, Symbol symbol) {
    std::vector<double> table(alphabet.size(), 0.0);
    table.at(symbol) = 1.0;
    return Observable(alphabet, Window::single(site), std::move(table));
  }

  static Observable constant(const Alphabet& alphabet, Site site, double value) {
    return Observable(alphabet, Window::single(site), std::vector<double>(alphabet.size(), value));
  }

  const Alphabet& alphabet() const noexcept { return alphabet_; }
  const Window& support() const noexcept { return support_; }
  const std::vector<double>& table() const noexcept { return table_; }

  /// Value on the symbols of exactly the support.
  double value(std::span<const Symbol> support_symbols) const {
    return table_[detail::config_index(support_symbols, alphabet_.size())];
  }

  /// Value on a configuration starting at `lo` that covers the support.
  double value_in(Site lo, std::span<const Symbol> symbols) const {
    const auto offset = static_cast<std::size_t>(support_.lo - lo);
    return value(symbols.subspan(offset, support_.length()));
  }

  /// Cached d-oscillation at site j (zero off the support).
  double oscillation(Site j) const noexcept {
    if (!support_.contains(j)) return 0.0;
    return oscillations_[static_cast<std::size_t>(j - support_.lo)];
  }

  double range() const {
    auto [mn, mx] = std::minmax_element(table_.begin(), table_.end());
    return *mx - *mn;
  }

  /// Same function, shifted by `offset` sites.
  Observable shifted(Site offset) const {
    return Observable(alphabet_, Window{support_.lo + offset, support_.hi + offset}, table_);
  }

  Observable scaled(double factor) const {
    std::vector<double> t(table_);
    for (double& v : t) v *= factor;
    return Observable(alphabet_, support_, std::move(t));
  }

 private:
  Alphabet alphabet_;
  Window support_;
  std::vector<double> table_;
  std::vector<double> oscillations_;
};

/// sup over configuration pairs equal off j of |h(xi) - h(eta)| / d(xi_j, eta_j),
/// by exhaustive enumeration; 0/0 = 0.
inline double oscillation(const Observable& h, Site j, const Alphabet& alphabet) {
  const Window& w = h.support();
  if (!w.contains(j)) return 0.0;
  const std::size_t base = alphabet.size();
  if (base != h.alphabet().size()) throw InvalidInput("alphabet size mismatch");
  const std::size_t n = w.length();
  const auto pos = static_cast<std::size_t>(j - w.lo);
  // stride of coordinate j in the table index
  const std::size_t stride = power_count(base, n - 1 - pos);
  const auto& table = h.table();
  double best = 0.0;
  for (std::size_t idx = 0; idx < table.size(); ++idx) {
    const auto a = static_cast<Symbol>((idx / stride) % base);
    for (Symbol b = static_cast<Symbol>(a + 1); b < base; ++b) {
      const std::size_t other = idx + (b - a) * stride;
      const double diff = std::abs(table[idx] - table[other]);
      if (diff == 0.0) continue;
      best = std::max(best, diff / alphabet.distance(a, b));
    }
  }
  return best;
}

}  // namespace lis
