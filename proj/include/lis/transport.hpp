#pragma once

// Optimal-transport (Vaserstein-Kantorovich-Rubinstein) cost between two
// laws on a finite metric alphabet.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "lis/core.hpp"

namespace lis {

namespace detail {

// Two-phase dense tableau simplex with Bland's rule:
//   minimize c.x  subject to  A x = b, x >= 0, with b >= 0.
class DenseSimplex {
 public:
  static double minimize(const std::vector<std::vector<double>>& a, const std::vector<double>& b,
                         const std::vector<double>& c) {
    DenseSimplex s(a, b);
    s.run(s.n_ + s.m_);
    if (-s.at(s.m_, s.rhs()) > 1e-9) throw std::runtime_error("transport problem is infeasible");
    s.drive_out_artificials();
    s.load_objective(c);
    s.run(s.n_);
    return -s.at(s.m_, s.rhs());
  }

 private:
  static constexpr double kEps = 1e-12;

  DenseSimplex(const std::vector<std::vector<double>>& a, const std::vector<double>& b)
      : m_(a.size()), n_(a.empty() ? 0 : a.front().size()), width_(n_ + m_ + 1), t_((m_ + 1) * width_, 0.0),
        basis_(m_) {
    for (std::size_t i = 0; i < m_; ++i) {
      for (std::size_t j = 0; j < n_; ++j) at(i, j) = a[i][j];
      at(i, n_ + i) = 1.0;
      at(i, rhs()) = b[i];
      basis_[i] = n_ + i;
    }
    // phase one: minimise the sum of artificials
    for (std::size_t j = 0; j < n_; ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i < m_; ++i) s += a[i][j];
      at(m_, j) = -s;
    }
    at(m_, rhs()) = -std::accumulate(b.begin(), b.end(), 0.0);
  }

  double& at(std::size_t i, std::size_t j) { return t_[i * width_ + j]; }
  std::size_t rhs() const { return width_ - 1; }

  void pivot(std::size_t row, std::size_t col) {
    const double p = at(row, col);
    for (std::size_t j = 0; j < width_; ++j) at(row, j) /= p;
    for (std::size_t i = 0; i <= m_; ++i) {
      if (i == row) continue;
      const double f = at(i, col);
      if (f == 0.0) continue;
      for (std::size_t j = 0; j < width_; ++j) at(i, j) -= f * at(row, j);
    }
    basis_[row] = col;
  }

  void run(std::size_t allowed) {
    for (std::size_t iter = 0; iter < 100000; ++iter) {
      std::size_t col = allowed;
      for (std::size_t j = 0; j < allowed; ++j) {
        if (at(m_, j) < -kEps) {
          col = j;
          break;
        }
      }
      if (col == allowed) return;
      std::size_t row = m_;
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < m_; ++i) {
        if (at(i, col) <= kEps) continue;
        const double ratio = at(i, rhs()) / at(i, col);
        if (ratio < best - kEps || (std::abs(ratio - best) <= kEps && basis_[i] < basis_[row])) {
          best = ratio;
          row = i;
        }
      }
      if (row == m_) throw std::runtime_error("transport problem is unbounded");
      pivot(row, col);
    }
    throw std::runtime_error("simplex iteration budget exhausted");
  }

  void drive_out_artificials() {
    for (std::size_t i = 0; i < m_; ++i) {
      if (basis_[i] < n_) continue;
      for (std::size_t j = 0; j < n_; ++j) {
        if (std::abs(at(i, j)) > kEps) {
          pivot(i, j);
          break;
        }
      }
      // a row with no structural entry is redundant; its artificial stays at zero
    }
  }

  void load_objective(const std::vector<double>& c) {
    for (std::size_t j = 0; j < width_; ++j) at(m_, j) = 0.0;
    for (std::size_t j = 0; j < n_; ++j) at(m_, j) = c[j];
    for (std::size_t i = 0; i < m_; ++i) {
      const double cb = basis_[i] < n_ ? c[basis_[i]] : 0.0;
      if (cb == 0.0) continue;
      for (std::size_t j = 0; j < width_; ++j) at(m_, j) -= cb * at(i, j);
    }
  }

  std::size_t m_, n_, width_;
  std::vector<double> t_;
  std::vector<std::size_t> basis_;
};

struct TransportProblem {
  std::vector<std::size_t> rows, cols;  // supports of p and q
  std::vector<std::vector<double>> a;   // row sums, then all but the last column sum
  std::vector<double> b;
  std::vector<double> cost;             // per cell, row-major over rows x cols
};

inline TransportProblem build_transport(const FiniteDistribution& p, const FiniteDistribution& q,
                                        const Alphabet& alphabet) {
  TransportProblem tp;
  for (std::size_t i = 0; i < p.size(); ++i)
    if (p[i] > 0.0) tp.rows.push_back(i);
  for (std::size_t j = 0; j < q.size(); ++j)
    if (q[j] > 0.0) tp.cols.push_back(j);
  const std::size_t r = tp.rows.size(), c = tp.cols.size();
  const std::size_t cells = r * c;
  for (std::size_t i = 0; i < r; ++i) {
    std::vector<double> row(cells, 0.0);
    for (std::size_t j = 0; j < c; ++j) row[i * c + j] = 1.0;
    tp.a.push_back(std::move(row));
    tp.b.push_back(p[tp.rows[i]]);
  }
  for (std::size_t j = 0; j + 1 < c; ++j) {
    std::vector<double> col(cells, 0.0);
    for (std::size_t i = 0; i < r; ++i) col[i * c + j] = 1.0;
    tp.a.push_back(std::move(col));
    tp.b.push_back(q[tp.cols[j]]);
  }
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j)
      tp.cost.push_back(alphabet.distance(static_cast<Symbol>(tp.rows[i]), static_cast<Symbol>(tp.cols[j])));
  return tp;
}

inline void check_pair(const FiniteDistribution& p, const FiniteDistribution& q, const Alphabet& alphabet) {
  if (p.size() != alphabet.size() || q.size() != alphabet.size()) {
    throw InvalidInput("distributions must live on the alphabet");
  }
}

// Solves the square system m x = rhs in place; false when singular.
inline bool solve_square(std::vector<std::vector<double>> m, std::vector<double> rhs, std::vector<double>& x) {
  const std::size_t n = rhs.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(m[r][col]) > std::abs(m[piv][col])) piv = r;
    if (std::abs(m[piv][col]) < 1e-12) return false;
    std::swap(m[piv], m[col]);
    std::swap(rhs[piv], rhs[col]);
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col) continue;
      const double f = m[r][col] / m[col][col];
      if (f == 0.0) continue;
      for (std::size_t k = col; k < n; ++k) m[r][k] -= f * m[col][k];
      rhs[r] -= f * rhs[col];
    }
  }
  x.resize(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = rhs[i] / m[i][i];
  return true;
}

}  // namespace detail

/// Exact transport cost by the simplex method on the transportation polytope.
inline double transport_cost_simplex(const FiniteDistribution& p, const FiniteDistribution& q,
                                     const Alphabet& alphabet) {
  detail::check_pair(p, q, alphabet);
  const auto tp = detail::build_transport(p, q, alphabet);
  return std::max(0.0, detail::DenseSimplex::minimize(tp.a, tp.b, tp.cost));
}

/// Exact transport cost as the minimum over all vertices of the
/// transportation polytope (basic feasible solutions). Exponential in the
/// support sizes; intended for alphabets of at most four symbols.
inline double transport_cost_vertices(const FiniteDistribution& p, const FiniteDistribution& q,
                                      const Alphabet& alphabet) {
  detail::check_pair(p, q, alphabet);
  if (alphabet.size() > 4) throw InvalidInput("vertex enumeration supports at most 4 symbols");
  const auto tp = detail::build_transport(p, q, alphabet);
  const std::size_t cells = tp.cost.size();
  const std::size_t k = tp.b.size();  // r + c - 1 basic cells
  std::vector<std::size_t> pick(k);
  std::iota(pick.begin(), pick.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  std::vector<double> x;
  while (true) {
    std::vector<std::vector<double>> m(k, std::vector<double>(k));
    for (std::size_t r = 0; r < k; ++r)
      for (std::size_t c = 0; c < k; ++c) m[r][c] = tp.a[r][pick[c]];
    if (detail::solve_square(m, tp.b, x) &&
        std::all_of(x.begin(), x.end(), [](double v) { return v >= -1e-12; })) {
      double cost = 0.0;
      for (std::size_t c = 0; c < k; ++c) cost += tp.cost[pick[c]] * std::max(0.0, x[c]);
      best = std::min(best, cost);
    }
    // next k-combination of the cells
    std::size_t i = k;
    while (i > 0 && pick[i - 1] == cells - k + i - 1) --i;
    if (i == 0) break;
    ++pick[i - 1];
    for (std::size_t j = i; j < k; ++j) pick[j] = pick[j - 1] + 1;
  }
  return best;
}

/// VKR distance between two laws on the alphabet. The discrete metric and
/// the two-symbol case have closed forms; everything else goes through the
/// simplex solver.
inline double vkr_distance(const FiniteDistribution& p, const FiniteDistribution& q, const Alphabet& alphabet) {
  detail::check_pair(p, q, alphabet);
  if (alphabet.is_discrete()) {
    double l1 = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) l1 += std::abs(p[i] - q[i]);
    return 0.5 * l1;
  }
  if (alphabet.size() == 2) return alphabet.distance(0, 1) * std::abs(p[0] - q[0]);
  return transport_cost_simplex(p, q, alphabet);
}

}  // namespace lis
