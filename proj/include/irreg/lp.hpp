#ifndef IRREG_LP_HPP
#define IRREG_LP_HPP

// Low-dimensional linear programming over half-spaces.
//
//   minimize  c^T z   subject to  A z <= b,   z in R^d (free), d <= 4.
//
// Solved through the dual  min b^T w  s.t.  A^T w = -c, w >= 0  by a revised
// simplex whose basis is only d x d: pricing a column is evaluating the
// primal slack b_j - a_j^T z at the current multipliers, so each iteration
// costs O(d M) for M constraints. Entering columns are the most violated
// primal constraints (Dantzig); after a run of degenerate pivots the rule
// falls back to Bland's to rule out cycling.
//
// min_norm_point() finishes the deterministic tie-break: the point of
// minimal Euclidean norm of the polytope.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "irreg/errors.hpp"

namespace irreg::lp {

inline constexpr std::size_t kMaxDim = 4;

class Polytope {
 public:
  explicit Polytope(std::size_t dim) : dim_(dim) {
    if (dim == 0 || dim > kMaxDim) throw ValidationError("Polytope: dimension must be 1..4");
  }

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return rhs_.size(); }

  void add(std::span<const double> row, double rhs) {
    if (row.size() != dim_) throw ValidationError("Polytope::add: row has wrong dimension");
    rows_.insert(rows_.end(), row.begin(), row.end());
    rhs_.push_back(rhs);
  }

  void add(std::initializer_list<double> row, double rhs) {
    add(std::span<const double>(row.begin(), row.size()), rhs);
  }

  std::span<const double> row(std::size_t j) const { return {rows_.data() + j * dim_, dim_}; }
  double rhs(std::size_t j) const { return rhs_[j]; }

  double slack(std::size_t j, std::span<const double> z) const {
    double s = rhs_[j];
    const double* a = rows_.data() + j * dim_;
    for (std::size_t i = 0; i < dim_; ++i) s -= a[i] * z[i];
    return s;
  }

  /// Largest constraint violation max_j (a_j^T z - b_j), or -inf if empty.
  double max_violation(std::span<const double> z) const {
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < size(); ++j) worst = std::max(worst, -slack(j, z));
    return worst;
  }

 private:
  std::size_t dim_;
  std::vector<double> rows_;
  std::vector<double> rhs_;
};

namespace detail {

using Mat = std::array<std::array<double, kMaxDim>, kMaxDim>;
using Vec = std::array<double, kMaxDim>;

// Solves M x = r (n x n) by Gaussian elimination with partial pivoting.
inline std::optional<Vec> solve(Mat m, Vec r, std::size_t n) {
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t i = col + 1; i < n; ++i) {
      if (std::fabs(m[i][col]) > std::fabs(m[piv][col])) piv = i;
    }
    if (std::fabs(m[piv][col]) < 1e-300) return std::nullopt;
    std::swap(m[piv], m[col]);
    std::swap(r[piv], r[col]);
    for (std::size_t i = col + 1; i < n; ++i) {
      const double f = m[i][col] / m[col][col];
      for (std::size_t k = col; k < n; ++k) m[i][k] -= f * m[col][k];
      r[i] -= f * r[col];
    }
  }
  Vec x{};
  for (std::size_t i = n; i-- > 0;) {
    double s = r[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= m[i][k] * x[k];
    x[i] = s / m[i][i];
  }
  return x;
}

}  // namespace detail

struct Solution {
  std::vector<double> z;
  double objective = 0.0;
  std::size_t iterations = 0;
};

/// Minimizes cost^T z over the polytope. Throws NumericalError if the
/// polytope is empty or the objective is unbounded below.
inline Solution minimize(const Polytope& poly, std::span<const double> cost,
                         std::size_t max_iterations = 20000) {
  using detail::Mat;
  using detail::Vec;
  const std::size_t d = poly.dim();
  const std::size_t m = poly.size();
  if (cost.size() != d) throw ValidationError("lp::minimize: cost has wrong dimension");

  // Column j < m is the j-th constraint row; column m + i is the artificial
  // sign_i * e_i used to start phase one.
  Vec target{};  // equality right-hand side: -c
  Vec sign{};
  for (std::size_t i = 0; i < d; ++i) {
    target[i] = -cost[i];
    sign[i] = target[i] >= 0.0 ? 1.0 : -1.0;
  }
  auto column = [&](std::size_t j) {
    Vec a{};
    if (j < m) {
      const auto r = poly.row(j);
      for (std::size_t i = 0; i < d; ++i) a[i] = r[i];
    } else {
      a[j - m] = sign[j - m];
    }
    return a;
  };

  std::array<std::size_t, kMaxDim> basis{};
  for (std::size_t i = 0; i < d; ++i) basis[i] = m + i;

  double scale = 1.0;
  for (std::size_t j = 0; j < m; ++j) scale = std::max(scale, std::fabs(poly.rhs(j)));
  const double tol = 1e-11 * scale;

  std::size_t iterations = 0;
  for (int phase = 1; phase <= 2; ++phase) {
    auto col_cost = [&](std::size_t j) {
      if (phase == 1) return j >= m ? 1.0 : 0.0;
      return j >= m ? 0.0 : poly.rhs(j);
    };
    std::size_t degenerate_run = 0;
    for (;;) {
      if (++iterations > max_iterations) throw NumericalError("lp::minimize: iteration limit");
      Mat bt{};  // B^T
      Mat b{};
      Vec cb{};
      for (std::size_t k = 0; k < d; ++k) {
        const Vec a = column(basis[k]);
        for (std::size_t i = 0; i < d; ++i) {
          b[i][k] = a[i];
          bt[k][i] = a[i];
        }
        cb[k] = col_cost(basis[k]);
      }
      const auto pi = detail::solve(bt, cb, d);
      const auto xb = detail::solve(b, target, d);
      if (!pi || !xb) throw NumericalError("lp::minimize: singular basis");

      // Pricing.
      const bool bland = degenerate_run > 50;
      std::size_t entering = m + d;
      double best = 0.0;
      for (std::size_t j = 0; j < m + (phase == 1 ? d : 0); ++j) {
        if (std::find(basis.begin(), basis.begin() + d, j) != basis.begin() + d) continue;
        const Vec a = column(j);
        double r = col_cost(j);
        for (std::size_t i = 0; i < d; ++i) r -= a[i] * (*pi)[i];
        const double thresh = -tol * (1.0 + std::fabs(col_cost(j)));
        if (r < thresh) {
          if (bland) {
            entering = j;
            break;
          }
          if (r < best) {
            best = r;
            entering = j;
          }
        }
      }
      if (entering == m + d) {
        if (phase == 1) {
          double infeas = 0.0;
          for (std::size_t k = 0; k < d; ++k) {
            if (basis[k] >= m) infeas += (*xb)[k];
          }
          if (infeas > 1e-9 * (1.0 + scale)) {
            throw NumericalError("lp::minimize: objective unbounded below", infeas);
          }
          // Drive remaining (zero-level) artificials out of the basis.
          for (std::size_t k = 0; k < d; ++k) {
            if (basis[k] < m) continue;
            std::size_t pick = m;
            double pick_mag = 1e-9;
            for (std::size_t j = 0; j < m; ++j) {
              if (std::find(basis.begin(), basis.begin() + d, j) != basis.begin() + d) continue;
              const auto dir = detail::solve(b, column(j), d);
              if (dir && std::fabs((*dir)[k]) > pick_mag) {
                pick_mag = std::fabs((*dir)[k]);
                pick = j;
              }
            }
            if (pick == m) throw NumericalError("lp::minimize: constraint matrix is rank deficient");
            basis[k] = pick;
            for (std::size_t i = 0; i < d; ++i) b[i][k] = column(pick)[i];
          }
          break;
        }
        Solution out;
        out.z.assign(pi->begin(), pi->begin() + d);
        out.objective = 0.0;
        for (std::size_t i = 0; i < d; ++i) out.objective += cost[i] * out.z[i];
        out.iterations = iterations;
        return out;
      }

      const auto dir = detail::solve(b, column(entering), d);
      if (!dir) throw NumericalError("lp::minimize: singular basis");
      std::size_t leave = d;
      double ratio = std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < d; ++k) {
        if ((*dir)[k] > 1e-12) {
          const double q = std::max(0.0, (*xb)[k]) / (*dir)[k];
          if (q < ratio - 1e-15 || (q <= ratio + 1e-15 && leave < d && basis[k] < basis[leave])) {
            ratio = q;
            leave = k;
          }
        }
      }
      if (leave == d) throw NumericalError("lp::minimize: constraints are infeasible");
      degenerate_run = ratio <= 1e-14 ? degenerate_run + 1 : 0;
      basis[leave] = entering;
    }
  }
  throw NumericalError("lp::minimize: unreachable");
}

/// Point of minimal Euclidean norm in the polytope (least-distance
/// programming, Lawson & Hanson ch. 23): with G = -A, h = -b, solve the
/// nonnegative least-squares problem  min |E u - f|, u >= 0, for
/// E = [G^T; h^T] and f = e_{d+1}; then z = -r_{1..d} / r_{d+1} with
/// r = E u - f. The NNLS passive set never exceeds d + 1 columns.
/// `start`, if given, is only used to report an infeasible polytope early.
inline std::vector<double> min_norm_point(const Polytope& poly, std::vector<double> start = {},
                                          double tol = 1e-10) {
  const std::size_t d = poly.dim();
  const std::size_t m = poly.size();
  const std::size_t rows = d + 1;
  if (!start.empty() && start.size() != d) throw ValidationError("min_norm_point: start has wrong dimension");
  if (!start.empty() && m > 0 && poly.max_violation(start) > tol) {
    throw NumericalError("min_norm_point: start is infeasible", poly.max_violation(start));
  }
  if (m == 0) return std::vector<double>(d, 0.0);

  // Column j of E, normalized by |a_j| (the problem is invariant to row scaling).
  std::vector<double> e(m * rows);
  for (std::size_t j = 0; j < m; ++j) {
    const auto a = poly.row(j);
    double norm = 0.0;
    for (double v : a) norm += v * v;
    norm = std::sqrt(norm);
    if (norm == 0.0) {
      if (poly.rhs(j) < 0.0) throw NumericalError("min_norm_point: polytope is empty");
      continue;  // 0 <= rhs: column stays zero and never enters
    }
    for (std::size_t i = 0; i < d; ++i) e[j * rows + i] = -a[i] / norm;
    e[j * rows + d] = -poly.rhs(j) / norm;
  }
  auto col = [&](std::size_t j) { return e.data() + j * rows; };

  // Least squares over the passive columns by modified Gram-Schmidt.
  auto least_squares = [&](const std::vector<std::size_t>& passive, std::vector<double>& z) {
    const std::size_t k = passive.size();
    std::vector<double> q(rows * k);
    std::vector<double> r(k * k, 0.0);
    for (std::size_t c = 0; c < k; ++c) {
      for (std::size_t i = 0; i < rows; ++i) q[c * rows + i] = col(passive[c])[i];
      for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t p = 0; p < c; ++p) {
          double dot = 0.0;
          for (std::size_t i = 0; i < rows; ++i) dot += q[p * rows + i] * q[c * rows + i];
          r[p * k + c] += dot;
          for (std::size_t i = 0; i < rows; ++i) q[c * rows + i] -= dot * q[p * rows + i];
        }
      }
      double norm = 0.0;
      for (std::size_t i = 0; i < rows; ++i) norm += q[c * rows + i] * q[c * rows + i];
      norm = std::sqrt(norm);
      if (norm < 1e-13) return false;
      r[c * k + c] = norm;
      for (std::size_t i = 0; i < rows; ++i) q[c * rows + i] /= norm;
    }
    // z = R^{-1} Q^T f with f = e_{d+1}.
    z.assign(k, 0.0);
    for (std::size_t c = k; c-- > 0;) {
      double s = q[c * rows + d];
      for (std::size_t p = c + 1; p < k; ++p) s -= r[c * k + p] * z[p];
      z[c] = s / r[c * k + c];
    }
    return true;
  };

  std::vector<double> u(m, 0.0);
  std::vector<std::size_t> passive;
  std::vector<char> in_passive(m, 0);
  std::vector<char> rejected(m, 0);
  std::vector<double> resid(rows);
  auto residual = [&] {
    for (std::size_t i = 0; i < rows; ++i) resid[i] = i == d ? 1.0 : 0.0;
    for (std::size_t j : passive) {
      for (std::size_t i = 0; i < rows; ++i) resid[i] -= col(j)[i] * u[j];
    }
  };

  const double wtol = 1e-13;
  for (std::size_t outer = 0; outer < 50 * (m + 10); ++outer) {
    residual();
    std::size_t entering = m;
    double best = wtol;
    for (std::size_t j = 0; j < m; ++j) {
      if (in_passive[j] || rejected[j]) continue;
      double w = 0.0;
      for (std::size_t i = 0; i < rows; ++i) w += col(j)[i] * resid[i];
      if (w > best) {
        best = w;
        entering = j;
      }
    }
    if (entering == m || passive.size() == rows) break;
    passive.push_back(entering);
    in_passive[entering] = 1;

    bool progressed = false;
    for (std::size_t inner = 0; inner < 10 * rows; ++inner) {
      std::vector<double> z;
      if (!least_squares(passive, z)) {
        // Dependent column: undo and exclude it for this round.
        passive.pop_back();
        in_passive[entering] = 0;
        rejected[entering] = 1;
        break;
      }
      bool positive = true;
      for (double v : z) positive = positive && v > 0.0;
      if (positive) {
        for (std::size_t p = 0; p < passive.size(); ++p) u[passive[p]] = z[p];
        progressed = true;
        break;
      }
      double alpha = 1.0;
      for (std::size_t p = 0; p < passive.size(); ++p) {
        if (z[p] <= 0.0) {
          const double up = u[passive[p]];
          alpha = std::min(alpha, up / (up - z[p]));
        }
      }
      for (std::size_t p = 0; p < passive.size(); ++p) {
        u[passive[p]] += alpha * (z[p] - u[passive[p]]);
      }
      std::vector<std::size_t> keep;
      for (std::size_t j : passive) {
        if (u[j] > 1e-15) {
          keep.push_back(j);
        } else {
          u[j] = 0.0;
          in_passive[j] = 0;
        }
      }
      passive = std::move(keep);
      if (passive.empty()) break;
    }
    if (progressed) std::fill(rejected.begin(), rejected.end(), 0);
  }

  residual();
  // r = E u - f = -resid, and z = -r_{1..d} / r_{d+1}.
  if (std::fabs(resid[d]) < 1e-14) throw NumericalError("min_norm_point: polytope is empty");
  std::vector<double> z(d);
  for (std::size_t i = 0; i < d; ++i) z[i] = -resid[i] / resid[d];
  return z;
}

}  // namespace irreg::lp

#endif  // IRREG_LP_HPP
