#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "precondopt/dense.hpp"

namespace precondopt {

enum class RowOrigin { CutBlock1, CutBlock2, Auxiliary };

/// max c^T x subject to A x <= b, x free. Rows carry an origin tag so callers
/// can map dual weights back to the constraints they came from.
struct LpProblem {
  std::vector<double> c;
  Mat a;  // rows x vars
  std::vector<double> b;
  std::vector<RowOrigin> origin;

  std::size_t rows() const { return b.size(); }
  std::size_t vars() const { return c.size(); }
};

enum class LpStatus { Optimal, Unbounded, Infeasible };

struct LpSolution {
  LpStatus status = LpStatus::Infeasible;
  std::vector<double> x;
  std::vector<double> y;  // row duals, >= 0, aligned with LpProblem rows
  double objective = 0.0;
  std::vector<double> ray;  // certificate direction when Unbounded
};

/// Simplex gave up (cycling guard or a pivot breakdown); distinct from the
/// three classification outcomes on purpose.
struct LpNumericalError : std::runtime_error {
  explicit LpNumericalError(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {

/// Two-phase revised simplex over the standard-form rewrite
///   [A | -A | S] (xp, xn, s)^T = b,  all variables >= 0,
/// with artificials only on rows whose right side starts negative. The basis
/// inverse is kept explicitly (problems here stay small: tens of variables,
/// hundreds of rows). Dantzig pricing, lowest-index ties; Bland's rule takes
/// over after a degeneracy streak.
class Simplex {
 public:
  Simplex(const LpProblem& p, double tol) : p_(p), tol_(tol), m_(p.rows()), nv_(p.vars()) {
    sigma_.assign(m_, 1.0);
    for (std::size_t i = 0; i < m_; ++i)
      if (p_.b[i] < 0.0) sigma_[i] = -1.0;
    n_struct_ = 2 * nv_ + m_;
    n_art_ = 0;
    art_of_row_.assign(m_, std::size_t(-1));
    for (std::size_t i = 0; i < m_; ++i)
      if (sigma_[i] < 0.0) art_of_row_[i] = n_struct_ + n_art_++;
    ncols_ = n_struct_ + n_art_;
    amax_ = 0.0;
    for (double v : p_.a.a) amax_ = std::max(amax_, std::fabs(v));
    drift_tol_ = 1e-7 * (1.0 + scale_b());
    init_state();
  }

  LpSolution run() {
    try {
      return solve_once();
    } catch (const RetrySignal&) {
      // the default pivot path went numerically sour: walk a fresh,
      // conservatively pivoted path before giving up
      bland_always_ = true;
      init_state();
      return solve_once();
    }
  }

 private:
  struct RetrySignal {};

  [[noreturn]] void trouble(const char* what) {
    if (!bland_always_) throw RetrySignal{};
    throw LpNumericalError(what);
  }

  void init_state() {
    phase_ = 1;
    binv_ = Mat::identity(m_);
    basic_.resize(m_);
    in_basis_.assign(ncols_, false);
    for (std::size_t i = 0; i < m_; ++i) {
      basic_[i] = sigma_[i] > 0.0 ? 2 * nv_ + i : art_of_row_[i];
      in_basis_[basic_[i]] = true;
    }
    bhat_.resize(m_);
    for (std::size_t i = 0; i < m_; ++i) bhat_[i] = sigma_[i] * p_.b[i];
    xb_ = bhat_;
    min_raw_xb_ = 0.0;
  }

  LpSolution solve_once() {
    if (n_art_ > 0) {
      phase_ = 1;
      iterate();
      double art_sum = 0.0;
      for (std::size_t i = 0; i < m_; ++i)
        if (basic_[i] >= n_struct_) art_sum += xb_[i];
      if (art_sum > 1e-7 * (1.0 + scale_b())) {
        LpSolution s;
        s.status = LpStatus::Infeasible;
        return s;
      }
      expel_artificials();
    }
    phase_ = 2;
    const bool bounded = iterate();
    LpSolution s;
    if (!bounded) {
      s.status = LpStatus::Unbounded;
      s.ray = extract_ray();
      return s;
    }
    refactorize();  // fresh factorization for the values we hand back
    s.status = LpStatus::Optimal;
    s.x.assign(nv_, 0.0);
    for (std::size_t i = 0; i < m_; ++i) {
      const std::size_t j = basic_[i];
      if (j < nv_)
        s.x[j] += xb_[i];
      else if (j < 2 * nv_)
        s.x[j - nv_] -= xb_[i];
    }
    s.objective = 0.0;
    for (std::size_t j = 0; j < nv_; ++j) s.objective += p_.c[j] * s.x[j];

    // audit the claimed optimum against the original rows; a violated row
    // means the pivot path quietly lost primal feasibility
    double xmax = 0.0;
    for (double v : s.x) xmax = std::max(xmax, std::fabs(v));
    const double audit_tol = 1e-9 * std::max({1.0, scale_b(), amax_ * xmax});
    for (std::size_t i = 0; i < m_; ++i) {
      double ax = 0.0;
      for (std::size_t j = 0; j < nv_; ++j) ax += p_.a.at(i, j) * s.x[j];
      if (ax - p_.b[i] > audit_tol) trouble("optimal point failed the feasibility audit");
    }

    // duals: y_orig_i = sigma_i * (c_B^T Binv)_i, clipped of rounding dust
    const auto yhat = multipliers();
    s.y.assign(m_, 0.0);
    for (std::size_t i = 0; i < m_; ++i) {
      double v = sigma_[i] * yhat[i];
      if (v < 0.0 && v > -1e-9 * (1.0 + std::fabs(v))) v = 0.0;
      s.y[i] = v;
    }
    return s;
  }

  double scale_b() const {
    double s = 0.0;
    for (double v : p_.b) s = std::max(s, std::fabs(v));
    return s;
  }

  double cost(std::size_t j) const {
    if (phase_ == 1) return j >= n_struct_ ? -1.0 : 0.0;
    if (j < nv_) return p_.c[j];
    if (j < 2 * nv_) return -p_.c[j - nv_];
    return 0.0;
  }

  /// column j of the equation system, densified
  void column(std::size_t j, std::vector<double>& out) const {
    std::fill(out.begin(), out.end(), 0.0);
    if (j < nv_) {
      for (std::size_t i = 0; i < m_; ++i) out[i] = sigma_[i] * p_.a.at(i, j);
    } else if (j < 2 * nv_) {
      for (std::size_t i = 0; i < m_; ++i) out[i] = -sigma_[i] * p_.a.at(i, j - nv_);
    } else if (j < n_struct_) {
      const std::size_t r = j - 2 * nv_;
      out[r] = sigma_[r];
    } else {
      for (std::size_t i = 0; i < m_; ++i)
        if (art_of_row_[i] == j) out[i] = 1.0;
    }
  }

  std::vector<double> multipliers() const {
    std::vector<double> y(m_, 0.0);
    for (std::size_t i = 0; i < m_; ++i) {
      const double cb = cost(basic_[i]);
      if (cb != 0.0)
        for (std::size_t k = 0; k < m_; ++k) y[k] += cb * binv_.at(i, k);
    }
    return y;
  }

  double reduced_cost(std::size_t j, const std::vector<double>& y,
                      std::vector<double>& colbuf) const {
    column(j, colbuf);
    double d = cost(j);
    for (std::size_t i = 0; i < m_; ++i) d -= y[i] * colbuf[i];
    return d;
  }

  /// Returns true when an optimum was reached, false on unboundedness
  /// (phase 2 only; phase 1 is always bounded).
  bool iterate() {
    const std::size_t cap = 200 + 60 * (m_ + ncols_);
    std::size_t degenerate_streak = 0;
    std::vector<double> colbuf(m_), u(m_);
    // ratio-test slack; bounds how far a vertex may sit outside a row, so it
    // must stay well below the caller's feasibility tolerance
    const double delta = std::max(0.1 * tol_, 1e-15) * (1.0 + scale_b());
    // pricing threshold stays at reduced-cost noise level even when the
    // caller asks for much finer feasibility: chasing noise-level reduced
    // costs invites the complementary half of a split variable into the basis
    double cmax = 0.0;
    for (double v : p_.c) cmax = std::max(cmax, std::fabs(v));
    const double price_tol = std::max(tol_, 1e-9 * (1.0 + cmax));
    for (std::size_t it = 0; it < cap; ++it) {
      const auto y = multipliers();
      const bool bland = bland_always_ || degenerate_streak > 30;
      std::size_t enter = std::size_t(-1);
      double best = price_tol;
      for (std::size_t j = 0; j < ncols_; ++j) {
        if (in_basis_[j]) continue;
        if (phase_ == 2 && j >= n_struct_) continue;  // artificials stay out
        // never pair x+ with x- of the same variable: exactly singular basis
        if (j < nv_ && in_basis_[j + nv_]) continue;
        if (j >= nv_ && j < 2 * nv_ && in_basis_[j - nv_]) continue;
        const double d = reduced_cost(j, y, colbuf);
        if (d > (bland ? price_tol : best)) {
          enter = j;
          if (bland) break;
          best = d;
        }
      }
      if (enter == std::size_t(-1)) return true;  // optimal for this phase

      column(enter, colbuf);
      solve_basis(colbuf, u);
      double umax = 0.0;
      for (std::size_t i = 0; i < m_; ++i) umax = std::max(umax, u[i]);
      if (!(umax > 1e-11)) {
        if (phase_ == 1) trouble("phase-1 subproblem unbounded");
        pending_ray_col_ = enter;
        pending_ray_u_ = u;
        return false;
      }
      // Two-pass ratio test. The step bound must honor EVERY positive u --
      // dropping micro-u rows from the bound lets the step overshoot them by
      // more than the feasibility slack (near-parallel cut rows turn into
      // micro-u rows once their twin leaves the basis). The stability floor
      // only steers WHICH eligible row pivots: prefer a decent magnitude, and
      // when a micro pivot is forced, rebuild the inverse right after.
      const double piv_floor = std::max(1e-11, 1e-9 * umax);
      double bound = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < m_; ++i)
        if (u[i] > 1e-11) bound = std::min(bound, (xb_[i] + delta) / u[i]);
      std::size_t leave = std::size_t(-1);
      bool leave_strong = false;
      for (std::size_t i = 0; i < m_; ++i) {
        if (u[i] <= 1e-11 || xb_[i] / u[i] > bound) continue;
        const bool strong = u[i] > piv_floor;
        if (leave == std::size_t(-1) || strong != leave_strong) {
          if (leave == std::size_t(-1) || strong) {
            leave = i;
            leave_strong = strong;
          }
          continue;
        }
        if (bland ? basic_[i] < basic_[leave] : u[i] > u[leave]) leave = i;
      }
      const double best_ratio = xb_[leave] / u[leave];
      if (best_ratio <= 1e-13 * (1.0 + scale_b()))
        ++degenerate_streak;
      else
        degenerate_streak = 0;

      const bool weak_pivot = !leave_strong;
      pivot(enter, leave, u);
      if (weak_pivot) refactorize();
      if (min_raw_xb_ < -drift_tol_) {
        refactorize();  // repair drift in the running inverse
        if (min_raw_xb_ < -drift_tol_) trouble("basis lost primal feasibility");
      }
      if ((it + 1) % 50 == 0) refactorize();
    }
    trouble("simplex iteration cap exceeded (cycling guard)");
  }

  void pivot(std::size_t enter, std::size_t leave, const std::vector<double>& u) {
    const double piv = u[leave];
    if (std::fabs(piv) < 1e-12) trouble("pivot too small");
    in_basis_[basic_[leave]] = false;
    basic_[leave] = enter;
    in_basis_[enter] = true;
    // B^-1 <- E B^-1 with eta column from u
    const double inv = 1.0 / piv;
    for (std::size_t k = 0; k < m_; ++k) binv_.at(leave, k) *= inv;
    for (std::size_t i = 0; i < m_; ++i) {
      if (i == leave) continue;
      const double f = u[i];
      if (f != 0.0)
        for (std::size_t k = 0; k < m_; ++k) binv_.at(i, k) -= f * binv_.at(leave, k);
    }
    recompute_xb();
  }

  /// Solve B*out = rhs through the running inverse, then refine against the
  /// true basis columns. The eta-updated inverse drifts, and near-parallel cut
  /// rows make B ill-conditioned enough that raw B^-1*rhs errors exceed the
  /// caller's feasibility tolerance -- a wrong leaving row then silently
  /// breaks primal feasibility by far more than the ratio-test slack.
  void solve_basis(const std::vector<double>& rhs, std::vector<double>& out) {
    std::vector<double> resid(m_), colbuf(m_);
    for (std::size_t i = 0; i < m_; ++i) {
      double s = 0.0;
      for (std::size_t k = 0; k < m_; ++k) s += binv_.at(i, k) * rhs[k];
      out[i] = s;
    }
    double rhs_scale = 0.0;
    for (std::size_t k = 0; k < m_; ++k) rhs_scale = std::max(rhs_scale, std::fabs(rhs[k]));
    for (int sweep = 0; sweep < 2; ++sweep) {
      std::fill(resid.begin(), resid.end(), 0.0);
      for (std::size_t j = 0; j < m_; ++j) {
        column(basic_[j], colbuf);
        const double xj = out[j];
        if (xj != 0.0)
          for (std::size_t i = 0; i < m_; ++i) resid[i] += colbuf[i] * xj;
      }
      double rmax = 0.0;
      for (std::size_t i = 0; i < m_; ++i) {
        resid[i] = rhs[i] - resid[i];
        rmax = std::max(rmax, std::fabs(resid[i]));
      }
      if (rmax <= 1e-15 * (1.0 + rhs_scale)) break;
      for (std::size_t i = 0; i < m_; ++i) {
        double s = 0.0;
        for (std::size_t k = 0; k < m_; ++k) s += binv_.at(i, k) * resid[k];
        out[i] += s;
      }
    }
  }

  void recompute_xb() {
    std::vector<double> raw(m_);
    solve_basis(bhat_, raw);
    min_raw_xb_ = 0.0;
    for (std::size_t i = 0; i < m_; ++i) {
      min_raw_xb_ = std::min(min_raw_xb_, raw[i]);
      xb_[i] = std::max(raw[i], 0.0);  // clip rounding dust; exact basics stay >= 0
    }
  }

  void refactorize() {
    Mat b(m_, m_);
    std::vector<double> col(m_);
    for (std::size_t i = 0; i < m_; ++i) {
      column(basic_[i], col);
      for (std::size_t r = 0; r < m_; ++r) b.at(r, i) = col[r];
    }
    // invert by factoring once, then back-solving for each unit vector
    Mat inv(m_, m_);
    try {
      const LuFactors f = lu_factor(std::move(b));
      std::vector<double> e(m_, 0.0);
      for (std::size_t j = 0; j < m_; ++j) {
        e.assign(m_, 0.0);
        e[j] = 1.0;
        const std::vector<double> x = f.solve(e);
        for (std::size_t i = 0; i < m_; ++i) inv.at(i, j) = x[i];
      }
    } catch (const std::exception&) {
      trouble("basis refactorization failed");
    }
    binv_ = inv;
    recompute_xb();
  }

  /// After phase 1: swap basic artificials for structural columns; rows that
  /// admit none are redundant and keep a zero artificial pinned in the basis.
  void expel_artificials() {
    std::vector<double> colbuf(m_);
    for (std::size_t i = 0; i < m_; ++i) {
      if (basic_[i] < n_struct_) continue;
      bool swapped = false;
      for (std::size_t j = 0; j < n_struct_ && !swapped; ++j) {
        if (in_basis_[j]) continue;
        if (j < nv_ && in_basis_[j + nv_]) continue;
        if (j >= nv_ && j < 2 * nv_ && in_basis_[j - nv_]) continue;
        column(j, colbuf);
        double uij = 0.0;
        for (std::size_t k = 0; k < m_; ++k) uij += binv_.at(i, k) * colbuf[k];
        if (std::fabs(uij) > 1e-8) {
          std::vector<double> u(m_, 0.0);
          for (std::size_t r = 0; r < m_; ++r) {
            double s = 0.0;
            for (std::size_t k = 0; k < m_; ++k) s += binv_.at(r, k) * colbuf[k];
            u[r] = s;
          }
          pivot(j, i, u);
          swapped = true;
        }
      }
    }
    refactorize();  // expulsion pivots run without the drift checks
  }

  std::vector<double> extract_ray() const {
    // moving the entering column by t >= 0 keeps all equations satisfied
    std::vector<double> r(nv_, 0.0);
    const std::size_t q = pending_ray_col_;
    if (q < nv_)
      r[q] += 1.0;
    else if (q < 2 * nv_)
      r[q - nv_] -= 1.0;
    for (std::size_t i = 0; i < m_; ++i) {
      const std::size_t j = basic_[i];
      const double delta = -pending_ray_u_[i];
      if (j < nv_)
        r[j] += delta;
      else if (j < 2 * nv_)
        r[j - nv_] -= delta;
    }
    return r;
  }

  const LpProblem& p_;
  double tol_;
  std::size_t m_, nv_, n_struct_, n_art_, ncols_;
  double min_raw_xb_ = 0.0;
  double amax_ = 0.0, drift_tol_ = 0.0;
  bool bland_always_ = false;
  int phase_ = 1;
  std::vector<double> sigma_, bhat_, xb_;
  std::vector<std::size_t> basic_, art_of_row_;
  std::vector<bool> in_basis_;
  Mat binv_;
  std::size_t pending_ray_col_ = 0;
  std::vector<double> pending_ray_u_;
};

}  // namespace detail

inline LpSolution solve_lp(const LpProblem& p, double tol = 1e-9) {
  if (p.a.rows != p.rows() || (p.rows() > 0 && p.a.cols != p.vars()))
    throw std::invalid_argument("solve_lp: shape mismatch");
  if (!p.origin.empty() && p.origin.size() != p.rows())
    throw std::invalid_argument("solve_lp: origin tags mismatch");
  for (double v : p.c)
    if (!std::isfinite(v)) throw std::invalid_argument("solve_lp: non-finite objective");
  for (double v : p.a.a)
    if (!std::isfinite(v)) throw std::invalid_argument("solve_lp: non-finite row entry");
  for (double v : p.b)
    if (!std::isfinite(v)) throw std::invalid_argument("solve_lp: non-finite right-hand side");

  if (p.rows() == 0) {
    LpSolution s;
    bool zero = true;
    for (double v : p.c)
      if (v != 0.0) zero = false;
    if (zero) {
      s.status = LpStatus::Optimal;
      s.x.assign(p.vars(), 0.0);
      s.objective = 0.0;
    } else {
      s.status = LpStatus::Unbounded;
      s.ray = p.c;  // c itself improves the objective
    }
    return s;
  }
  detail::Simplex simplex(p, tol);
  auto sol = simplex.run();
  if (sol.status == LpStatus::Unbounded) {
    // verify the certificate: A ray <= 0 and c^T ray > 0
    double crr = 0.0;
    for (std::size_t j = 0; j < p.vars(); ++j) crr += p.c[j] * sol.ray[j];
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < p.rows(); ++i) {
      double ar = 0.0;
      for (std::size_t j = 0; j < p.vars(); ++j) ar += p.a.at(i, j) * sol.ray[j];
      worst = std::max(worst, ar);
    }
    double rscale = 0.0;
    for (double v : sol.ray) rscale = std::max(rscale, std::fabs(v));
    if (!(crr > 0.0) || worst > 1e-7 * std::max(1.0, rscale))
      throw LpNumericalError("unbounded certificate failed verification");
  }
  return sol;
}

}  // namespace precondopt
