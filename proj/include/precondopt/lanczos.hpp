#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "precondopt/dense.hpp"
#include "precondopt/operator.hpp"
#include "precondopt/rng.hpp"
#include "precondopt/vec.hpp"

namespace precondopt {

enum class ExtremalSide { Smallest, Largest };

struct LanczosOptions {
  double rel_tol = 1e-14;       // converged when residual <= rel_tol * ||S||_est
  std::size_t max_iter = 1200;  // additionally capped at dim(S)
  std::uint64_t seed = 0;
  bool record_ritz_trace = false;
};

struct EigResult {
  double value = 0.0;
  std::vector<double> vector;
  std::size_t iterations = 0;
  double residual = std::numeric_limits<double>::infinity();
  bool converged = false;
};

/// One Krylov process, advanced a step at a time. Full reorthogonalization:
/// every new direction is orthogonalized against the whole stored basis
/// (classical Gram-Schmidt, second pass when the first one cancels mass), so
/// Ritz values stay monotone in the step count up to rounding. Both ends of
/// the tridiagonal Ritz spectrum are tracked after every step.
class LanczosRun {
 public:
  LanczosRun(const LinearOperator& op, std::uint64_t seed)
      : op_(op), n_(op.dim()), rng_(seed), w_(n_), exhausted_(n_ == 0) {
    if (n_ == 0) throw std::invalid_argument("lanczos: empty operator");
    auto v0 = rng_.gaussian_vec(n_);
    const double nv = nrm2(v0);
    if (!(nv > 0.0)) throw std::runtime_error("lanczos: degenerate start vector");
    scal(1.0 / nv, v0);
    basis_.push_back(std::move(v0));
  }

  /// Advances one step (one operator apply). Returns false once the Krylov
  /// space covers all of R^n; Ritz values are then exact eigenvalues.
  bool step() {
    if (exhausted_) return false;
    const auto& v = basis_.back();
    op_.apply(v, w_);
    ++matvecs_;
    const double a = dot(w_, v);
    alpha_.push_back(a);
    axpy(-a, v, w_);
    if (alpha_.size() >= 2) axpy(-beta_.back(), basis_[basis_.size() - 2], w_);
    reorthogonalize(w_);
    double b = nrm2(w_);
    refresh_ritz();
    if (basis_.size() == n_) {
      exhausted_ = true;
      return false;
    }
    const double breakdown_floor = 1e-13 * std::max(norm_estimate(), 1e-300);
    if (b <= breakdown_floor) {
      // invariant subspace found: restart orthogonally to it
      for (int attempt = 0; attempt < 4; ++attempt) {
        w_ = rng_.gaussian_vec(n_);
        reorthogonalize(w_);
        b = nrm2(w_);
        if (b > 1e-8) break;
      }
      if (b <= 1e-8) {
        exhausted_ = true;
        return false;
      }
      beta_.push_back(0.0);  // exact decoupling between the blocks of T
    } else {
      beta_.push_back(b);
    }
    scal(1.0 / b, w_);
    basis_.push_back(w_);
    return true;
  }

  std::size_t steps() const { return alpha_.size(); }
  std::size_t matvecs() const { return matvecs_; }
  bool exhausted() const { return exhausted_; }
  std::size_t dim() const { return n_; }

  double ritz_value(ExtremalSide side) const {
    return side == ExtremalSide::Smallest ? theta_min_ : theta_max_;
  }

  /// |beta_m * (last component of the T-eigenvector)|: the classical residual
  /// estimate for the current extremal Ritz pair.
  double ritz_residual_est(ExtremalSide side) const {
    if (exhausted_) return 0.0;
    const auto& s = side == ExtremalSide::Smallest ? smin_ : smax_;
    if (s.empty() || beta_.size() < alpha_.size()) {
      // beta for the current frontier not formed yet; use last known
      return frontier_beta_ * std::fabs(s.empty() ? 1.0 : s.back());
    }
    return std::fabs(beta_[alpha_.size() - 1] * s.back());
  }

  /// Second Ritz value from the same end; gap proxy for simplicity checks.
  double ritz_value_second(ExtremalSide side) const {
    const std::size_t m = alpha_.size();
    if (m < 2) return ritz_value(side);
    return side == ExtremalSide::Smallest ? tridiag_eig_kth(alpha_, beta_view(), 1)
                                          : tridiag_eig_kth(alpha_, beta_view(), m - 2);
  }

  double norm_estimate() const { return std::max(std::fabs(theta_min_), std::fabs(theta_max_)); }

  std::vector<double> ritz_vector(ExtremalSide side) const {
    return assemble(side == ExtremalSide::Smallest ? smin_ : smax_);
  }

  /// k-th smallest Ritz value (0-based) and its vector in the original space.
  double ritz_value_kth(std::size_t k) const { return tridiag_eig_kth(alpha_, beta_view(), k); }
  std::vector<double> ritz_vector_kth(std::size_t k) const {
    return assemble(tridiag_eigvec(alpha_, beta_view(), ritz_value_kth(k)));
  }

  const std::vector<std::pair<double, double>>& ritz_trace() const { return trace_; }
  void enable_trace() { record_trace_ = true; }

 private:
  std::vector<double> assemble(const std::vector<double>& s) const {
    std::vector<double> x(n_, 0.0);
    for (std::size_t j = 0; j < s.size(); ++j) axpy(s[j], basis_[j], x);
    const double nx = nrm2(x);
    if (nx > 0.0) scal(1.0 / nx, x);
    return x;
  }

  std::vector<double> beta_view() const {
    // beta_ may hold a frontier entry not yet part of T (rank = alpha count)
    if (beta_.size() >= alpha_.size())
      return std::vector<double>(beta_.begin(), beta_.begin() + (alpha_.size() - 1));
    return beta_;
  }

  void reorthogonalize(std::vector<double>& w) {
    const double before = nrm2(w);
    gs_pass(w);
    const double mid = nrm2(w);
    if (mid < 0.7071 * before) gs_pass(w);
  }

  void gs_pass(std::vector<double>& w) {
    for (const auto& v : basis_) {
      const double c = dot(w, v);
      if (c != 0.0) axpy(-c, v, w);
    }
  }

  void refresh_ritz() {
    const std::size_t m = alpha_.size();
    const auto b = beta_view();
    theta_min_ = tridiag_eig_kth(alpha_, b, 0);
    theta_max_ = m == 1 ? theta_min_ : tridiag_eig_kth(alpha_, b, m - 1);
    smin_ = tridiag_eigvec(alpha_, b, theta_min_);
    smax_ = m == 1 ? smin_ : tridiag_eigvec(alpha_, b, theta_max_);
    frontier_beta_ = beta_.empty() ? 0.0 : std::fabs(beta_.back());
    if (record_trace_) trace_.push_back({theta_min_, theta_max_});
  }

  const LinearOperator& op_;
  std::size_t n_;
  Rng rng_;
  std::vector<std::vector<double>> basis_;
  std::vector<double> alpha_, beta_, w_;
  std::vector<double> smin_, smax_;
  double theta_min_ = 0.0, theta_max_ = 0.0, frontier_beta_ = 0.0;
  std::size_t matvecs_ = 0;
  bool exhausted_ = false;
  bool record_trace_ = false;
  std::vector<std::pair<double, double>> trace_;
};

namespace detail {

/// True residual ||S x - theta x|| for a unit Ritz vector (one apply).
inline double true_residual(const LinearOperator& op, const std::vector<double>& x, double theta) {
  std::vector<double> y(x.size());
  op.apply(x, y);
  axpy(-theta, x, y);
  return nrm2(y);
}

}  // namespace detail

/// Extremal eigenpair by Lanczos. Converged means the *recomputed* residual
/// ||S v - lambda v|| is at most rel_tol times the operator-norm estimate
/// (largest |Ritz value| seen); a non-converged result still carries the best
/// pair found within max_iter.
inline EigResult lanczos_extreme(const LinearOperator& op, ExtremalSide side,
                                 const LanczosOptions& opts = {}) {
  LanczosRun run(op, opts.seed);
  if (opts.record_ritz_trace) run.enable_trace();
  const std::size_t cap = std::min<std::size_t>(opts.max_iter, op.dim());
  EigResult best;
  while (true) {
    const bool more = run.step();
    const double theta = run.ritz_value(side);
    const double scale = std::max(run.norm_estimate(), 1e-300);
    if (!more) {  // exact subspace
      best.value = theta;
      best.vector = run.ritz_vector(side);
      best.iterations = run.steps();
      best.residual = detail::true_residual(op, best.vector, theta);
      best.converged = true;
      return best;
    }
    if (run.ritz_residual_est(side) <= opts.rel_tol * scale || run.steps() >= cap) {
      auto x = run.ritz_vector(side);
      const double r = detail::true_residual(op, x, theta);
      if (r <= opts.rel_tol * scale) {
        best.value = theta;
        best.vector = std::move(x);
        best.iterations = run.steps();
        best.residual = r;
        best.converged = true;
        return best;
      }
      if (run.steps() >= cap) {
        best.value = theta;
        best.vector = std::move(x);
        best.iterations = run.steps();
        best.residual = r;
        best.converged = false;
        return best;
      }
    }
  }
}

/// Both ends from one Krylov process.
struct ExtremePair {
  EigResult smallest, largest;
  double second_smallest = 0.0, second_largest = 0.0;
  std::size_t matvecs = 0;
};

inline ExtremePair lanczos_extremes(const LinearOperator& op, const LanczosOptions& opts = {}) {
  LanczosRun run(op, opts.seed);
  const std::size_t cap = std::min<std::size_t>(opts.max_iter, op.dim());
  ExtremePair out;
  bool more = true;
  while (more) {
    more = run.step();
    const double scale = std::max(run.norm_estimate(), 1e-300);
    if (!more || run.steps() >= cap ||
        (run.ritz_residual_est(ExtremalSide::Smallest) <= opts.rel_tol * scale &&
         run.ritz_residual_est(ExtremalSide::Largest) <= opts.rel_tol * scale)) {
      for (const auto side : {ExtremalSide::Smallest, ExtremalSide::Largest}) {
        EigResult r;
        r.value = run.ritz_value(side);
        r.vector = run.ritz_vector(side);
        r.iterations = run.steps();
        r.residual = detail::true_residual(op, r.vector, r.value);
        r.converged = !more || r.residual <= opts.rel_tol * scale;
        (side == ExtremalSide::Smallest ? out.smallest : out.largest) = std::move(r);
      }
      const bool done = (out.smallest.converged && out.largest.converged) || !more ||
                        run.steps() >= cap;
      if (done) {
        out.second_smallest = run.ritz_value_second(ExtremalSide::Smallest);
        out.second_largest = run.ritz_value_second(ExtremalSide::Largest);
        out.matvecs = run.matvecs() + 2;
        return out;
      }
    }
  }
  return out;  // unreachable
}

/// Spectral-norm estimate: largest |eigenvalue| from a short Krylov run.
inline double estimate_operator_norm(const LinearOperator& op, std::uint64_t seed,
                                     std::size_t iters = 40) {
  LanczosRun run(op, seed);
  const std::size_t cap = std::min<std::size_t>(iters, op.dim());
  for (std::size_t i = 0; i < cap && run.step(); ++i) {
  }
  return run.norm_estimate();
}

// --- separation oracle ------------------------------------------------------

enum class ProbeVerdict { Feasible, Violated, Inconclusive };

struct ProbeResult {
  ProbeVerdict verdict = ProbeVerdict::Inconclusive;
  /// Violated: the direct quadratic form <v,Sv> (< -eps). Otherwise the best
  /// certified lower estimate of lambda_min.
  double lambda_est = 0.0;
  std::vector<double> vector;  // violating unit direction when Violated
  /// Further violating unit directions from the same Krylov space, each
  /// verified by a direct quadratic form < -eps. When the active bottom
  /// eigenspace is multi-dimensional, feeding these back alongside `vector`
  /// spares one separation round per direction.
  std::vector<std::vector<double>> extra_vectors;
  std::size_t iterations = 0;
  std::size_t matvecs = 0;
};

/// Decides whether lambda_min(S) clears -eps. A violating Ritz pair may be
/// returned before full convergence -- any direction with quadratic form below
/// -eps is a valid cut -- but it is polished until its residual drops to a few
/// percent so the direction is close to the true extremal eigenvector.
/// Feasible requires the smallest Ritz pair itself to be converged (true
/// residual at the rel_tol floor, or a fraction of eps if that is larger) with
/// theta above -eps: an unconverged pair only locates *some* eigenvalue near
/// theta and says nothing about the spectrum below it. Inconclusive only when
/// max_iter runs out undecided.
inline ProbeResult separation_probe(const LinearOperator& s, double eps,
                                    const LanczosOptions& opts = {}) {
  LanczosRun run(s, opts.seed);
  const std::size_t cap = std::min<std::size_t>(opts.max_iter, s.dim());
  constexpr double polish = 0.01;  // relative residual required for an early cut
  constexpr std::size_t max_extra = 3;
  ProbeResult out;

  // secondary Ritz directions below -eps, verified by one apply each
  auto harvest_extras = [&] {
    std::vector<double> y(s.dim());
    for (std::size_t j = 1; j <= max_extra && j < run.steps(); ++j) {
      if (!(run.ritz_value_kth(j) < -eps)) break;  // Ritz values ascend in j
      auto x = run.ritz_vector_kth(j);
      s.apply(x, y);
      ++out.matvecs;
      if (dot(x, y) < -eps) out.extra_vectors.push_back(std::move(x));
    }
  };

  auto try_violated = [&](double theta) -> bool {
    auto x = run.ritz_vector(ExtremalSide::Smallest);
    std::vector<double> y(x.size());
    s.apply(x, y);
    const double q = dot(x, y);
    if (q < -eps) {
      out.verdict = ProbeVerdict::Violated;
      out.lambda_est = q;
      out.vector = std::move(x);
      out.iterations = run.steps();
      out.matvecs = run.matvecs() + 1;
      harvest_extras();
      return true;
    }
    (void)theta;
    return false;  // direct form disagrees at the boundary: keep going
  };

  while (true) {
    const bool more = run.step();
    const double theta = run.ritz_value(ExtremalSide::Smallest);

    if (!more) {  // exact spectrum now known
      out.verdict = theta <= -eps ? ProbeVerdict::Violated : ProbeVerdict::Feasible;
      out.lambda_est = theta;
      out.iterations = run.steps();
      out.matvecs = run.matvecs();
      if (out.verdict == ProbeVerdict::Violated) {
        out.vector = run.ritz_vector(ExtremalSide::Smallest);
        harvest_extras();
      }
      return out;
    }

    const double r_est = run.ritz_residual_est(ExtremalSide::Smallest);
    if (theta <= -eps && r_est <= polish * std::max(std::fabs(theta), eps) && try_violated(theta))
      return out;

    const double scale = std::max(run.norm_estimate(), std::fabs(theta));
    const double conv_thresh = std::max(opts.rel_tol * scale, 0.25 * eps);
    if (theta > -eps && r_est <= conv_thresh) {
      auto x = run.ritz_vector(ExtremalSide::Smallest);
      const double r_true = detail::true_residual(s, x, theta);
      if (r_true <= conv_thresh && theta - r_true > -eps) {
        out.verdict = ProbeVerdict::Feasible;
        out.lambda_est = theta - r_true;
        out.iterations = run.steps();
        out.matvecs = run.matvecs() + 1;
        return out;
      }
    }

    if (run.steps() >= cap) {
      // out of budget: a crude violating direction still beats no answer
      if (theta <= -eps && try_violated(theta)) return out;
      out.verdict = ProbeVerdict::Inconclusive;
      out.lambda_est = theta - r_est;
      out.iterations = run.steps();
      out.matvecs = run.matvecs();
      return out;
    }
  }
}

}  // namespace precondopt
