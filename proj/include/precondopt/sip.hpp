#pragma once

#include <cmath>
#include <cstddef>
#include <fstream>
#include <limits>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "precondopt/basis.hpp"
#include "precondopt/lanczos.hpp"
#include "precondopt/lp.hpp"
#include "precondopt/operator.hpp"
#include "precondopt/rng.hpp"
#include "precondopt/vec.hpp"

namespace precondopt {

/// One block's working set of separation vectors together with the cached
/// linearization coefficients: for a vector v, <v, M v> and <v, D_i v> for
/// each basis member d_i. Each add costs one matvec.
class CutSet {
 public:
  void add(const std::vector<double>& v, const LinearOperator& m, const Basis& basis) {
    std::vector<double> mv(v.size());
    m.apply(v, mv);
    m_coeffs_.push_back(dot(v, mv));
    std::vector<double> dc(basis.size());
    for (std::size_t i = 0; i < basis.size(); ++i) {
      double s = 0.0;
      const auto& d = basis.vectors[i];
      for (std::size_t j = 0; j < v.size(); ++j) s += d[j] * v[j] * v[j];
      dc[i] = s;
    }
    d_coeffs_.push_back(std::move(dc));
    vectors_.push_back(v);
  }

  std::size_t size() const { return vectors_.size(); }
  const std::vector<double>& vector(std::size_t j) const { return vectors_[j]; }
  double m_coeff(std::size_t j) const { return m_coeffs_[j]; }
  const std::vector<double>& d_coeff(std::size_t j) const { return d_coeffs_[j]; }

  /// Keeps cut j iff keep[j]; cached coefficients move along, no matvecs.
  void filter(const std::vector<char>& keep) {
    std::size_t w = 0;
    for (std::size_t j = 0; j < vectors_.size(); ++j) {
      if (!keep[j]) continue;
      if (w != j) {
        vectors_[w] = std::move(vectors_[j]);
        m_coeffs_[w] = m_coeffs_[j];
        d_coeffs_[w] = std::move(d_coeffs_[j]);
      }
      ++w;
    }
    vectors_.resize(w);
    m_coeffs_.resize(w);
    d_coeffs_.resize(w);
  }

 private:
  std::vector<std::vector<double>> vectors_;
  std::vector<double> m_coeffs_;
  std::vector<std::vector<double>> d_coeffs_;
};

enum class SipStatus { Converged, IterLimit, OracleInconclusive, LpFailure };

struct SipTraceRow {
  std::size_t round = 0;
  double lambda1 = std::numeric_limits<double>::quiet_NaN();
  double lambda2 = std::numeric_limits<double>::quiet_NaN();
  double tau = std::numeric_limits<double>::quiet_NaN();
  std::size_t cuts1 = 0, cuts2 = 0;
  std::size_t matvecs = 0;
};

struct SipConfig {
  double eps = 1e-10;            // separation slack: a block is violated below -eps
  std::size_t max_rounds = 200;
  std::size_t n_init_cuts = 20;  // random unit probes seeded into each block
  LanczosOptions lanczos;
  double lp_tol = 1e-12;  // row enforcement must beat eps or cuts can deadlock
  std::uint64_t seed = 0;
  std::size_t max_consecutive_unbounded = 8;
};

struct SipSolution {
  SipStatus status = SipStatus::LpFailure;
  double tau = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> z;
  CutSet cuts1, cuts2;  // rows of the final restriction, in LP row order
  LpSolution lp;        // block-1 rows first, then block-2 rows
  std::vector<SipTraceRow> trace;
  std::size_t rounds = 0;
  std::size_t matvecs = 0;
};

namespace detail {

inline LpProblem assemble_restriction(const CutSet& c1, const CutSet& c2, std::size_t k) {
  // variables: (tau, z_1..z_k); maximize tau
  LpProblem p;
  const std::size_t m = c1.size() + c2.size();
  p.c.assign(k + 1, 0.0);
  p.c[0] = 1.0;
  p.a = Mat(m, k + 1);
  p.b.assign(m, 0.0);
  p.origin.assign(m, RowOrigin::CutBlock1);
  for (std::size_t j = 0; j < c1.size(); ++j) {
    p.a.at(j, 0) = c1.m_coeff(j);  // <v,Mv> tau - sum_i <v,D_i v> z_i <= 0
    for (std::size_t i = 0; i < k; ++i) p.a.at(j, i + 1) = -c1.d_coeff(j)[i];
  }
  for (std::size_t j = 0; j < c2.size(); ++j) {
    const std::size_t r = c1.size() + j;  // sum_i <v,D_i v> z_i <= <v,Mv>
    for (std::size_t i = 0; i < k; ++i) p.a.at(r, i + 1) = c2.d_coeff(j)[i];
    p.b[r] = c2.m_coeff(j);
    p.origin[r] = RowOrigin::CutBlock2;
  }
  return p;
}

inline std::vector<double> random_unit_vector(std::size_t n, Rng& rng) {
  auto v = rng.gaussian_vec(n);
  const double nrm = nrm2(v);
  if (nrm == 0.0) return std::vector<double>(n, 1.0 / std::sqrt(double(n)));
  scal(1.0 / nrm, v);
  return v;
}

/// Drops aged rows of one block that are neither dual-active nor near-tight at
/// the solved restriction, once the block outgrows its ceiling. Dropped cuts
/// lose nothing permanent -- a direction that matters again is re-separated --
/// while every retired row shrinks the (rows^2-per-pivot) LP work. Only the
/// first `nrows` cuts are judged: anything added after the LP was assembled
/// has no dual information yet.
inline void prune_cuts(CutSet& cuts, std::vector<int>& age, const LpProblem& lp,
                       const LpSolution& sol, std::size_t row0, std::size_t nrows,
                       std::size_t ceiling) {
  if (cuts.size() <= ceiling) return;
  double ymax = 0.0;
  for (double v : sol.y) ymax = std::max(ymax, std::fabs(v));
  const std::size_t cols = lp.c.size();
  std::vector<char> keep(cuts.size(), 1);
  bool any = false;
  for (std::size_t j = 0; j < nrows; ++j) {
    if (age[j] <= 1) continue;
    const std::size_t r = row0 + j;
    if (std::fabs(sol.y[r]) > 1e-12 * (1.0 + ymax)) continue;
    double ax = 0.0, ax_abs = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      const double t = lp.a.at(r, c) * sol.x[c];
      ax += t;
      ax_abs += std::fabs(t);
    }
    const double slack = lp.b[r] - ax;
    if (slack <= 1e-9 * (1.0 + ax_abs + std::fabs(lp.b[r]))) continue;
    keep[j] = 0;
    any = true;
  }
  if (!any) return;
  cuts.filter(keep);
  std::size_t w = 0;
  for (std::size_t j = 0; j < age.size(); ++j)
    if (keep[j]) age[w++] = age[j];
  age.resize(w);
}

}  // namespace detail

/// Cutting-plane solve of the subspace restriction of
///   max tau  s.t.  tau M <= sum_i z_i D_i <= M.
/// Alternates an LP over the accumulated cuts with extremal-eigenvalue
/// separation on both matrix blocks; a violated block contributes its probe
/// vector as a new cut. Terminates when both blocks certify lambda_min > -eps.
inline SipSolution solve_subspace_sdp(const LinearOperator& m, const Basis& basis,
                                      const SipConfig& cfg) {
  const std::size_t n = m.dim();
  const std::size_t k = basis.size();
  if (k == 0) throw std::invalid_argument("solve_subspace_sdp: empty basis");
  for (const auto& d : basis.vectors)
    if (d.size() != n) throw std::invalid_argument("solve_subspace_sdp: basis dim mismatch");

  auto counter = std::make_shared<std::size_t>(0);
  LinearOperator mc = counting_operator(m, counter);

  SipSolution out;
  Rng init_rng(derive_seed(cfg.seed, 0x1717));
  for (std::size_t j = 0; j < cfg.n_init_cuts; ++j)
    out.cuts1.add(detail::random_unit_vector(n, init_rng), mc, basis);
  for (std::size_t j = 0; j < cfg.n_init_cuts; ++j)
    out.cuts2.add(detail::random_unit_vector(n, init_rng), mc, basis);

  // rounds-survived counter per cut; the generic seed cuts start droppable
  std::vector<int> age1(out.cuts1.size(), 2), age2(out.cuts2.size(), 2);
  auto add1 = [&](const std::vector<double>& v) {
    out.cuts1.add(v, mc, basis);
    age1.push_back(0);
  };
  auto add2 = [&](const std::vector<double>& v) {
    out.cuts2.add(v, mc, basis);
    age2.push_back(0);
  };
  const std::size_t ceiling = 3 * (k + 1) + 24;  // per block

  std::size_t consecutive_unbounded = 0;
  for (std::size_t round = 1; round <= cfg.max_rounds; ++round) {
    out.rounds = round;
    LpProblem lp = detail::assemble_restriction(out.cuts1, out.cuts2, k);
    LpSolution sol;
    try {
      sol = solve_lp(lp, cfg.lp_tol);
    } catch (const LpNumericalError&) {
      out.status = SipStatus::LpFailure;
      out.matvecs = *counter;
      return out;
    }
    if (sol.status == LpStatus::Infeasible) {
      // (z, tau) = (0, -1) satisfies every cut of an SPD operator; reaching
      // here means the LP layer lost its way
      out.status = SipStatus::LpFailure;
      out.matvecs = *counter;
      return out;
    }
    if (sol.status == LpStatus::Unbounded) {
      if (++consecutive_unbounded > cfg.max_consecutive_unbounded) {
        out.status = SipStatus::LpFailure;
        out.matvecs = *counter;
        return out;
      }
      Rng extra(derive_seed(cfg.seed, 0x2800 + round));
      for (int j = 0; j < 4; ++j) {
        add1(detail::random_unit_vector(n, extra));
        add2(detail::random_unit_vector(n, extra));
      }
      continue;
    }
    consecutive_unbounded = 0;

    const double tau_hat = sol.x[0];
    std::vector<double> z_hat(sol.x.begin() + 1, sol.x.end());

    LanczosOptions popts = cfg.lanczos;
    popts.seed = derive_seed(cfg.seed, 0x5E00 + 2 * round);
    LinearOperator s1 = constraint_operator(mc, basis, z_hat, tau_hat, ConstraintBlock::One);
    ProbeResult p1 = separation_probe(s1, cfg.eps, popts);
    popts.seed = derive_seed(cfg.seed, 0x5E00 + 2 * round + 1);
    LinearOperator s2 = constraint_operator(mc, basis, z_hat, tau_hat, ConstraintBlock::Two);
    ProbeResult p2 = separation_probe(s2, cfg.eps, popts);

    out.tau = tau_hat;
    out.z = z_hat;
    out.lp = sol;
    out.trace.push_back({round, p1.lambda_est, p2.lambda_est, tau_hat, out.cuts1.size(),
                         out.cuts2.size(), *counter});

    const bool v1 = p1.verdict == ProbeVerdict::Violated;
    const bool v2 = p2.verdict == ProbeVerdict::Violated;
    if (p1.verdict == ProbeVerdict::Feasible && p2.verdict == ProbeVerdict::Feasible) {
      out.status = SipStatus::Converged;
      out.matvecs = *counter;
      return out;
    }
    if (!v1 && !v2) {
      // at least one probe ran out of budget without a verdict
      out.status = SipStatus::OracleInconclusive;
      out.matvecs = *counter;
      return out;
    }
    const std::size_t n1 = out.cuts1.size(), n2 = out.cuts2.size();
    if (v1) {
      add1(p1.vector);
      for (const auto& x : p1.extra_vectors) add1(x);
    }
    if (v2) {
      add2(p2.vector);
      for (const auto& x : p2.extra_vectors) add2(x);
    }
    for (int& a : age1) ++a;
    for (int& a : age2) ++a;
    detail::prune_cuts(out.cuts1, age1, lp, sol, 0, n1, ceiling);
    detail::prune_cuts(out.cuts2, age2, lp, sol, n1, n2, ceiling);
  }
  out.status = SipStatus::IterLimit;
  out.matvecs = *counter;
  return out;
}

/// Shift an approximate restriction optimum onto the exactly feasible set.
/// e1 and e2 bound the infeasibility of each block (block b is known to sit
/// above -e_b); passing the convergence tolerance for both recovers the
/// uniform shift, while the measured final probe values give a much tighter
/// certificate. Needs the basis to represent the all-ones vector
/// (combination a):
///   tau' = tau_hat - (e1 + e2) / lambda_min_m,   z' = z_hat - e2 a,
/// so diagm(d') - tau' M gains (e1+e2)/lambda_min_m * M >= (e1+e2) I against
/// the -e1 I deficit and the extra -e2 I from the z shift, and M - diagm(d')
/// gains e2 I against its -e2 I deficit. lambda_min_m must be a lower
/// estimate of the smallest eigenvalue of M; callers shrink their Lanczos
/// value to stay on the safe side.
struct Extraction {
  bool ok = false;
  double tau_prime = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> z_prime;
};

inline Extraction extract_feasible(const Basis& basis, double tau_hat,
                                   const std::vector<double>& z_hat, double e1, double e2,
                                   double lambda_min_m) {
  Extraction e;
  if (e1 < 0.0 || e2 < 0.0) throw std::invalid_argument("extract_feasible: negative slack");
  if (!basis.identity_combo || lambda_min_m <= 0.0) return e;
  const auto& a = *basis.identity_combo;
  if (a.size() != z_hat.size()) throw std::invalid_argument("extract_feasible: size mismatch");
  e.tau_prime = tau_hat - (e1 + e2) / lambda_min_m;
  if (!(e.tau_prime > 0.0)) return e;  // degenerate regime: shift swallows the value
  e.z_prime = z_hat;
  for (std::size_t i = 0; i < a.size(); ++i) e.z_prime[i] -= e2 * a[i];
  e.ok = true;
  return e;
}

/// Independent feasibility audit of a candidate (tau, z): probes both blocks
/// with a fresh seed and reports the probe outcomes.
struct FeasibilityAudit {
  ProbeResult block1, block2;
  bool feasible(double tol) const {
    auto pass = [tol](const ProbeResult& p) {
      return p.verdict == ProbeVerdict::Feasible ||
             (p.verdict != ProbeVerdict::Violated && p.lambda_est >= -tol);
    };
    return pass(block1) && pass(block2);
  }
};

inline FeasibilityAudit audit_feasibility(const LinearOperator& m, const Basis& basis,
                                          double tau, const std::vector<double>& z, double eps,
                                          const LanczosOptions& opts) {
  FeasibilityAudit a;
  LinearOperator s1 = constraint_operator(m, basis, z, tau, ConstraintBlock::One);
  LinearOperator s2 = constraint_operator(m, basis, z, tau, ConstraintBlock::Two);
  LanczosOptions o = opts;
  a.block1 = separation_probe(s1, eps, o);
  o.seed = derive_seed(opts.seed, 0xA0D1);
  a.block2 = separation_probe(s2, eps, o);
  return a;
}

/// Diagonal of the dual slack difference, assembled from the final LP duals:
///   g = sum_j y1_j (v1_j . v1_j) - sum_j y2_j (v2_j . v2_j),
/// elementwise squares of the cut vectors weighted by their dual multipliers.
/// The block-1 weights against <v,Mv> sum to one at an LP optimum; if rounding
/// drifted past 1e-7 the output is rescaled by that sum.
inline std::vector<double> dual_diag(const SipSolution& sol, std::size_t n) {
  if (sol.lp.y.size() != sol.cuts1.size() + sol.cuts2.size())
    throw std::invalid_argument("dual_diag: dual length does not match cut rows");
  std::vector<double> g(n, 0.0);
  double norm_sum = 0.0;
  for (std::size_t j = 0; j < sol.cuts1.size(); ++j) {
    const double w = sol.lp.y[j];
    norm_sum += w * sol.cuts1.m_coeff(j);
    if (w == 0.0) continue;
    const auto& v = sol.cuts1.vector(j);
    for (std::size_t i = 0; i < n; ++i) g[i] += w * v[i] * v[i];
  }
  for (std::size_t j = 0; j < sol.cuts2.size(); ++j) {
    const double w = sol.lp.y[sol.cuts1.size() + j];
    if (w == 0.0) continue;
    const auto& v = sol.cuts2.vector(j);
    for (std::size_t i = 0; i < n; ++i) g[i] -= w * v[i] * v[i];
  }
  if (std::fabs(norm_sum - 1.0) > 1e-7 && norm_sum > 0.0)
    for (auto& v : g) v /= norm_sum;
  return g;
}

inline void write_sip_trace_csv(const std::string& path, const std::vector<SipTraceRow>& trace) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open trace file: " + path);
  f << "round,lambda_block1,lambda_block2,tau,cuts_block1,cuts_block2,matvecs\n";
  f.precision(17);
  for (const auto& r : trace)
    f << r.round << ',' << r.lambda1 << ',' << r.lambda2 << ',' << r.tau << ',' << r.cuts1 << ','
      << r.cuts2 << ',' << r.matvecs << '\n';
}

}  // namespace precondopt
