#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "precondopt/lanczos.hpp"
#include "precondopt/operator.hpp"
#include "precondopt/precond.hpp"
#include "precondopt/sip.hpp"
#include "precondopt/vec.hpp"

namespace precondopt {

enum class PricingNorm { L1, L2, Linf };

inline const char* pricing_norm_name(PricingNorm p) {
  switch (p) {
    case PricingNorm::L1: return "l1";
    case PricingNorm::L2: return "l2";
    default: return "linf";
  }
}

/// Unit-p-norm maximizer of <d, g>. Closed forms:
///   p=2   g / ||g||_2
///   p=inf sign(g), with sign(0) := +1
///   p=1   sign(g_i*) e_i* at the largest-magnitude coordinate (lowest index
///         wins ties)
inline DiagonalVec pricing(const DiagonalVec& g, PricingNorm p) {
  double gmax = 0.0;
  for (double v : g) gmax = std::max(gmax, std::fabs(v));
  if (!(gmax > 0.0))
    throw std::domain_error("pricing: zero gradient (whole-space optimum reached)");
  const std::size_t n = g.size();
  DiagonalVec d(n, 0.0);
  switch (p) {
    case PricingNorm::L2: {
      const double nrm = nrm2(g);
      for (std::size_t i = 0; i < n; ++i) d[i] = g[i] / nrm;
      break;
    }
    case PricingNorm::Linf:
      for (std::size_t i = 0; i < n; ++i) d[i] = g[i] >= 0.0 ? 1.0 : -1.0;
      break;
    case PricingNorm::L1: {
      std::size_t best = 0;
      for (std::size_t i = 1; i < n; ++i)
        if (std::fabs(g[i]) > std::fabs(g[best])) best = i;
      d[best] = g[best] >= 0.0 ? 1.0 : -1.0;
      break;
    }
  }
  return d;
}

struct IterateRow {
  std::size_t t = 0;  // 1-based improvement round
  DiagonalVec d_best;
  double kappa_bound = std::numeric_limits<double>::quiet_NaN();
  double tau = std::numeric_limits<double>::quiet_NaN();
  std::size_t sip_rounds = 0;
  std::size_t cuts = 0;  // total cut rows in the round's final restriction
  std::size_t matvecs_cumulative = 0;
};

struct IterateTrace {
  PricingNorm norm = PricingNorm::L2;
  std::vector<IterateRow> rows;
  bool stalled = false;  // pricing gradient vanished: optimal over all diagonals
};

struct IterateConfig {
  PricingNorm norm = PricingNorm::L2;
  double stall_tol = 1e-12;  // stop when ||g||_inf <= stall_tol * (1 + tau)
  SipConfig sip;
};

namespace detail {

inline bool near_parallel(const DiagonalVec& a, const DiagonalVec& b) {
  const double na = nrm2(a), nb = nrm2(b);
  if (!(na > 0.0) || !(nb > 0.0)) return true;
  return std::fabs(dot(a, b)) >= (1.0 - 1e-12) * na * nb;
}

}  // namespace detail

/// Improvement loop over preconditioners: each round optimizes over
/// span{1, d_best, d_hat}, reads the dual diagonal off the restriction LP,
/// and prices the next direction d_hat from it. The basis always keeps 1 so
/// the certified extraction applies, and keeps the incumbent so the bound
/// can only improve; a vanished pricing gradient means the incumbent is
/// optimal over all positive diagonals and ends the loop early.
inline std::pair<PrecondResult, IterateTrace> iterate_preconditioner(
    const LinearOperator& m, const DiagonalVec& d0, std::size_t T,
    const IterateConfig& cfg = {}) {
  if (T < 1) throw std::invalid_argument("iterate_preconditioner: T must be >= 1");
  if (d0.size() != m.dim()) throw std::invalid_argument("iterate_preconditioner: d0 size");
  if (!all_positive(d0))
    throw std::invalid_argument("iterate_preconditioner: d0 must be strictly positive");

  auto counter = std::make_shared<std::size_t>(0);
  const LinearOperator mc = counting_operator(m, counter);

  IterateTrace trace;
  trace.norm = cfg.norm;
  PrecondResult best;
  best.method = PrecondMethod::Iterative;
  best.d = d0;
  best.kappa_bound = std::numeric_limits<double>::infinity();
  DiagonalVec d_hat;  // empty until the first pricing round

  for (std::size_t t = 1; t <= T; ++t) {
    std::vector<DiagonalVec> members{ones(m.dim())};
    if (!detail::near_parallel(best.d, members[0])) members.push_back(best.d);
    if (!d_hat.empty() && !detail::near_parallel(d_hat, members[0]) &&
        (members.size() < 2 || !detail::near_parallel(d_hat, members[1])))
      members.push_back(d_hat);

    SipConfig scfg = cfg.sip;
    scfg.seed = derive_seed(cfg.sip.seed, 0x17E8 + t);
    auto res = optimize_in_subspace(mc, Basis::from_vectors(members), scfg);
    if (res.kappa_bound < best.kappa_bound) {
      best.d = res.d;
      best.kappa_bound = res.kappa_bound;
      best.tau = res.tau;
      best.certified = res.certified;
      best.diagnostics = res.diagnostics;
    }

    IterateRow row;
    row.t = t;
    row.d_best = best.d;
    row.kappa_bound = best.kappa_bound;
    row.tau = best.tau;
    row.sip_rounds = res.diagnostics->rounds;
    row.cuts = res.diagnostics->cuts1.size() + res.diagnostics->cuts2.size();
    row.matvecs_cumulative = *counter;
    trace.rows.push_back(std::move(row));

    if (t == T) break;
    const auto g = dual_diag(*res.diagnostics, m.dim());
    double gmax = 0.0;
    for (double v : g) gmax = std::max(gmax, std::fabs(v));
    if (gmax <= cfg.stall_tol * (1.0 + res.diagnostics->tau)) {
      trace.stalled = true;
      break;
    }
    d_hat = pricing(g, cfg.norm);
  }
  return {std::move(best), std::move(trace)};
}

inline std::pair<PrecondResult, IterateTrace> iterate_preconditioner(
    const SparseSymMatrix& m, const DiagonalVec& d0, std::size_t T,
    const IterateConfig& cfg = {}) {
  return iterate_preconditioner(operator_from_matrix(m), d0, T, cfg);
}

inline void write_iterate_trace_csv(const std::string& path, const IterateTrace& trace) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw std::runtime_error("cannot open trace file: " + path);
  std::fprintf(f, "t,kappa_bound,tau,cuts,matvecs\n");
  for (const auto& r : trace.rows)
    std::fprintf(f, "%zu,%.17g,%.17g,%zu,%zu\n", r.t, r.kappa_bound, r.tau, r.cuts,
                 r.matvecs_cumulative);
  std::fclose(f);
}

struct ScoreConfig {
  LanczosOptions lanczos;
  double gap_tol = 1e-8;      // relative Ritz gap below this flags degeneracy
  std::size_t dense_cap = 100;  // full matrix kept up to this dimension
  std::size_t top_q = 50;
  std::uint64_t seed = 0;
};

/// |vmax vmax^T - vmin vmin^T| entrywise: large entries mark the positions
/// whose coupling most limits the achievable condition number.
struct PatternScore {
  std::size_t n = 0;
  bool gap_warning = false;  // extremal eigenvalue nearly multiple; vectors unstable
  Mat entries;               // n x n, only when n <= dense_cap
  std::vector<std::tuple<std::size_t, std::size_t, double>> top;  // (i, j, score), i <= j, descending
};

inline PatternScore sparsity_score(const LinearOperator& m, const ScoreConfig& cfg = {}) {
  LanczosOptions o = cfg.lanczos;
  o.seed = derive_seed(cfg.seed, 0x5C0E);
  const auto pair = lanczos_extremes(m, o);
  if (!pair.smallest.converged || !pair.largest.converged)
    throw std::runtime_error("sparsity_score: eigenpair computation did not converge");
  const auto& vmin = pair.smallest.vector;
  const auto& vmax = pair.largest.vector;
  const std::size_t n = m.dim();

  PatternScore out;
  out.n = n;
  const double spread = pair.largest.value - pair.smallest.value;
  out.gap_warning = (pair.second_smallest - pair.smallest.value) <= cfg.gap_tol * spread ||
                    (pair.largest.value - pair.second_largest) <= cfg.gap_tol * spread;

  auto score_at = [&](std::size_t i, std::size_t j) {
    return std::fabs(vmax[i] * vmax[j] - vmin[i] * vmin[j]);
  };
  if (n <= cfg.dense_cap) {
    out.entries = Mat(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) out.entries.at(i, j) = score_at(i, j);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i; j < n; ++j) out.top.emplace_back(i, j, score_at(i, j));
  } else {
    // a large score needs a large product in at least one of the two outer
    // products, so candidates come from the biggest entries of either vector
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    const std::size_t r = std::min<std::size_t>(
        n, std::max<std::size_t>(64, 4 * static_cast<std::size_t>(
                                          std::ceil(std::sqrt(double(cfg.top_q))))));
    std::partial_sort(idx.begin(), idx.begin() + r, idx.end(),
                      [&](std::size_t a, std::size_t b) {
                        return std::max(std::fabs(vmax[a]), std::fabs(vmin[a])) >
                               std::max(std::fabs(vmax[b]), std::fabs(vmin[b]));
                      });
    for (std::size_t a = 0; a < r; ++a)
      for (std::size_t b = a; b < r; ++b) {
        const std::size_t i = std::min(idx[a], idx[b]), j = std::max(idx[a], idx[b]);
        out.top.emplace_back(i, j, score_at(i, j));
      }
  }
  std::sort(out.top.begin(), out.top.end(), [](const auto& a, const auto& b) {
    return std::get<2>(a) > std::get<2>(b);
  });
  if (out.top.size() > cfg.top_q) out.top.resize(cfg.top_q);
  return out;
}

inline PatternScore sparsity_score(const SparseSymMatrix& m, const ScoreConfig& cfg = {}) {
  return sparsity_score(operator_from_matrix(m), cfg);
}

}  // namespace precondopt
