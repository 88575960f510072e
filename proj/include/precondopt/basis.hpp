#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <vector>

#include "precondopt/dense.hpp"
#include "precondopt/vec.hpp"

namespace precondopt {

/// A diagonal preconditioner candidate: d stands for diagm(d). Entries must be
/// finite; check all_positive(d) before using it as an actual preconditioner.
using DiagonalVec = std::vector<double>;

/// Span of k diagonal directions {d_1..d_k}. If the all-ones vector lies in
/// the span, identity_combo holds coefficients a with sum_i d_i a_i = 1; the
/// feasibility-extraction shift needs it.
struct Basis {
  std::vector<DiagonalVec> vectors;
  std::optional<std::vector<double>> identity_combo;

  std::size_t size() const { return vectors.size(); }
  std::size_t dim() const { return vectors.empty() ? 0 : vectors[0].size(); }

  /// d(z) = sum_i d_i z_i
  DiagonalVec combine(const std::vector<double>& z) const {
    if (z.size() != vectors.size()) throw std::invalid_argument("combine: coefficient count");
    DiagonalVec d(dim(), 0.0);
    for (std::size_t i = 0; i < vectors.size(); ++i) axpy(z[i], vectors[i], d);
    return d;
  }

  static Basis from_vectors(std::vector<DiagonalVec> vecs) {
    Basis b;
    b.vectors = std::move(vecs);
    if (b.vectors.empty()) throw std::invalid_argument("basis must be nonempty");
    const std::size_t n = b.vectors[0].size();
    if (n == 0) throw std::invalid_argument("basis vectors must have length >= 1");
    for (const auto& v : b.vectors) {
      if (v.size() != n) throw std::invalid_argument("basis vectors must share one length");
      if (!all_finite(v)) throw std::invalid_argument("non-finite basis vector entry");
    }
    b.identity_combo = solve_identity_combo(b.vectors);
    return b;
  }

 private:
  /// Least-squares fit of 1 in the span; accepted only when the residual is at
  /// rounding level (2-norm <= 1e-12*sqrt(n) and max entry <= 1e-12), so the
  /// combo can be treated as exact downstream.
  static std::optional<std::vector<double>> solve_identity_combo(
      const std::vector<DiagonalVec>& vecs) {
    const std::size_t k = vecs.size();
    const std::size_t n = vecs[0].size();
    // exact member short-circuit: a constant vector c*1 with c != 0
    for (std::size_t i = 0; i < k; ++i) {
      if (is_constant(vecs[i]) && vecs[i][0] != 0.0) {
        std::vector<double> a(k, 0.0);
        a[i] = 1.0 / vecs[i][0];
        return a;
      }
    }
    Mat g(k, k);
    std::vector<double> rhs(k);
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = i; j < k; ++j) {
        const double v = dot(vecs[i], vecs[j]);
        g.at(i, j) = v;
        g.at(j, i) = v;
      }
      double s = 0.0;
      for (double x : vecs[i]) s += x;
      rhs[i] = s;
    }
    std::vector<double> a;
    try {
      a = lu_solve(g, rhs);
    } catch (const std::exception&) {
      return std::nullopt;
    }
    std::vector<double> fit(n, 0.0);
    for (std::size_t i = 0; i < k; ++i) axpy(a[i], vecs[i], fit);
    double l2 = 0.0, linf = 0.0;
    for (double v : fit) {
      const double e = v - 1.0;
      l2 += e * e;
      linf = std::max(linf, std::fabs(e));
    }
    l2 = std::sqrt(l2);
    if (l2 <= 1e-12 * std::sqrt(static_cast<double>(n)) && linf <= 1e-12) return a;
    return std::nullopt;
  }
};

}  // namespace precondopt
