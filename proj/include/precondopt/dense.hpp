#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace precondopt {

/// Small dense row-major matrix. Used for LP bases, Gram systems and other
/// k-by-k work where k stays in the hundreds at most.
struct Mat {
  std::size_t rows = 0, cols = 0;
  std::vector<double> a;

  Mat() = default;
  Mat(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c, 0.0) {}

  double& at(std::size_t i, std::size_t j) { return a[i * cols + j]; }
  double at(std::size_t i, std::size_t j) const { return a[i * cols + j]; }

  static Mat identity(std::size_t n) {
    Mat m(n, n);
    for (std::size_t i = 0; i < n; ++i) m.at(i, i) = 1.0;
    return m;
  }
};

/// LU factorization with partial pivoting, reusable across right-hand sides:
/// factor once at O(n^3), then each solve costs O(n^2).
/// Throws on numerical singularity.
struct LuFactors {
  Mat lu;  // unit-lower factors below the diagonal, U on and above
  std::vector<std::size_t> piv;

  std::vector<double> solve(std::vector<double> b) const {
    const std::size_t n = lu.rows;
    if (b.size() != n) throw std::invalid_argument("LuFactors::solve: shape");
    // all interchanges first: the stored L already has them folded in
    for (std::size_t k = 0; k < n; ++k)
      if (piv[k] != k) std::swap(b[k], b[piv[k]]);
    for (std::size_t k = 0; k < n; ++k) {
      const double bk = b[k];
      if (bk != 0.0)
        for (std::size_t i = k + 1; i < n; ++i) b[i] -= lu.at(i, k) * bk;
    }
    for (std::size_t i = n; i-- > 0;) {
      double s = b[i];
      for (std::size_t j = i + 1; j < n; ++j) s -= lu.at(i, j) * b[j];
      b[i] = s / lu.at(i, i);
    }
    return b;
  }
};

inline LuFactors lu_factor(Mat A) {
  const std::size_t n = A.rows;
  if (n != A.cols) throw std::invalid_argument("lu_factor: shape");
  std::vector<std::size_t> piv(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t p = k;
    double best = std::fabs(A.at(k, k));
    for (std::size_t i = k + 1; i < n; ++i) {
      const double v = std::fabs(A.at(i, k));
      if (v > best) { best = v; p = i; }
    }
    if (!(best > 0.0)) throw std::runtime_error("lu_factor: singular matrix");
    piv[k] = p;
    if (p != k)
      for (std::size_t j = 0; j < n; ++j) std::swap(A.at(k, j), A.at(p, j));
    const double inv = 1.0 / A.at(k, k);
    for (std::size_t i = k + 1; i < n; ++i) {
      const double l = A.at(i, k) * inv;
      A.at(i, k) = l;
      if (l != 0.0)
        for (std::size_t j = k + 1; j < n; ++j) A.at(i, j) -= l * A.at(k, j);
    }
  }
  return LuFactors{std::move(A), std::move(piv)};
}

/// One-shot convenience: solve A x = b for a single rhs.
inline std::vector<double> lu_solve(Mat A, std::vector<double> b) {
  return lu_factor(std::move(A)).solve(std::move(b));
}

// --- symmetric tridiagonal eigen tools -------------------------------------
// T has diagonal alpha[0..m-1] and off-diagonal beta[0..m-2].

/// Number of eigenvalues of T strictly less than x (Sturm sequence count).
inline std::size_t tridiag_count_below(const std::vector<double>& alpha,
                                       const std::vector<double>& beta, double x) {
  const std::size_t m = alpha.size();
  std::size_t cnt = 0;
  double q = 1.0;
  const double tiny = 1e-300;
  for (std::size_t i = 0; i < m; ++i) {
    const double b2 = (i == 0) ? 0.0 : beta[i - 1] * beta[i - 1];
    q = alpha[i] - x - b2 / q;
    if (q == 0.0) q = -tiny;
    if (q < 0.0) ++cnt;
  }
  return cnt;
}

/// k-th smallest eigenvalue of T (k is 0-based), by bisection on Sturm counts.
inline double tridiag_eig_kth(const std::vector<double>& alpha,
                              const std::vector<double>& beta, std::size_t k) {
  const std::size_t m = alpha.size();
  double lo = alpha[0], hi = alpha[0];
  for (std::size_t i = 0; i < m; ++i) {
    const double r = (i > 0 ? std::fabs(beta[i - 1]) : 0.0) +
                     (i + 1 < m ? std::fabs(beta[i]) : 0.0);
    lo = std::min(lo, alpha[i] - r);
    hi = std::max(hi, alpha[i] + r);
  }
  const double span = std::max(hi - lo, 1.0);
  lo -= 1e-14 * span;
  hi += 1e-14 * span;
  for (int it = 0; it < 120 && hi - lo > 1e-16 * span; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (tridiag_count_below(alpha, beta, mid) > k)
      hi = mid;
    else
      lo = mid;
  }
  return 0.5 * (lo + hi);
}

/// Solve (T - shift I) x = rhs in place (Thomas algorithm with a tiny pivot
/// floor so near-singular shifts, the inverse-iteration case, stay usable).
inline void tridiag_shifted_solve(const std::vector<double>& alpha,
                                  const std::vector<double>& beta, double shift,
                                  std::vector<double>& x) {
  const std::size_t m = alpha.size();
  std::vector<double> d(m), u(m > 0 ? m - 1 : 0);
  double scale = 0.0;
  for (std::size_t i = 0; i < m; ++i) scale = std::max(scale, std::fabs(alpha[i]) + std::fabs(shift));
  const double floor_pivot = 1e-300 + 1e-20 * scale;
  for (std::size_t i = 0; i + 1 < m; ++i) u[i] = beta[i];
  d[0] = alpha[0] - shift;
  for (std::size_t i = 1; i < m; ++i) {
    double piv = d[i - 1];
    if (std::fabs(piv) < floor_pivot) piv = (piv < 0 ? -floor_pivot : floor_pivot);
    const double l = beta[i - 1] / piv;
    d[i] = alpha[i] - shift - l * beta[i - 1];
    x[i] -= l * x[i - 1];
    d[i - 1] = piv;
  }
  if (m > 0) {
    double piv = d[m - 1];
    if (std::fabs(piv) < floor_pivot) piv = (piv < 0 ? -floor_pivot : floor_pivot);
    x[m - 1] /= piv;
  }
  for (std::size_t i = m - 1; i-- > 0;) x[i] = (x[i] - u[i] * x[i + 1]) / d[i];
}

/// Eigenvector of T for an eigenvalue estimate theta, by inverse iteration.
/// Returns a unit vector.
inline std::vector<double> tridiag_eigvec(const std::vector<double>& alpha,
                                          const std::vector<double>& beta,
                                          double theta) {
  const std::size_t m = alpha.size();
  std::vector<double> x(m, 1.0);
  // fixed pseudo-random start to avoid accidental orthogonality to the target
  std::uint64_t s = 0x243f6a8885a308d3ULL;
  for (std::size_t i = 0; i < m; ++i) {
    s = s * 6364136223846793005ULL + 1442695040888963407ULL;
    x[i] = 0.5 + static_cast<double>(s >> 40) * 0x1.0p-25;
  }
  for (int pass = 0; pass < 3; ++pass) {
    tridiag_shifted_solve(alpha, beta, theta, x);
    double nrm = 0.0;
    for (double v : x) nrm += v * v;
    nrm = std::sqrt(nrm);
    if (!(nrm > 0.0) || !std::isfinite(nrm)) {
      for (auto& v : x) v = 1.0 / std::sqrt(static_cast<double>(m));
      break;
    }
    for (auto& v : x) v /= nrm;
  }
  return x;
}

}  // namespace precondopt
