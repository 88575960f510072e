#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace precondopt {

/// Dense vector kernels. All sizes must agree; no checks in release paths.

inline double dot(const std::vector<double>& x, const std::vector<double>& y) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

inline double nrm2(const std::vector<double>& x) { return std::sqrt(dot(x, x)); }

inline double nrm_inf(const std::vector<double>& x) {
  double m = 0.0;
  for (double v : x) m = std::max(m, std::fabs(v));
  return m;
}

/// y += a*x
inline void axpy(double a, const std::vector<double>& x, std::vector<double>& y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

inline void scal(double a, std::vector<double>& x) {
  for (double& v : x) v *= a;
}

inline bool all_finite(const std::vector<double>& x) {
  for (double v : x)
    if (!std::isfinite(v)) return false;
  return true;
}

inline bool all_positive(const std::vector<double>& x) {
  for (double v : x)
    if (!(v > 0.0)) return false;
  return true;
}

inline std::vector<double> ones(std::size_t n) { return std::vector<double>(n, 1.0); }

/// true if x == c*1 for some scalar c (exact equality of entries)
inline bool is_constant(const std::vector<double>& x) {
  for (double v : x)
    if (v != x[0]) return false;
  return !x.empty();
}

}  // namespace precondopt
