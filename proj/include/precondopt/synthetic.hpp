#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "precondopt/rng.hpp"
#include "precondopt/sparse.hpp"

namespace precondopt {

enum class EntryDist { Uniform01, Normal };

/// Test-problem generator: A is n-by-n with each entry present independently
/// with probability sigma (geometric skip sampling, so cost tracks the number
/// of hits, not n^2), values i.i.d. U[0,1] or N(0,1); M = A^T A + alpha I.
/// Deterministic: one seed fixes the matrix bitwise.
inline SparseSymMatrix generate_synthetic(std::int64_t n, double sigma, double alpha,
                                          EntryDist dist, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("generate_synthetic: n must be >= 1");
  if (!(sigma >= 0.0 && sigma <= 1.0)) throw std::invalid_argument("generate_synthetic: sigma in [0,1]");
  if (!(alpha > 0.0)) throw std::invalid_argument("generate_synthetic: alpha must be > 0");

  Rng rng(seed);
  // rows of A, column-sorted by construction (positions visited in order)
  std::vector<std::vector<std::pair<std::int64_t, double>>> rows(n);
  if (sigma > 0.0) {
    const std::uint64_t total = static_cast<std::uint64_t>(n) * static_cast<std::uint64_t>(n);
    std::uint64_t pos = rng.geometric_skip(sigma);
    while (pos < total) {
      const std::int64_t r = static_cast<std::int64_t>(pos / static_cast<std::uint64_t>(n));
      const std::int64_t c = static_cast<std::int64_t>(pos % static_cast<std::uint64_t>(n));
      const double v = dist == EntryDist::Uniform01 ? rng.uniform01() : rng.gaussian();
      rows[r].push_back({c, v});
      pos += 1 + rng.geometric_skip(sigma);
    }
  }

  // M = A^T A: every row of A contributes the outer product of its entries.
  // Only the upper wedge (j <= l) is accumulated; the builder mirrors it.
  std::vector<Triplet> t;
  std::size_t est = 0;
  for (const auto& r : rows) est += r.size() * (r.size() + 1) / 2;
  t.reserve(est + static_cast<std::size_t>(n));
  for (const auto& r : rows)
    for (std::size_t a = 0; a < r.size(); ++a)
      for (std::size_t b = a; b < r.size(); ++b)
        t.push_back({r[a].first, r[b].first, r[a].second * r[b].second});
  for (std::int64_t i = 0; i < n; ++i) t.push_back({i, i, alpha});
  return SparseSymMatrix::from_triplets_sym(n, std::move(t));
}

}  // namespace precondopt
