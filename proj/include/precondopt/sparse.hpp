#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <tuple>
#include <vector>

#include "precondopt/vec.hpp"

namespace precondopt {

struct Triplet {
  std::int64_t row = 0, col = 0;
  double value = 0.0;
};

/// Symmetric sparse matrix in CSR with both triangles stored explicitly, so a
/// matvec is one contiguous row sweep. Invariants: column indices strictly
/// increasing within each row, values finite, pattern and values symmetric.
class SparseSymMatrix {
 public:
  SparseSymMatrix() = default;

  std::int64_t dim() const { return n_; }
  std::int64_t nnz() const { return static_cast<std::int64_t>(values_.size()); }
  const std::vector<std::int64_t>& row_ptr() const { return row_ptr_; }
  const std::vector<std::int64_t>& col_idx() const { return col_idx_; }
  const std::vector<double>& values() const { return values_; }

  /// Build from entries covering each unordered pair at most once per
  /// direction (e.g. one triangle, or mixed). Duplicates of the same
  /// unordered pair are summed; the mirror entry is implied.
  static SparseSymMatrix from_triplets_sym(std::int64_t n, std::vector<Triplet> t) {
    for (auto& e : t)
      if (e.row > e.col) std::swap(e.row, e.col);
    return build(n, std::move(t), /*mirror=*/true);
  }

  /// Build from a full pattern where both (i,j) and (j,i) are listed.
  /// Rejects if the two sides differ by more than rel_tol relatively.
  static SparseSymMatrix from_triplets_general(std::int64_t n, std::vector<Triplet> t,
                                               double rel_tol = 1e-12) {
    // collapse duplicates per directed coordinate first
    std::sort(t.begin(), t.end(), [](const Triplet& a, const Triplet& b) {
      return std::tie(a.row, a.col) < std::tie(b.row, b.col);
    });
    std::vector<Triplet> dedup;
    dedup.reserve(t.size());
    for (const auto& e : t) {
      if (!dedup.empty() && dedup.back().row == e.row && dedup.back().col == e.col)
        dedup.back().value += e.value;
      else
        dedup.push_back(e);
    }
    // pair each upper entry with its mirror
    std::vector<Triplet> upper;
    upper.reserve(dedup.size() / 2 + n);
    for (const auto& e : dedup) {
      if (e.row > e.col) continue;
      if (e.row == e.col) {
        upper.push_back(e);
        continue;
      }
      auto it = std::lower_bound(dedup.begin(), dedup.end(), Triplet{e.col, e.row, 0.0},
                                 [](const Triplet& a, const Triplet& b) {
                                   return std::tie(a.row, a.col) < std::tie(b.row, b.col);
                                 });
      const bool found = it != dedup.end() && it->row == e.col && it->col == e.row;
      const double mirror = found ? it->value : 0.0;
      const double diff = std::fabs(e.value - mirror);
      if (diff > rel_tol * std::max(std::fabs(e.value), std::fabs(mirror)))
        throw std::runtime_error("matrix not symmetric: entry (" + std::to_string(e.row) +
                                 "," + std::to_string(e.col) + ")");
      upper.push_back({e.row, e.col, 0.5 * (e.value + mirror)});
    }
    for (const auto& e : dedup)
      if (e.row > e.col) {
        auto it = std::lower_bound(upper.begin(), upper.end(), Triplet{e.col, e.row, 0.0},
                                   [](const Triplet& a, const Triplet& b) {
                                     return std::tie(a.row, a.col) < std::tie(b.row, b.col);
                                   });
        if (!(it != upper.end() && it->row == e.col && it->col == e.row)) {
          if (std::fabs(e.value) > 0.0)
            throw std::runtime_error("matrix not symmetric: unmatched entry");
        }
      }
    return build(n, std::move(upper), /*mirror=*/true);
  }

  /// y = M x
  void matvec(const std::vector<double>& x, std::vector<double>& y) const {
    for (std::int64_t i = 0; i < n_; ++i) {
      double s = 0.0;
      for (std::int64_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p)
        s += values_[p] * x[col_idx_[p]];
      y[i] = s;
    }
  }

  std::vector<double> diagonal() const {
    std::vector<double> d(n_, 0.0);
    for (std::int64_t i = 0; i < n_; ++i)
      for (std::int64_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p)
        if (col_idx_[p] == i) d[i] = values_[p];
    return d;
  }

  /// Structural checks; throws on violation. Cheap enough to run after I/O.
  void validate() const {
    if (n_ < 1) throw std::runtime_error("matrix dimension must be >= 1");
    for (std::int64_t i = 0; i < n_; ++i) {
      for (std::int64_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) {
        if (col_idx_[p] < 0 || col_idx_[p] >= n_) throw std::runtime_error("column index out of range");
        if (p > row_ptr_[i] && col_idx_[p] <= col_idx_[p - 1])
          throw std::runtime_error("columns not strictly increasing");
        if (!std::isfinite(values_[p])) throw std::runtime_error("non-finite matrix entry");
      }
    }
    // symmetry of stored pattern and values
    for (std::int64_t i = 0; i < n_; ++i)
      for (std::int64_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) {
        const std::int64_t j = col_idx_[p];
        if (j < i) continue;
        const double* v = find(j, i);
        if (v == nullptr || *v != values_[p]) throw std::runtime_error("stored matrix not symmetric");
      }
  }

  const double* find(std::int64_t i, std::int64_t j) const {
    const auto b = col_idx_.begin() + row_ptr_[i];
    const auto e = col_idx_.begin() + row_ptr_[i + 1];
    const auto it = std::lower_bound(b, e, j);
    if (it == e || *it != j) return nullptr;
    return &values_[static_cast<std::size_t>(it - col_idx_.begin())];
  }

 private:
  static SparseSymMatrix build(std::int64_t n, std::vector<Triplet> upper, bool mirror) {
    if (n < 1) throw std::invalid_argument("matrix dimension must be >= 1");
    for (const auto& e : upper) {
      if (e.row < 0 || e.row >= n || e.col < 0 || e.col >= n)
        throw std::invalid_argument("triplet index out of range");
      if (!std::isfinite(e.value)) throw std::invalid_argument("non-finite triplet value");
    }
    std::sort(upper.begin(), upper.end(), [](const Triplet& a, const Triplet& b) {
      return std::tie(a.row, a.col) < std::tie(b.row, b.col);
    });
    std::vector<Triplet> full;
    full.reserve(upper.size() * 2);
    for (std::size_t q = 0; q < upper.size(); ++q) {
      Triplet e = upper[q];
      while (q + 1 < upper.size() && upper[q + 1].row == e.row && upper[q + 1].col == e.col) {
        e.value += upper[++q].value;
      }
      full.push_back(e);
      if (mirror && e.row != e.col) full.push_back({e.col, e.row, e.value});
    }
    SparseSymMatrix m;
    m.n_ = n;
    m.row_ptr_.assign(n + 1, 0);
    for (const auto& e : full) ++m.row_ptr_[e.row + 1];
    for (std::int64_t i = 0; i < n; ++i) m.row_ptr_[i + 1] += m.row_ptr_[i];
    m.col_idx_.resize(full.size());
    m.values_.resize(full.size());
    std::vector<std::int64_t> fill(m.row_ptr_.begin(), m.row_ptr_.end() - 1);
    std::sort(full.begin(), full.end(), [](const Triplet& a, const Triplet& b) {
      return std::tie(a.row, a.col) < std::tie(b.row, b.col);
    });
    for (const auto& e : full) {
      const std::int64_t p = fill[e.row]++;
      m.col_idx_[p] = e.col;
      m.values_[p] = e.value;
    }
    return m;
  }

  std::int64_t n_ = 0;
  std::vector<std::int64_t> row_ptr_{0};
  std::vector<std::int64_t> col_idx_;
  std::vector<double> values_;
};

}  // namespace precondopt
