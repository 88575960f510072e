#pragma once

#include <functional>
#include <memory>
#include <stdexcept>
#include <vector>

#include "precondopt/basis.hpp"
#include "precondopt/sparse.hpp"
#include "precondopt/vec.hpp"

namespace precondopt {

/// Black-box symmetric operator: everything downstream (eigenprobes, the
/// cutting-plane solver, PCG) sees matrices only through apply(). Copies are
/// cheap and share the underlying closure; operators are immutable.
class LinearOperator {
 public:
  using ApplyFn = std::function<void(const std::vector<double>&, std::vector<double>&)>;

  LinearOperator() = default;
  LinearOperator(std::size_t dim, ApplyFn fn) : dim_(dim), fn_(std::move(fn)) {}

  std::size_t dim() const { return dim_; }

  void apply(const std::vector<double>& x, std::vector<double>& y) const {
    if (x.size() != dim_ || y.size() != dim_) throw std::invalid_argument("operator apply: size");
    fn_(x, y);
  }

  std::vector<double> operator()(const std::vector<double>& x) const {
    std::vector<double> y(dim_);
    apply(x, y);
    return y;
  }

 private:
  std::size_t dim_ = 0;
  ApplyFn fn_;
};

/// View of a sparse matrix as an operator. The matrix must outlive the result.
inline LinearOperator operator_from_matrix(const SparseSymMatrix& m) {
  return LinearOperator(static_cast<std::size_t>(m.dim()),
                        [mp = &m](const std::vector<double>& x, std::vector<double>& y) {
                          mp->matvec(x, y);
                        });
}

/// D^{-1/2} M D^{-1/2} for positive d; the symmetric form of applying the
/// preconditioner diagm(d).
inline LinearOperator scaled_operator(const LinearOperator& m, const DiagonalVec& d) {
  if (m.dim() != d.size()) throw std::invalid_argument("scaled_operator: size");
  if (!all_positive(d)) throw std::invalid_argument("scaled_operator: d must be positive");
  auto inv_sqrt = std::make_shared<std::vector<double>>(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) (*inv_sqrt)[i] = 1.0 / std::sqrt(d[i]);
  return LinearOperator(m.dim(), [m, inv_sqrt](const std::vector<double>& x, std::vector<double>& y) {
    std::vector<double> t(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) t[i] = (*inv_sqrt)[i] * x[i];
    m.apply(t, y);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] *= (*inv_sqrt)[i];
  });
}

/// Wraps an operator so each apply bumps a shared counter. Lets the solver
/// report exact matvec budgets without the operator knowing.
inline LinearOperator counting_operator(const LinearOperator& m,
                                        std::shared_ptr<std::size_t> counter) {
  return LinearOperator(m.dim(), [m, counter](const std::vector<double>& x, std::vector<double>& y) {
    ++*counter;
    m.apply(x, y);
  });
}

enum class ConstraintBlock { One, Two };

/// The two semidefinite constraint residuals of the subspace program, as
/// operators for eigenprobes:
///   block One:  v -> sum_i D_i z_i v - tau M v   (wants lambda_min >= 0)
///   block Two:  v -> M v - sum_i D_i z_i v       (wants lambda_min >= 0)
/// The combined diagonal sum_i d_i z_i is folded once at construction, so an
/// apply costs one M-matvec plus O(n).
inline LinearOperator constraint_operator(const LinearOperator& m, const Basis& basis,
                                          const std::vector<double>& z, double tau,
                                          ConstraintBlock block) {
  if (basis.dim() != m.dim()) throw std::invalid_argument("constraint_operator: basis dim");
  auto combined = std::make_shared<DiagonalVec>(basis.combine(z));
  if (block == ConstraintBlock::One) {
    return LinearOperator(m.dim(), [m, combined, tau](const std::vector<double>& x,
                                                      std::vector<double>& y) {
      m.apply(x, y);
      for (std::size_t i = 0; i < y.size(); ++i) y[i] = (*combined)[i] * x[i] - tau * y[i];
    });
  }
  return LinearOperator(m.dim(), [m, combined](const std::vector<double>& x,
                                               std::vector<double>& y) {
    m.apply(x, y);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] -= (*combined)[i] * x[i];
  });
}

}  // namespace precondopt
