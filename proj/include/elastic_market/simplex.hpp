#ifndef ELASTIC_MARKET_SIMPLEX_HPP
#define ELASTIC_MARKET_SIMPLEX_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <limits>
#include <vector>

#include "elastic_market/errors.hpp"

namespace elastic_market {

template <typename Scalar>
struct LpSolution {
  Scalar value = Scalar(0);
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> x;
  int pivots = 0;
};

/// Dense primal simplex with Bland's rule for
///   maximize c'x  subject to  A x <= b, x >= 0,
/// where b >= 0 so the all-slack basis is feasible. Throws DomainError for a
/// negative right-hand side and NonConvergence if the problem is unbounded.
template <typename Scalar>
LpSolution<Scalar> simplex_max(const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& A,
                               const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& b,
                               const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& c,
                               Scalar pivot_tol = Scalar(1e-11)) {
  using Index = Eigen::Index;
  const Index m = A.rows();
  const Index n = A.cols();
  if (b.size() != m || c.size() != n) throw DomainError("simplex: dimension mismatch");
  for (Index i = 0; i < m; ++i) {
    if (b[i] < Scalar(0)) throw DomainError("simplex: right-hand side must be >= 0");
  }

  // Rows 0..m-1 hold constraints, row m the negated objective; last column rhs.
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> T =
      Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>::Zero(m + 1, n + m + 1);
  T.topLeftCorner(m, n) = A;
  T.block(0, n, m, m).setIdentity();
  T.topRightCorner(m, 1) = b;
  T.bottomLeftCorner(1, n) = -c.transpose();
  std::vector<Index> basis(static_cast<std::size_t>(m));
  for (Index i = 0; i < m; ++i) basis[static_cast<std::size_t>(i)] = n + i;

  LpSolution<Scalar> sol;
  const Index rhs = n + m;
  for (;;) {
    Index enter = -1;
    for (Index j = 0; j < n + m; ++j) {
      if (T(m, j) < -pivot_tol) {
        enter = j;
        break;
      }
    }
    if (enter < 0) break;

    Index leave = -1;
    Scalar best = std::numeric_limits<Scalar>::infinity();
    for (Index i = 0; i < m; ++i) {
      if (T(i, enter) > pivot_tol) {
        const Scalar ratio = T(i, rhs) / T(i, enter);
        if (ratio < best || (ratio == best && basis[static_cast<std::size_t>(i)] <
                                                  basis[static_cast<std::size_t>(leave)])) {
          best = ratio;
          leave = i;
        }
      }
    }
    if (leave < 0) throw NonConvergence("simplex: objective is unbounded");

    T.row(leave) /= T(leave, enter);
    for (Index i = 0; i <= m; ++i) {
      if (i != leave && T(i, enter) != Scalar(0)) T.row(i) -= T(i, enter) * T.row(leave);
    }
    basis[static_cast<std::size_t>(leave)] = enter;
    ++sol.pivots;
  }

  sol.x = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Zero(n);
  for (Index i = 0; i < m; ++i) {
    const Index v = basis[static_cast<std::size_t>(i)];
    if (v < n) sol.x[v] = std::max(Scalar(0), T(i, rhs));
  }
  sol.value = c.dot(sol.x);
  return sol;
}

}  // namespace elastic_market

#endif  // ELASTIC_MARKET_SIMPLEX_HPP
