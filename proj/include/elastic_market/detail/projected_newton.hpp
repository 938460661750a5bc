#ifndef ELASTIC_MARKET_DETAIL_PROJECTED_NEWTON_HPP
#define ELASTIC_MARKET_DETAIL_PROJECTED_NEWTON_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <vector>

namespace elastic_market::detail {

struct AscentResult {
  Eigen::VectorXd y;
  double value = 0.0;
  double kkt = 0.0;
  int iterations = 0;
  bool converged = false;  // kkt <= tol; otherwise the line search ran dry
};

/// KKT residual for max over y >= 0.
inline double box_kkt(const Eigen::VectorXd& y, const Eigen::VectorXd& g) {
  double worst = 0.0;
  for (Eigen::Index q = 0; q < y.size(); ++q) {
    worst = std::max(worst, y[q] > 0.0 ? std::abs(g[q]) : std::max(0.0, g[q]));
  }
  return worst;
}

/// Maximizes a smooth concave `value` over y >= 0 (Bertsekas-style projected
/// Newton). `value` may return -inf outside its domain; `curv` returns minus
/// the Hessian (PSD). Coordinates about to hit zero take plain gradient
/// steps, the rest a Newton step on their block, then step halving along
/// the projection arc.
template <class Value, class Grad, class Curv>
AscentResult projected_newton(Value&& value, Grad&& grad, Curv&& curv, Eigen::VectorXd y, double tol,
                              int max_iterations) {
  AscentResult out;
  const Eigen::Index P = y.size();
  double obj = value(y);
  for (int it = 0; it < max_iterations; ++it) {
    const Eigen::VectorXd g = grad(y);
    const double res = box_kkt(y, g);
    out.iterations = it;
    if (res <= tol) {
      out.y = y;
      out.value = obj;
      out.kkt = res;
      out.converged = true;
      return out;
    }

    const double eps = std::min(1e-3, (y - (y + g).cwiseMax(0.0)).cwiseAbs().maxCoeff());
    std::vector<Eigen::Index> free;
    for (Eigen::Index q = 0; q < P; ++q) {
      if (!(y[q] <= eps && g[q] < 0.0)) free.push_back(q);
    }
    Eigen::VectorXd dir = g;
    if (!free.empty()) {
      const Eigen::MatrixXd M = curv(y);
      const auto n = static_cast<Eigen::Index>(free.size());
      Eigen::MatrixXd Mf(n, n);
      Eigen::VectorXd gf(n);
      for (Eigen::Index a = 0; a < n; ++a) {
        gf[a] = g[free[static_cast<size_t>(a)]];
        for (Eigen::Index b = 0; b < n; ++b) Mf(a, b) = M(free[static_cast<size_t>(a)], free[static_cast<size_t>(b)]);
      }
      Mf.diagonal().array() += 1e-12 * (1.0 + Mf.diagonal().cwiseAbs().maxCoeff());
      const Eigen::VectorXd sf = Mf.ldlt().solve(gf);
      if (sf.allFinite() && sf.dot(gf) > 0.0) {
        for (Eigen::Index a = 0; a < n; ++a) dir[free[static_cast<size_t>(a)]] = sf[a];
      }
    }

    bool moved = false;
    double step = 1.0;
    for (int halvings = 0; halvings < 100; ++halvings, step *= 0.5) {
      const Eigen::VectorXd trial = (y + step * dir).cwiseMax(0.0);
      const Eigen::VectorXd move = trial - y;
      if (!(move.squaredNorm() > 0.0)) break;
      const double t_obj = value(trial);
      if (!std::isfinite(t_obj)) continue;
      const double rise = t_obj - obj;
      const double noise = 1e-14 * (1.0 + std::abs(obj));
      bool accept = false;
      if (rise > noise) {
        accept = rise >= 1e-4 * g.dot(move);
      } else if (rise >= -noise) {
        // flat to rounding: accept unless the step passes the maximum along `move`
        accept = grad(trial).dot(move) >= 0.0;
      }
      if (accept) {
        y = trial;
        obj = t_obj;
        moved = true;
        break;
      }
    }
    if (!moved) {
      out.y = y;
      out.value = obj;
      out.kkt = res;
      return out;
    }
  }
  out.y = y;
  out.value = obj;
  out.kkt = box_kkt(y, grad(y));
  out.converged = out.kkt <= tol;
  out.iterations = max_iterations;
  return out;
}

}  // namespace elastic_market::detail

#endif  // ELASTIC_MARKET_DETAIL_PROJECTED_NEWTON_HPP
