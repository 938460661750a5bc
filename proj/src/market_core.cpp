#include "elastic_market/market_core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "elastic_market/detail/bisect.hpp"
#include "elastic_market/errors.hpp"

namespace elastic_market {
namespace {


// Grows hi from `start` by doubling while keep_growing(hi), never past the
// model's bracket cap.
template <class Pred>
double grow_bracket(const PriceModel& p, double start, Pred&& keep_growing) {
  const double cap = p.bracket_cap();
  double hi = std::min(start, cap);
  for (int i = 0; i < 2100 && keep_growing(hi); ++i) {
    if (hi >= cap) break;
    hi = std::min(2.0 * hi, cap);
  }
  return hi;
}

}  // namespace

LinkInstance::LinkInstance(PriceModel price_, std::vector<UtilityModel> users_)
    : price(price_), users(std::move(users_)) {
  if (users.empty()) throw ValidationError("link instance: at least one user (R >= 1)");
}

double clear_total(const PriceModel& p, double total_bid) {
  if (!(total_bid >= 0.0) || !std::isfinite(total_bid)) {
    throw DomainError("clear: total bid must be finite and >= 0");
  }
  if (total_bid == 0.0) return 0.0;
  auto revenue_gap = [&](double f) { return f * price_eval(p, f) - total_bid; };
  const double hi = grow_bracket(p, 1.0, [&](double f) { return revenue_gap(f) < 0.0; });
  auto [f, bracket] = detail::increasing_root(revenue_gap, 0.0, hi);
  if (!bracket.collapsed) throw NonConvergence("clear: bisection hit its iteration cap");
  return f;
}

ClearingOutcome clear(const PriceModel& p, const Eigen::VectorXd& w) {
  for (Eigen::Index r = 0; r < w.size(); ++r) {
    if (!(w[r] >= 0.0) || !std::isfinite(w[r])) {
      throw DomainError("clear: bid " + std::to_string(r) + " must be finite and >= 0");
    }
  }
  ClearingOutcome out;
  out.d = Eigen::VectorXd::Zero(w.size());
  const double total = w.sum();
  if (total == 0.0) return out;
  out.f = clear_total(p, total);
  out.mu = price_eval(p, out.f);
  out.d = (out.f / total) * w;
  out.residual = std::abs(total - out.f * out.mu);
  return out;
}

double surplus(const LinkInstance& inst, const Eigen::VectorXd& d) {
  if (d.size() != inst.size()) throw DomainError("surplus: rate vector length must equal R");
  double value = 0.0;
  for (Eigen::Index r = 0; r < d.size(); ++r) value += utility_eval(inst.users[r], d[r]);
  return value - price_cost(inst.price, d.sum());
}

SystemSolution solve_system(const LinkInstance& inst, double tol) {
  const PriceModel& p = inst.price;
  const Eigen::Index R = inst.size();
  const double p0 = price_eval(p, 0.0);

  double alpha_max = 0.0;
  Eigen::Index top_linear = -1;
  for (Eigen::Index r = 0; r < R; ++r) {
    if (const auto* m = std::get_if<LinearUtility>(&inst.users[r].params())) {
      if (m->alpha > alpha_max) {
        alpha_max = m->alpha;
        top_linear = r;
      }
    }
  }

  // Demand of the strictly concave users at price lam.
  auto smooth_demand = [&](double lam) {
    double total = 0.0;
    for (const auto& u : inst.users) {
      if (!u.is_linear()) total += utility_demand(u, lam);
    }
    return total;
  };
  auto excess = [&](double f) { return smooth_demand(price_eval(p, f)) - f; };

  SystemSolution sol;
  sol.d = Eigen::VectorXd::Zero(R);
  double lo = 0.0;
  bool plateau = false;
  if (top_linear >= 0 && alpha_max > p0) {
    lo = price_inverse(p, alpha_max);
    plateau = smooth_demand(alpha_max) - lo <= 0.0;
  }

  if (plateau) {
    for (Eigen::Index r = 0; r < R; ++r) {
      if (!inst.users[r].is_linear()) sol.d[r] = utility_demand(inst.users[r], alpha_max);
    }
    sol.d[top_linear] = std::max(0.0, lo - sol.d.sum());
  } else {
    bool any_entry = false;
    for (const auto& u : inst.users) {
      if (!u.is_linear() && utility_deriv(u, 0.0) > p0) any_entry = true;
    }
    if (any_entry || lo > 0.0) {
      const double hi = grow_bracket(p, std::max(1.0, 2.0 * lo), [&](double f) { return excess(f) > 0.0; });
      const detail::Bracket b = detail::bisect([&](double f) { return excess(f) > 0.0; }, lo, hi);
      if (!b.collapsed) throw NonConvergence("solve_system: bisection hit its iteration cap");
      const double lam = price_eval(p, b.hi);
      for (Eigen::Index r = 0; r < R; ++r) {
        if (!inst.users[r].is_linear()) sol.d[r] = utility_demand(inst.users[r], lam);
      }
    }
  }

  sol.f = sol.d.sum();
  sol.lam = plateau ? alpha_max : price_eval(p, sol.f);
  sol.surplus = surplus(inst, sol.d);
  for (Eigen::Index r = 0; r < R; ++r) {
    const double v = sol.d[r] > 0.0 ? std::abs(utility_deriv(inst.users[r], sol.d[r]) - sol.lam)
                                    : std::max(0.0, utility_deriv(inst.users[r], 0.0) - sol.lam);
    sol.kkt_residual = std::max(sol.kkt_residual, v);
  }
  if (sol.kkt_residual > tol * std::max(1.0, sol.lam)) {
    throw NonConvergence("solve_system: optimality residual " + std::to_string(sol.kkt_residual) +
                         " above tolerance");
  }
  return sol;
}

double payoff_price_taking(const UtilityModel& u, double w_r, double mu) {
  if (!(mu > 0.0)) throw DomainError("price-taking payoff needs mu > 0");
  return utility_eval(u, w_r / mu) - w_r;
}

PriceTakingResult price_taking_equilibrium(const LinkInstance& inst, double tol) {
  const SystemSolution sys = solve_system(inst, tol);
  if (!(sys.f > 0.0)) {
    throw DegenerateError("price_taking_equilibrium: no user values the link above p(0)");
  }
  PriceTakingResult res;
  res.w = price_eval(inst.price, sys.f) * sys.d;
  res.outcome = clear(inst.price, res.w);
  const double mu = res.outcome.mu;
  for (Eigen::Index r = 0; r < inst.size(); ++r) {
    const double v = res.w[r] > 0.0
                         ? std::abs(utility_deriv(inst.users[r], res.outcome.d[r]) - mu)
                         : std::max(0.0, utility_deriv(inst.users[r], 0.0) - mu);
    res.stationarity_residual = std::max(res.stationarity_residual, v);
  }
  if (res.stationarity_residual > tol * std::max(1.0, mu)) {
    throw NonConvergence("price_taking_equilibrium: stationarity residual above tolerance");
  }
  return res;
}

}  // namespace elastic_market
