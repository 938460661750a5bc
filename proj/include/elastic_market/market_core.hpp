#ifndef ELASTIC_MARKET_MARKET_CORE_HPP
#define ELASTIC_MARKET_MARKET_CORE_HPP

#include <Eigen/Dense>
#include <vector>

#include "elastic_market/models.hpp"

namespace elastic_market {

/// One link shared by R >= 1 users.
struct LinkInstance {
  LinkInstance(PriceModel price, std::vector<UtilityModel> users);

  PriceModel price;
  std::vector<UtilityModel> users;

  Eigen::Index size() const noexcept { return static_cast<Eigen::Index>(users.size()); }
};

/// Result of the market-clearing mechanism for a bid vector.
struct ClearingOutcome {
  double f = 0.0;         ///< total rate, solves sum(w) = f p(f)
  double mu = 0.0;        ///< price p(f), 0 when every bid is 0
  Eigen::VectorXd d;      ///< per-user rates, proportional to bids
  double residual = 0.0;  ///< |sum(w) - f p(f)|
};

/// Total rate f solving total_bid = f p(f); 0 for a zero total.
double clear_total(const PriceModel& p, double total_bid);

/// Clears the link: f from the revenue balance, then d_r = f w_r / sum(w).
ClearingOutcome clear(const PriceModel& p, const Eigen::VectorXd& w);

/// Aggregate surplus sum_r U_r(d_r) - C(sum d).
double surplus(const LinkInstance& inst, const Eigen::VectorXd& d);

/// Social optimum of one link.
struct SystemSolution {
  Eigen::VectorXd d;
  double f = 0.0;
  double lam = 0.0;  ///< marginal price p(f)
  double surplus = 0.0;
  double kkt_residual = 0.0;
};

/// Maximizes aggregate surplus by bisection on the excess demand at price
/// p(f). Linear users tied at the top slope share a plateau; the residual rate
/// goes to the lowest-index one. Throws NonConvergence when the optimality
/// residual exceeds tol * max(1, lam).
SystemSolution solve_system(const LinkInstance& inst, double tol = 1e-10);

struct PriceTakingResult {
  Eigen::VectorXd w;
  ClearingOutcome outcome;
  /// Largest violation of the price-taker optimality conditions at outcome.mu.
  double stationarity_residual = 0.0;
};

/// Bids w_r = d_r^S p(f^S) under which every price-taking user is optimal.
PriceTakingResult price_taking_equilibrium(const LinkInstance& inst, double tol = 1e-10);

/// Payoff U_r(w_r / mu) - w_r of a price-taking user.
double payoff_price_taking(const UtilityModel& u, double w_r, double mu);

}  // namespace elastic_market

#endif  // ELASTIC_MARKET_MARKET_CORE_HPP
