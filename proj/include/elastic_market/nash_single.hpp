#ifndef ELASTIC_MARKET_NASH_SINGLE_HPP
#define ELASTIC_MARKET_NASH_SINGLE_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <string_view>

#include "elastic_market/market_core.hpp"
#include "elastic_market/models.hpp"

namespace elastic_market {

struct SolverConfig {
  double tol = 1e-10;           ///< stopping threshold on the largest bid change
  int max_sweeps = 10000;
  double damping = 0.5;         ///< weight of the new best response, in (0, 1]
  std::uint64_t seed = 0;
  int deviation_samples = 64;   ///< unilateral deviations tried per user
  double verify_tol = 1e-8;     ///< tolerance the verifier applies to results
  double kink_slack = 1e-9;     ///< relative distance to a price kink read as on it

  /// Throws ValidationError unless tol > 0 and 0 < damping <= 1.
  void validate() const;
};

enum class NashMethod { best_response, direct, constructed };
std::string_view to_string(NashMethod m) noexcept;

/// Outcome of checking the equilibrium conditions at a bid vector.
struct VerifyReport {
  bool pass = false;
  bool positive_total = false;  ///< sum of bids > 0
  Eigen::VectorXd upper_violation;  ///< max(0, U'(d)(1 - beta+ d/f) - p(f)) per user
  Eigen::VectorXd lower_violation;  ///< max(0, p(f) - U'(d)(1 - beta- d/f)) for d > 0
  double max_condition_violation = 0.0;
  double max_deviation_gain = 0.0;  ///< best sampled payoff gain over all users
  Eigen::Index worst_user = -1;     ///< user attaining max_deviation_gain
};

struct NashResult {
  Eigen::VectorXd w;
  ClearingOutcome outcome;
  NashMethod method = NashMethod::best_response;
  int sweeps = 0;
  double max_bid_delta = 0.0;
  VerifyReport report;
};

/// U_r(d_r(w)) - w_r for the price-anticipating user r.
double payoff_anticipating(const LinkInstance& inst, Eigen::Index r, const Eigen::VectorXd& w);

/// One-sided derivatives of d_r with respect to w_r. Requires sum(w) > 0.
OneSided allocation_derivs(const LinkInstance& inst, Eigen::Index r, const Eigen::VectorXd& w);

/// Best bid of user r when the other users bid `others_total` in aggregate.
double best_response_to_total(const LinkInstance& inst, Eigen::Index r, double others_total,
                              const SolverConfig& cfg = {});

/// Best bid of user r against the bids in w; w[r] is ignored.
double best_response(const LinkInstance& inst, Eigen::Index r, const Eigen::VectorXd& w,
                     const SolverConfig& cfg = {});

/// Damped Gauss-Seidel best-response sweeps from `init`. The result always
/// passes verify_nash; otherwise NonConvergence is thrown.
NashResult solve_nash_best_response(const LinkInstance& inst, const Eigen::VectorXd& init,
                                    const SolverConfig& cfg = {});

/// Direct solve of the equilibrium conditions for differentiable prices with
/// nondecreasing elasticity: nested bisection on the total rate and on each
/// user's rate. Throws PreconditionError for other price models.
NashResult solve_nash_direct(const LinkInstance& inst, const SolverConfig& cfg = {});

/// Checks the one-sided equilibrium conditions at w, requires sum(w) > 0, and
/// samples cfg.deviation_samples log-spaced unilateral deviations per user.
VerifyReport verify_nash(const LinkInstance& inst, const Eigen::VectorXd& w, double tol,
                         const SolverConfig& cfg = {});

/// beta-(f), beta+(f), widened to the knee values when f lies within
/// `slack` (relative) of a TwoPiece knee.
OneSided price_beta_near(const PriceModel& p, double f, double slack);

}  // namespace elastic_market

#endif  // ELASTIC_MARKET_NASH_SINGLE_HPP
