#include "elastic_market/nash_single.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include "elastic_market/detail/bisect.hpp"
#include "elastic_market/errors.hpp"

namespace elastic_market {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_bids(const LinkInstance& inst, const Eigen::VectorXd& w, const char* who) {
  if (w.size() != inst.size()) {
    throw DomainError(std::string(who) + ": bid vector length must equal R");
  }
  for (Eigen::Index r = 0; r < w.size(); ++r) {
    if (!(w[r] >= 0.0) || !std::isfinite(w[r])) {
      throw DomainError(std::string(who) + ": bids must be finite and >= 0");
    }
  }
}

void check_user(const LinkInstance& inst, Eigen::Index r) {
  if (r < 0 || r >= inst.size()) throw DomainError("user index out of range");
}

// Rate granted to a bid x when the others bid `others` in total.
double granted_rate(const PriceModel& p, double x, double others) {
  const double total = x + others;
  if (total == 0.0 || x == 0.0) return 0.0;
  return clear_total(p, total) * (x / total);
}

double anticipating_payoff(const LinkInstance& inst, Eigen::Index r, double x, double others) {
  return utility_eval(inst.users[r], granted_rate(inst.price, x, others)) - x;
}

// Right derivative of Q_r at bid x against aggregate `others`.
double payoff_right_slope(const LinkInstance& inst, Eigen::Index r, double x, double others) {
  const UtilityModel& u = inst.users[r];
  const double total = x + others;
  if (total == 0.0) {
    const double p0 = price_eval(inst.price, 0.0);
    return p0 == 0.0 ? kInf : utility_deriv(u, 0.0) / p0 - 1.0;
  }
  const double f = clear_total(inst.price, total);
  const double price = price_eval(inst.price, f);
  const double d = f * (x / total);
  const double beta = price_beta(inst.price, f).right;
  return utility_deriv(u, d) * (1.0 - (d / f) * beta) / price - 1.0;
}

}  // namespace

void SolverConfig::validate() const {
  if (!(tol > 0.0)) throw ValidationError("solver: tol > 0");
  if (!(damping > 0.0 && damping <= 1.0)) throw ValidationError("solver: 0 < damping <= 1");
  if (max_sweeps < 1) throw ValidationError("solver: max_sweeps >= 1");
  if (deviation_samples < 0) throw ValidationError("solver: deviation_samples >= 0");
  if (!(verify_tol > 0.0)) throw ValidationError("solver: verify_tol > 0");
}

std::string_view to_string(NashMethod m) noexcept {
  switch (m) {
    case NashMethod::best_response: return "best_response";
    case NashMethod::direct: return "direct";
    case NashMethod::constructed: return "constructed";
  }
  return "unknown";
}

OneSided price_beta_near(const PriceModel& p, double f, double slack) {
  if (const auto* m = std::get_if<TwoPiecePrice>(&p.params())) {
    if (std::abs(f - m->k) <= slack * m->k) return price_beta(p, m->k);
  }
  return price_beta(p, f);
}

double payoff_anticipating(const LinkInstance& inst, Eigen::Index r, const Eigen::VectorXd& w) {
  check_bids(inst, w, "payoff_anticipating");
  check_user(inst, r);
  const ClearingOutcome out = clear(inst.price, w);
  return utility_eval(inst.users[r], out.d[r]) - w[r];
}

OneSided allocation_derivs(const LinkInstance& inst, Eigen::Index r, const Eigen::VectorXd& w) {
  check_bids(inst, w, "allocation_derivs");
  check_user(inst, r);
  const ClearingOutcome out = clear(inst.price, w);
  if (out.f == 0.0) throw DegenerateError("allocation_derivs: all bids are zero");
  const OneSided beta = price_beta(inst.price, out.f);
  const double share = out.d[r] / out.f;
  return {(1.0 - share * beta.left) / out.mu, (1.0 - share * beta.right) / out.mu};
}

double best_response_to_total(const LinkInstance& inst, Eigen::Index r, double others_total,
                              const SolverConfig& /*cfg*/) {
  check_user(inst, r);
  if (!(others_total >= 0.0) || !std::isfinite(others_total)) {
    throw DomainError("best_response: others' bids must be finite and >= 0");
  }
  auto slope = [&](double x) { return payoff_right_slope(inst, r, x, others_total); };
  if (slope(0.0) <= 0.0) return 0.0;

  // Alone at bid B the price already reaches U'(0), so Q_r falls beyond B.
  const double entry_value = utility_deriv(inst.users[r], 0.0);
  double upper = 1.0;
  for (int i = 0; i < 2000; ++i) {
    if (price_eval(inst.price, clear_total(inst.price, upper)) >= entry_value && slope(upper) <= 0.0) {
      break;
    }
    upper *= 2.0;
  }
  const detail::Bracket b = detail::bisect([&](double x) { return slope(x) > 0.0; }, 0.0, upper);
  if (!b.collapsed) throw NonConvergence("best_response: bisection hit its iteration cap");
  return b.hi;
}

double best_response(const LinkInstance& inst, Eigen::Index r, const Eigen::VectorXd& w,
                     const SolverConfig& cfg) {
  check_bids(inst, w, "best_response");
  check_user(inst, r);
  return best_response_to_total(inst, r, w.sum() - w[r], cfg);
}

VerifyReport verify_nash(const LinkInstance& inst, const Eigen::VectorXd& w, double tol,
                         const SolverConfig& cfg) {
  check_bids(inst, w, "verify_nash");
  const Eigen::Index R = inst.size();
  VerifyReport rep;
  rep.upper_violation = Eigen::VectorXd::Zero(R);
  rep.lower_violation = Eigen::VectorXd::Zero(R);
  const double total = w.sum();
  rep.positive_total = total > 0.0;

  if (rep.positive_total) {
    const ClearingOutcome out = clear(inst.price, w);
    const OneSided beta = price_beta_near(inst.price, out.f, cfg.kink_slack);
    for (Eigen::Index r = 0; r < R; ++r) {
      const double d = out.d[r];
      const double marginal = utility_deriv(inst.users[r], d);
      const double share = d / out.f;
      rep.upper_violation[r] = std::max(0.0, marginal * (1.0 - beta.right * share) - out.mu);
      if (d > 0.0) {
        rep.lower_violation[r] = std::max(0.0, out.mu - marginal * (1.0 - beta.left * share));
      }
    }
    rep.max_condition_violation =
        std::max(rep.upper_violation.maxCoeff(), rep.lower_violation.maxCoeff());
  }

  const int half = std::max(1, cfg.deviation_samples / 2);
  rep.max_deviation_gain = -kInf;
  for (Eigen::Index r = 0; r < R; ++r) {
    const double others = total - w[r];
    const double base = anticipating_payoff(inst, r, w[r], others);
    const double scale = w[r] > 0.0 ? w[r] : (total > 0.0 ? total : 1.0);
    auto consider = [&](double x) {
      const double gain = anticipating_payoff(inst, r, x, others) - base;
      if (gain > rep.max_deviation_gain) {
        rep.max_deviation_gain = gain;
        rep.worst_user = r;
      }
    };
    consider(0.0);
    for (int k = 1; k <= half; ++k) {
      const double factor = std::exp2(0.25 * k);
      consider(scale * factor);
      consider(scale / factor);
    }
  }

  rep.pass = rep.positive_total && rep.max_condition_violation <= tol && rep.max_deviation_gain <= tol;
  return rep;
}

namespace {

std::string describe_failure(const VerifyReport& rep) {
  std::ostringstream os;
  os.precision(6);
  os << "positive_total=" << rep.positive_total
     << " max_condition_violation=" << rep.max_condition_violation
     << " max_deviation_gain=" << rep.max_deviation_gain;
  return os.str();
}

}  // namespace

NashResult solve_nash_best_response(const LinkInstance& inst, const Eigen::VectorXd& init,
                                    const SolverConfig& cfg) {
  cfg.validate();
  check_bids(inst, init, "solve_nash_best_response");
  NashResult res;
  res.method = NashMethod::best_response;
  res.w = init;
  const double theta = cfg.damping;

  bool converged = false;
  for (int sweep = 1; sweep <= cfg.max_sweeps; ++sweep) {
    double total = res.w.sum();
    double delta = 0.0;
    for (Eigen::Index r = 0; r < inst.size(); ++r) {
      const double others = std::max(0.0, total - res.w[r]);
      const double target = best_response_to_total(inst, r, others, cfg);
      // exiting users leave at once; damping toward zero never reaches it
      const double next = target == 0.0 ? 0.0 : (1.0 - theta) * res.w[r] + theta * target;
      delta = std::max(delta, std::abs(next - res.w[r]));
      res.w[r] = next;
      total = others + next;
    }
    res.sweeps = sweep;
    res.max_bid_delta = delta;
    if (delta <= cfg.tol) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    throw NonConvergence("solve_nash_best_response: no convergence after " +
                         std::to_string(cfg.max_sweeps) + " sweeps (last bid change " +
                         std::to_string(res.max_bid_delta) + ")");
  }
  res.outcome = clear(inst.price, res.w);
  res.report = verify_nash(inst, res.w, cfg.verify_tol, cfg);
  if (!res.report.pass) {
    throw NonConvergence("solve_nash_best_response: result failed verification: " +
                         describe_failure(res.report));
  }
  return res;
}

NashResult solve_nash_direct(const LinkInstance& inst, const SolverConfig& cfg) {
  cfg.validate();
  const PriceModel& p = inst.price;
  if (!p.differentiable() || !p.nondecreasing_elasticity()) {
    throw PreconditionError("solve_nash_direct: price must be differentiable with nondecreasing "
                            "elasticity (linear, monomial or mm1)");
  }

  // Rate of user r solving U'(d)(1 - beta d / f) = p(f), 0 if U'(0) <= p(f).
  auto user_rate = [&](Eigen::Index r, double f, double price, double beta) {
    const UtilityModel& u = inst.users[r];
    if (utility_deriv(u, 0.0) <= price) return 0.0;
    const double cap = f / beta;
    const detail::Bracket b = detail::bisect(
        [&](double d) { return utility_deriv(u, d) * (1.0 - beta * d / f) > price; }, 0.0, cap);
    return b.lo;
  };
  auto rates = [&](double f) {
    const double price = price_eval(p, f);
    const double beta = price_beta(p, f).right;
    Eigen::VectorXd d(inst.size());
    for (Eigen::Index r = 0; r < inst.size(); ++r) d[r] = user_rate(r, f, price, beta);
    return d;
  };
  auto share_sum = [&](double f) { return rates(f).sum() / f; };

  const double cap = p.bracket_cap();
  double lo = std::min(1.0, 0.5 * cap);
  int halvings = 0;
  while (share_sum(lo) <= 1.0) {
    lo *= 0.5;
    if (++halvings > 1100 || lo == 0.0) {
      throw DegenerateError("solve_nash_direct: no user values the link above p(0)");
    }
  }
  double hi = lo;
  while (share_sum(hi) >= 1.0) {
    if (hi >= cap) throw NonConvergence("solve_nash_direct: could not bracket the total rate");
    hi = std::min(2.0 * hi, cap);
  }
  const detail::Bracket b = detail::bisect([&](double f) { return share_sum(f) > 1.0; }, lo, hi);
  if (!b.collapsed) throw NonConvergence("solve_nash_direct: bisection hit its iteration cap");

  NashResult res;
  res.method = NashMethod::direct;
  const Eigen::VectorXd d = rates(b.hi);
  res.w = price_eval(p, b.hi) * d;
  res.outcome = clear(p, res.w);
  res.report = verify_nash(inst, res.w, cfg.verify_tol, cfg);
  if (!res.report.pass) {
    throw NonConvergence("solve_nash_direct: result failed verification: " +
                         describe_failure(res.report));
  }
  return res;
}

}  // namespace elastic_market
