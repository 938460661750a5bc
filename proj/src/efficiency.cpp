#include "elastic_market/efficiency.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace elastic_market {

std::pair<double, std::string> ratio_bound(const PriceModel& p) {
  if (const auto* m = std::get_if<MonomialPrice>(&p.params())) {
    return {g(m->B), "g(B)"};
  }
  if (std::holds_alternative<LinearPrice>(p.params())) return {g(1.0), "g(B)"};
  return {worst_case_ratio(), "4sqrt2-5"};
}

RatioReport ratio(const LinkInstance& inst, const NashResult& nash, const SystemSolution& sys) {
  if (!(sys.surplus > 0.0)) throw DegenerateError("ratio: optimal surplus must be positive");
  RatioReport rep;
  rep.nash_surplus = surplus(inst, nash.outcome.d);
  rep.system_surplus = sys.surplus;
  rep.ratio = rep.nash_surplus / rep.system_surplus;
  std::tie(rep.bound, rep.bound_name) = ratio_bound(inst.price);
  rep.margin = rep.ratio - rep.bound;
  rep.bound_applies = !inst.price.violates_p0();
  return rep;
}

namespace {

struct UnitRateTerms {
  double price;  // p(1)
  OneSided beta;
};

// Price and shading factors at the normalized Nash rate 1, or nothing when
// no linear-utility equilibrium with total rate 1 exists.
bool unit_rate_terms(const PriceModel& p, UnitRateTerms& out) {
  if (p.domain_cap() <= 1.0) return false;
  out.price = price_eval(p, 1.0);
  out.beta = price_beta(p, 1.0);
  const double slack = 1e-12;
  return 1.0 - out.beta.right <= out.price + slack && out.price < 1.0;
}

}  // namespace

double F_of_p(const PriceModel& p) {
  UnitRateTerms t{};
  if (!unit_rate_terms(p, t)) {
    throw PreconditionError("F_of_p: requires 1 - beta+(1) <= p(1) < 1");
  }
  const double nash = t.price + (1.0 - t.price) * (1.0 - t.price) / t.beta.right - price_cost(p, 1.0);
  const double f_opt = price_inverse(p, 1.0);
  return nash / (f_opt - price_cost(p, f_opt));
}

MinimizeHResult minimize_H() {
  MinimizeHResult res;
  res.a_star = worst_case_slope();
  res.value = worst_case_ratio();

  // H is a ratio of affine functions of b, so its minimum over b sits at an
  // end of the range; interior samples are kept as a check of that.
  constexpr double kBMax = 1e8;
  std::vector<double> b_fractions;
  for (int i = 1; i < 16; ++i) b_fractions.push_back(std::pow(kBMax, i / 16.0));
  auto min_over_b = [&](double a) {
    const double b_lo = std::max(a, 1.0 - a);
    double best = std::min(H(a, b_lo), H(a, kBMax));
    for (double b : b_fractions) {
      if (b > b_lo) best = std::min(best, H(a, b));
    }
    return best;
  };

  constexpr int kGrid = 4000;
  double best_a = 0.5;
  double best = min_over_b(best_a);
  for (int i = 1; i < kGrid; ++i) {
    const double a = static_cast<double>(i) / kGrid;
    const double v = min_over_b(a);
    if (v < best) {
      best = v;
      best_a = a;
    }
  }

  // Golden-section refinement around the best grid point.
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double lo = std::max(1e-12, best_a - 1.0 / kGrid);
  double hi = std::min(1.0 - 1e-12, best_a + 1.0 / kGrid);
  double x1 = hi - invphi * (hi - lo);
  double x2 = lo + invphi * (hi - lo);
  double f1 = min_over_b(x1);
  double f2 = min_over_b(x2);
  for (int it = 0; it < 200 && hi - lo > 1e-12; ++it) {
    if (f1 < f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - invphi * (hi - lo);
      f1 = min_over_b(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + invphi * (hi - lo);
      f2 = min_over_b(x2);
    }
  }
  res.numeric_a = 0.5 * (lo + hi);
  res.numeric_value = min_over_b(res.numeric_a);
  res.confirmed = std::abs(res.numeric_value - res.value) <= 1e-6;
  return res;
}

WorstCaseInstance build_worst_case(const PriceModel& p, Eigen::Index R, const SolverConfig& cfg) {
  UnitRateTerms t{};
  if (!unit_rate_terms(p, t)) {
    throw InfeasibleError("build_worst_case: price violates 1 - beta+(1) <= p(1) < 1");
  }
  const double price = t.price;
  const double lead = std::min(1.0, (1.0 - price) / t.beta.right);

  // Enough followers to absorb the remaining rate without exceeding slope 1.
  const double follower_cap = (1.0 - price) / t.beta.left;
  const long min_users =
      std::max(2L, 1L + static_cast<long>(std::ceil((1.0 - lead) / follower_cap - 1e-12)));
  if (R < min_users) {
    throw InfeasibleError("build_worst_case: d_1 + (R - 1)(1 - p(1)) / beta-(1) >= 1 needs R >= " +
                              std::to_string(min_users),
                          min_users);
  }

  const double follower = (1.0 - lead) / static_cast<double>(R - 1);
  const double follower_alpha = price / (1.0 - t.beta.left * follower);
  std::vector<UtilityModel> users;
  users.reserve(static_cast<std::size_t>(R));
  users.push_back(UtilityModel::linear(1.0));
  for (Eigen::Index r = 1; r < R; ++r) users.push_back(UtilityModel::linear(follower_alpha));

  WorstCaseInstance wc{LinkInstance(p, std::move(users)), {}, {}, 1.0, 0.0, 0.0, R, {}};
  wc.d = Eigen::VectorXd::Constant(R, follower);
  wc.d[0] = lead;
  wc.w = price * wc.d;
  wc.report = verify_nash(wc.inst, wc.w, cfg.verify_tol, cfg);

  const ClearingOutcome out = clear(p, wc.w);
  wc.f = out.f;
  const SystemSolution sys = solve_system(wc.inst);
  wc.ratio = surplus(wc.inst, out.d) / sys.surplus;
  wc.predicted_ratio = F_of_p(p);
  return wc;
}

}  // namespace elastic_market
