#ifndef ELASTIC_MARKET_EFFICIENCY_HPP
#define ELASTIC_MARKET_EFFICIENCY_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "elastic_market/errors.hpp"
#include "elastic_market/market_core.hpp"
#include "elastic_market/models.hpp"
#include "elastic_market/nash_single.hpp"

namespace elastic_market {

// ---------------------------------------------------------------------------
// Closed-form efficiency constants and ratio curves.
// ---------------------------------------------------------------------------

/// 4 sqrt(2) - 5, the worst-case surplus ratio over convex price curves.
template <typename Scalar = double>
Scalar worst_case_ratio() {
  using std::sqrt;
  return Scalar(4) * sqrt(Scalar(2)) - Scalar(5);
}

/// 2 - sqrt(2), the first slope attaining worst_case_ratio().
template <typename Scalar = double>
Scalar worst_case_slope() {
  using std::sqrt;
  return Scalar(2) - sqrt(Scalar(2));
}

namespace detail {
template <typename Scalar>
void check_h_domain(const Scalar& a) {
  if (!(a > Scalar(0) && a < Scalar(1))) throw DomainError("H: requires 0 < a < 1");
}
}  // namespace detail

/// Worst-case ratio for the two-slope price with first slope a and second
/// slope b, knee at rate 1. Requires 0 < a < 1 and b >= max(a, 1 - a).
template <typename Scalar>
Scalar H(const Scalar& a, const Scalar& b) {
  detail::check_h_domain(a);
  using std::max;
  if (!(b >= max(a, Scalar(1) - a))) throw DomainError("H: requires b >= max(a, 1 - a)");
  const Scalar c = (Scalar(1) - a) * (Scalar(1) - a);
  return (a * b + Scalar(2) * (a + b) * c) / (Scalar(2) * b - a * b + c);
}

/// H at the smallest admissible b.
template <typename Scalar>
Scalar H1(const Scalar& a) {
  detail::check_h_domain(a);
  if (a <= Scalar(0.5)) return (Scalar(2) - a) / (Scalar(3) - Scalar(2) * a);
  const Scalar c = (Scalar(1) - a) * (Scalar(1) - a);
  return a * a + Scalar(4) * a * c;
}

/// Limit of H as b grows without bound.
template <typename Scalar>
Scalar H2(const Scalar& a) {
  detail::check_h_domain(a);
  const Scalar c = (Scalar(1) - a) * (Scalar(1) - a);
  return (a + Scalar(2) * c) / (Scalar(2) - a);
}

namespace detail {
template <typename Scalar>
void check_exponent(const Scalar& B) {
  if (!(B >= Scalar(1))) throw DomainError("g: requires B >= 1");
}
}  // namespace detail

/// Surplus ratio of the monomial price with coefficient (B+1)/(2B+1).
template <typename Scalar>
Scalar g2(const Scalar& B) {
  detail::check_exponent(B);
  using std::pow;
  const Scalar q = Scalar(2) * B + Scalar(1);
  return pow((B + Scalar(1)) / q, Scalar(1) / B) * ((B + Scalar(1)) * (Scalar(3) * B + Scalar(2)) / (q * q));
}

/// Surplus ratio of the monomial price with coefficient 1/(B+1).
template <typename Scalar>
Scalar g1(const Scalar& B) {
  detail::check_exponent(B);
  using std::pow;
  return pow(Scalar(1) / (B + Scalar(1)), Scalar(1) / B) * ((B + Scalar(2)) / (B + Scalar(1)));
}

/// Worst-case surplus ratio when every price is a monomial of degree B.
template <typename Scalar>
Scalar g(const Scalar& B) {
  return g2(B);
}

/// Stationary coefficients (a1, a2) = (1/(B+1), (B+1)/(2B+1)) of the monomial
/// worst-case ratio.
template <typename Scalar>
std::pair<Scalar, Scalar> monomial_critical_as(const Scalar& B) {
  detail::check_exponent(B);
  return {Scalar(1) / (B + Scalar(1)), (B + Scalar(1)) / (Scalar(2) * B + Scalar(1))};
}

// ---------------------------------------------------------------------------
// Ratio reports and worst-case instances.
// ---------------------------------------------------------------------------

struct RatioReport {
  double nash_surplus = 0.0;
  double system_surplus = 0.0;
  double ratio = 0.0;
  double bound = 0.0;
  double margin = 0.0;  ///< ratio - bound
  /// False when the price violates p(0) = 0, so the bound is not guaranteed.
  bool bound_applies = true;
  std::string bound_name;
};

/// Guaranteed ratio for a price model: g(B) for monomials (g(1) for linear),
/// 4 sqrt(2) - 5 otherwise.
std::pair<double, std::string> ratio_bound(const PriceModel& p);

/// Nash surplus over optimal surplus, with the applicable bound attached.
RatioReport ratio(const LinkInstance& inst, const NashResult& nash, const SystemSolution& sys);

/// Worst-case ratio of a price curve normalized to Nash total rate 1.
/// Throws PreconditionError unless 1 - beta+(1) <= p(1) < 1.
double F_of_p(const PriceModel& p);

struct MinimizeHResult {
  double a_star = 0.0;   ///< 2 - sqrt(2)
  double value = 0.0;    ///< 4 sqrt(2) - 5
  double numeric_a = 0.0;
  double numeric_value = 0.0;
  bool confirmed = false;  ///< |numeric_value - value| <= 1e-6
};

/// Analytic minimizer of H together with a grid plus golden-section check
/// over a in (0, 1) and b in [max(a, 1 - a), 1e8].
MinimizeHResult minimize_H();

struct WorstCaseInstance {
  LinkInstance inst;
  Eigen::VectorXd w;
  Eigen::VectorXd d;
  double f = 1.0;
  double ratio = 0.0;            ///< Nash surplus over optimal surplus
  double predicted_ratio = 0.0;  ///< F(p), the many-user limit
  Eigen::Index R = 0;
  VerifyReport report;
};

/// Builds the linear-utility instance whose equilibrium has total rate 1 and
/// minimal surplus for R users. Throws InfeasibleError when the price or the
/// user count admits no such instance; the error carries the minimal R.
WorstCaseInstance build_worst_case(const PriceModel& p, Eigen::Index R, const SolverConfig& cfg = {});

}  // namespace elastic_market

#endif  // ELASTIC_MARKET_EFFICIENCY_HPP
