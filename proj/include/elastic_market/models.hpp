#ifndef ELASTIC_MARKET_MODELS_HPP
#define ELASTIC_MARKET_MODELS_HPP

#include <string_view>
#include <variant>

namespace elastic_market {

// ---------------------------------------------------------------------------
// Price curves p(f). Each family is convex and strictly increasing; the cost
// C(f) is the integral of p from 0 to f.
// ---------------------------------------------------------------------------

/// p(f) = a f
struct LinearPrice {
  double a;
};

/// p(f) = a f^B, B >= 1
struct MonomialPrice {
  double a;
  double B;
};

/// p(f) = a f on [0, k], a k + b (f - k) beyond the knee k. b >= a.
struct TwoPiecePrice {
  double a;
  double b;
  double k;
};

/// Queueing price: C(f) = a f / (s - f), p(f) = a s / (s - f)^2 on [0, s).
/// Note p(0) = a / s > 0.
struct MM1Price {
  double a;
  double s;
};

class PriceModel {
 public:
  using Params = std::variant<LinearPrice, MonomialPrice, TwoPiecePrice, MM1Price>;

  /// Validating constructors; throw ValidationError naming the constraint.
  static PriceModel linear(double a);
  static PriceModel monomial(double a, double B);
  static PriceModel two_piece(double a, double b, double k = 1.0);
  static PriceModel mm1(double a, double s);

  const Params& params() const noexcept { return params_; }
  std::string_view kind() const noexcept;

  /// True for MM1Price, whose price does not vanish at zero rate.
  bool violates_p0() const noexcept;
  /// False only for the kinked TwoPiece family.
  bool differentiable() const noexcept;
  /// Elasticity f p'(f) / p(f) nondecreasing in f (Linear, Monomial, MM1).
  bool nondecreasing_elasticity() const noexcept;
  /// Supremum of the rate domain: s for MM1, +inf otherwise.
  double domain_cap() const noexcept;
  /// Largest usable rate strictly inside the domain (s (1 - 2^-40) for MM1).
  double bracket_cap() const noexcept;

 private:
  explicit PriceModel(Params p) : params_(p) {}
  Params params_;
};

/// Relative distance from the TwoPiece knee inside which the rate is treated
/// as sitting on the knee when reporting one-sided slopes.
inline constexpr double kKneeRelTol = 1e-12;

struct OneSided {
  double left;
  double right;
};

double price_eval(const PriceModel& p, double f);
double price_cost(const PriceModel& p, double f);
/// One-sided slopes of p at f > 0.
OneSided price_derivs(const PriceModel& p, double f);
/// (eps-, eps+) = (f / p(f)) * one-sided slopes.
OneSided price_elasticity(const PriceModel& p, double f);
/// beta = eps / (1 + eps) for each side.
OneSided price_beta(const PriceModel& p, double f);
/// Smallest f >= 0 with p(f) >= lam (0 when lam <= p(0)). Closed form.
double price_inverse(const PriceModel& p, double lam);

// ---------------------------------------------------------------------------
// Utilities U(d), concave and strictly increasing with U(0) = 0 and finite
// U'(0).
// ---------------------------------------------------------------------------

/// U(d) = alpha d
struct LinearUtility {
  double alpha;
};

/// U(d) = alpha kappa ln(1 + d / kappa)
struct LogOnePlusUtility {
  double alpha;
  double kappa;
};

/// U(d) = alpha ((d + kappa)^(1-gamma) - kappa^(1-gamma)) / (1 - gamma)
struct ShiftedPowerUtility {
  double alpha;
  double kappa;
  double gamma;
};

class UtilityModel {
 public:
  using Params = std::variant<LinearUtility, LogOnePlusUtility, ShiftedPowerUtility>;

  static UtilityModel linear(double alpha);
  static UtilityModel log1p(double alpha, double kappa);
  static UtilityModel shifted_power(double alpha, double kappa, double gamma);

  const Params& params() const noexcept { return params_; }
  std::string_view kind() const noexcept;
  bool is_linear() const noexcept {
    return std::holds_alternative<LinearUtility>(params_);
  }

 private:
  explicit UtilityModel(Params p) : params_(p) {}
  Params params_;
};

double utility_eval(const UtilityModel& u, double d);
double utility_deriv(const UtilityModel& u, double d);
double utility_deriv2(const UtilityModel& u, double d);
/// sup{ d >= 0 : U'(d) >= lam }, with 0 whenever U'(0) <= lam and +inf for a
/// linear utility priced below its slope.
double utility_demand(const UtilityModel& u, double lam);

}  // namespace elastic_market

#endif  // ELASTIC_MARKET_MODELS_HPP
