#include "elastic_market/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "elastic_market/errors.hpp"

namespace elastic_market {
namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

constexpr double kInf = std::numeric_limits<double>::infinity();

void require(bool ok, const std::string& what) {
  if (!ok) throw ValidationError(what);
}

bool positive(double x) { return std::isfinite(x) && x > 0.0; }

void check_rate(const PriceModel& p, double f) {
  if (!(f >= 0.0) || !std::isfinite(f)) {
    throw DomainError("price: rate must be finite and >= 0, got " + std::to_string(f));
  }
  if (f >= p.domain_cap()) {
    throw DomainError("mm1 price: rate must satisfy f < s, got " + std::to_string(f));
  }
}

void check_open_rate(const PriceModel& p, double f) {
  check_rate(p, f);
  if (f == 0.0) throw DomainError("price: one-sided quantities need f > 0");
}

}  // namespace

PriceModel PriceModel::linear(double a) {
  require(positive(a), "linear price: a > 0");
  return PriceModel(LinearPrice{a});
}

PriceModel PriceModel::monomial(double a, double B) {
  require(positive(a), "monomial price: a > 0");
  require(std::isfinite(B) && B >= 1.0, "monomial price: B >= 1");
  return PriceModel(MonomialPrice{a, B});
}

PriceModel PriceModel::two_piece(double a, double b, double k) {
  require(positive(a), "two_piece price: a > 0");
  require(std::isfinite(b) && b >= a, "two_piece price: b >= a");
  require(positive(k), "two_piece price: k > 0");
  return PriceModel(TwoPiecePrice{a, b, k});
}

PriceModel PriceModel::mm1(double a, double s) {
  require(positive(a), "mm1 price: a > 0");
  require(positive(s), "mm1 price: s > 0");
  return PriceModel(MM1Price{a, s});
}

std::string_view PriceModel::kind() const noexcept {
  return std::visit(overloaded{[](const LinearPrice&) { return std::string_view("linear"); },
                               [](const MonomialPrice&) { return std::string_view("monomial"); },
                               [](const TwoPiecePrice&) { return std::string_view("two_piece"); },
                               [](const MM1Price&) { return std::string_view("mm1"); }},
                    params_);
}

bool PriceModel::violates_p0() const noexcept {
  return std::holds_alternative<MM1Price>(params_);
}

bool PriceModel::differentiable() const noexcept {
  return !std::holds_alternative<TwoPiecePrice>(params_);
}

bool PriceModel::nondecreasing_elasticity() const noexcept {
  return !std::holds_alternative<TwoPiecePrice>(params_);
}

double PriceModel::domain_cap() const noexcept {
  if (const auto* q = std::get_if<MM1Price>(&params_)) return q->s;
  return kInf;
}

double PriceModel::bracket_cap() const noexcept {
  if (const auto* q = std::get_if<MM1Price>(&params_)) return q->s * (1.0 - std::ldexp(1.0, -40));
  return kInf;
}

double price_eval(const PriceModel& p, double f) {
  check_rate(p, f);
  return std::visit(
      overloaded{[&](const LinearPrice& m) { return m.a * f; },
                 [&](const MonomialPrice& m) { return m.a * std::pow(f, m.B); },
                 [&](const TwoPiecePrice& m) {
                   return f <= m.k ? m.a * f : m.a * m.k + m.b * (f - m.k);
                 },
                 [&](const MM1Price& m) {
                   const double gap = m.s - f;
                   return m.a * m.s / (gap * gap);
                 }},
      p.params());
}

double price_cost(const PriceModel& p, double f) {
  check_rate(p, f);
  return std::visit(
      overloaded{[&](const LinearPrice& m) { return 0.5 * m.a * f * f; },
                 [&](const MonomialPrice& m) { return m.a * std::pow(f, m.B + 1.0) / (m.B + 1.0); },
                 [&](const TwoPiecePrice& m) {
                   if (f <= m.k) return 0.5 * m.a * f * f;
                   const double e = f - m.k;
                   return 0.5 * m.a * m.k * m.k + m.a * m.k * e + 0.5 * m.b * e * e;
                 },
                 [&](const MM1Price& m) { return m.a * f / (m.s - f); }},
      p.params());
}

OneSided price_derivs(const PriceModel& p, double f) {
  check_open_rate(p, f);
  return std::visit(
      overloaded{[&](const LinearPrice& m) { return OneSided{m.a, m.a}; },
                 [&](const MonomialPrice& m) {
                   const double s = m.a * m.B * std::pow(f, m.B - 1.0);
                   return OneSided{s, s};
                 },
                 [&](const TwoPiecePrice& m) {
                   if (std::abs(f - m.k) <= kKneeRelTol * m.k) return OneSided{m.a, m.b};
                   return f < m.k ? OneSided{m.a, m.a} : OneSided{m.b, m.b};
                 },
                 [&](const MM1Price& m) {
                   const double gap = m.s - f;
                   const double s = 2.0 * m.a * m.s / (gap * gap * gap);
                   return OneSided{s, s};
                 }},
      p.params());
}

OneSided price_elasticity(const PriceModel& p, double f) {
  const OneSided slope = price_derivs(p, f);
  const double price = price_eval(p, f);
  if (!(price > 0.0)) throw DegenerateError("price elasticity undefined where p(f) = 0");
  // Closed forms where they exist keep the knee and monomial values exact.
  if (const auto* m = std::get_if<MonomialPrice>(&p.params())) return {m->B, m->B};
  if (std::holds_alternative<LinearPrice>(p.params())) return {1.0, 1.0};
  if (const auto* m = std::get_if<MM1Price>(&p.params())) {
    const double e = 2.0 * f / (m->s - f);
    return {e, e};
  }
  return {f * slope.left / price, f * slope.right / price};
}

OneSided price_beta(const PriceModel& p, double f) {
  const OneSided e = price_elasticity(p, f);
  return {e.left / (1.0 + e.left), e.right / (1.0 + e.right)};
}

double price_inverse(const PriceModel& p, double lam) {
  if (std::isnan(lam)) throw DomainError("price_inverse: NaN price");
  return std::visit(
      overloaded{[&](const LinearPrice& m) { return lam <= 0.0 ? 0.0 : lam / m.a; },
                 [&](const MonomialPrice& m) {
                   return lam <= 0.0 ? 0.0 : std::pow(lam / m.a, 1.0 / m.B);
                 },
                 [&](const TwoPiecePrice& m) {
                   if (lam <= 0.0) return 0.0;
                   const double knee_price = m.a * m.k;
                   return lam <= knee_price ? lam / m.a : m.k + (lam - knee_price) / m.b;
                 },
                 [&](const MM1Price& m) {
                   if (lam <= m.a / m.s) return 0.0;
                   return m.s - std::sqrt(m.a * m.s / lam);
                 }},
      p.params());
}

// ---------------------------------------------------------------------------

UtilityModel UtilityModel::linear(double alpha) {
  require(positive(alpha), "linear utility: alpha > 0");
  return UtilityModel(LinearUtility{alpha});
}

UtilityModel UtilityModel::log1p(double alpha, double kappa) {
  require(positive(alpha), "log1p utility: alpha > 0");
  require(positive(kappa), "log1p utility: kappa > 0");
  return UtilityModel(LogOnePlusUtility{alpha, kappa});
}

UtilityModel UtilityModel::shifted_power(double alpha, double kappa, double gamma) {
  require(positive(alpha), "shifted_power utility: alpha > 0");
  require(positive(kappa), "shifted_power utility: kappa > 0");
  require(positive(gamma) && gamma != 1.0, "shifted_power utility: gamma > 0 and gamma != 1");
  return UtilityModel(ShiftedPowerUtility{alpha, kappa, gamma});
}

std::string_view UtilityModel::kind() const noexcept {
  return std::visit(
      overloaded{[](const LinearUtility&) { return std::string_view("linear"); },
                 [](const LogOnePlusUtility&) { return std::string_view("log1p"); },
                 [](const ShiftedPowerUtility&) { return std::string_view("shifted_power"); }},
      params_);
}

namespace {
void check_demand_rate(double d) {
  if (!(d >= 0.0)) throw DomainError("utility: rate must be >= 0, got " + std::to_string(d));
}
}  // namespace

double utility_eval(const UtilityModel& u, double d) {
  check_demand_rate(d);
  return std::visit(
      overloaded{[&](const LinearUtility& m) { return m.alpha * d; },
                 [&](const LogOnePlusUtility& m) { return m.alpha * m.kappa * std::log1p(d / m.kappa); },
                 [&](const ShiftedPowerUtility& m) {
                   // kappa^e ((1 + d/kappa)^e - 1) / e; stays accurate for gamma near 1
                   const double e = 1.0 - m.gamma;
                   return m.alpha * std::pow(m.kappa, e) * std::expm1(e * std::log1p(d / m.kappa)) / e;
                 }},
      u.params());
}

double utility_deriv(const UtilityModel& u, double d) {
  check_demand_rate(d);
  return std::visit(
      overloaded{[&](const LinearUtility& m) { return m.alpha; },
                 [&](const LogOnePlusUtility& m) { return m.alpha * m.kappa / (m.kappa + d); },
                 [&](const ShiftedPowerUtility& m) { return m.alpha * std::pow(d + m.kappa, -m.gamma); }},
      u.params());
}

double utility_deriv2(const UtilityModel& u, double d) {
  check_demand_rate(d);
  return std::visit(
      overloaded{[&](const LinearUtility&) { return 0.0; },
                 [&](const LogOnePlusUtility& m) { return -m.alpha * m.kappa / ((m.kappa + d) * (m.kappa + d)); },
                 [&](const ShiftedPowerUtility& m) {
                   return -m.alpha * m.gamma * std::pow(d + m.kappa, -m.gamma - 1.0);
                 }},
      u.params());
}

double utility_demand(const UtilityModel& u, double lam) {
  if (!(lam > 0.0)) throw DomainError("utility_demand: price must be > 0");
  return std::visit(
      overloaded{[&](const LinearUtility& m) { return lam < m.alpha ? kInf : 0.0; },
                 [&](const LogOnePlusUtility& m) {
                   return lam >= m.alpha ? 0.0 : m.kappa * (m.alpha / lam - 1.0);
                 },
                 [&](const ShiftedPowerUtility& m) {
                   if (m.alpha * std::pow(m.kappa, -m.gamma) <= lam) return 0.0;
                   return std::max(0.0, std::pow(m.alpha / lam, 1.0 / m.gamma) - m.kappa);
                 }},
      u.params());
}

}  // namespace elastic_market
