#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "elastic_market/errors.hpp"
#include "elastic_market/models.hpp"
#include "elastic_market/random_instances.hpp"

using namespace elastic_market;

TEST_CASE("price_eval examples") {
  CHECK(price_eval(PriceModel::monomial(2, 2), 1.0) == doctest::Approx(2.0));
  CHECK(price_eval(PriceModel::two_piece(0.3, 4.0), 1.0) == doctest::Approx(0.3));
  CHECK(price_eval(PriceModel::mm1(1, 2), 1.0) == doctest::Approx(2.0));
  CHECK(price_eval(PriceModel::linear(1), 0.0) == 0.0);
  CHECK(price_eval(PriceModel::mm1(1, 2), 0.0) == doctest::Approx(0.5));
}

TEST_CASE("price_cost examples") {
  CHECK(price_cost(PriceModel::linear(1), 1.0) == doctest::Approx(0.5));
  CHECK(price_cost(PriceModel::monomial(1, 1), 2.0) == doctest::Approx(2.0));
  CHECK(price_cost(PriceModel::mm1(1, 2), 1.0) == doctest::Approx(1.0));
  CHECK(price_cost(PriceModel::two_piece(0.5, 3.0), 0.0) == 0.0);
}

TEST_CASE("price_derivs examples") {
  const OneSided k = price_derivs(PriceModel::two_piece(0.5, 3.0, 1.0), 1.0);
  CHECK(k.left == doctest::Approx(0.5));
  CHECK(k.right == doctest::Approx(3.0));
  const OneSided l = price_derivs(PriceModel::linear(2), 5.0);
  CHECK(l.left == doctest::Approx(2.0));
  CHECK(l.right == doctest::Approx(2.0));
  const OneSided m = price_derivs(PriceModel::monomial(1, 2), 1.0);
  CHECK(m.left == doctest::Approx(2.0));
  CHECK(m.right == doctest::Approx(2.0));
}

TEST_CASE("elasticity and beta examples") {
  for (double f : {0.1, 1.0, 7.0}) {
    const OneSided e = price_elasticity(PriceModel::monomial(1.3, 3.0), f);
    CHECK(e.left == doctest::Approx(3.0));
    CHECK(e.right == doctest::Approx(3.0));
    const OneSided b = price_beta(PriceModel::monomial(1.3, 3.0), f);
    CHECK(b.right == doctest::Approx(0.75));
  }
  const double a = 0.4, bb = 6.0;
  const OneSided e = price_elasticity(PriceModel::two_piece(a, bb), 1.0);
  CHECK(e.left == doctest::Approx(1.0));
  CHECK(e.right == doctest::Approx(bb / a));
  const OneSided be = price_beta(PriceModel::two_piece(a, bb), 1.0);
  CHECK(be.left == doctest::Approx(0.5));
  CHECK(be.right == doctest::Approx(bb / (a + bb)));
  const OneSided q = price_elasticity(PriceModel::mm1(0.7, 2.0), 1.0);
  CHECK(q.left == doctest::Approx(2.0));
  CHECK(q.right == doctest::Approx(2.0));
  const OneSided lb = price_beta(PriceModel::linear(3), 2.0);
  CHECK(lb.left == doctest::Approx(0.5));
  CHECK(lb.right == doctest::Approx(0.5));
}

TEST_CASE("factories reject bad parameters") {
  CHECK_THROWS_AS(PriceModel::linear(-1), ValidationError);
  CHECK_THROWS_AS(PriceModel::monomial(1, 0.5), ValidationError);
  CHECK_THROWS_AS(PriceModel::two_piece(1, 0.5), ValidationError);
  CHECK_THROWS_AS(PriceModel::mm1(1, 0), ValidationError);
  CHECK_THROWS_AS(UtilityModel::linear(0), ValidationError);
  CHECK_THROWS_AS(UtilityModel::log1p(1, -1), ValidationError);
  CHECK_THROWS_AS(UtilityModel::shifted_power(1, 1, 0), ValidationError);
  try {
    PriceModel::linear(-1);
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("a > 0") != std::string::npos);
  }
}

TEST_CASE("mm1 domain") {
  const PriceModel p = PriceModel::mm1(1, 2);
  CHECK(p.violates_p0());
  CHECK_THROWS_AS(price_eval(p, 2.0), DomainError);
  CHECK_THROWS_AS(price_eval(PriceModel::linear(1), -1.0), DomainError);
}

TEST_CASE("utility examples") {
  const UtilityModel lin = UtilityModel::linear(0.7);
  CHECK(utility_eval(lin, 2.0) == doctest::Approx(1.4));
  CHECK(utility_deriv(lin, 2.0) == doctest::Approx(0.7));
  const UtilityModel lg = UtilityModel::log1p(1, 1);
  CHECK(utility_eval(lg, 0.0) == 0.0);
  CHECK(utility_deriv(lg, 0.0) == doctest::Approx(1.0));
  const UtilityModel sp = UtilityModel::shifted_power(1, 1, 2);
  CHECK(utility_eval(sp, 1.0) == doctest::Approx(0.5));
  CHECK(utility_deriv(sp, 1.0) == doctest::Approx(0.25));
  CHECK(utility_deriv(UtilityModel::shifted_power(2, 0.5, 1.5), 0.0) == doctest::Approx(2.0 * std::pow(0.5, -1.5)));
}

TEST_CASE("utility_demand examples") {
  CHECK(utility_demand(UtilityModel::log1p(1, 1), 0.5) == doctest::Approx(1.0));
  CHECK(utility_demand(UtilityModel::linear(1), 2.0) == 0.0);
  CHECK(std::isinf(utility_demand(UtilityModel::linear(1), 0.5)));
}

namespace {

std::vector<PriceModel> sample_prices(std::mt19937_64& rng, int n) {
  RandomLinkOptions opts;
  opts.mm1_price = true;
  std::vector<PriceModel> out;
  for (int i = 0; i < n; ++i) out.push_back(random_price(rng, opts));
  return out;
}

}  // namespace

TEST_CASE("price convex and increasing, cost is its integral") {
  std::mt19937_64 rng = instance_rng(11, 0);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (const PriceModel& p : sample_prices(rng, 200)) {
    const double top = std::min(4.0, 0.95 * p.domain_cap());
    const double f1 = top * U(rng), f2 = top * U(rng), t = U(rng);
    const double lo = std::min(f1, f2), hi = std::max(f1, f2);
    const double mid = (1 - t) * lo + t * hi;
    CHECK(price_eval(p, mid) <= (1 - t) * price_eval(p, lo) + t * price_eval(p, hi) + 1e-12 * (1 + price_eval(p, hi)));
    if (hi > lo) CHECK(price_eval(p, hi) > price_eval(p, lo));
    CHECK(price_cost(p, 0.0) == 0.0);

    // Simpson on a fine grid
    const int n = 2000;
    const double h = hi / n;
    double s = price_eval(p, 0.0) + price_eval(p, hi);
    for (int k = 1; k < n; ++k) s += (k % 2 ? 4.0 : 2.0) * price_eval(p, k * h);
    CHECK(price_cost(p, hi) == doctest::Approx(s * h / 3.0).epsilon(1e-6));
  }
}

TEST_CASE("one-sided elasticities and betas are ordered") {
  std::mt19937_64 rng = instance_rng(12, 0);
  std::uniform_real_distribution<double> U(0.01, 0.99);
  for (const PriceModel& p : sample_prices(rng, 200)) {
    const double f = std::min(4.0, p.domain_cap()) * U(rng);
    const OneSided e = price_elasticity(p, f);
    const OneSided b = price_beta(p, f);
    CHECK(e.left > 0.0);
    CHECK(e.left <= e.right);
    CHECK(b.left > 0.0);
    CHECK(b.left <= b.right);
    CHECK(b.right < 1.0);
    CHECK(b.right == doctest::Approx(e.right / (1 + e.right)));
  }
}

TEST_CASE("elasticity nondecreasing where flagged") {
  std::mt19937_64 rng = instance_rng(13, 0);
  for (const PriceModel& p : sample_prices(rng, 100)) {
    if (!p.nondecreasing_elasticity()) continue;
    const double top = std::min(4.0, 0.99 * p.domain_cap());
    double prev = 0.0;
    for (int k = 1; k <= 50; ++k) {
      const double e = price_elasticity(p, top * k / 50.0).left;
      CHECK(e >= prev * (1 - 1e-12));
      prev = e;
    }
  }
}

TEST_CASE("price_inverse round trip") {
  std::mt19937_64 rng = instance_rng(14, 0);
  std::uniform_real_distribution<double> U(0.01, 0.99);
  for (const PriceModel& p : sample_prices(rng, 200)) {
    const double f = std::min(4.0, p.domain_cap()) * U(rng);
    CHECK(price_inverse(p, price_eval(p, f)) == doctest::Approx(f).epsilon(1e-10));
  }
}

TEST_CASE("utilities concave, increasing, derivatives consistent") {
  std::mt19937_64 rng = instance_rng(15, 0);
  std::uniform_real_distribution<double> U(0.0, 5.0);
  for (int i = 0; i < 200; ++i) {
    const UtilityModel u = random_utility(rng, true);
    const double d1 = U(rng), d2 = U(rng);
    const double mid = 0.5 * (d1 + d2);
    CHECK(utility_eval(u, mid) >= 0.5 * (utility_eval(u, d1) + utility_eval(u, d2)) - 1e-12);
    CHECK(utility_deriv(u, d1) > 0.0);
    CHECK(utility_eval(u, 0.0) == 0.0);

    const double d = 0.1 + d1, h = 1e-5;
    const double fd1 = (utility_eval(u, d + h) - utility_eval(u, d - h)) / (2 * h);
    CHECK(utility_deriv(u, d) == doctest::Approx(fd1).epsilon(1e-7));
    const double fd2 = (utility_deriv(u, d + h) - utility_deriv(u, d - h)) / (2 * h);
    CHECK(utility_deriv2(u, d) == doctest::Approx(fd2).epsilon(1e-6).scale(1e-6));
    CHECK(utility_deriv2(u, d) <= 0.0);

    const double lam = utility_deriv(u, d);
    if (u.kind() != "linear") CHECK(utility_demand(u, lam) == doctest::Approx(d).epsilon(1e-9));
  }
}

TEST_CASE("shifted power accurate for gamma near 1") {
  for (double gamma : {0.9972, 1.0 - 1e-9, 1.0 + 1e-9}) {
    const UtilityModel u = UtilityModel::shifted_power(2.0, 0.7, gamma);
    CHECK(utility_eval(u, 1.3) == doctest::Approx(2.0 * std::log1p(1.3 / 0.7)).epsilon(5e-3));
    const double d = 0.9, h = 1e-7;
    const double slope = (utility_eval(u, d + h) - utility_eval(u, d - h)) / (2 * h);
    CHECK(slope == doctest::Approx(utility_deriv(u, d)).epsilon(1e-8));
  }
}
