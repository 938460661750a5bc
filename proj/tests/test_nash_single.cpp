#include <doctest.h>

#include <cmath>
#include <random>

#include "elastic_market/errors.hpp"
#include "elastic_market/nash_single.hpp"
#include "elastic_market/random_instances.hpp"

using namespace elastic_market;
using Eigen::VectorXd;

namespace {

VectorXd vec(std::initializer_list<double> xs) {
  VectorXd v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

LinkInstance linear_users(double a, std::initializer_list<double> alphas) {
  std::vector<UtilityModel> us;
  for (double al : alphas) us.push_back(UtilityModel::linear(al));
  return LinkInstance(PriceModel::linear(a), us);
}

SolverConfig tight() {
  SolverConfig cfg;
  cfg.tol = 1e-13;
  return cfg;
}

// grid-search best response over [0, top]
double grid_best_response(const LinkInstance& inst, Eigen::Index r, VectorXd w, double top, double step) {
  double best_w = 0.0, best = -1e300;
  for (double x = 0.0; x <= top; x += step) {
    w[r] = x;
    const double q = payoff_anticipating(inst, r, w);
    if (q > best) {
      best = q;
      best_w = x;
    }
  }
  return best_w;
}

}  // namespace

TEST_CASE("payoff examples") {
  CHECK(payoff_anticipating(linear_users(1, {1}), 0, vec({0.25})) == doctest::Approx(0.25));
  CHECK(payoff_anticipating(linear_users(1, {1, 1}), 1, vec({2.0, 0.0})) == 0.0);
  const LinkInstance two = linear_users(1, {1, 1});
  for (Eigen::Index r = 0; r < 2; ++r) {
    CHECK(payoff_anticipating(two, r, vec({9.0 / 32, 9.0 / 32})) == doctest::Approx(3.0 / 32));
  }
}

TEST_CASE("allocation_derivs examples") {
  const OneSided one = allocation_derivs(linear_users(1, {1}), 0, vec({1.0}));
  CHECK(one.right == doctest::Approx(0.5));
  CHECK(one.left == doctest::Approx(0.5));

  const LinkInstance two = linear_users(1, {1, 1});
  const ClearingOutcome c = clear(two.price, vec({2.0, 0.0}));
  CHECK(allocation_derivs(two, 1, vec({2.0, 0.0})).right == doctest::Approx(1.0 / c.mu));

  // at the knee of a two-piece price; total bid 1 clears exactly at f = 1
  const LinkInstance kinked(PriceModel::two_piece(1.0, 4.0), {UtilityModel::linear(1), UtilityModel::linear(1)});
  const OneSided k = allocation_derivs(kinked, 0, vec({0.5, 0.5}));
  CHECK(k.left >= k.right);
  CHECK(k.left == doctest::Approx((1.0 / 1.0) * (1 - 0.5 * 0.5)));
  CHECK(k.right == doctest::Approx(1.0 - (4.0 / 5.0) * 0.5));
  CHECK_THROWS(allocation_derivs(two, 0, vec({0.0, 0.0})));
}

TEST_CASE("allocation_derivs match finite differences") {
  std::mt19937_64 rng = instance_rng(31, 0);
  std::uniform_real_distribution<double> U(0.05, 2.0);
  RandomLinkOptions opts;
  opts.mm1_price = true;
  opts.min_users = 2;
  int checked = 0;
  for (int i = 0; i < 300; ++i) {
    const LinkInstance inst = random_link_instance(rng, opts);
    VectorXd w(inst.size());
    for (Eigen::Index r = 0; r < w.size(); ++r) w[r] = U(rng);
    const Eigen::Index r = 0;
    const double h = 1e-6 * w[r];
    VectorXd up = w, dn = w;
    up[r] += h;
    dn[r] -= h;
    const double fu = clear(inst.price, up).f, fd = clear(inst.price, dn).f;
    if (inst.price.kind() == "two_piece") {
      const double knee = std::get<TwoPiecePrice>(inst.price.params()).k;
      if ((fu - knee) * (fd - knee) <= 0.0) continue;
    }
    const OneSided a = allocation_derivs(inst, r, w);
    const double fwd = (clear(inst.price, up).d[r] - clear(inst.price, w).d[r]) / h;
    const double bwd = (clear(inst.price, w).d[r] - clear(inst.price, dn).d[r]) / h;
    CHECK(a.right == doctest::Approx(fwd).epsilon(1e-5).scale(1e-1));
    CHECK(a.left == doctest::Approx(bwd).epsilon(1e-5).scale(1e-1));
    ++checked;
  }
  CHECK(checked > 250);
}

TEST_CASE("payoff concave in own bid") {
  std::mt19937_64 rng = instance_rng(32, 0);
  std::uniform_real_distribution<double> U(0.0, 3.0);
  RandomLinkOptions opts;
  opts.min_users = 2;
  for (int i = 0; i < 300; ++i) {
    const LinkInstance inst = random_link_instance(rng, opts);
    VectorXd w(inst.size());
    for (Eigen::Index r = 0; r < w.size(); ++r) w[r] = U(rng);
    double x1 = U(rng), x2 = U(rng);
    VectorXd a = w, b = w, m = w;
    a[0] = x1;
    b[0] = x2;
    m[0] = 0.5 * (x1 + x2);
    const double qa = payoff_anticipating(inst, 0, a), qb = payoff_anticipating(inst, 0, b);
    CHECK(payoff_anticipating(inst, 0, m) >= 0.5 * (qa + qb) - 1e-12 * (1 + std::abs(qa) + std::abs(qb)));
  }
}

TEST_CASE("best_response examples") {
  const LinkInstance one = linear_users(1, {1});
  CHECK(best_response(one, 0, vec({0.0}), tight()) == doctest::Approx(0.25).epsilon(1e-10));
  CHECK(grid_best_response(one, 0, vec({0.0}), 2.0, 1e-6) == doctest::Approx(0.25).epsilon(1e-5));

  // others already push the price to U'(0)
  const LinkInstance two = linear_users(1, {1, 1});
  CHECK(best_response(two, 1, vec({1.0, 0.0})) == 0.0);
  CHECK(best_response(two, 1, vec({5.0, 0.0})) == 0.0);

  CHECK(best_response(two, 1, vec({9.0 / 32, 0.0}), tight()) == doctest::Approx(9.0 / 32).epsilon(1e-10));
  CHECK(grid_best_response(two, 1, vec({9.0 / 32, 0.0}), 1.0, 1e-6) == doctest::Approx(9.0 / 32).epsilon(1e-5));
}

TEST_CASE("best_response beats a grid search") {
  std::mt19937_64 rng = instance_rng(33, 0);
  std::uniform_real_distribution<double> U(0.0, 2.0);
  RandomLinkOptions opts;
  opts.min_users = 2;
  opts.max_users = 3;
  opts.mm1_price = true;
  for (int i = 0; i < 40; ++i) {
    const LinkInstance inst = random_link_instance(rng, opts);
    VectorXd w(inst.size());
    for (Eigen::Index r = 0; r < w.size(); ++r) w[r] = U(rng);
    const double br = best_response(inst, 0, w, tight());
    VectorXd at = w;
    at[0] = br;
    const double q = payoff_anticipating(inst, 0, at);
    const double gw = grid_best_response(inst, 0, w, 10.0, 1e-3);
    at[0] = gw;
    CHECK(q >= payoff_anticipating(inst, 0, at) - 1e-12);
  }
}

TEST_CASE("nash analytic cases") {
  const LinkInstance one = linear_users(1, {1});
  for (const NashResult& n : {solve_nash_best_response(one, vec({1.0}), tight()), solve_nash_direct(one, tight())}) {
    CHECK(n.w[0] == doctest::Approx(0.25).epsilon(1e-10));
    CHECK(n.outcome.f == doctest::Approx(0.5).epsilon(1e-10));
    CHECK(n.report.pass);
  }
  const LinkInstance two = linear_users(1, {1, 1});
  for (const NashResult& n :
       {solve_nash_best_response(two, vec({1.0, 0.1}), tight()), solve_nash_direct(two, tight())}) {
    CHECK(n.w[0] == doctest::Approx(9.0 / 32).epsilon(1e-10));
    CHECK(n.w[1] == doctest::Approx(9.0 / 32).epsilon(1e-10));
    CHECK(n.outcome.f == doctest::Approx(0.75).epsilon(1e-10));
    CHECK(n.outcome.d[0] == doctest::Approx(3.0 / 8).epsilon(1e-10));
  }
}

TEST_CASE("solvers agree and equilibrium is unique") {
  std::mt19937_64 rng = instance_rng(34, 0);
  RandomLinkOptions opts;
  opts.two_piece_price = false;
  SolverConfig cfg;
  for (int i = 0; i < 50; ++i) {
    const LinkInstance inst = random_link_instance(rng, opts);
    const NashResult direct = solve_nash_direct(inst, cfg);
    const NashResult br1 = solve_nash_best_response(inst, VectorXd::Ones(inst.size()), cfg);
    const NashResult br2 = solve_nash_best_response(inst, VectorXd::Constant(inst.size(), 1e-3), cfg);
    CHECK(direct.report.pass);
    CHECK((direct.w - br1.w).cwiseAbs().maxCoeff() <= 1e-6);
    CHECK((br1.w - br2.w).cwiseAbs().maxCoeff() <= 1e-6);
  }
}

TEST_CASE("direct solver preconditions") {
  const LinkInstance kinked(PriceModel::two_piece(0.5, 3.0), {UtilityModel::linear(1)});
  CHECK_THROWS_AS(solve_nash_direct(kinked), PreconditionError);
  // best response still works on the kinked price
  CHECK(solve_nash_best_response(kinked, vec({1.0})).report.pass);
}

TEST_CASE("verify_nash examples") {
  const LinkInstance two = linear_users(1, {1, 1});
  CHECK(verify_nash(two, vec({9.0 / 32, 9.0 / 32}), 1e-8).pass);
  const VerifyReport zero = verify_nash(two, vec({0.0, 0.0}), 1e-8);
  CHECK_FALSE(zero.pass);
  CHECK_FALSE(zero.positive_total);
  CHECK_FALSE(verify_nash(two, vec({0.2, 0.2}), 1e-8).pass);

  // w = (1, 0): f = 1, p = 1; user 1 is optimal with alpha = 2
  CHECK(verify_nash(linear_users(1, {2, 1}), vec({1.0, 0.0}), 1e-8).pass);
  const VerifyReport entry = verify_nash(linear_users(1, {2, 1.5}), vec({1.0, 0.0}), 1e-8);
  CHECK_FALSE(entry.pass);
  CHECK(entry.upper_violation[1] == doctest::Approx(0.5));
}

TEST_CASE("verified equilibria resist doubling and halving") {
  std::mt19937_64 rng = instance_rng(35, 0);
  RandomLinkOptions opts;
  opts.mm1_price = true;
  for (int i = 0; i < 40; ++i) {
    const LinkInstance inst = random_link_instance(rng, opts);
    const NashResult n = solve_nash_best_response(inst, VectorXd::Ones(inst.size()));
    REQUIRE(n.report.pass);
    for (Eigen::Index r = 0; r < inst.size(); ++r) {
      const double base = payoff_anticipating(inst, r, n.w);
      for (double fac : {0.5, 2.0}) {
        VectorXd w = n.w;
        w[r] *= fac;
        if (w.sum() == 0.0) continue;
        CHECK(payoff_anticipating(inst, r, w) <= base + 1e-8);
      }
    }
  }
}

TEST_CASE("config validation") {
  SolverConfig cfg;
  cfg.damping = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg.damping = 0.5;
  cfg.tol = -1;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
}
