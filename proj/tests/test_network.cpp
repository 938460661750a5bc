#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "elastic_market/efficiency.hpp"
#include "elastic_market/errors.hpp"
#include "elastic_market/network.hpp"
#include "elastic_market/random_instances.hpp"
#include "oracles.hpp"

using namespace elastic_market;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

VectorXd vec(std::initializer_list<double> xs) {
  VectorXd v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

NetworkInstance series_one_user() {
  Topology topo(2, 1, {{{0, 1}, 0}});
  return NetworkInstance(topo, {PriceModel::linear(1), PriceModel::linear(1)}, {UtilityModel::linear(1)});
}

NetworkInstance parallel_one_user() {
  Topology topo(2, 1, {{{0}, 0}, {{1}, 0}});
  return NetworkInstance(topo, {PriceModel::linear(1), PriceModel::linear(1)}, {UtilityModel::linear(1)});
}

double user_payoff(const NetworkInstance& inst, Eigen::Index r, const BidMatrix& W) {
  const NetworkAllocation a = allocate(inst, W);
  return utility_eval(inst.users[static_cast<size_t>(r)], a.d[r]) - W.values().col(r).sum();
}

// max of 1'y over A y <= xbar, y >= 0 by enumerating basic solutions
double brute_max_rate(const MatrixXd& A, const VectorXd& xbar) {
  const Eigen::Index J = A.rows(), n = A.cols();
  MatrixXd rows(J + n, n);
  VectorXd rhs(J + n);
  rows << A, MatrixXd::Identity(n, n);
  rhs << xbar, VectorXd::Zero(n);
  const Eigen::Index m = J + n;
  double best = 0.0;
  std::vector<int> pick(static_cast<size_t>(m), 0);
  std::fill(pick.end() - n, pick.end(), 1);
  do {
    MatrixXd M(n, n);
    VectorXd b(n);
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < m; ++i) {
      if (pick[static_cast<size_t>(i)]) {
        M.row(k) = rows.row(i);
        b[k++] = rhs[i];
      }
    }
    Eigen::FullPivLU<MatrixXd> lu(M);
    if (lu.rank() < n) continue;
    const VectorXd y = lu.solve(b);
    if ((y.array() < -1e-12).any()) continue;
    if (((A * y - xbar).array() > 1e-12).any()) continue;
    best = std::max(best, y.sum());
  } while (std::next_permutation(pick.begin(), pick.end()));
  return best;
}

}  // namespace

TEST_CASE("topology invariants") {
  MatrixXd A(2, 2), H(1, 2);
  A << 1, 0, 1, 1;
  H << 1, 1;
  const Topology t = Topology::from_incidence(A, H);
  CHECK(t.paths() == 2);
  CHECK(t.user_links(0).size() == 2);

  MatrixXd H2(2, 2);
  H2 << 1, 1, 1, 0;
  try {
    Topology::from_incidence(A, H2);
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("exactly one") != std::string::npos);
  }
  CHECK_THROWS_AS(Topology(2, 2, {{{0}, 0}}), ValidationError);
  CHECK_THROWS_AS(Topology(2, 1, {{{5}, 0}}), ValidationError);
  CHECK_THROWS_AS(Topology(2, 1, {{{}, 0}}), ValidationError);
}

TEST_CASE("bid matrix rejects off-path bids") {
  Topology topo(2, 2, {{{0}, 0}, {{1}, 1}});
  MatrixXd w = MatrixXd::Zero(2, 2);
  w(1, 0) = 1.0;
  CHECK_THROWS_AS(BidMatrix(topo, w), DomainError);
  w(1, 0) = 0.0;
  w(0, 0) = -1.0;
  CHECK_THROWS(BidMatrix(topo, w));
}

TEST_CASE("clear_links examples") {
  const NetworkInstance one =
      single_link_network(LinkInstance(PriceModel::linear(1), {UtilityModel::linear(1), UtilityModel::linear(1)}));
  MatrixXd w(1, 2);
  w << 3, 1;
  const LinkClearing c = clear_links(one, BidMatrix(one.topo, w));
  CHECK(c.f[0] == doctest::Approx(2.0));
  CHECK(c.x(0, 0) == doctest::Approx(1.5));
  CHECK(c.x(0, 1) == doctest::Approx(0.5));

  const LinkClearing z = clear_links(one, BidMatrix::zeros(one.topo));
  CHECK(z.f.isZero());
  CHECK(z.x.isZero());

  // swapping the links swaps the outcome
  Topology t1(2, 2, {{{0}, 0}, {{1}, 1}});
  Topology t2(2, 2, {{{1}, 0}, {{0}, 1}});
  const NetworkInstance n1(t1, {PriceModel::linear(1), PriceModel::monomial(2, 3)},
                           {UtilityModel::linear(1), UtilityModel::linear(1)});
  const NetworkInstance n2(t2, {PriceModel::monomial(2, 3), PriceModel::linear(1)},
                           {UtilityModel::linear(1), UtilityModel::linear(1)});
  MatrixXd w1(2, 2), w2(2, 2);
  w1 << 0.7, 0, 0, 1.3;
  w2 << 0, 1.3, 0.7, 0;
  const LinkClearing c1 = clear_links(n1, BidMatrix(t1, w1));
  const LinkClearing c2 = clear_links(n2, BidMatrix(t2, w2));
  CHECK(c1.f[0] == doctest::Approx(c2.f[1]));
  CHECK(c1.f[1] == doctest::Approx(c2.f[0]));
  CHECK(c1.x(0, 0) == doctest::Approx(c2.x(1, 0)));
}

TEST_CASE("max_rate examples") {
  CHECK(max_rate(parallel_one_user().topo, 0, vec({2, 3})).d == doctest::Approx(5.0));
  CHECK(max_rate(series_one_user().topo, 0, vec({2, 3})).d == doctest::Approx(2.0));
  Topology overlap(3, 1, {{{0, 1}, 0}, {{1, 2}, 0}});
  const MaxRateResult m = max_rate(overlap, 0, vec({1, 1, 1}));
  CHECK(m.d == doctest::Approx(1.0));
  CHECK((overlap.A() * m.y - vec({1, 1, 1})).maxCoeff() <= 1e-12);
}

TEST_CASE("max_rate matches vertex enumeration") {
  std::mt19937_64 rng = instance_rng(51, 0);
  std::uniform_int_distribution<int> nlinks(1, 4), npaths(1, 3), coin(0, 1);
  std::uniform_real_distribution<double> U(0.0, 3.0);
  for (int i = 0; i < 500; ++i) {
    const int J = nlinks(rng), P = npaths(rng);
    std::vector<Topology::Path> paths;
    for (int q = 0; q < P; ++q) {
      Topology::Path p{{}, 0};
      for (int j = 0; j < J; ++j) {
        if (coin(rng)) p.links.push_back(j);
      }
      if (p.links.empty()) p.links.push_back(std::uniform_int_distribution<int>(0, J - 1)(rng));
      paths.push_back(p);
    }
    const Topology topo(J, 1, paths);
    VectorXd xbar(J);
    for (int j = 0; j < J; ++j) xbar[j] = coin(rng) && coin(rng) ? 0.0 : U(rng);
    const MaxRateResult m = max_rate(topo, 0, xbar);
    CHECK(std::abs(m.d - brute_max_rate(topo.A(), xbar)) <= 1e-10);
    CHECK((m.y.array() >= 0.0).all());

    // monotone and concave in the grants
    VectorXd more = xbar + VectorXd::Constant(J, 0.5);
    const double d_more = max_rate(topo, 0, more).d;
    CHECK(d_more >= m.d - 1e-12);
    const double d_mid = max_rate(topo, 0, 0.5 * (xbar + 2.0 * more)).d;
    CHECK(d_mid >= 0.5 * (m.d + max_rate(topo, 0, 2.0 * more).d) - 1e-10);
  }
}

TEST_CASE("network_surplus examples") {
  const NetworkInstance s = series_one_user();
  CHECK(network_surplus(s, vec({1}), vec({1, 1})) == doctest::Approx(0.0));
  CHECK(network_surplus(s, vec({0}), vec({0, 0})) == 0.0);
  const LinkInstance li(PriceModel::monomial(1, 2), {UtilityModel::log1p(1, 1), UtilityModel::linear(0.5)});
  const VectorXd d = vec({0.3, 0.2});
  CHECK(network_surplus(single_link_network(li), d, vec({0.5})) == doctest::Approx(surplus(li, d)));
}

TEST_CASE("network system examples") {
  const NetworkSystemSolution s = solve_network_system(series_one_user());
  CHECK(s.d[0] == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(s.f[0] == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(s.f[1] == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(s.surplus == doctest::Approx(0.25).epsilon(1e-9));

  const NetworkSystemSolution p = solve_network_system(parallel_one_user());
  CHECK(p.y[0] == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(p.y[1] == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(p.surplus == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("omega examples") {
  const NetworkInstance one = single_link_network(LinkInstance(PriceModel::linear(1), {UtilityModel::linear(1)}));
  CHECK(omega(one, 0, 0.7, 0.0) == doctest::Approx(0.49).epsilon(1e-12));
  CHECK(omega(one, 0, 1.0, 1.0) == doctest::Approx(oracle::kGolden).epsilon(1e-12));
  CHECK(omega(one, 0, 0.0, 2.0) == 0.0);
  const NetworkInstance q = single_link_network(LinkInstance(PriceModel::mm1(1, 2), {UtilityModel::linear(1)}));
  CHECK(std::isinf(omega(q, 0, 2.5, 1.0)));
}

TEST_CASE("omega inverts clearing") {
  std::mt19937_64 rng = instance_rng(52, 0);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  RandomLinkOptions opts;
  opts.mm1_price = true;
  for (int i = 0; i < 500; ++i) {
    const PriceModel p = random_price(rng, opts);
    const NetworkInstance one = single_link_network(LinkInstance(p, {UtilityModel::linear(1), UtilityModel::linear(1)}));
    const double others = 3.0 * U(rng);
    const double room = std::min(5.0, p.domain_cap() - clear_total(p, others));
    const double xbar = room * U(rng);
    const double w = omega(one, 0, xbar, others);
    const ClearingOutcome c = clear(p, vec({w, others}));
    CHECK(std::abs(c.d[0] - xbar) <= 1e-10 * std::max(1.0, xbar));
  }
}

TEST_CASE("single-link network reduces to the single-link game") {
  std::mt19937_64 rng = instance_rng(53, 0);
  RandomLinkOptions opts;
  opts.min_users = 2;
  for (int i = 0; i < 20; ++i) {
    const LinkInstance li = random_link_instance(rng, opts);
    const NetworkInstance net = single_link_network(li);

    const SystemSolution s1 = solve_system(li);
    const NetworkSystemSolution s2 = solve_network_system(net);
    CHECK(s2.surplus == doctest::Approx(s1.surplus).epsilon(1e-6).scale(1.0));

    VectorXd w = VectorXd::Constant(li.size(), 0.3);
    MatrixXd wm = w.transpose();
    for (Eigen::Index r = 0; r < li.size(); ++r) {
      const double br1 = best_response(li, r, w);
      const VectorXd br2 = best_response_network(net, r, BidMatrix(net.topo, wm));
      CHECK(std::abs(br1 - br2[0]) <= 1e-6);
    }

    const NashResult n1 = solve_nash_best_response(li, VectorXd::Ones(li.size()));
    const NetworkNashResult n2 = solve_network_nash(net, BidMatrix(net.topo, MatrixXd::Ones(1, li.size())));
    CHECK(n2.report.pass);
    for (Eigen::Index r = 0; r < li.size(); ++r) CHECK(std::abs(n1.w[r] - n2.W(0, r)) <= 1e-6);
    CHECK(verify_network_nash(net, BidMatrix(net.topo, MatrixXd(n1.w.transpose())), 1e-8).pass);

    const RatioReport r1 = ratio(li, n1, s1);
    const RatioReport r2 = check_theorem14_bound(net, n2, s2);
    CHECK(std::abs(r1.ratio - r2.ratio) <= 1e-6);
  }
}

TEST_CASE("two-user single link network nash") {
  const NetworkInstance net =
      single_link_network(LinkInstance(PriceModel::linear(1), {UtilityModel::linear(1), UtilityModel::linear(1)}));
  const NetworkNashResult n = solve_network_nash(net, BidMatrix(net.topo, MatrixXd::Ones(1, 2)));
  CHECK(n.W(0, 0) == doctest::Approx(9.0 / 32).epsilon(1e-8));
  CHECK(n.W(0, 1) == doctest::Approx(9.0 / 32).epsilon(1e-8));
}

TEST_CASE("series best response equalizes grants") {
  const NetworkInstance s = series_one_user();
  const VectorXd br = best_response_network(s, 0, BidMatrix::zeros(s.topo));
  const LinkClearing c = clear_links(s, BidMatrix(s.topo, MatrixXd(br)));
  CHECK(c.x(0, 0) == doctest::Approx(c.x(1, 0)).epsilon(1e-8));

  // 2-D grid over the two bids
  double best = -1e300, b0 = 0, b1 = 0;
  for (int i = 0; i <= 400; ++i) {
    for (int j = 0; j <= 400; ++j) {
      const double w0 = i * 5e-4, w1 = j * 5e-4;
      const double q = std::min(std::sqrt(w0), std::sqrt(w1)) - w0 - w1;
      if (q > best) {
        best = q;
        b0 = w0;
        b1 = w1;
      }
    }
  }
  CHECK(std::abs(br[0] - b0) <= 1e-3);
  CHECK(std::abs(br[1] - b1) <= 1e-3);
  CHECK(user_payoff(s, 0, BidMatrix(s.topo, MatrixXd(br))) >= best - 1e-12);
}

TEST_CASE("no entry when every path is too expensive") {
  Topology topo(2, 2, {{{0, 1}, 0}, {{0}, 1}, {{1}, 1}});
  const NetworkInstance inst(topo, {PriceModel::linear(1), PriceModel::linear(1)},
                             {UtilityModel::linear(1), UtilityModel::linear(1)});
  MatrixXd w = MatrixXd::Zero(2, 2);
  w(0, 1) = 0.36;  // p = 0.6 on each link
  w(1, 1) = 0.36;
  const VectorXd br = best_response_network(inst, 0, BidMatrix(topo, w));
  CHECK(br.isZero());
}

TEST_CASE("zero bids are not an equilibrium") {
  const NetworkInstance s = series_one_user();
  CHECK_FALSE(verify_network_nash(s, BidMatrix::zeros(s.topo), 1e-8).pass);
}

TEST_CASE("disjoint links decouple") {
  Topology topo(2, 2, {{{0}, 0}, {{1}, 1}});
  const NetworkInstance inst(topo, {PriceModel::linear(1), PriceModel::linear(1)},
                             {UtilityModel::linear(1), UtilityModel::linear(1)});
  const NetworkNashResult n = solve_network_nash(inst, BidMatrix::zeros(topo));
  CHECK(n.report.pass);
  CHECK(n.W(0, 0) == doctest::Approx(0.25).epsilon(1e-8));
  CHECK(n.W(1, 1) == doctest::Approx(0.25).epsilon(1e-8));
}

TEST_CASE("symmetric users on a monomial link") {
  const NetworkInstance net =
      single_link_network(LinkInstance(PriceModel::monomial(1, 2), {UtilityModel::log1p(2, 1), UtilityModel::log1p(2, 1)}));
  MatrixXd init(1, 2);
  init << 2.0, 0.01;
  const NetworkNashResult n = solve_network_nash(net, BidMatrix(net.topo, init));
  CHECK(n.report.pass);
  CHECK(std::abs(n.W(0, 0) - n.W(0, 1)) <= 1e-6);
}

TEST_CASE("series nash and bound") {
  const NetworkInstance s = series_one_user();
  const NetworkNashResult n = solve_network_nash(s, BidMatrix::zeros(s.topo));
  CHECK(n.W(0, 0) == doctest::Approx(1.0 / 16).epsilon(1e-8));
  CHECK(n.alloc.d[0] == doctest::Approx(0.25).epsilon(1e-8));
  const RatioReport r = check_theorem14_bound(s, n, solve_network_system(s));
  // (1/4 - 1/32 - 1/32) / (1/4)
  CHECK(r.ratio == doctest::Approx(0.75).epsilon(1e-8));
  CHECK(r.margin > 0.0);
  CHECK(r.bound == doctest::Approx(oracle::kFourRootTwoMinusFive));
}

TEST_CASE("random networks: verified equilibria respect the bound") {
  int bounded = 0;
  for (int i = 0; i < 50; ++i) {
    std::mt19937_64 rng = instance_rng(54, static_cast<std::uint64_t>(i));
    const NetworkInstance inst = random_network(rng);
    CHECK(inst.topo.links() <= 4);
    CHECK(inst.topo.users() <= 4);
    CHECK(inst.topo.paths() <= 6);
    const NetworkNashResult n = solve_network_nash(inst, BidMatrix::zeros(inst.topo));
    REQUIRE(n.report.pass);
    const NetworkSystemSolution s = solve_network_system(inst);
    const RatioReport r = check_theorem14_bound(inst, n, s);
    CHECK(r.ratio <= 1.0 + 1e-6);
    if (r.bound_applies) {
      CHECK(r.margin >= -1e-6);
      ++bounded;
    }
    // doubling any one user's bids does not help
    for (Eigen::Index u = 0; u < inst.topo.users(); ++u) {
      MatrixXd w = n.W.values();
      w.col(u) *= 2.0;
      CHECK(user_payoff(inst, u, BidMatrix(inst.topo, w)) <= user_payoff(inst, u, n.W) + 1e-8);
    }
  }
  CHECK(bounded == 50);
}

TEST_CASE("networks with kinked prices") {
  for (int i = 100; i < 130; ++i) {
    std::mt19937_64 rng = instance_rng(77, static_cast<std::uint64_t>(i));
    RandomNetworkOptions opts;
    opts.two_piece_price = true;
    const NetworkInstance inst = random_network(rng, opts);
    const NetworkNashResult n = solve_network_nash(inst, BidMatrix::zeros(inst.topo));
    CHECK(n.report.pass);
  }
}
