#include "elastic_market/network.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>
#include <string>

#include "elastic_market/detail/bisect.hpp"
#include "elastic_market/detail/projected_newton.hpp"
#include "elastic_market/errors.hpp"
#include "elastic_market/simplex.hpp"

namespace elastic_market {
namespace {

using Eigen::Index;

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string idx(Index i) { return std::to_string(static_cast<long long>(i)); }

bool in_domain(const PriceModel& p, double f) { return f >= 0.0 && f < p.domain_cap(); }

// Total rate at link j with bids `others` from everyone else and grant x to us.
double omega_rate(const PriceModel& p, double x, double others) {
  if (others == 0.0) return x;
  const double px = price_eval(p, x);
  if (px == 0.0) return clear_total(p, others);
  auto gap = [&](double f) { return (f - x) * price_eval(p, f) - others; };
  double hi = x + others / px;
  const double cap = p.domain_cap();
  if (std::isfinite(cap)) {
    hi = std::min(hi, x + (cap - x) * (1.0 - std::ldexp(1.0, -40)));
  } else {
    double h = std::max(2.0 * x, 1.0);
    for (int k = 0; k < 2000 && gap(h) < 0.0; ++k) h *= 2.0;
    hi = std::min(hi, h);
  }
  auto [f, bracket] = detail::increasing_root(gap, x, hi);
  if (!bracket.collapsed) throw NonConvergence("omega: bisection hit its iteration cap");
  return f;
}

// Right derivative of omega at x (left when `left`).
double omega_slope(const PriceModel& p, double x, double others, bool left) {
  if (!in_domain(p, x)) return kInf;
  if (x == 0.0 && others == 0.0) return price_eval(p, 0.0);
  const double f = omega_rate(p, x, others);
  const OneSided beta = price_beta(p, f);
  const double b = left ? beta.left : beta.right;
  const double denom = 1.0 - (x / f) * b;
  if (!(denom > 0.0)) return kInf;
  return price_eval(p, f) / denom;
}

// One-sided slope with the knee widened by `slack`, as in the single-link verifier.
double omega_slope_near(const PriceModel& p, double x, double others, bool left, double slack) {
  if (!in_domain(p, x)) return kInf;
  if (x == 0.0 && others == 0.0) return price_eval(p, 0.0);
  const double f = omega_rate(p, x, others);
  const OneSided beta = price_beta_near(p, f, slack);
  const double denom = 1.0 - (x / f) * (left ? beta.left : beta.right);
  if (!(denom > 0.0)) return kInf;
  return price_eval(p, f) / denom;
}

double omega_value(const PriceModel& p, double x, double others) {
  if (!(x >= 0.0) || !std::isfinite(x)) throw DomainError("omega: rate must be finite and >= 0");
  if (x == 0.0) return 0.0;
  if (!in_domain(p, x)) return kInf;
  return x * price_eval(p, omega_rate(p, x, others));
}

Eigen::VectorXd others_totals(const BidMatrix& W, Index r) {
  return W.values().rowwise().sum() - W.values().col(r);
}

void check_user(const Topology& topo, Index r) {
  if (r < 0 || r >= topo.users()) throw DomainError("user index out of range");
}

// U_r(d_r(xbar)) - sum_j omega_jr(xbar_j)
double rate_space_payoff(const NetworkInstance& inst, Index r, const Eigen::VectorXd& xbar,
                         const Eigen::VectorXd& others) {
  double cost = 0.0;
  for (Index j : inst.topo.user_links(r)) {
    cost += omega_value(inst.prices[j], xbar[j], others[j]);
    if (!std::isfinite(cost)) return -kInf;
  }
  return utility_eval(inst.users[r], max_rate(inst.topo, r, xbar).d) - cost;
}

}  // namespace

Topology::Topology(Index links, Index users, std::vector<Path> paths)
    : J_(links), R_(users), paths_(std::move(paths)) {
  if (J_ < 1) throw ValidationError("topology: at least one link");
  if (R_ < 1) throw ValidationError("topology: at least one user");
  const Index P = static_cast<Index>(paths_.size());
  A_ = Eigen::MatrixXd::Zero(J_, P);
  H_ = Eigen::MatrixXd::Zero(R_, P);
  usable_ = Eigen::MatrixXi::Zero(J_, R_);
  by_user_.assign(static_cast<size_t>(R_), {});
  links_by_user_.assign(static_cast<size_t>(R_), {});
  for (Index q = 0; q < P; ++q) {
    auto& path = paths_[static_cast<size_t>(q)];
    if (path.links.empty()) throw ValidationError("topology: path " + idx(q) + " uses no link");
    if (path.user < 0 || path.user >= R_) {
      throw ValidationError("topology: path " + idx(q) + " owner out of range");
    }
    std::sort(path.links.begin(), path.links.end());
    path.links.erase(std::unique(path.links.begin(), path.links.end()), path.links.end());
    for (Index j : path.links) {
      if (j < 0 || j >= J_) throw ValidationError("topology: path " + idx(q) + " link out of range");
      A_(j, q) = 1.0;
      usable_(j, path.user) = 1;
    }
    H_(path.user, q) = 1.0;
    by_user_[static_cast<size_t>(path.user)].push_back(q);
  }
  for (Index r = 0; r < R_; ++r) {
    if (by_user_[static_cast<size_t>(r)].empty()) {
      throw ValidationError("topology: user " + idx(r) + " owns no path");
    }
    for (Index j = 0; j < J_; ++j) {
      if (usable_(j, r)) links_by_user_[static_cast<size_t>(r)].push_back(j);
    }
  }
}

Topology Topology::from_incidence(const Eigen::MatrixXd& A, const Eigen::MatrixXd& H) {
  if (A.cols() != H.cols()) throw ValidationError("topology: A and H need one column per path");
  std::vector<Path> paths;
  for (Index q = 0; q < A.cols(); ++q) {
    Path path{{}, -1};
    int owners = 0;
    for (Index r = 0; r < H.rows(); ++r) {
      if (H(r, q) == 1.0) {
        ++owners;
        path.user = r;
      } else if (H(r, q) != 0.0) {
        throw ValidationError("topology: H entries must be 0 or 1");
      }
    }
    if (owners != 1) {
      throw ValidationError("topology: each path column of H must have exactly one 1 (path " + idx(q) +
                            " has " + std::to_string(owners) + ")");
    }
    for (Index j = 0; j < A.rows(); ++j) {
      if (A(j, q) == 1.0) {
        path.links.push_back(j);
      } else if (A(j, q) != 0.0) {
        throw ValidationError("topology: A entries must be 0 or 1");
      }
    }
    paths.push_back(std::move(path));
  }
  return Topology(A.rows(), H.rows(), std::move(paths));
}

const std::vector<Index>& Topology::user_paths(Index r) const {
  return by_user_.at(static_cast<size_t>(r));
}

const std::vector<Index>& Topology::user_links(Index r) const {
  return links_by_user_.at(static_cast<size_t>(r));
}

NetworkInstance::NetworkInstance(Topology t, std::vector<PriceModel> p, std::vector<UtilityModel> u)
    : topo(std::move(t)), prices(std::move(p)), users(std::move(u)) {
  if (static_cast<Index>(prices.size()) != topo.links()) {
    throw ValidationError("network: one price per link");
  }
  if (static_cast<Index>(users.size()) != topo.users()) {
    throw ValidationError("network: one utility per user");
  }
}

NetworkInstance single_link_network(const LinkInstance& inst) {
  std::vector<Topology::Path> paths;
  for (Index r = 0; r < inst.size(); ++r) paths.push_back({{0}, r});
  return NetworkInstance(Topology(1, inst.size(), std::move(paths)), {inst.price}, inst.users);
}

BidMatrix::BidMatrix(const Topology& topo, Eigen::MatrixXd values) : w_(std::move(values)) {
  if (w_.rows() != topo.links() || w_.cols() != topo.users()) {
    throw DomainError("bids: matrix must be J x R");
  }
  for (Index r = 0; r < w_.cols(); ++r) {
    for (Index j = 0; j < w_.rows(); ++j) {
      const double v = w_(j, r);
      if (!(v >= 0.0) || !std::isfinite(v)) throw DomainError("bids: entries must be finite and >= 0");
      if (v != 0.0 && !topo.usable(j, r)) {
        throw DomainError("bids: user " + idx(r) + " bids on link " + idx(j) + " outside its paths");
      }
    }
  }
}

BidMatrix BidMatrix::zeros(const Topology& topo) {
  return BidMatrix(topo, Eigen::MatrixXd::Zero(topo.links(), topo.users()));
}

void BidMatrix::set_user(const Topology& topo, Index r, const Eigen::VectorXd& bids) {
  check_user(topo, r);
  if (bids.size() != w_.rows()) throw DomainError("bids: column must have J entries");
  for (Index j = 0; j < bids.size(); ++j) {
    if (!(bids[j] >= 0.0) || !std::isfinite(bids[j])) {
      throw DomainError("bids: entries must be finite and >= 0");
    }
    if (bids[j] != 0.0 && !topo.usable(j, r)) {
      throw DomainError("bids: user " + idx(r) + " bids on link " + idx(j) + " outside its paths");
    }
  }
  w_.col(r) = bids;
}

LinkClearing clear_links(const NetworkInstance& inst, const BidMatrix& W) {
  const Index J = inst.topo.links();
  LinkClearing out{Eigen::VectorXd::Zero(J), Eigen::MatrixXd::Zero(J, inst.topo.users())};
  for (Index j = 0; j < J; ++j) {
    const ClearingOutcome c = clear(inst.prices[j], W.values().row(j).transpose());
    out.f[j] = c.f;
    out.x.row(j) = c.d.transpose();
  }
  return out;
}

MaxRateResult max_rate(const Topology& topo, Index r, const Eigen::VectorXd& xbar) {
  check_user(topo, r);
  if (xbar.size() != topo.links()) throw DomainError("max_rate: xbar must have J entries");
  const auto& qs = topo.user_paths(r);
  const auto& js = topo.user_links(r);
  Eigen::MatrixXd A(static_cast<Index>(js.size()), static_cast<Index>(qs.size()));
  Eigen::VectorXd b(static_cast<Index>(js.size()));
  for (size_t i = 0; i < js.size(); ++i) {
    const double cap = xbar[js[i]];
    if (!(cap >= 0.0)) throw DomainError("max_rate: xbar must be >= 0 on the user's links");
    b[static_cast<Index>(i)] = cap;
    for (size_t k = 0; k < qs.size(); ++k) {
      A(static_cast<Index>(i), static_cast<Index>(k)) = topo.A()(js[i], qs[k]);
    }
  }
  const auto lp = simplex_max<double>(A, b, Eigen::VectorXd::Ones(A.cols()));
  MaxRateResult out;
  out.y = Eigen::VectorXd::Zero(topo.paths());
  for (size_t k = 0; k < qs.size(); ++k) out.y[qs[k]] = lp.x[static_cast<Index>(k)];
  out.d = lp.value;
  return out;
}

NetworkAllocation allocate(const NetworkInstance& inst, const BidMatrix& W) {
  LinkClearing c = clear_links(inst, W);
  NetworkAllocation out;
  out.y = Eigen::VectorXd::Zero(inst.topo.paths());
  out.d = Eigen::VectorXd::Zero(inst.topo.users());
  for (Index r = 0; r < inst.topo.users(); ++r) {
    const MaxRateResult m = max_rate(inst.topo, r, c.x.col(r));
    out.d[r] = m.d;
    out.y += m.y;
  }
  out.x = std::move(c.x);
  out.f = std::move(c.f);
  return out;
}

double network_surplus(const NetworkInstance& inst, const Eigen::VectorXd& d, const Eigen::VectorXd& f) {
  if (d.size() != inst.topo.users() || f.size() != inst.topo.links()) {
    throw DomainError("network surplus: d needs R entries, f needs J");
  }
  double value = 0.0;
  for (Index r = 0; r < d.size(); ++r) {
    if (!(d[r] >= 0.0)) throw DomainError("network surplus: rates must be >= 0");
    value += utility_eval(inst.users[r], d[r]);
  }
  for (Index j = 0; j < f.size(); ++j) value -= price_cost(inst.prices[j], f[j]);
  return value;
}

NetworkSystemSolution solve_network_system(const NetworkInstance& inst, const SolverConfig& cfg,
                                           int max_iterations) {
  cfg.validate();
  const Topology& topo = inst.topo;
  const Index P = topo.paths();
  const auto& paths = topo.path_list();

  auto objective = [&](const Eigen::VectorXd& y) {
    const Eigen::VectorXd f = topo.A() * y;
    for (Index j = 0; j < f.size(); ++j) {
      if (!in_domain(inst.prices[j], f[j])) return -kInf;
    }
    return network_surplus(inst, topo.H() * y, f);
  };
  auto gradient = [&](const Eigen::VectorXd& y) {
    const Eigen::VectorXd f = topo.A() * y;
    const Eigen::VectorXd d = topo.H() * y;
    Eigen::VectorXd g(P);
    for (Index q = 0; q < P; ++q) {
      const auto& path = paths[static_cast<size_t>(q)];
      double v = utility_deriv(inst.users[path.user], d[path.user]);
      for (Index j : path.links) v -= price_eval(inst.prices[j], f[j]);
      g[q] = v;
    }
    return g;
  };
  // A' diag(p') A - H' diag(U'') H
  auto curvature = [&](const Eigen::VectorXd& y) {
    const Eigen::VectorXd f = topo.A() * y;
    const Eigen::VectorXd d = topo.H() * y;
    Eigen::VectorXd dp(f.size());
    for (Index j = 0; j < f.size(); ++j) {
      dp[j] = price_derivs(inst.prices[j], std::max(f[j], std::numeric_limits<double>::min())).right;
    }
    Eigen::VectorXd du(d.size());
    for (Index r = 0; r < d.size(); ++r) du[r] = -utility_deriv2(inst.users[r], d[r]);
    Eigen::MatrixXd M = topo.A().transpose() * dp.asDiagonal() * topo.A();
    M += topo.H().transpose() * du.asDiagonal() * topo.H();
    return M;
  };

  const detail::AscentResult run =
      detail::projected_newton(objective, gradient, curvature, Eigen::VectorXd::Zero(P), cfg.tol, max_iterations);
  if (!run.converged) {
    throw NonConvergence("network system: kkt residual " + std::to_string(run.kkt) + " after " +
                         std::to_string(run.iterations) + " iterations");
  }
  NetworkSystemSolution out;
  out.y = run.y;
  out.f = topo.A() * run.y;
  out.d = topo.H() * run.y;
  out.surplus = run.value;
  out.kkt_residual = run.kkt;
  out.iterations = run.iterations;
  return out;
}

double omega(const NetworkInstance& inst, Index j, double xbar, double others_total) {
  if (j < 0 || j >= inst.topo.links()) throw DomainError("omega: link index out of range");
  if (!(others_total >= 0.0) || !std::isfinite(others_total)) {
    throw DomainError("omega: others' bids must be finite and >= 0");
  }
  return omega_value(inst.prices[j], xbar, others_total);
}

Eigen::VectorXd best_response_network(const NetworkInstance& inst, Index r, const BidMatrix& W,
                                      const SolverConfig& cfg) {
  check_user(inst.topo, r);
  const Topology& topo = inst.topo;
  const auto& qs = topo.user_paths(r);
  const auto& js = topo.user_links(r);
  const auto& paths = topo.path_list();
  const Eigen::VectorXd others = others_totals(W, r);
  const UtilityModel& u = inst.users[r];
  const auto n = static_cast<Index>(qs.size());

  auto rates = [&](const Eigen::VectorXd& y) {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(topo.links());
    for (Index k = 0; k < n; ++k) {
      for (Index j : paths[static_cast<size_t>(qs[static_cast<size_t>(k)])].links) x[j] += y[k];
    }
    return x;
  };
  auto payoff = [&](const Eigen::VectorXd& y) {
    const Eigen::VectorXd x = rates(y);
    double cost = 0.0;
    for (Index j : js) {
      cost += omega_value(inst.prices[j], x[j], others[j]);
      if (!std::isfinite(cost)) return -kInf;
    }
    return utility_eval(u, y.sum()) - cost;
  };
  auto link_slopes = [&](const Eigen::VectorXd& x) {
    Eigen::VectorXd s = Eigen::VectorXd::Zero(topo.links());
    for (Index j : js) s[j] = omega_slope(inst.prices[j], x[j], others[j], false);
    return s;
  };
  auto gradient = [&](const Eigen::VectorXd& y) {
    const Eigen::VectorXd s = link_slopes(rates(y));
    const double marginal = utility_deriv(u, y.sum());
    Eigen::VectorXd g(n);
    for (Index k = 0; k < n; ++k) {
      double v = marginal;
      for (Index j : paths[static_cast<size_t>(qs[static_cast<size_t>(k)])].links) v -= s[j];
      g[k] = v;
    }
    return g;
  };
  // Step scaling only: omega'' by central differences of the exact slope.
  auto curvature = [&](const Eigen::VectorXd& y) {
    const Eigen::VectorXd x = rates(y);
    Eigen::VectorXd c = Eigen::VectorXd::Zero(topo.links());
    for (Index j : js) {
      const double h = 1e-6 * std::max({x[j], 1e-3 * (1.0 + y.sum()), 1e-9});
      const double lo = std::max(0.0, x[j] - h);
      const double up = omega_slope(inst.prices[j], x[j] + h, others[j], false);
      const double dn = omega_slope(inst.prices[j], lo, others[j], false);
      c[j] = std::isfinite(up) ? std::max(0.0, (up - dn) / (x[j] + h - lo)) : 0.0;
    }
    Eigen::MatrixXd M = Eigen::MatrixXd::Constant(n, n, -utility_deriv2(u, y.sum()));
    for (Index a = 0; a < n; ++a) {
      for (Index b = 0; b < n; ++b) {
        for (Index j : paths[static_cast<size_t>(qs[static_cast<size_t>(a)])].links) {
          if (topo.A()(j, qs[static_cast<size_t>(b)]) != 0.0) M(a, b) += c[j];
        }
      }
    }
    return M;
  };

  // warm start at the rates r is granted now
  Eigen::VectorXd y0(n);
  {
    const LinkClearing c = clear_links(inst, W);
    const MaxRateResult m = max_rate(topo, r, c.x.col(r));
    for (Index k = 0; k < n; ++k) y0[k] = m.y[qs[static_cast<size_t>(k)]];
  }
  // Rate of gain along v from y, using the one-sided slope on the side v moves.
  auto slope_along = [&](const Eigen::VectorXd& y, const Eigen::VectorXd& v, double slack) {
    const Eigen::VectorXd x = rates(y);
    Eigen::VectorXd dx = Eigen::VectorXd::Zero(topo.links());
    for (Index k = 0; k < n; ++k) {
      for (Index j : paths[static_cast<size_t>(qs[static_cast<size_t>(k)])].links) dx[j] += v[k];
    }
    double s = utility_deriv(u, y.sum()) * v.sum();
    for (Index j : js) {
      if (dx[j] != 0.0) s -= dx[j] * omega_slope_near(inst.prices[j], x[j], others[j], dx[j] < 0.0, slack);
    }
    return s;
  };
  // single-path moves and transfers between two paths that are feasible at y
  auto directions = [&](const Eigen::VectorXd& y) {
    std::vector<Eigen::VectorXd> out;
    for (Index a = 0; a < n; ++a) {
      Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
      v[a] = 1.0;
      out.push_back(v);
      if (y[a] > 0.0) out.push_back(-v);
      for (Index b = 0; b < n; ++b) {
        if (b == a || !(y[b] > 0.0)) continue;
        Eigen::VectorXd t = v;
        t[b] = -1.0;
        out.push_back(t);
      }
    }
    return out;
  };
  auto one_sided_gain = [&](const Eigen::VectorXd& y) {
    double worst = -kInf;
    for (const Eigen::VectorXd& v : directions(y)) worst = std::max(worst, slope_along(y, v, cfg.kink_slack));
    return worst;
  };
  // exact line search along v by bisection on the sign of the one-sided slope
  auto search = [&](Eigen::VectorXd y, const Eigen::VectorXd& v) {
    double tmax = kInf;
    for (Index k = 0; k < n; ++k) {
      if (v[k] < 0.0) tmax = std::min(tmax, y[k] / -v[k]);
    }
    auto rising = [&](double t) { return slope_along((y + t * v).cwiseMax(0.0), v, 0.0) > 0.0; };
    double hi = tmax;
    if (!std::isfinite(hi)) {
      hi = 1e-3 * (1.0 + y.sum());
      for (int k = 0; k < 200 && rising(hi); ++k) hi *= 2.0;
    }
    const double t = rising(hi) ? hi : detail::bisect(rising, 0.0, hi, 64).lo;
    y = (y + t * v).cwiseMax(0.0);
    if (t == tmax) {
      for (Index k = 0; k < n; ++k) {
        if (v[k] < 0.0 && y[k] < 1e-15 * (1.0 + y.sum())) y[k] = 0.0;
      }
    }
    return y;
  };

  const double tol = 1e-13 * std::max(1.0, utility_deriv(u, 0.0));
  const double loose = std::max(1e3 * tol, 0.01 * cfg.tol);
  detail::AscentResult run = detail::projected_newton(payoff, gradient, curvature, y0, tol, 10000);
  // rounding can stall the line search just above tol; a stall near a price
  // kink goes to the directional search
  bool ok = run.converged || run.kkt <= loose;
  for (int round = 0; !ok && round < 200; ++round) {
    for (const Eigen::VectorXd& v : directions(run.y)) {
      if (slope_along(run.y, v, 0.0) > 0.0) run.y = search(run.y, v);
    }
    ok = one_sided_gain(run.y) <= loose;
  }
  if (!ok) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "network best response: kkt residual %g, one-sided gain %g", run.kkt,
                  one_sided_gain(run.y));
    throw NonConvergence(buf);
  }

  const Eigen::VectorXd x = rates(run.y);
  Eigen::VectorXd bids = Eigen::VectorXd::Zero(topo.links());
  for (Index j : js) bids[j] = omega_value(inst.prices[j], x[j], others[j]);
  return bids;
}

NetworkVerifyReport verify_network_nash(const NetworkInstance& inst, const BidMatrix& W, double tol,
                                        int samples, const SolverConfig& cfg) {
  const Topology& topo = inst.topo;
  const LinkClearing c = clear_links(inst, W);
  NetworkVerifyReport rep;
  rep.max_gain = Eigen::VectorXd::Zero(topo.users());
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> expo(0.0, 10.0);

  for (Index r = 0; r < topo.users(); ++r) {
    const Eigen::VectorXd others = others_totals(W, r);
    const Eigen::VectorXd base_x = c.x.col(r);
    const double base = rate_space_payoff(inst, r, base_x, others);
    const auto& js = topo.user_links(r);

    double scale = 0.0;
    for (Index j : js) scale = std::max(scale, base_x[j]);
    if (scale == 0.0) {
      for (Index j : js) scale = std::max(scale, c.f[j]);
    }
    if (scale == 0.0) scale = 1.0;

    std::vector<Eigen::VectorXd> cands;
    cands.push_back(Eigen::VectorXd::Zero(topo.links()));
    static constexpr double kFactors[] = {0.25, 0.5, 0.7071067811865476, 1.4142135623730951, 2.0, 4.0};
    for (Index j : js) {
      for (double fac : kFactors) {
        Eigen::VectorXd v = base_x;
        v[j] = base_x[j] > 0.0 ? base_x[j] * fac : scale * fac / 8.0;
        cands.push_back(v);
      }
    }
    for (Index q : topo.user_paths(r)) {
      for (double s = scale; s >= scale / 256.0; s /= 4.0) {
        Eigen::VectorXd up = base_x;
        Eigen::VectorXd down = base_x;
        for (Index j : topo.path_list()[static_cast<size_t>(q)].links) {
          up[j] += s;
          down[j] = std::max(0.0, down[j] - s);
        }
        cands.push_back(up);
        cands.push_back(down);
      }
    }
    while (static_cast<int>(cands.size()) < samples) {
      const double t = scale * std::exp2(-expo(rng));
      Eigen::VectorXd v = base_x;
      for (Index j : js) v[j] = std::max(0.0, v[j] + t * unit(rng));
      cands.push_back(v);
    }

    double best = 0.0;
    for (const auto& v : cands) best = std::max(best, rate_space_payoff(inst, r, v, others) - base);
    rep.max_gain[r] = best;
    if (rep.worst_user < 0 || best > rep.worst_gain) {
      rep.worst_gain = best;
      rep.worst_user = r;
    }
  }
  rep.pass = rep.worst_gain <= tol;
  return rep;
}

NetworkNashResult solve_network_nash(const NetworkInstance& inst, const BidMatrix& init,
                                     const SolverConfig& cfg) {
  cfg.validate();
  const Topology& topo = inst.topo;
  BidMatrix start = init;
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> jitter(0.9, 1.1);
  std::string last;

  for (int restart = 0; restart <= 3; ++restart) {
    BidMatrix W = start;
    int sweep = 0;
    double delta = kInf;
    for (; sweep < cfg.max_sweeps && delta > cfg.tol; ++sweep) {
      delta = 0.0;
      for (Index r = 0; r < topo.users(); ++r) {
        const Eigen::VectorXd br = best_response_network(inst, r, W, cfg);
        const Eigen::VectorXd old = W.values().col(r);
        Eigen::VectorXd next = (1.0 - cfg.damping) * old + cfg.damping * br;
        for (Index j = 0; j < next.size(); ++j) {
          if (br[j] == 0.0) next[j] = 0.0;
        }
        delta = std::max(delta, (next - old).cwiseAbs().maxCoeff());
        W.set_user(topo, r, next);
      }
    }
    if (delta <= cfg.tol) {
      NetworkVerifyReport rep = verify_network_nash(inst, W, cfg.verify_tol, 2 * cfg.deviation_samples, cfg);
      if (rep.pass) {
        NetworkNashResult out{W, allocate(inst, W), sweep, restart, delta, std::move(rep)};
        return out;
      }
      last = "verification failed (gain " + std::to_string(rep.worst_gain) + " for user " +
             idx(rep.worst_user) + ")";
    } else {
      last = "no fixed point after " + std::to_string(sweep) + " sweeps (delta " + std::to_string(delta) + ")";
    }
    Eigen::MatrixXd moved = W.values();
    for (Index r = 0; r < moved.cols(); ++r) {
      for (Index j = 0; j < moved.rows(); ++j) moved(j, r) *= jitter(rng);
    }
    start = BidMatrix(topo, moved);
  }
  throw NonConvergence("network nash: " + last + " after 3 restarts");
}

RatioReport check_theorem14_bound(const NetworkInstance& inst, const NetworkNashResult& nash,
                                  const NetworkSystemSolution& sys) {
  if (!(sys.surplus > 0.0)) throw DegenerateError("network ratio: optimal surplus must be > 0");
  for (Index r = 0; r < inst.topo.users(); ++r) {
    if (utility_eval(inst.users[r], 0.0) < 0.0) throw DegenerateError("network ratio: U_r(0) must be >= 0");
  }
  RatioReport rep;
  rep.nash_surplus = network_surplus(inst, nash.alloc.d, nash.alloc.f);
  rep.system_surplus = sys.surplus;
  rep.ratio = rep.nash_surplus / rep.system_surplus;
  rep.bound = worst_case_ratio<double>();
  rep.margin = rep.ratio - rep.bound;
  rep.bound_applies = std::none_of(inst.prices.begin(), inst.prices.end(),
                                   [](const PriceModel& p) { return p.violates_p0(); });
  rep.bound_name = "4sqrt2-5";
  return rep;
}

}  // namespace elastic_market
