#ifndef ELASTIC_MARKET_NETWORK_HPP
#define ELASTIC_MARKET_NETWORK_HPP

#include <Eigen/Dense>
#include <vector>

#include "elastic_market/efficiency.hpp"
#include "elastic_market/market_core.hpp"
#include "elastic_market/models.hpp"
#include "elastic_market/nash_single.hpp"

namespace elastic_market {

/// Links, paths and users with their incidence structure.
///   A (J x P): A(j, q) = 1 when path q uses link j.
///   H (R x P): H(r, q) = 1 when path q belongs to user r; one owner per path.
class Topology {
 public:
  struct Path {
    std::vector<Eigen::Index> links;
    Eigen::Index user;
  };

  Topology(Eigen::Index links, Eigen::Index users, std::vector<Path> paths);
  /// Builds from 0/1 incidence matrices; rejects a path column of H without
  /// exactly one owner.
  static Topology from_incidence(const Eigen::MatrixXd& A, const Eigen::MatrixXd& H);

  Eigen::Index links() const noexcept { return J_; }
  Eigen::Index paths() const noexcept { return static_cast<Eigen::Index>(paths_.size()); }
  Eigen::Index users() const noexcept { return R_; }
  const Eigen::MatrixXd& A() const noexcept { return A_; }
  const Eigen::MatrixXd& H() const noexcept { return H_; }
  const std::vector<Path>& path_list() const noexcept { return paths_; }
  const std::vector<Eigen::Index>& user_paths(Eigen::Index r) const;
  /// Links on at least one path of user r, ascending.
  const std::vector<Eigen::Index>& user_links(Eigen::Index r) const;
  bool usable(Eigen::Index j, Eigen::Index r) const { return usable_(j, r) != 0; }

 private:
  Eigen::Index J_;
  Eigen::Index R_;
  std::vector<Path> paths_;
  Eigen::MatrixXd A_;
  Eigen::MatrixXd H_;
  Eigen::MatrixXi usable_;
  std::vector<std::vector<Eigen::Index>> by_user_;
  std::vector<std::vector<Eigen::Index>> links_by_user_;
};

struct NetworkInstance {
  NetworkInstance(Topology topo, std::vector<PriceModel> prices, std::vector<UtilityModel> users);

  Topology topo;
  std::vector<PriceModel> prices;
  std::vector<UtilityModel> users;
};

/// One link, one single-link path per user.
NetworkInstance single_link_network(const LinkInstance& inst);

/// Bids w(j, r) of user r at link j. Entries on links outside every path of
/// the user must be zero.
class BidMatrix {
 public:
  BidMatrix(const Topology& topo, Eigen::MatrixXd values);
  static BidMatrix zeros(const Topology& topo);

  const Eigen::MatrixXd& values() const noexcept { return w_; }
  double operator()(Eigen::Index j, Eigen::Index r) const { return w_(j, r); }
  /// Replaces the bids of user r (column r); off-path entries must be zero.
  void set_user(const Topology& topo, Eigen::Index r, const Eigen::VectorXd& bids);

 private:
  Eigen::MatrixXd w_;
};

struct LinkClearing {
  Eigen::VectorXd f;  ///< per-link total rate
  Eigen::MatrixXd x;  ///< x(j, r) granted to user r at link j
};

struct NetworkAllocation {
  Eigen::MatrixXd x;
  Eigen::VectorXd f;
  Eigen::VectorXd y;  ///< per-path witness of each user's max rate
  Eigen::VectorXd d;  ///< per-user rate
};

struct MaxRateResult {
  double d = 0.0;
  Eigen::VectorXd y;  ///< length P, zero off the user's paths
};

LinkClearing clear_links(const NetworkInstance& inst, const BidMatrix& W);

/// Largest total rate user r can route over its paths when link j grants
/// xbar[j]; dense primal simplex on the path formulation.
MaxRateResult max_rate(const Topology& topo, Eigen::Index r, const Eigen::VectorXd& xbar);

/// Clears every link and routes each user's grants.
NetworkAllocation allocate(const NetworkInstance& inst, const BidMatrix& W);

/// sum_r U_r(d_r) - sum_j C_j(f_j)
double network_surplus(const NetworkInstance& inst, const Eigen::VectorXd& d, const Eigen::VectorXd& f);

struct NetworkSystemSolution {
  Eigen::VectorXd y;
  Eigen::VectorXd f;
  Eigen::VectorXd d;
  double surplus = 0.0;
  double kkt_residual = 0.0;
  int iterations = 0;
};

/// Projected ascent on path rates: Newton-scaled steps on paths away from the
/// zero bound, plain gradient steps on paths about to leave, step halving.
NetworkSystemSolution solve_network_system(const NetworkInstance& inst, const SolverConfig& cfg = {},
                                           int max_iterations = 100000);

/// Bid user r must place at link j to be granted rate xbar when the others
/// bid `others_total` there. +inf when xbar is outside the price domain.
double omega(const NetworkInstance& inst, Eigen::Index j, double xbar, double others_total);

/// Best bids of user r against W (column r of W is ignored). Maximizes the
/// rate-space payoff U_r(sum y) - sum_j omega_jr(x_j(y)) over the user's path
/// rates y >= 0, then recovers bids link by link through omega.
Eigen::VectorXd best_response_network(const NetworkInstance& inst, Eigen::Index r, const BidMatrix& W,
                                      const SolverConfig& cfg = {});

struct NetworkVerifyReport {
  bool pass = false;
  Eigen::VectorXd max_gain;  ///< best sampled improvement per user
  double worst_gain = 0.0;
  Eigen::Index worst_user = -1;
};

/// Rate-space check: for each user, the payoff U_r(d_r(x)) - sum_j omega_jr(x_j)
/// at x_r(W) must not be beaten by more than tol at any of `samples`
/// perturbations (coordinate scalings, path moves, random directions).
NetworkVerifyReport verify_network_nash(const NetworkInstance& inst, const BidMatrix& W, double tol,
                                        int samples = 128, const SolverConfig& cfg = {});

struct NetworkNashResult {
  BidMatrix W;
  NetworkAllocation alloc;
  int sweeps = 0;
  int restarts = 0;
  double max_bid_delta = 0.0;
  NetworkVerifyReport report;
};

/// Damped Gauss-Seidel over users. Restarts from a perturbed point (at most
/// three times) when the fixed point fails verification.
NetworkNashResult solve_network_nash(const NetworkInstance& inst, const BidMatrix& init,
                                     const SolverConfig& cfg = {});

/// Network surplus ratio against the optimum, with the 4 sqrt(2) - 5 bound.
RatioReport check_theorem14_bound(const NetworkInstance& inst, const NetworkNashResult& nash,
                                  const NetworkSystemSolution& sys);

}  // namespace elastic_market

#endif  // ELASTIC_MARKET_NETWORK_HPP
