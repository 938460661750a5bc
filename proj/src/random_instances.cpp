#include "elastic_market/random_instances.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "elastic_market/errors.hpp"

namespace elastic_market {
namespace {

double log_uniform(std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(std::log(lo), std::log(hi));
  return std::exp(u(rng));
}

int pick(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

}  // namespace

std::mt19937_64 instance_rng(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

PriceModel random_price(std::mt19937_64& rng, const RandomLinkOptions& opts) {
  std::vector<int> kinds;
  if (opts.linear_price) kinds.push_back(0);
  if (opts.monomial_price) kinds.push_back(1);
  if (opts.two_piece_price) kinds.push_back(2);
  if (opts.mm1_price) kinds.push_back(3);
  if (kinds.empty()) throw ValidationError("random instances: no price family enabled");
  switch (kinds[static_cast<size_t>(pick(rng, 0, static_cast<int>(kinds.size()) - 1))]) {
    case 0: return PriceModel::linear(log_uniform(rng, 0.2, 5.0));
    case 1: {
      const double a = log_uniform(rng, 0.2, 5.0);
      // integer exponents half the time
      const double B = pick(rng, 0, 1) ? pick(rng, 1, 6) : std::uniform_real_distribution<double>(1.0, 6.0)(rng);
      return PriceModel::monomial(a, B);
    }
    case 2: {
      const double a = log_uniform(rng, 0.2, 3.0);
      return PriceModel::two_piece(a, a * log_uniform(rng, 1.0, 20.0), log_uniform(rng, 0.3, 3.0));
    }
    default: return PriceModel::mm1(log_uniform(rng, 0.2, 3.0), log_uniform(rng, 1.0, 10.0));
  }
}

UtilityModel random_utility(std::mt19937_64& rng, bool allow_linear) {
  const double alpha = log_uniform(rng, 0.5, 5.0);
  switch (pick(rng, allow_linear ? 0 : 1, 2)) {
    case 0: return UtilityModel::linear(alpha);
    case 1: return UtilityModel::log1p(alpha, log_uniform(rng, 0.2, 5.0));
    default: {
      double gamma = log_uniform(rng, 0.2, 3.0);
      if (std::abs(gamma - 1.0) < 1e-3) gamma = 0.5;
      return UtilityModel::shifted_power(alpha, log_uniform(rng, 0.2, 3.0), gamma);
    }
  }
}

LinkInstance random_link_instance(std::mt19937_64& rng, const RandomLinkOptions& opts) {
  PriceModel p = random_price(rng, opts);
  const int R = pick(rng, opts.min_users, opts.max_users);
  std::vector<UtilityModel> users;
  for (int r = 0; r < R; ++r) users.push_back(random_utility(rng, opts.linear_utility));
  return LinkInstance(p, std::move(users));
}

NetworkInstance random_network(std::mt19937_64& rng, const RandomNetworkOptions& opts) {
  const int J = pick(rng, 1, opts.max_links);
  const int R = pick(rng, 1, opts.max_users);
  const int P = pick(rng, R, std::max(R, opts.max_paths));
  std::vector<Topology::Path> paths;
  for (int q = 0; q < P; ++q) {
    // first R paths give every user one
    const int owner = q < R ? q : pick(rng, 0, R - 1);
    std::vector<Eigen::Index> links;
    for (int j = 0; j < J; ++j) {
      if (pick(rng, 0, 1)) links.push_back(j);
    }
    if (links.empty()) links.push_back(pick(rng, 0, J - 1));
    paths.push_back({std::move(links), owner});
  }
  RandomLinkOptions po;
  po.two_piece_price = opts.two_piece_price;
  std::vector<PriceModel> prices;
  for (int j = 0; j < J; ++j) prices.push_back(random_price(rng, po));
  std::vector<UtilityModel> users;
  for (int r = 0; r < R; ++r) users.push_back(random_utility(rng, opts.linear_utility));
  return NetworkInstance(Topology(J, R, std::move(paths)), std::move(prices), std::move(users));
}

}  // namespace elastic_market
