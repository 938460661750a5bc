#ifndef ELASTIC_MARKET_RANDOM_INSTANCES_HPP
#define ELASTIC_MARKET_RANDOM_INSTANCES_HPP

#include <cstdint>
#include <random>

#include "elastic_market/market_core.hpp"
#include "elastic_market/network.hpp"

namespace elastic_market {

struct RandomLinkOptions {
  int min_users = 1;
  int max_users = 5;
  bool linear_price = true;
  bool monomial_price = true;
  bool two_piece_price = true;
  bool mm1_price = false;  // p(0) > 0
  bool linear_utility = true;
};

struct RandomNetworkOptions {
  int max_links = 4;
  int max_users = 4;
  int max_paths = 6;
  bool two_piece_price = false;
  bool linear_utility = true;
};

/// Generator for instance `index` of a run seeded with `seed`. Independent of
/// the order instances are drawn in.
std::mt19937_64 instance_rng(std::uint64_t seed, std::uint64_t index);

PriceModel random_price(std::mt19937_64& rng, const RandomLinkOptions& opts);
UtilityModel random_utility(std::mt19937_64& rng, bool allow_linear);
LinkInstance random_link_instance(std::mt19937_64& rng, const RandomLinkOptions& opts = {});
NetworkInstance random_network(std::mt19937_64& rng, const RandomNetworkOptions& opts = {});

}  // namespace elastic_market

#endif  // ELASTIC_MARKET_RANDOM_INSTANCES_HPP
