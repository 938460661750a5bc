#ifndef ELASTIC_MARKET_SCENARIO_HPP
#define ELASTIC_MARKET_SCENARIO_HPP

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "elastic_market/market_core.hpp"
#include "elastic_market/network.hpp"
#include "elastic_market/nash_single.hpp"

namespace elastic_market {

enum class ScenarioKind { single_link, network };

struct Experiment {
  std::vector<long> R;
  std::vector<double> B_grid;
  std::vector<double> a_grid;
  std::vector<double> b_grid;
  int instances = 0;  // random instances for bound-check; 0 means unset
};

/// A parsed scenario file. Exactly one of `link` / `network` is set, matching
/// `kind`.
struct Scenario {
  ScenarioKind kind = ScenarioKind::single_link;
  std::optional<LinkInstance> link;
  std::optional<NetworkInstance> network;
  SolverConfig solver;
  std::optional<Eigen::VectorXd> bids;      // single link: one per user
  std::optional<Eigen::MatrixXd> net_bids;  // network: J rows, R columns
  std::optional<Eigen::VectorXd> init;
  Experiment experiment;
};

/// Parses JSON text. Syntax and type problems raise ParseError, constraint
/// violations and unknown fields raise ValidationError; messages name the
/// offending field.
Scenario parse_scenario_text(const std::string& text);
Scenario parse_scenario(const std::string& path);

}  // namespace elastic_market

#endif  // ELASTIC_MARKET_SCENARIO_HPP
