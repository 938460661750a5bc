#include "elastic_market/scenario.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "elastic_market/errors.hpp"

namespace elastic_market {
namespace {

using json = nlohmann::json;

// Walks one JSON object, remembering which keys were read so leftovers can be
// rejected.
class Fields {
 public:
  Fields(const json& node, std::string where) : node_(node), where_(std::move(where)) {
    if (!node_.is_object()) throw ParseError(where_ + ": expected an object");
  }

  std::string path(const std::string& key) const { return where_.empty() ? key : where_ + "." + key; }

  bool has(const std::string& key) const { return node_.contains(key); }

  const json& get(const std::string& key) {
    seen_.insert(key);
    if (!node_.contains(key)) throw ValidationError(path(key) + ": required field missing");
    return node_.at(key);
  }

  double number(const std::string& key) {
    const json& v = get(key);
    if (!v.is_number()) throw ParseError(path(key) + ": expected a number");
    return v.get<double>();
  }

  double number_or(const std::string& key, double fallback) { return has(key) ? number(key) : fallback; }

  long integer(const std::string& key) {
    const json& v = get(key);
    if (!v.is_number_integer()) throw ParseError(path(key) + ": expected an integer");
    return v.get<long>();
  }

  std::string text(const std::string& key) {
    const json& v = get(key);
    if (!v.is_string()) throw ParseError(path(key) + ": expected a string");
    return v.get<std::string>();
  }

  void done() const {
    for (auto it = node_.begin(); it != node_.end(); ++it) {
      if (!seen_.count(it.key())) throw ValidationError(path(it.key()) + ": unknown field");
    }
  }

 private:
  const json& node_;
  std::string where_;
  std::set<std::string> seen_;
};

template <class Make>
auto checked(const std::string& where, Make&& make) {
  try {
    return make();
  } catch (const ValidationError& e) {
    throw ValidationError(where + ": " + e.what());
  }
}

const json& array_at(const json& v, const std::string& where) {
  if (!v.is_array()) throw ParseError(where + ": expected an array");
  return v;
}

std::vector<double> numbers(const json& v, const std::string& where) {
  array_at(v, where);
  std::vector<double> out;
  for (size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) throw ParseError(where + "[" + std::to_string(i) + "]: expected a number");
    out.push_back(v[i].get<double>());
  }
  return out;
}

Eigen::VectorXd vector_of(const json& v, const std::string& where) {
  const std::vector<double> xs = numbers(v, where);
  return Eigen::Map<const Eigen::VectorXd>(xs.data(), static_cast<Eigen::Index>(xs.size()));
}

PriceModel parse_price(const json& node, const std::string& where) {
  Fields f(node, where);
  const std::string kind = f.text("kind");
  PriceModel p = [&] {
    if (kind == "linear") {
      const double a = f.number("a");
      return checked(where, [&] { return PriceModel::linear(a); });
    }
    if (kind == "monomial") {
      const double a = f.number("a");
      const double B = f.number("B");
      return checked(where, [&] { return PriceModel::monomial(a, B); });
    }
    if (kind == "two_piece") {
      const double a = f.number("a");
      const double b = f.number("b");
      const double k = f.number_or("k", 1.0);
      return checked(where, [&] { return PriceModel::two_piece(a, b, k); });
    }
    if (kind == "mm1") {
      const double a = f.number("a");
      const double s = f.number("s");
      return checked(where, [&] { return PriceModel::mm1(a, s); });
    }
    throw ValidationError(f.path("kind") + ": unknown price kind \"" + kind +
                          "\" (linear, monomial, two_piece, mm1)");
  }();
  f.done();
  return p;
}

UtilityModel parse_utility(const json& node, const std::string& where) {
  Fields f(node, where);
  const std::string kind = f.text("kind");
  UtilityModel u = [&] {
    if (kind == "linear") {
      const double alpha = f.number("alpha");
      return checked(where, [&] { return UtilityModel::linear(alpha); });
    }
    if (kind == "log1p") {
      const double alpha = f.number("alpha");
      const double kappa = f.number("kappa");
      return checked(where, [&] { return UtilityModel::log1p(alpha, kappa); });
    }
    if (kind == "shifted_power") {
      const double alpha = f.number("alpha");
      const double kappa = f.number("kappa");
      const double gamma = f.number("gamma");
      return checked(where, [&] { return UtilityModel::shifted_power(alpha, kappa, gamma); });
    }
    throw ValidationError(f.path("kind") + ": unknown utility kind \"" + kind +
                          "\" (linear, log1p, shifted_power)");
  }();
  f.done();
  return u;
}

SolverConfig parse_solver(const json& node) {
  Fields f(node, "solver");
  SolverConfig cfg;
  if (f.has("tol")) cfg.tol = f.number("tol");
  if (f.has("max_sweeps")) cfg.max_sweeps = static_cast<int>(f.integer("max_sweeps"));
  if (f.has("damping")) cfg.damping = f.number("damping");
  if (f.has("seed")) {
    const long seed = f.integer("seed");
    if (seed < 0) throw ValidationError("solver.seed: seed >= 0");
    cfg.seed = static_cast<std::uint64_t>(seed);
  }
  if (f.has("deviation_samples")) cfg.deviation_samples = static_cast<int>(f.integer("deviation_samples"));
  if (f.has("verify_tol")) cfg.verify_tol = f.number("verify_tol");
  if (f.has("kink_slack")) cfg.kink_slack = f.number("kink_slack");
  f.done();
  cfg.validate();
  return cfg;
}

Experiment parse_experiment(const json& node) {
  Fields f(node, "experiment");
  Experiment e;
  if (f.has("R")) {
    const json& v = array_at(f.get("R"), "experiment.R");
    for (size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number_integer()) throw ParseError("experiment.R[" + std::to_string(i) + "]: expected an integer");
      e.R.push_back(v[i].get<long>());
    }
  }
  if (f.has("B_grid")) e.B_grid = numbers(f.get("B_grid"), "experiment.B_grid");
  if (f.has("a_grid")) e.a_grid = numbers(f.get("a_grid"), "experiment.a_grid");
  if (f.has("b_grid")) e.b_grid = numbers(f.get("b_grid"), "experiment.b_grid");
  if (f.has("instances")) {
    const long n = f.integer("instances");
    if (n < 1) throw ValidationError("experiment.instances: instances >= 1");
    e.instances = static_cast<int>(n);
  }
  f.done();
  return e;
}

Topology::Path parse_path(const json& node, const std::string& where) {
  Fields f(node, where);
  Topology::Path path;
  const json& links = array_at(f.get("links"), f.path("links"));
  for (size_t i = 0; i < links.size(); ++i) {
    if (!links[i].is_number_integer()) {
      throw ParseError(f.path("links") + "[" + std::to_string(i) + "]: expected a link index");
    }
    path.links.push_back(links[i].get<Eigen::Index>());
  }
  const json& user = f.get("user");
  if (user.is_number_integer()) {
    path.user = user.get<Eigen::Index>();
  } else if (user.is_array()) {
    if (user.size() != 1 || !user[0].is_number_integer()) {
      throw ValidationError(f.path("user") +
                            ": each path column of H must have exactly one 1 (one owner per path)");
    }
    path.user = user[0].get<Eigen::Index>();
  } else {
    throw ParseError(f.path("user") + ": expected a user index");
  }
  f.done();
  return path;
}

Eigen::MatrixXd matrix_of(const json& v, const std::string& where) {
  array_at(v, where);
  Eigen::MatrixXd m;
  for (size_t i = 0; i < v.size(); ++i) {
    const Eigen::VectorXd row = vector_of(v[i], where + "[" + std::to_string(i) + "]");
    if (i == 0) m.resize(static_cast<Eigen::Index>(v.size()), row.size());
    if (row.size() != m.cols()) throw ValidationError(where + ": rows must have equal length");
    m.row(static_cast<Eigen::Index>(i)) = row.transpose();
  }
  return m;
}

}  // namespace

Scenario parse_scenario_text(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("scenario: ") + e.what());
  }
  Fields f(root, "");
  Scenario sc;
  const std::string kind = f.text("kind");
  if (kind == "single_link") {
    sc.kind = ScenarioKind::single_link;
  } else if (kind == "network") {
    sc.kind = ScenarioKind::network;
  } else {
    throw ValidationError("kind: expected \"single_link\" or \"network\", got \"" + kind + "\"");
  }

  const json& users_node = array_at(f.get("users"), "users");
  std::vector<UtilityModel> users;
  for (size_t i = 0; i < users_node.size(); ++i) {
    users.push_back(parse_utility(users_node[i], "users[" + std::to_string(i) + "]"));
  }

  if (sc.kind == ScenarioKind::single_link) {
    PriceModel price = parse_price(f.get("price"), "price");
    sc.link = checked("users", [&] { return LinkInstance(price, users); });
  } else {
    const json& links_node = array_at(f.get("links"), "links");
    std::vector<PriceModel> prices;
    for (size_t i = 0; i < links_node.size(); ++i) {
      prices.push_back(parse_price(links_node[i], "links[" + std::to_string(i) + "]"));
    }
    const json& paths_node = array_at(f.get("paths"), "paths");
    std::vector<Topology::Path> paths;
    for (size_t i = 0; i < paths_node.size(); ++i) {
      paths.push_back(parse_path(paths_node[i], "paths[" + std::to_string(i) + "]"));
    }
    const auto J = static_cast<Eigen::Index>(prices.size());
    const auto R = static_cast<Eigen::Index>(users.size());
    Topology topo = checked("paths", [&] { return Topology(J, R, std::move(paths)); });
    sc.network.emplace(std::move(topo), std::move(prices), std::move(users));
  }

  if (f.has("solver")) sc.solver = parse_solver(f.get("solver"));
  if (f.has("experiment")) sc.experiment = parse_experiment(f.get("experiment"));
  if (f.has("bids")) {
    if (sc.kind == ScenarioKind::single_link) {
      sc.bids = vector_of(f.get("bids"), "bids");
      if (sc.bids->size() != sc.link->size()) throw ValidationError("bids: one bid per user");
    } else {
      sc.net_bids = matrix_of(f.get("bids"), "bids");
      const auto& topo = sc.network->topo;
      if (sc.net_bids->rows() != topo.links() || sc.net_bids->cols() != topo.users()) {
        throw ValidationError("bids: expected one row per link and one column per user");
      }
      try {
        BidMatrix check(topo, *sc.net_bids);
      } catch (const DomainError& e) {
        throw ValidationError(e.what());
      }
    }
  }
  if (f.has("init")) {
    if (sc.kind != ScenarioKind::single_link) throw ValidationError("init: only for single_link scenarios");
    sc.init = vector_of(f.get("init"), "init");
    if (sc.init->size() != sc.link->size()) throw ValidationError("init: one bid per user");
  }
  for (const char* name : {"bids", "init"}) {
    const std::optional<Eigen::VectorXd>& v = std::string(name) == "bids" ? sc.bids : sc.init;
    if (v && !((v->array() >= 0.0).all() && v->allFinite())) {
      throw ValidationError(std::string(name) + ": entries must be finite and >= 0");
    }
  }
  f.done();
  return sc;
}

Scenario parse_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("scenario: cannot read " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario_text(buf.str());
}

}  // namespace elastic_market
