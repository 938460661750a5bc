#include "elastic_market/cli.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "elastic_market/efficiency.hpp"
#include "elastic_market/errors.hpp"
#include "elastic_market/random_instances.hpp"
#include "elastic_market/scenario.hpp"

namespace elastic_market {
namespace {

using json = nlohmann::json;
using Eigen::Index;

constexpr double kBoundSlack = 1e-6;

struct Options {
  std::string scenario;
  std::string out;
  std::string format;
  double tol = 0.0;
  std::uint64_t seed = 0;
  int max_iter = 0;
  std::string method = "br";
  double a = 0.0;
  double b = 0.0;
  double B = 0.0;
  std::vector<long> R;
  std::vector<double> B_grid;
  std::vector<double> a_grid;
  std::vector<double> b_grid;
  int instances = 0;
  std::string random = "single";

  bool has_tol = false, has_seed = false, has_max_iter = false, has_method = false;
  bool has_a = false, has_b = false, has_B = false;
};

// Either a single run (`result`, written as quantity/index/value rows) or a
// table with one row per grid point.
struct Output {
  json result = json::object();
  std::vector<std::string> columns;
  std::vector<std::vector<json>> rows;
  bool table = false;
  bool bound_violated = false;
};

json vec(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

json mat(const Eigen::MatrixXd& m) {
  json a = json::array();
  for (Index i = 0; i < m.rows(); ++i) a.push_back(vec(m.row(i).transpose()));
  return a;
}

std::string cell(const json& v) {
  if (v.is_null()) return "";
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  if (v.is_number_unsigned()) return std::to_string(v.get<unsigned long long>());
  if (v.is_number()) return format_double(v.get<double>());
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

void write_json(std::ostream& os, const json& v, int indent) {
  const std::string pad(static_cast<size_t>(indent + 2), ' ');
  const std::string close(static_cast<size_t>(indent), ' ');
  if (v.is_object()) {
    if (v.empty()) {
      os << "{}";
      return;
    }
    os << "{\n";
    bool first = true;
    for (auto it = v.begin(); it != v.end(); ++it) {
      if (!first) os << ",\n";
      first = false;
      os << pad << json(it.key()).dump() << ": ";
      write_json(os, it.value(), indent + 2);
    }
    os << "\n" << close << "}";
  } else if (v.is_array()) {
    const bool flat = std::none_of(v.begin(), v.end(), [](const json& e) { return e.is_structured(); });
    if (flat) {
      os << "[";
      for (size_t i = 0; i < v.size(); ++i) {
        if (i) os << ", ";
        write_json(os, v[i], indent);
      }
      os << "]";
      return;
    }
    os << "[\n";
    for (size_t i = 0; i < v.size(); ++i) {
      if (i) os << ",\n";
      os << pad;
      write_json(os, v[i], indent + 2);
    }
    os << "\n" << close << "]";
  } else if (v.is_number_float()) {
    const double x = v.get<double>();
    if (std::isfinite(x)) {
      os << format_double(x);
    } else {
      os << json(std::isnan(x) ? "nan" : (x > 0 ? "inf" : "-inf")).dump();
    }
  } else {
    os << v.dump();
  }
}

void write_csv(std::ostream& os, const Output& o) {
  if (o.table) {
    for (size_t c = 0; c < o.columns.size(); ++c) os << (c ? "," : "") << o.columns[c];
    os << "\n";
    for (const auto& row : o.rows) {
      for (size_t c = 0; c < row.size(); ++c) os << (c ? "," : "") << cell(row[c]);
      os << "\n";
    }
    return;
  }
  os << "quantity,i,j,value\n";
  for (auto it = o.result.begin(); it != o.result.end(); ++it) {
    const json& v = it.value();
    if (!v.is_array()) {
      os << it.key() << ",,," << cell(v) << "\n";
      continue;
    }
    for (size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_array()) {
        os << it.key() << "," << i << ",," << cell(v[i]) << "\n";
        continue;
      }
      for (size_t j = 0; j < v[i].size(); ++j) {
        os << it.key() << "," << i << "," << j << "," << cell(v[i][j]) << "\n";
      }
    }
  }
}

const LinkInstance& need_link(const std::optional<Scenario>& sc, const std::string& cmd) {
  if (!sc) throw ValidationError(cmd + ": --scenario is required");
  if (!sc->link) throw ValidationError(cmd + ": needs a single_link scenario");
  return *sc->link;
}

const NetworkInstance& need_network(const std::optional<Scenario>& sc, const std::string& cmd) {
  if (!sc) throw ValidationError(cmd + ": --scenario is required");
  if (!sc->network) throw ValidationError(cmd + ": needs a network scenario");
  return *sc->network;
}

json verify_json(const VerifyReport& rep) {
  return json{{"pass", rep.pass},
              {"positive_total", rep.positive_total},
              {"max_condition_violation", rep.max_condition_violation},
              {"max_deviation_gain", rep.max_deviation_gain},
              {"worst_user", rep.worst_user}};
}

void put_ratio(json& r, const RatioReport& rep) {
  r["nash_surplus"] = rep.nash_surplus;
  r["system_surplus"] = rep.system_surplus;
  r["ratio"] = rep.ratio;
  r["bound"] = rep.bound;
  r["bound_name"] = rep.bound_name;
  r["margin"] = rep.margin;
  r["bound_applies"] = rep.bound_applies;
}

NashResult run_nash(const LinkInstance& inst, const Scenario* sc, const SolverConfig& cfg,
                    const std::string& method) {
  if (method == "direct") return solve_nash_direct(inst, cfg);
  Eigen::VectorXd init = Eigen::VectorXd::Zero(inst.size());
  if (sc && sc->init) init = *sc->init;
  return solve_nash_best_response(inst, init, cfg);
}

void put_nash(json& r, const LinkInstance& inst, const NashResult& n) {
  r["method"] = std::string(to_string(n.method));
  r["w"] = vec(n.w);
  r["d"] = vec(n.outcome.d);
  r["f"] = n.outcome.f;
  r["mu"] = n.outcome.mu;
  r["surplus"] = surplus(inst, n.outcome.d);
  r["sweeps"] = n.sweeps;
  r["max_bid_delta"] = n.max_bid_delta;
  r["verify_pass"] = n.report.pass;
  r["max_condition_violation"] = n.report.max_condition_violation;
  r["max_deviation_gain"] = n.report.max_deviation_gain;
}

void put_network_nash(json& r, const NetworkInstance& inst, const NetworkNashResult& n) {
  r["w"] = mat(n.W.values());
  r["x"] = mat(n.alloc.x);
  r["f"] = vec(n.alloc.f);
  r["y"] = vec(n.alloc.y);
  r["d"] = vec(n.alloc.d);
  r["surplus"] = network_surplus(inst, n.alloc.d, n.alloc.f);
  r["sweeps"] = n.sweeps;
  r["restarts"] = n.restarts;
  r["max_bid_delta"] = n.max_bid_delta;
  r["verify_pass"] = n.report.pass;
  r["max_deviation_gain"] = n.report.worst_gain;
}

std::vector<double> grid_or(const std::vector<double>& flag, const std::optional<Scenario>& sc,
                            std::vector<double> Experiment::*field, const std::string& name) {
  if (!flag.empty()) return flag;
  if (sc && !((sc->experiment).*field).empty()) return (sc->experiment).*field;
  throw ValidationError(name + ": grid is empty (flag or experiment field)");
}

Output cmd_clear(const std::optional<Scenario>& sc) {
  Output o;
  if (!sc) throw ValidationError("clear: --scenario is required");
  if (sc->link) {
    if (!sc->bids) throw ValidationError("clear: scenario needs \"bids\"");
    const ClearingOutcome c = clear(sc->link->price, *sc->bids);
    o.result["w"] = vec(*sc->bids);
    o.result["f"] = c.f;
    o.result["mu"] = c.mu;
    o.result["d"] = vec(c.d);
    o.result["residual"] = c.residual;
  } else {
    if (!sc->net_bids) throw ValidationError("clear: scenario needs \"bids\"");
    const BidMatrix W(sc->network->topo, *sc->net_bids);
    const NetworkAllocation a = allocate(*sc->network, W);
    o.result["w"] = mat(W.values());
    o.result["f"] = vec(a.f);
    o.result["x"] = mat(a.x);
    o.result["y"] = vec(a.y);
    o.result["d"] = vec(a.d);
  }
  return o;
}

Output cmd_system(const std::optional<Scenario>& sc, const SolverConfig& cfg) {
  const LinkInstance& inst = need_link(sc, "system");
  const SystemSolution s = solve_system(inst, cfg.tol);
  Output o;
  o.result["d"] = vec(s.d);
  o.result["f"] = s.f;
  o.result["lambda"] = s.lam;
  o.result["surplus"] = s.surplus;
  o.result["kkt_residual"] = s.kkt_residual;
  return o;
}

Output cmd_price_taking(const std::optional<Scenario>& sc, const SolverConfig& cfg) {
  const LinkInstance& inst = need_link(sc, "price-taking");
  const PriceTakingResult p = price_taking_equilibrium(inst, cfg.tol);
  Output o;
  o.result["w"] = vec(p.w);
  o.result["d"] = vec(p.outcome.d);
  o.result["f"] = p.outcome.f;
  o.result["mu"] = p.outcome.mu;
  o.result["surplus"] = surplus(inst, p.outcome.d);
  o.result["system_surplus"] = solve_system(inst, cfg.tol).surplus;
  o.result["stationarity_residual"] = p.stationarity_residual;
  return o;
}

Output cmd_nash(const std::optional<Scenario>& sc, const SolverConfig& cfg, const std::string& method) {
  const LinkInstance& inst = need_link(sc, "nash");
  const NashResult n = run_nash(inst, &*sc, cfg, method);
  Output o;
  put_nash(o.result, inst, n);
  const SystemSolution s = solve_system(inst, cfg.tol);
  if (s.surplus > 0.0) put_ratio(o.result, ratio(inst, n, s));
  return o;
}

Output cmd_verify(const std::optional<Scenario>& sc, const SolverConfig& cfg) {
  Output o;
  if (!sc) throw ValidationError("verify: --scenario is required");
  if (sc->link) {
    if (!sc->bids) throw ValidationError("verify: scenario needs \"bids\"");
    const VerifyReport rep = verify_nash(*sc->link, *sc->bids, cfg.verify_tol, cfg);
    o.result = verify_json(rep);
    o.result["upper_violation"] = vec(rep.upper_violation);
    o.result["lower_violation"] = vec(rep.lower_violation);
  } else {
    if (!sc->net_bids) throw ValidationError("verify: scenario needs \"bids\"");
    const BidMatrix W(sc->network->topo, *sc->net_bids);
    const NetworkVerifyReport rep =
        verify_network_nash(*sc->network, W, cfg.verify_tol, 2 * cfg.deviation_samples, cfg);
    o.result["pass"] = rep.pass;
    o.result["max_gain"] = vec(rep.max_gain);
    o.result["worst_gain"] = rep.worst_gain;
    o.result["worst_user"] = rep.worst_user;
  }
  return o;
}

Output cmd_worst_case(const Options& opt, const std::optional<Scenario>& sc, const SolverConfig& cfg) {
  std::vector<long> Rs = opt.R;
  if (Rs.empty() && sc) Rs = sc->experiment.R;
  if (Rs.empty()) throw ValidationError("worst-case: --R is required");
  PriceModel p = [&] {
    if (opt.has_B) {
      if (opt.has_b) throw ValidationError("worst-case: give --a --b or --B, not both");
      const double a = opt.has_a ? opt.a : monomial_critical_as(opt.B).second;
      return PriceModel::monomial(a, opt.B);
    }
    if (!opt.has_a || !opt.has_b) throw ValidationError("worst-case: needs --a and --b, or --B");
    return PriceModel::two_piece(opt.a, opt.b, 1.0);
  }();
  for (long R : Rs) {
    if (R < 1) throw ValidationError("worst-case: R >= 1");
  }

  std::vector<std::optional<WorstCaseInstance>> built(Rs.size());
  parallel_for(static_cast<int>(Rs.size()), worker_threads(), [&](int i) {
    built[static_cast<size_t>(i)].emplace(build_worst_case(p, Rs[static_cast<size_t>(i)], cfg));
  });

  Output o;
  o.table = true;
  o.columns = {"family", "a", "b", "B", "R", "ratio", "limit", "verify_pass", "max_condition_violation",
               "max_deviation_gain"};
  for (const auto& slot : built) {
    const WorstCaseInstance& wc = *slot;
    json b = nullptr, B = nullptr;
    double a = 0.0;
    if (const auto* m = std::get_if<TwoPiecePrice>(&p.params())) {
      a = m->a;
      b = m->b;
    } else if (const auto* m = std::get_if<MonomialPrice>(&p.params())) {
      a = m->a;
      B = m->B;
    }
    o.rows.push_back({std::string(p.kind()), a, b, B, static_cast<long long>(wc.R), wc.ratio, wc.predicted_ratio,
                      wc.report.pass, wc.report.max_condition_violation, wc.report.max_deviation_gain});
  }
  return o;
}

Output cmd_sweep_g(const Options& opt, const std::optional<Scenario>& sc) {
  const std::vector<double> Bs = grid_or(opt.B_grid, sc, &Experiment::B_grid, "sweep-g");
  Output o;
  o.table = true;
  o.columns = {"B", "g", "g1", "g2", "a1", "a2"};
  o.rows.resize(Bs.size());
  parallel_for(static_cast<int>(Bs.size()), worker_threads(), [&](int i) {
    const double B = Bs[static_cast<size_t>(i)];
    const auto [a1, a2] = monomial_critical_as(B);
    o.rows[static_cast<size_t>(i)] = {B, g(B), g1(B), g2(B), a1, a2};
  });
  return o;
}

Output cmd_sweep_h(const Options& opt, const std::optional<Scenario>& sc) {
  const std::vector<double> as = grid_or(opt.a_grid, sc, &Experiment::a_grid, "sweep-h");
  const std::vector<double> bs = grid_or(opt.b_grid, sc, &Experiment::b_grid, "sweep-h");
  Output o;
  o.table = true;
  o.columns = {"a", "b", "H", "H1", "H2"};
  o.rows.resize(as.size() * bs.size());
  parallel_for(static_cast<int>(o.rows.size()), worker_threads(), [&](int i) {
    const double a = as[static_cast<size_t>(i) / bs.size()];
    const double b = bs[static_cast<size_t>(i) % bs.size()];
    o.rows[static_cast<size_t>(i)] = {a, b, H(a, b), H1(a), H2(a)};
  });
  return o;
}

Output cmd_network_system(const std::optional<Scenario>& sc, const SolverConfig& cfg) {
  const NetworkInstance& inst = need_network(sc, "network-system");
  const NetworkSystemSolution s = solve_network_system(inst, cfg);
  Output o;
  o.result["y"] = vec(s.y);
  o.result["f"] = vec(s.f);
  o.result["d"] = vec(s.d);
  o.result["surplus"] = s.surplus;
  o.result["kkt_residual"] = s.kkt_residual;
  o.result["iterations"] = s.iterations;
  return o;
}

Output cmd_network_nash(const std::optional<Scenario>& sc, const SolverConfig& cfg) {
  const NetworkInstance& inst = need_network(sc, "network-nash");
  const BidMatrix init = sc->net_bids ? BidMatrix(inst.topo, *sc->net_bids) : BidMatrix::zeros(inst.topo);
  const NetworkNashResult n = solve_network_nash(inst, init, cfg);
  Output o;
  put_network_nash(o.result, inst, n);
  const NetworkSystemSolution s = solve_network_system(inst, cfg);
  if (s.surplus > 0.0) put_ratio(o.result, check_theorem14_bound(inst, n, s));
  return o;
}

bool violates(const RatioReport& rep) { return rep.bound_applies && rep.margin < -kBoundSlack; }

Output cmd_bound_check(const Options& opt, const std::optional<Scenario>& sc, const SolverConfig& cfg) {
  Output o;
  if (sc) {
    RatioReport rep;
    if (sc->link) {
      const NashResult n = run_nash(*sc->link, &*sc, cfg, opt.method);
      rep = ratio(*sc->link, n, solve_system(*sc->link, cfg.tol));
      put_nash(o.result, *sc->link, n);
    } else {
      const NetworkNashResult n = solve_network_nash(*sc->network, BidMatrix::zeros(sc->network->topo), cfg);
      rep = check_theorem14_bound(*sc->network, n, solve_network_system(*sc->network, cfg));
      put_network_nash(o.result, *sc->network, n);
    }
    put_ratio(o.result, rep);
    o.bound_violated = violates(rep);
    o.result["violated"] = o.bound_violated;
    return o;
  }

  const int n = opt.instances > 0 ? opt.instances : 200;
  if (opt.random != "single" && opt.random != "network") {
    throw ValidationError("bound-check: --random must be single or network");
  }
  const bool network = opt.random == "network";
  o.table = true;
  o.columns = {"instance", "kind", "price", "users", "status", "ratio", "bound", "margin", "bound_applies"};
  o.rows.resize(static_cast<size_t>(n));
  parallel_for(n, worker_threads(), [&](int i) {
    auto rng = instance_rng(cfg.seed, static_cast<std::uint64_t>(i));
    auto& row = o.rows[static_cast<size_t>(i)];
    try {
      if (network) {
        const NetworkInstance inst = random_network(rng);
        const NetworkNashResult nn = solve_network_nash(inst, BidMatrix::zeros(inst.topo), cfg);
        const RatioReport rep = check_theorem14_bound(inst, nn, solve_network_system(inst, cfg));
        row = {i, "network", "", static_cast<long long>(inst.topo.users()), "ok", rep.ratio, rep.bound,
               rep.margin, rep.bound_applies};
      } else {
        const LinkInstance inst = random_link_instance(rng);
        const NashResult nr = solve_nash_best_response(inst, Eigen::VectorXd::Zero(inst.size()), cfg);
        const RatioReport rep = ratio(inst, nr, solve_system(inst, cfg.tol));
        row = {i, "single_link", std::string(inst.price.kind()), static_cast<long long>(inst.size()), "ok",
               rep.ratio, rep.bound, rep.margin, rep.bound_applies};
      }
    } catch (const NonConvergence&) {
      row = {i, network ? "network" : "single_link", "", nullptr, "nonconvergence", nullptr, nullptr, nullptr,
             nullptr};
    }
  });
  for (const auto& row : o.rows) {
    if (row[4] == "ok" && row[8].get<bool>() && row[7].get<double>() < -kBoundSlack) o.bound_violated = true;
  }
  return o;
}

json config_json(const SolverConfig& cfg, const Options& opt) {
  return json{{"tol", cfg.tol},
              {"max_sweeps", cfg.max_sweeps},
              {"damping", cfg.damping},
              {"seed", cfg.seed},
              {"deviation_samples", cfg.deviation_samples},
              {"verify_tol", cfg.verify_tol},
              {"kink_slack", cfg.kink_slack},
              {"method", opt.method},
              {"threads", worker_threads()}};
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

int worker_threads() {
  int n = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  if (const char* cap = std::getenv("ELASTIC_MARKET_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(cap, &end, 10);
    if (end == cap || *end != '\0' || v < 1) {
      throw ValidationError("ELASTIC_MARKET_THREADS: expected a positive integer");
    }
    n = std::min<long>(n, v);
  }
  return n;
}

void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
  if (n <= 0) return;
  threads = std::max(1, std::min(threads, n));
  std::vector<std::exception_ptr> errors(static_cast<size_t>(n));
  std::atomic<int> next{0};
  auto work = [&] {
    for (int i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[static_cast<size_t>(i)] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Solver and experiment runner for proportional-bidding markets with elastic supply."};
  app.name("elastic_market");
  app.require_subcommand(1);
  Options opt;
  app.add_option("--scenario", opt.scenario, "Scenario file (JSON)");
  app.add_option("--out", opt.out, "Write output here instead of stdout");
  app.add_option("--format", opt.format, "csv or report")->check(CLI::IsMember({"csv", "report"}));
  auto* tol = app.add_option("--tol", opt.tol, "Solver tolerance");
  auto* seed = app.add_option("--seed", opt.seed, "Seed for all sampling");
  auto* max_iter = app.add_option("--max-iter", opt.max_iter, "Sweep cap for iterative solvers");
  auto* method = app.add_option("--method", opt.method, "Nash method: br or direct")
                     ->check(CLI::IsMember({"br", "direct"}));
  auto* a = app.add_option("--a", opt.a, "Price slope a (worst-case)");
  auto* b = app.add_option("--b", opt.b, "Second-piece slope b (worst-case)");
  auto* B = app.add_option("--B", opt.B, "Monomial exponent B (worst-case)");
  app.add_option("--R", opt.R, "User counts, comma separated")->delimiter(',');
  app.add_option("--B-grid", opt.B_grid, "Exponents for sweep-g")->delimiter(',');
  app.add_option("--a-grid", opt.a_grid, "a values for sweep-h")->delimiter(',');
  app.add_option("--b-grid", opt.b_grid, "b values for sweep-h")->delimiter(',');
  app.add_option("--instances", opt.instances, "Random instances for bound-check");
  app.add_option("--random", opt.random, "Random family for bound-check: single or network");

  const std::map<std::string, std::string> commands = {
      {"clear", "Clear the market at the scenario's bids"},
      {"system", "Solve the social optimum"},
      {"price-taking", "Price-taking equilibrium"},
      {"nash", "Nash equilibrium (--method br|direct)"},
      {"verify", "Check the scenario's bids for equilibrium"},
      {"worst-case", "Build worst-case instances (--a --b --R or --B --R)"},
      {"sweep-g", "Tabulate g(B) over --B-grid"},
      {"sweep-h", "Tabulate H(a, b) over --a-grid x --b-grid"},
      {"network-system", "Network social optimum"},
      {"network-nash", "Network Nash equilibrium"},
      {"bound-check", "Nash, optimum and ratio bound; exit 3 on violation"},
  };
  for (const auto& [name, help] : commands) app.add_subcommand(name, help)->fallthrough();

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInvalidInput;
  }
  const std::string cmd = app.get_subcommands().front()->get_name();
  opt.has_tol = tol->count() > 0;
  opt.has_seed = seed->count() > 0;
  opt.has_max_iter = max_iter->count() > 0;
  opt.has_method = method->count() > 0;
  opt.has_a = a->count() > 0;
  opt.has_b = b->count() > 0;
  opt.has_B = B->count() > 0;

  const auto t0 = std::chrono::steady_clock::now();
  try {
    std::optional<Scenario> sc;
    if (!opt.scenario.empty()) sc = parse_scenario(opt.scenario);
    SolverConfig cfg = sc ? sc->solver : SolverConfig{};
    if (opt.has_tol) cfg.tol = opt.tol;
    if (opt.has_seed) cfg.seed = opt.seed;
    if (opt.has_max_iter) cfg.max_sweeps = opt.max_iter;
    cfg.validate();
    if (sc && sc->experiment.instances > 0 && opt.instances == 0) opt.instances = sc->experiment.instances;

    Output o;
    if (cmd == "clear") o = cmd_clear(sc);
    else if (cmd == "system") o = cmd_system(sc, cfg);
    else if (cmd == "price-taking") o = cmd_price_taking(sc, cfg);
    else if (cmd == "nash") o = cmd_nash(sc, cfg, opt.method);
    else if (cmd == "verify") o = cmd_verify(sc, cfg);
    else if (cmd == "worst-case") o = cmd_worst_case(opt, sc, cfg);
    else if (cmd == "sweep-g") o = cmd_sweep_g(opt, sc);
    else if (cmd == "sweep-h") o = cmd_sweep_h(opt, sc);
    else if (cmd == "network-system") o = cmd_network_system(sc, cfg);
    else if (cmd == "network-nash") o = cmd_network_nash(sc, cfg);
    else o = cmd_bound_check(opt, sc, cfg);

    const std::string format = !opt.format.empty() ? opt.format : (o.table ? "csv" : "report");
    std::ostringstream text;
    if (format == "csv") {
      write_csv(text, o);
    } else {
      json report;
      report["command"] = cmd;
      report["scenario"] = opt.scenario.empty() ? json(nullptr) : json(opt.scenario);
      report["config"] = config_json(cfg, opt);
      if (o.table) {
        report["columns"] = o.columns;
        report["rows"] = o.rows;
      } else {
        report["result"] = o.result;
      }
      report["wall_time_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      write_json(text, report, 0);
      text << "\n";
    }
    if (opt.out.empty()) {
      out << text.str();
    } else {
      std::ofstream file(opt.out, std::ios::binary);
      if (!file) throw ParseError("--out: cannot write " + opt.out);
      file << text.str();
    }
    return o.bound_violated ? kExitBoundViolation : kExitOk;
  } catch (const NonConvergence& e) {
    err << "error: " << e.what() << "\n";
    return kExitNonConvergence;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitInvalidInput;
  }
}

}  // namespace elastic_market
