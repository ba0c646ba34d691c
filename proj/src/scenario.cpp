#include "pubopt/scenario.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <ostream>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "pubopt/csv.hpp"
#include "pubopt/isp_monopoly.hpp"
#include "pubopt/parallel.hpp"

namespace pubopt {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct NamedExperiment {
  Experiment e;
  const char* name;
};

constexpr NamedExperiment kExperiments[] = {
    {Experiment::RateEq, "RateEq"},         {Experiment::CpGame, "CpGame"},
    {Experiment::MonopolySweep, "MonopolySweep"}, {Experiment::Duopoly, "Duopoly"},
    {Experiment::Oligopoly, "Oligopoly"},   {Experiment::BestResponse, "BestResponse"},
    {Experiment::Validate, "Validate"},
};

std::string join(const std::vector<std::string>& v, const char* sep) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += sep;
    out += v[i];
  }
  return out;
}

}  // namespace

std::string to_string(Experiment e) {
  for (const auto& x : kExperiments)
    if (x.e == e) return x.name;
  return "?";
}

Experiment experiment_from_string(const std::string& name) {
  for (const auto& x : kExperiments)
    if (name == x.name) return x.e;
  throw ValidationError("unknown experiment '" + name + "'");
}

ConfigError::ConfigError(std::vector<std::string> problems)
    : ValidationError("invalid config: " + join(problems, "; ")), problems_(std::move(problems)) {}

ScenarioConfig default_config(Experiment e) {
  ScenarioConfig cfg;
  cfg.experiment = e;
  const auto kappa_coarse = linear_grid(0.0, 1.0, 0.25);
  const auto c_coarse = linear_grid(0.0, 1.0, 0.1);
  switch (e) {
    case Experiment::RateEq:
      cfg.grids.nu = {20.0, 150.0, 200.0, 500.0};
      break;
    case Experiment::CpGame:
      cfg.grids = {{0.5}, {0.3}, {150.0}};
      break;
    case Experiment::MonopolySweep:
      cfg.grids = {linear_grid(0.0, 1.0, 0.1), linear_grid(0.0, 1.0, 0.02), log_grid(1.0, 500.0, 100)};
      break;
    case Experiment::Duopoly:
      cfg.grids = {kappa_coarse, c_coarse, {50.0, 150.0, 200.0}};
      cfg.isps = {{0, 0.5, {1.0, 0.0}}, {1, 0.5, IspStrategy::public_option()}};
      break;
    case Experiment::Oligopoly:
      cfg.grids.nu = {150.0};
      cfg.isps = {{0, 0.4, {1.0, 0.3}}, {1, 0.3, IspStrategy::public_option()}, {2, 0.3, {0.5, 0.3}}};
      break;
    case Experiment::BestResponse:
      cfg.grids = {kappa_coarse, c_coarse, {150.0}};
      cfg.isps = {{0, 0.4, {1.0, 0.3}}, {1, 0.3, IspStrategy::public_option()}, {2, 0.3, {0.5, 0.3}}};
      break;
    case Experiment::Validate:
      break;
  }
  return cfg;
}

// ---------------------------------------------------------------- parsing

namespace {

class Reader {
 public:
  std::vector<std::string> problems;

  void unknown_keys(const json& obj, const std::string& where, std::initializer_list<const char*> known) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
      bool ok = false;
      for (const char* k : known) ok = ok || it.key() == k;
      if (!ok) problems.push_back(where + it.key() + ": unknown field");
    }
  }

  bool number(const json& j, const std::string& field, double& out) {
    if (!j.is_number()) {
      problems.push_back(field + ": expected a number");
      return false;
    }
    out = j.get<double>();
    if (!std::isfinite(out)) {
      problems.push_back(field + ": must be finite");
      return false;
    }
    return true;
  }

  bool integer(const json& j, const std::string& field, long long& out) {
    if (!j.is_number_integer()) {
      problems.push_back(field + ": expected an integer");
      return false;
    }
    out = j.get<long long>();
    return true;
  }

  void range(const json& j, const std::string& field, Range& out) {
    if (!j.is_array() || j.size() != 2) {
      problems.push_back(field + ": expected [lo, hi]");
      return;
    }
    double lo = 0, hi = 0;
    if (number(j[0], field + "[0]", lo) && number(j[1], field + "[1]", hi)) out = {lo, hi};
  }

  void grid(const json& j, const std::string& field, std::vector<double>& out) {
    if (j.is_array()) {
      std::vector<double> v;
      for (std::size_t i = 0; i < j.size(); ++i) {
        double x = 0;
        if (number(j[i], field + "[" + std::to_string(i) + "]", x)) v.push_back(x);
      }
      out = v;
      return;
    }
    if (j.is_object() && j.size() == 1 && j.contains("linear")) {
      const json& l = j["linear"];
      double lo = 0, hi = 0, step = 0;
      if (!l.is_object() || !l.contains("lo") || !l.contains("hi") || !l.contains("step")) {
        problems.push_back(field + ".linear: expected {lo, hi, step}");
        return;
      }
      bool ok = number(l["lo"], field + ".linear.lo", lo);
      ok = number(l["hi"], field + ".linear.hi", hi) && ok;
      ok = number(l["step"], field + ".linear.step", step) && ok;
      if (!ok) return;
      if (!(step > 0.0) || hi < lo) {
        problems.push_back(field + ".linear: need step > 0 and hi >= lo");
        return;
      }
      out = linear_grid(lo, hi, step);
      return;
    }
    if (j.is_object() && j.size() == 1 && j.contains("log")) {
      const json& l = j["log"];
      double lo = 0, hi = 0;
      long long n = 0;
      if (!l.is_object() || !l.contains("lo") || !l.contains("hi") || !l.contains("n")) {
        problems.push_back(field + ".log: expected {lo, hi, n}");
        return;
      }
      bool ok = number(l["lo"], field + ".log.lo", lo);
      ok = number(l["hi"], field + ".log.hi", hi) && ok;
      ok = integer(l["n"], field + ".log.n", n) && ok;
      if (!ok) return;
      if (!(lo > 0.0) || hi < lo || n < 1 || n > 100000) {
        problems.push_back(field + ".log: need 0 < lo <= hi and 1 <= n <= 100000");
        return;
      }
      out = n == 1 ? std::vector<double>{lo} : log_grid(lo, hi, static_cast<int>(n));
      return;
    }
    problems.push_back(field + ": expected an array, {\"linear\": {...}} or {\"log\": {...}}");
  }

  void population(const json& j, ScenarioConfig& cfg) {
    if (j.is_string()) {
      cfg.population = j.get<std::string>();
      return;
    }
    if (!j.is_object()) {
      problems.push_back("population: expected an object or a CSV path");
      return;
    }
    unknown_keys(j, "population.", {"n", "alpha_dist", "theta_hat_dist", "beta_dist", "v_dist", "phi_mode"});
    PopulationSpec spec = default_population_spec();
    if (j.contains("n")) {
      long long n = 0;
      if (integer(j["n"], "population.n", n)) {
        if (n < 1 || n > 10000000) problems.push_back("population.n: must be in [1, 1e7]");
        else spec.n = static_cast<int>(n);
      }
    }
    if (j.contains("alpha_dist")) range(j["alpha_dist"], "population.alpha_dist", spec.alpha_dist);
    if (j.contains("theta_hat_dist")) range(j["theta_hat_dist"], "population.theta_hat_dist", spec.theta_hat_dist);
    if (j.contains("beta_dist")) range(j["beta_dist"], "population.beta_dist", spec.beta_dist);
    if (j.contains("v_dist")) range(j["v_dist"], "population.v_dist", spec.v_dist);
    if (j.contains("phi_mode")) {
      if (!j["phi_mode"].is_string()) {
        problems.push_back("population.phi_mode: expected a string");
      } else {
        try {
          spec.phi_mode = phi_mode_from_string(j["phi_mode"].get<std::string>());
        } catch (const ValidationError& e) {
          problems.push_back(std::string("population.phi_mode: ") + e.what());
        }
      }
    }
    cfg.population = spec;
  }

  void isps(const json& j, ScenarioConfig& cfg) {
    if (!j.is_array()) {
      problems.push_back("isps: expected an array");
      return;
    }
    std::vector<IspProfile> out;
    for (std::size_t i = 0; i < j.size(); ++i) {
      const std::string where = "isps[" + std::to_string(i) + "]";
      const json& e = j[i];
      if (!e.is_object()) {
        problems.push_back(where + ": expected an object");
        continue;
      }
      unknown_keys(e, where + ".", {"id", "mu_share", "kappa", "c"});
      IspProfile p;
      p.id = static_cast<int>(i);
      long long id = 0;
      if (e.contains("id") && integer(e["id"], where + ".id", id)) p.id = static_cast<int>(id);
      for (const char* k : {"mu_share", "kappa", "c"})
        if (!e.contains(k)) problems.push_back(where + "." + k + ": missing");
      if (e.contains("mu_share")) number(e["mu_share"], where + ".mu_share", p.mu_share);
      if (e.contains("kappa")) number(e["kappa"], where + ".kappa", p.strategy.kappa);
      if (e.contains("c")) number(e["c"], where + ".c", p.strategy.c);
      out.push_back(p);
    }
    cfg.isps = out;
  }
};

}  // namespace

ScenarioConfig parse_config(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text.begin(), json_text.end());
  } catch (const json::parse_error& e) {
    throw ConfigError({std::string("config: invalid JSON (") + e.what() + ")"});
  }
  if (!j.is_object()) throw ConfigError({"config: top level must be an object"});

  Reader r;
  r.unknown_keys(j, "", {"population", "experiment", "grids", "isps", "focal_id", "total_m", "output_path",
                         "seed", "threads"});
  Experiment e = Experiment::MonopolySweep;
  if (j.contains("experiment")) {
    if (!j["experiment"].is_string()) {
      r.problems.push_back("experiment: expected a string");
    } else {
      try {
        e = experiment_from_string(j["experiment"].get<std::string>());
      } catch (const ValidationError& ex) {
        r.problems.push_back(std::string("experiment: ") + ex.what());
      }
    }
  }
  ScenarioConfig cfg = default_config(e);
  if (j.contains("population")) r.population(j["population"], cfg);
  if (j.contains("grids")) {
    const json& g = j["grids"];
    if (!g.is_object()) {
      r.problems.push_back("grids: expected an object");
    } else {
      r.unknown_keys(g, "grids.", {"kappa", "c", "nu"});
      if (g.contains("kappa")) r.grid(g["kappa"], "grids.kappa", cfg.grids.kappa);
      if (g.contains("c")) r.grid(g["c"], "grids.c", cfg.grids.c);
      if (g.contains("nu")) r.grid(g["nu"], "grids.nu", cfg.grids.nu);
    }
  }
  if (j.contains("isps")) r.isps(j["isps"], cfg);
  if (j.contains("focal_id")) {
    long long v = 0;
    if (r.integer(j["focal_id"], "focal_id", v)) cfg.focal_id = static_cast<int>(v);
  }
  if (j.contains("total_m")) r.number(j["total_m"], "total_m", cfg.total_m);
  if (j.contains("output_path")) {
    if (j["output_path"].is_string()) cfg.output_path = j["output_path"].get<std::string>();
    else r.problems.push_back("output_path: expected a string");
  }
  if (j.contains("seed")) {
    if (j["seed"].is_number_unsigned()) cfg.seed = j["seed"].get<std::uint64_t>();
    else r.problems.push_back("seed: expected a non-negative integer");
  }
  if (j.contains("threads")) {
    long long v = 0;
    if (r.integer(j["threads"], "threads", v)) cfg.threads = static_cast<int>(v);
  }
  // Report range problems alongside the type problems in one go.
  try {
    validate_config(cfg);
  } catch (const ConfigError& e) {
    r.problems.insert(r.problems.end(), e.problems().begin(), e.problems().end());
  }
  if (!r.problems.empty()) throw ConfigError(r.problems);
  return cfg;
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError({"config: cannot open '" + path + "'"});
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string config_to_json(const ScenarioConfig& cfg) {
  json j;
  if (const auto* spec = std::get_if<PopulationSpec>(&cfg.population)) {
    j["population"] = {{"n", spec->n},
                       {"alpha_dist", {spec->alpha_dist.lo, spec->alpha_dist.hi}},
                       {"theta_hat_dist", {spec->theta_hat_dist.lo, spec->theta_hat_dist.hi}},
                       {"beta_dist", {spec->beta_dist.lo, spec->beta_dist.hi}},
                       {"v_dist", {spec->v_dist.lo, spec->v_dist.hi}},
                       {"phi_mode", to_string(spec->phi_mode)}};
  } else {
    j["population"] = std::get<std::string>(cfg.population);
  }
  j["experiment"] = to_string(cfg.experiment);
  j["grids"] = {{"kappa", cfg.grids.kappa}, {"c", cfg.grids.c}, {"nu", cfg.grids.nu}};
  json isps = json::array();
  for (const auto& p : cfg.isps)
    isps.push_back({{"id", p.id}, {"mu_share", p.mu_share}, {"kappa", p.strategy.kappa}, {"c", p.strategy.c}});
  j["isps"] = isps;
  j["focal_id"] = cfg.focal_id;
  j["total_m"] = cfg.total_m;
  j["output_path"] = cfg.output_path;
  j["seed"] = cfg.seed;
  j["threads"] = cfg.threads;
  return j.dump(2);
}

void validate_config(const ScenarioConfig& cfg) {
  std::vector<std::string> p;
  if (const auto* spec = std::get_if<PopulationSpec>(&cfg.population)) {
    try {
      spec->validate();
    } catch (const ValidationError& e) {
      p.push_back(std::string("population: ") + e.what());
    }
  } else if (std::get<std::string>(cfg.population).empty()) {
    p.push_back("population: empty path");
  }

  const Experiment e = cfg.experiment;
  const bool needs_kc = e == Experiment::CpGame || e == Experiment::MonopolySweep ||
                        e == Experiment::Duopoly || e == Experiment::BestResponse;
  const bool needs_nu = e != Experiment::Validate;
  const bool multi = e == Experiment::Duopoly || e == Experiment::Oligopoly || e == Experiment::BestResponse;

  auto check_grid = [&](const std::vector<double>& g, const char* name, bool required, double lo, double hi,
                        bool open_lo) {
    if (g.empty()) {
      if (required) p.push_back(std::string("grids.") + name + ": must be non-empty for " + to_string(e));
      return;
    }
    for (std::size_t i = 0; i < g.size(); ++i) {
      const bool below = open_lo ? !(g[i] > lo) : !(g[i] >= lo);
      if (below || g[i] > hi) {
        p.push_back(std::string("grids.") + name + "[" + std::to_string(i) + "]: out of range");
        break;
      }
      if (i > 0 && !(g[i] > g[i - 1])) {
        p.push_back(std::string("grids.") + name + ": must be strictly ascending");
        break;
      }
    }
  };
  const double inf = std::numeric_limits<double>::infinity();
  check_grid(cfg.grids.kappa, "kappa", needs_kc, 0.0, 1.0, false);
  check_grid(cfg.grids.c, "c", needs_kc, 0.0, inf, false);
  check_grid(cfg.grids.nu, "nu", needs_nu, 0.0, inf, multi);

  if (multi) {
    if (cfg.isps.size() < 2) p.push_back("isps: need at least two ISPs for " + to_string(e));
    if (e == Experiment::Duopoly && cfg.isps.size() != 2) p.push_back("isps: Duopoly takes exactly two ISPs");
    std::set<int> ids;
    double sum = 0.0;
    for (std::size_t i = 0; i < cfg.isps.size(); ++i) {
      const auto& isp = cfg.isps[i];
      const std::string where = "isps[" + std::to_string(i) + "]";
      if (!ids.insert(isp.id).second) p.push_back(where + ".id: duplicate");
      if (!(isp.mu_share > 0.0 && isp.mu_share <= 1.0)) p.push_back(where + ".mu_share: must be in (0,1]");
      if (!(isp.strategy.kappa >= 0.0 && isp.strategy.kappa <= 1.0)) p.push_back(where + ".kappa: must be in [0,1]");
      if (!(isp.strategy.c >= 0.0)) p.push_back(where + ".c: must be non-negative");
      sum += isp.mu_share;
    }
    if (!cfg.isps.empty() && std::abs(sum - 1.0) > 1e-12) p.push_back("isps: mu_share values must sum to 1");
    if ((e == Experiment::Duopoly || e == Experiment::BestResponse) && !ids.count(cfg.focal_id))
      p.push_back("focal_id: no ISP with id " + std::to_string(cfg.focal_id));
  }
  if (!(cfg.total_m > 0.0)) p.push_back("total_m: must be positive");
  if (cfg.threads < 0) p.push_back("threads: must be >= 0");
  if (cfg.output_path.empty()) p.push_back("output_path: must be non-empty");
  if (!p.empty()) throw ConfigError(p);
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const SolverError*>(&e)) return 3;
  return 2;
}

// ---------------------------------------------------------------- running

namespace {

class Output {
 public:
  Output(const std::string& dir) : dir_(dir) { fs::create_directories(dir_); }

  template <class Fn>
  void write(const std::string& name, Fn&& fn, json meta = json::object()) {
    const fs::path path = dir_ / name;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write '" + path.string() + "'");
    fn(out);
    out.flush();
    if (!out) throw ValidationError("write failed for '" + path.string() + "'");
    meta["name"] = name;
    files.push_back(meta);
    names.push_back(path.string());
  }

  fs::path dir() const { return dir_; }

  json files = json::array();
  std::vector<std::string> names;

 private:
  fs::path dir_;
};

std::vector<ContentProvider> load_population(const ScenarioConfig& cfg) {
  if (const auto* spec = std::get_if<PopulationSpec>(&cfg.population)) {
    PopulationSpec s = *spec;
    s.seed = cfg.seed;
    return generate_population(s);
  }
  return read_population_csv(std::get<std::string>(cfg.population));
}

json strategy_json(const IspStrategy& s) { return {{"kappa", s.kappa}, {"c", s.c}}; }

const char* kind_name(EquilibriumKind k) { return k == EquilibriumKind::Competitive ? "competitive" : "nash"; }

int run_rate_eq(const ScenarioConfig& cfg, std::span<const ContentProvider> cps, Output& out, json& summary) {
  summary = json::array();
  for (std::size_t k = 0; k < cfg.grids.nu.size(); ++k) {
    const double nu = cfg.grids.nu[k];
    SystemInstance sys{cfg.total_m, nu * cfg.total_m, {cps.begin(), cps.end()}};
    const RateEquilibrium eq = solve_rate_equilibrium(sys);
    out.write("rate_eq_" + std::to_string(k) + ".csv",
              [&](std::ostream& os) { write_rate_equilibrium_csv(os, eq, cps); }, {{"nu", nu}});
    summary.push_back({{"nu", nu},
                       {"aggregate", eq.aggregate},
                       {"fair_share_cap", eq.fair_share_cap ? json(*eq.fair_share_cap) : json(nullptr)}});
  }
  return 0;
}

int run_cp_game(const ScenarioConfig& cfg, std::span<const ContentProvider> cps, Output& out, json& summary,
                std::ostream& log) {
  struct Point {
    IspStrategy s;
    double nu;
    StrategyOutcome o;
    bool ok = true;
    std::string error;
  };
  std::vector<Point> pts;
  for (double k : cfg.grids.kappa)
    for (double c : cfg.grids.c)
      for (double nu : cfg.grids.nu) pts.push_back({{k, c}, nu, {}, true, {}});
  const CpTable t(cps);
  parallel_for(pts.size(), cfg.threads, [&](std::size_t i) {
    try {
      pts[i].o = evaluate_strategy(t, pts[i].s, pts[i].nu);
    } catch (const SolverError& e) {
      pts[i].ok = false;
      pts[i].error = e.what();
    }
  });
  int failed = 0;
  out.write("cp_game.csv", [&](std::ostream& os) {
    csv::Writer w(os);
    w.header({"kappa", "c", "nu", "kind", "premium_count", "level_o", "level_p", "phi", "psi"});
    for (const auto& p : pts) {
      w.field(p.s.kappa).field(p.s.c).field(p.nu);
      if (p.ok) {
        w.field(std::string_view(kind_name(p.o.kind))).field(p.o.premium_count).field(p.o.level_o);
        w.field(p.o.level_p).field(p.o.phi).field(p.o.psi);
      } else {
        w.field(std::string_view("failed"));
        for (int i = 0; i < 5; ++i) w.field(std::string_view("nan"));
      }
      w.end_row();
    }
  });
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (!pts[i].ok) {
      ++failed;
      log << "point " << i << " failed: " << pts[i].error << "\n";
      continue;
    }
    const Partition part = to_partition(t, pts[i].o.premium);
    out.write("partition_" + std::to_string(i) + ".csv", [&](std::ostream& os) { write_partition_csv(os, part); },
              {{"kappa", pts[i].s.kappa}, {"c", pts[i].s.c}, {"nu", pts[i].nu}});
  }
  summary = {{"points", pts.size()}, {"failed", failed}};
  return failed > 0 ? 3 : 0;
}

int run_sweep(const ScenarioConfig& cfg, std::span<const ContentProvider> cps, Output& out, json& summary) {
  const auto recs = monopoly_sweep(cps, cfg.grids.kappa, cfg.grids.c, cfg.grids.nu, cfg.threads);
  const auto regimes = classify_sweep(recs);
  out.write("sweep.csv", [&](std::ostream& os) { write_sweep_csv(os, recs, regimes); });
  int failed = 0;
  std::map<std::string, int> counts;
  for (std::size_t i = 0; i < recs.size(); ++i) {
    failed += recs[i].ok ? 0 : 1;
    ++counts[to_string(regimes[i])];
  }
  summary = {{"points", recs.size()}, {"failed", failed}, {"regimes", counts}};
  return 0;
}

int run_best_response(const ScenarioConfig& cfg, std::span<const ContentProvider> cps, Output& out,
                      json& summary, const std::string& stem) {
  summary = json::array();
  const auto eps_grid = log_grid(1.0, 1000.0, 100);
  for (std::size_t k = 0; k < cfg.grids.nu.size(); ++k) {
    const double nu = cfg.grids.nu[k];
    const auto r = best_response_search(cfg.isps, cfg.focal_id, cfg.grids.kappa, cfg.grids.c, cfg.total_m,
                                        nu * cfg.total_m, cps, eps_grid, {}, cfg.threads);
    out.write(stem + "_" + std::to_string(k) + ".csv", [&](std::ostream& os) { write_best_response_csv(os, r); },
              {{"nu", nu}});
    int not_equalized = 0;
    for (const auto& p : r.points) not_equalized += p.ok && !p.eq.equalized ? 1 : 0;
    json s = {{"nu", nu}, {"failed", r.failed}, {"not_equalized", not_equalized}};
    if (r.failed < static_cast<int>(r.points.size())) {
      s["argmax_share"] = strategy_json(r.points[r.argmax_m].strategy);
      s["argmax_surplus"] = strategy_json(r.points[r.argmax_phi].strategy);
      s["max_share"] = r.points[r.argmax_m].m_focal;
      s["surplus_gap"] = r.phi_gap;
      s["share_gap"] = r.m_gap;
      s["epsilon_others"] = r.epsilon_others;
      s["delta"] = r.delta;
    }
    summary.push_back(s);
  }
  return 0;
}

int run_oligopoly(const ScenarioConfig& cfg, std::span<const ContentProvider> cps, Output& out, json& summary) {
  summary = json::array();
  for (std::size_t k = 0; k < cfg.grids.nu.size(); ++k) {
    const double nu = cfg.grids.nu[k];
    const auto eq = solve_market_split(cfg.isps, cfg.total_m, nu * cfg.total_m, cps);
    out.write("market_" + std::to_string(k) + ".csv", [&](std::ostream& os) { write_market_csv(os, eq); },
              {{"nu", nu}});
    summary.push_back({{"nu", nu},
                       {"phi_common", eq.phi_common},
                       {"residual", eq.residual},
                       {"equalized", eq.equalized},
                       {"corner", std::vector<int>(eq.corner.begin(), eq.corner.end())}});
  }
  return 0;
}

struct Check {
  std::string name;
  bool passed;
  std::string detail;
};

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

std::vector<Check> validation_suite(std::span<const ContentProvider> cps, std::uint64_t seed, int threads) {
  std::vector<Check> checks;

  const AxiomReport ax = verify_axioms(max_min_mechanism(), 200, seed);
  checks.push_back({"axioms", ax.passed(),
                    "violations " + std::to_string(ax.violations[0]) + "/" + std::to_string(ax.violations[1]) + "/" +
                        std::to_string(ax.violations[2]) + "/" + std::to_string(ax.violations[3]) + " of " +
                        std::to_string(ax.trials)});

  {
    const auto grid = log_grid(1.0, 500.0, 200);
    const double sat = saturation_capacity(cps);
    std::vector<double> phi(grid.size());
    parallel_for(grid.size(), threads, [&](std::size_t i) { phi[i] = consumer_surplus_per_capita(grid[i], cps); });
    int bad = 0;
    for (std::size_t i = 1; i < grid.size(); ++i) {
      const double d = phi[i] - phi[i - 1];
      if (d < -1e-12 * std::max(1.0, phi[i]) || (grid[i] < sat && !(d > 0.0))) ++bad;
    }
    checks.push_back({"surplus_monotone", bad == 0, std::to_string(bad) + " bad steps of " +
                                                        std::to_string(grid.size() - 1)});
  }

  {
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
    auto u = [&] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
    int bad = 0, nash = 0, scaled_bad = 0, scaled = 0;
    for (int k = 0; k < 50; ++k) {
      PopulationSpec spec;
      spec.n = 1 + static_cast<int>(rng() % 30);
      spec.seed = rng();
      const auto small = generate_population(spec);
      const IspStrategy s{u(), u()};
      const double nu = u() * 1.5 * saturation_capacity(small);
      const CpTable t(small);
      const GameState g = solve_class_game(t, s, nu);
      const Partition p = to_partition(t, g.premium);
      const bool ok = g.kind == EquilibriumKind::Competitive ? verify_competitive(small, s, nu, p)
                                                             : verify_nash(small, s, nu, p);
      bad += ok ? 0 : 1;
      nash += g.kind == EquilibriumKind::Nash ? 1 : 0;
      if (g.kind == EquilibriumKind::Competitive) {
        ++scaled;
        const double xi = std::pow(10.0, -3.0 + 6.0 * u());
        scaled_bad += scaled_game_check(small, s, nu, xi) ? 0 : 1;
      }
    }
    checks.push_back({"class_game_verifies", bad == 0,
                      std::to_string(bad) + " unverified of 50 (" + std::to_string(nash) + " via Nash fallback)"});
    checks.push_back({"scaled_game", scaled_bad == 0,
                      std::to_string(scaled_bad) + " failures of " + std::to_string(scaled)});

    int enum_bad = 0, with_nash = 0;
    for (int k = 0; k < 20; ++k) {
      PopulationSpec spec;
      spec.n = 1 + static_cast<int>(rng() % 8);
      spec.seed = rng();
      const auto small = generate_population(spec);
      const IspStrategy s{u(), u()};
      const double nu = u() * 1.5 * saturation_capacity(small);
      const auto parts = enumerate_nash_partitions(small, s, nu);
      with_nash += parts.empty() ? 0 : 1;
      for (const auto& p : parts) enum_bad += verify_nash(small, s, nu, p) ? 0 : 1;
    }
    checks.push_back({"nash_enumeration", enum_bad == 0,
                      std::to_string(with_nash) + "/20 instances with a pure equilibrium; " +
                          std::to_string(enum_bad) + " unverified"});
  }

  {
    const std::vector<double> kappas = linear_grid(0.0, 1.0, 0.25);
    int bad = 0;
    double worst = 0.0;
    for (double c : {0.2, 0.5}) {
      const auto r = dominance_check(cps, c, kappas, 150.0, threads);
      bad += r.passed() ? 0 : 1;
      worst = std::max(worst, r.worst_gap);
    }
    checks.push_back({"kappa_one_dominates", bad == 0, "worst gap " + fmt(worst)});
  }

  {
    const std::vector<IspProfile> isps{{0, 0.3, {1.0, 0.3}}, {1, 0.7, {1.0, 0.3}}};
    const auto eq = solve_market_split(isps, 1.0, 150.0, cps);
    const auto chk = homogeneous_equilibrium_check(isps, 1.0, 150.0, cps);
    const double dev = std::max(std::abs(eq.shares[0] - 0.3), std::abs(eq.shares[1] - 0.7));
    checks.push_back({"proportional_split", chk.passed && dev <= 1e-9,
                      "share deviation " + fmt(dev) + "; surplus gap " + fmt(chk.worst_phi_gap)});
  }
  return checks;
}

int run_validate(const ScenarioConfig& cfg, std::span<const ContentProvider> cps, Output& out, json& summary,
                 std::ostream& log) {
  const auto checks = validation_suite(cps, cfg.seed, cfg.threads);
  bool all = true;
  summary = json::array();
  for (const auto& c : checks) {
    char line[160];
    std::snprintf(line, sizeof line, "%-22s %s  %s\n", c.name.c_str(), c.passed ? "PASS" : "FAIL", c.detail.c_str());
    log << line;
    all = all && c.passed;
    summary.push_back({{"check", c.name}, {"passed", c.passed}});
  }
  out.write("validate.csv", [&](std::ostream& os) {
    csv::Writer w(os);
    w.header({"check", "passed", "detail"});
    for (const auto& c : checks) {
      w.field(c.name).field(c.passed).field(c.detail);
      w.end_row();
    }
  });
  return all ? 0 : 1;
}

}  // namespace

RunResult run(const ScenarioConfig& cfg, std::ostream& log) {
  validate_config(cfg);
  const auto start = std::chrono::steady_clock::now();
  Output out(cfg.output_path);
  const auto cps = load_population(cfg);
  out.write("population.csv", [&](std::ostream& os) { write_population_csv(os, cps); });

  json summary;
  int code = 0;
  switch (cfg.experiment) {
    case Experiment::RateEq:
      code = run_rate_eq(cfg, cps, out, summary);
      break;
    case Experiment::CpGame:
      code = run_cp_game(cfg, cps, out, summary, log);
      break;
    case Experiment::MonopolySweep:
      code = run_sweep(cfg, cps, out, summary);
      break;
    case Experiment::Duopoly:
      code = run_best_response(cfg, cps, out, summary, "duopoly");
      break;
    case Experiment::BestResponse:
      code = run_best_response(cfg, cps, out, summary, "best_response");
      break;
    case Experiment::Oligopoly:
      code = run_oligopoly(cfg, cps, out, summary);
      break;
    case Experiment::Validate:
      code = run_validate(cfg, cps, out, summary, log);
      break;
  }

  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  json manifest = {
      {"experiment", to_string(cfg.experiment)},
      {"seed", cfg.seed},
      {"threads", effective_threads(cfg.threads)},
      {"config", json::parse(config_to_json(cfg))},
      {"versions",
       {{"pubopt", kVersion},
        {"compiler", __VERSION__},
        {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                              std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                              std::to_string(NLOHMANN_JSON_VERSION_PATCH)}}},
      {"wall_time_seconds", wall},
      {"exit_code", code},
      {"files", out.files},
      {"summary", summary},
  };
  const fs::path mpath = out.dir() / "manifest.json";
  std::ofstream mf(mpath, std::ios::binary);
  if (!mf) throw ValidationError("cannot write '" + mpath.string() + "'");
  mf << manifest.dump(2) << "\n";

  RunResult r;
  r.exit_code = code;
  r.files = out.names;
  r.files.push_back(mpath.string());
  return r;
}

}  // namespace pubopt
