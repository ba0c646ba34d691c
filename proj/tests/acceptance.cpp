// Acceptance checks, one per criterion. `acceptance N` runs criterion N,
// no argument runs all of them. Each prints one PASS/FAIL line; the exit
// status is nonzero when any selected criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "pubopt/isp_monopoly.hpp"
#include "pubopt/isp_multi.hpp"
#include "pubopt/scenario.hpp"

using namespace pubopt;
namespace fs = std::filesystem;

namespace {

// Tolerances, pinned.
constexpr double kAxiomTol = 1e-8;
constexpr double kScaleTol = 1e-12;
constexpr double kOracleRelTol = 1e-6;
constexpr double kMonotoneSlack = 1e-12;
constexpr double kDominanceTol = 1e-9;
constexpr double kRevenueRelTol = 1e-9;
constexpr double kShareTol = 1e-9;
constexpr double kPhiEqualTol = 1e-12;
constexpr double kEqualizationTol = 1e-6;
constexpr double kDuopolyShareCap = 0.6;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::vector<ContentProvider> population(PhiMode mode) {
  return generate_population(default_population_spec(mode, 1));
}

double log_uniform(std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(std::log(lo), std::log(hi));
  return std::exp(u(rng));
}

double saturation(const std::vector<ContentProvider>& cps) { return saturation_capacity(cps); }

// 1. Axioms on random systems.
Outcome axioms() {
  const auto r = verify_axioms(max_min_mechanism(), 500, 2024, kAxiomTol);
  const double worst = std::max({r.worst[0], r.worst[1], r.worst[2]});
  const bool ok = r.passed() && worst <= kAxiomTol && r.worst[3] <= kScaleTol;
  return {ok, fmt("500 systems; violations %d/%d/%d/%d; worst axioms1-3 %.2e; scale %.2e",
                  r.violations[0], r.violations[1], r.violations[2], r.violations[3], worst, r.worst[3])};
}

// 2. Fair-share solver against the dense-scan oracle.
Outcome oracle_equivalence() {
  std::mt19937_64 rng(77);
  double worst = 0.0;
  int bad = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 50);
    const auto cps = oracle::random_cps(rng, n);
    double sat = 0.0;
    for (const auto& cp : cps) sat += cp.alpha * cp.theta_hat;
    const double nu = sat * std::uniform_real_distribution<double>(0.02, 0.98)(rng);
    const auto eq = solve_rate_equilibrium({1.0, nu, cps});
    const auto ref = oracle::theta_profile(cps, nu);
    for (std::size_t i = 0; i < cps.size(); ++i) {
      const double rel = std::abs(eq.theta[i] - ref[i]) / std::max(ref[i], 1e-300);
      worst = std::max(worst, rel);
      if (rel > kOracleRelTol) ++bad;
    }
  }
  return {bad == 0, fmt("200 constrained systems; worst relative theta error %.2e; %d CPs over tolerance", worst, bad)};
}

// 3. Single-class surplus increases with capacity.
Outcome phi_monotone(PhiMode mode) {
  const auto cps = population(mode);
  const double sat = saturation(cps);
  const auto grid = log_grid(1.0, 500.0, 200);
  double prev = consumer_surplus_per_capita(grid[0], cps);
  int drops = 0, flat = 0;
  for (std::size_t i = 1; i < grid.size(); ++i) {
    const double phi = consumer_surplus_per_capita(grid[i], cps);
    if (phi < prev - kMonotoneSlack) ++drops;
    if (grid[i] < sat && !(phi > prev)) ++flat;
    prev = phi;
  }
  return {drops == 0 && flat == 0,
          fmt("200-point grid; saturation %.4f; decreases %d; non-increasing steps below saturation %d", sat,
              drops, flat)};
}

// 4. Returned competitive partitions verify; scaled game holds.
Outcome competitive_consistency() {
  std::mt19937_64 rng(404);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int returned = 0, verified = 0, none = 0, scaled_ok = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 30);
    const auto cps = oracle::random_cps(rng, n);
    double sat = 0.0;
    for (const auto& cp : cps) sat += cp.alpha * cp.theta_hat;
    const IspStrategy s{u(rng), u(rng)};
    const double nu = sat * std::uniform_real_distribution<double>(0.05, 1.2)(rng);
    const double xi = log_uniform(rng, 1e-3, 1e3);
    try {
      const auto p = solve_competitive_partition(cps, s, nu);
      ++returned;
      if (verify_competitive(cps, s, nu, p)) ++verified;
    } catch (const NonConvergenceError&) {
      ++none;
    }
    if (scaled_game_check(cps, s, nu, xi)) ++scaled_ok;
  }
  return {verified == returned && scaled_ok == 100,
          fmt("100 instances; %d partitions returned, %d verify; %d without a competitive equilibrium "
              "(cycle reported); scaled-game check %d/100",
              returned, verified, none, scaled_ok)};
}

// 5. Exhaustive Nash enumeration.
Outcome nash_oracle() {
  std::mt19937_64 rng(505);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int with_eq = 0, bad = 0, total_eq = 0, oracle_agree = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 10);
    auto cps = oracle::random_cps(rng, n);
    double sat = 0.0;
    for (const auto& cp : cps) sat += cp.alpha * cp.theta_hat;
    const IspStrategy s{u(rng), u(rng)};
    const double nu = sat * std::uniform_real_distribution<double>(0.05, 1.2)(rng);
    const auto eqs = enumerate_nash_partitions(cps, s, nu);
    if (!eqs.empty()) ++with_eq;
    total_eq += static_cast<int>(eqs.size());
    for (const auto& p : eqs)
      if (!verify_nash(cps, s, nu, p)) ++bad;
    // Independent brute force, reported only: near-ties can differ by slack.
    const auto masks = oracle::nash_masks(cps, s.kappa, s.c, nu, 1e-9);
    std::vector<std::uint32_t> got;
    for (const auto& p : eqs) {
      std::uint32_t m = 0;
      for (int id : p.premium) m |= 1u << id;
      got.push_back(m);
    }
    if (got == masks) ++oracle_agree;
  }
  return {bad == 0, fmt("50 instances; %d/50 (%.0f%%) have a pure Nash partition; %d partitions, %d fail "
                        "re-verification; brute-force set identical on %d/50",
                        with_eq, 100.0 * with_eq / 50.0, total_eq, bad, oracle_agree)};
}

// 6. Full premium capacity dominates in revenue.
Outcome dominance(PhiMode mode) {
  const auto cps = population(mode);
  const auto grid = linear_grid(0.0, 1.0, 0.1);
  int violations = 0, failed = 0, subset_flags = 0;
  double worst = 0.0;
  for (double nu : {20.0, 150.0, 200.0, 500.0})
    for (double c : grid) {
      const auto r = dominance_check(cps, c, grid, nu);
      violations += static_cast<int>(r.violations.size());
      failed += r.failed_points;
      subset_flags += static_cast<int>(r.subset_flags.size());
      worst = std::max(worst, r.worst_gap);
    }
  return {violations == 0 && failed == 0,
          fmt("484 points; violations %d; failed solves %d; worst Psi(kappa)-Psi(1) %.2e; subset-clause flags %d",
              violations, failed, worst, subset_flags)};
}

// 7. Pricing regimes at nu = 200.
Outcome regimes(PhiMode mode) {
  const auto cps = population(mode);
  const std::vector<double> k{1.0}, nu{200.0};
  const auto cg = linear_grid(0.0, 1.0, 0.02);
  const auto recs = monopoly_sweep(cps, k, cg, nu);
  const auto reg = classify_regimes(recs);
  bool order_ok = true, linear_ok = true, phi_ok = true, failed = false;
  int rank_prev = 0, n_full = 0, n_under = 0, n_coll = 0;
  std::size_t best = 0;
  for (std::size_t i = 0; i < recs.size(); ++i) {
    failed |= !recs[i].ok;
    const int rank = reg[i] == Regime::FullUtilization ? 0 : reg[i] == Regime::UnderUtilized ? 1 : 2;
    order_ok &= rank >= rank_prev && reg[i] != Regime::Failed;
    rank_prev = rank;
    n_full += rank == 0;
    n_under += rank == 1;
    n_coll += rank == 2;
    if (reg[i] == Regime::FullUtilization)
      linear_ok &= std::abs(recs[i].psi - recs[i].c * recs[i].nu) <= kRevenueRelTol * std::max(1.0, recs[i].psi);
    if (i > 0 && reg[i] == Regime::UnderUtilized && reg[i - 1] == Regime::UnderUtilized)
      phi_ok &= recs[i].phi < recs[i - 1].phi;
    if (recs[i].psi > recs[best].psi) best = i;
  }
  const double c_star = recs[best].c;
  const bool peak_ok = c_star >= 0.3 && c_star <= 0.6;
  const bool ok = !failed && order_ok && n_full > 0 && n_under > 0 && n_coll > 0 && linear_ok && phi_ok && peak_ok;
  return {ok, fmt("regime counts full/under/collapsed %d/%d/%d; ordered %s; Psi=c nu on full band %s; "
                  "Phi strictly decreasing on under band %s; Psi peak at c=%.2f",
                  n_full, n_under, n_coll, order_ok ? "yes" : "no", linear_ok ? "yes" : "no",
                  phi_ok ? "yes" : "no", c_star)};
}

// 8. Homogeneous strategies split the market by capacity.
Outcome homogeneous() {
  const auto cps = population(PhiMode::ProportionalToBeta);
  const std::vector<std::vector<double>> gammas{{0.5, 0.5}, {0.3, 0.7}, {0.2, 0.3, 0.5}};
  double worst_share = 0.0, worst_phi = 0.0;
  bool checks = true;
  for (IspStrategy s : {IspStrategy{0.5, 0.2}, IspStrategy::public_option(), IspStrategy{1.0, 0.4}})
    for (const auto& g : gammas) {
      std::vector<IspProfile> isps;
      for (std::size_t i = 0; i < g.size(); ++i) isps.push_back({static_cast<int>(i), g[i], s});
      const auto eq = solve_market_split(isps, 1.0, 150.0, cps);
      double lo = eq.phi_per_isp[0], hi = lo;
      for (std::size_t i = 0; i < g.size(); ++i) {
        worst_share = std::max(worst_share, std::abs(eq.shares[i] - g[i]));
        lo = std::min(lo, eq.phi_per_isp[i]);
        hi = std::max(hi, eq.phi_per_isp[i]);
      }
      worst_phi = std::max(worst_phi, (hi - lo) / std::max(1.0, hi));
      const auto chk = homogeneous_equilibrium_check(isps, 1.0, 150.0, cps);
      checks &= chk.passed;
      worst_phi = std::max(worst_phi, chk.worst_phi_gap);
    }
  return {worst_share <= kShareTol && worst_phi <= kPhiEqualTol && checks,
          fmt("3 strategies x 3 capacity splits at nu=150; worst |m-gamma| %.2e; worst Phi spread %.2e; "
              "direct checks %s",
              worst_share, worst_phi, checks ? "pass" : "fail")};
}

// 9. Duopoly against a Public Option.
Outcome duopoly() {
  const auto cps = population(PhiMode::ProportionalToBeta);
  const CpTable table(cps);
  const auto eps_grid = log_grid(1.0, 1000.0, 100);
  bool ok = true;
  std::string detail;
  for (double nu : {50.0, 150.0, 200.0}) {
    std::vector<IspProfile> isps{{0, 0.5, {1.0, 0.0}}, {1, 0.5, IspStrategy::public_option()}};
    // (a) kappa = 1 price sweep.
    const auto cg = linear_grid(0.0, 1.0, 0.02);
    const std::vector<double> k1{1.0};
    const auto a = best_response_search(isps, 0, k1, cg, 1.0, nu, cps, eps_grid);
    std::vector<double> m, util;
    for (const auto& p : a.points) {
      m.push_back(p.m_focal);
      util.push_back(sweep_point(table, p.strategy, p.eq.nu[0]).premium_util);
    }
    std::size_t drop = m.size();  // first price where premium capacity is no longer full
    for (std::size_t i = 0; i < util.size(); ++i)
      if (util[i] < 1.0 - 1e-9) {
        drop = i;
        break;
      }
    const std::size_t peak = static_cast<std::size_t>(std::max_element(m.begin(), m.end()) - m.begin());
    bool falls = drop > 0 && drop < m.size();
    for (std::size_t i = drop; falls && i < m.size(); ++i) falls &= m[i] <= m[i - 1] + kShareTol;
    const bool rises = m[peak] > m[0];
    const bool peak_in_band = peak < drop;
    const bool ends_lower = m.back() < m[peak];
    const bool shape = a.failed == 0 && rises && peak_in_band && falls && ends_lower;

    // (b), (c) on the (kappa, c) grid.
    const std::vector<double> kg{0.0, 0.25, 0.5, 0.75, 1.0};
    const auto cgrid = linear_grid(0.0, 1.0, 0.1);
    const auto b = best_response_search(isps, 0, kg, cgrid, 1.0, nu, cps, eps_grid);
    double max_m = 0.0, max_phi = 0.0;
    int unequal = 0;
    for (const auto& p : b.points) {
      max_m = std::max(max_m, p.m_focal);
      max_phi = std::max(max_phi, p.eq.phi_common);
      unequal += !p.eq.equalized;
    }
    const double phi_at_m = b.points[b.argmax_m].eq.phi_common;
    const bool cap_ok = max_m <= kDuopolyShareCap;
    const bool align_ok = phi_at_m >= max_phi - kEqualizationTol * std::max(1.0, max_phi);
    ok &= shape && cap_ok && align_ok && b.failed == 0;
    detail += fmt("[nu=%g: (a) m(0)=%.4f peak %.4f at c=%.2f, utilization drops at c=%.2f, m(1)=%.4f, "
                  "falls after drop %s -> %s; (b) max m %.4f; (c) Phi gap %.2e; non-equalized %d/55] ",
                  nu, m[0], m[peak], cg[peak], drop < cg.size() ? cg[drop] : NAN, m.back(), falls ? "yes" : "no",
                  shape ? "ok" : "FAIL", max_m, max_phi - phi_at_m, unequal);
  }
  return {ok, detail};
}

// 10. Epsilon/delta alignment for three ISPs.
Outcome alignment() {
  const auto cps = population(PhiMode::ProportionalToBeta);
  const auto eps_grid = log_grid(1.0, 1000.0, 100);
  const std::vector<double> kg{0.0, 0.25, 0.5, 0.75, 1.0};
  const auto cg = linear_grid(0.0, 1.0, 0.1);
  bool ok = true;
  std::string detail;
  for (double nu : {100.0, 150.0}) {
    std::vector<IspProfile> isps{{0, 0.4, {1.0, 0.0}}, {1, 0.3, IspStrategy::public_option()}, {2, 0.3, {0.5, 0.3}}};
    const auto r = best_response_search(isps, 0, kg, cg, 1.0, nu, cps, eps_grid);
    const bool eps_ok = r.phi_gap <= r.epsilon_others + kEqualizationTol;
    const bool delta_ok = r.m_gap <= r.delta + kEqualizationTol;
    ok &= eps_ok && delta_ok && r.failed == 0;
    detail += fmt("[nu=%g: Phi gap %.3e vs eps %.3e %s; m gap %.3e vs delta %.3e %s; failed %d] ", nu, r.phi_gap,
                  r.epsilon_others, eps_ok ? "ok" : "FAIL", r.m_gap, r.delta, delta_ok ? "ok" : "FAIL", r.failed);
  }
  return {ok, detail};
}

// 11. Independent phi draws.
Outcome nested_replication() {
  const auto a = phi_monotone(PhiMode::IndependentNested);
  const auto b = dominance(PhiMode::IndependentNested);
  const auto c = regimes(PhiMode::IndependentNested);
  return {a.pass && b.pass && c.pass, "[3: " + a.detail + "] [6: " + b.detail + "] [7: " + c.detail + "]"};
}

// 12. Byte-identical outputs across repeated runs and thread counts.
std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "pubopt_acceptance_determinism";
  fs::remove_all(root);
  std::vector<ScenarioConfig> cfgs;
  auto add = [&](Experiment e, auto tweak) {
    ScenarioConfig c = default_config(e);
    tweak(c);
    cfgs.push_back(c);
  };
  add(Experiment::RateEq, [](ScenarioConfig&) {});
  add(Experiment::CpGame, [](ScenarioConfig& c) { c.grids = {{0.5, 1.0}, {0.1, 0.4}, {60.0, 150.0}}; });
  add(Experiment::MonopolySweep, [](ScenarioConfig& c) {
    c.grids = {{0.0, 0.5, 1.0}, linear_grid(0.0, 1.0, 0.2), log_grid(1.0, 500.0, 12)};
  });
  add(Experiment::Duopoly, [](ScenarioConfig& c) { c.grids = {{0.0, 1.0}, {0.0, 0.3, 0.6}, {150.0}}; });
  add(Experiment::Oligopoly, [](ScenarioConfig&) {});
  add(Experiment::BestResponse, [](ScenarioConfig& c) { c.grids = {{0.5, 1.0}, {0.2, 0.5}, {150.0}}; });
  add(Experiment::Validate, [](ScenarioConfig&) {});
  int files = 0, diffs = 0;
  std::string which;
  std::ostringstream log;
  for (const auto& base : cfgs) {
    std::vector<fs::path> dirs;
    for (int threads : {1, 4})
      for (int rep = 0; rep < 2; ++rep) {
        ScenarioConfig c = base;
        c.threads = threads;
        c.output_path = (root / (to_string(c.experiment) + "_t" + std::to_string(threads) + "_" + std::to_string(rep))).string();
        run(c, log);
        dirs.push_back(c.output_path);
      }
    for (const auto& entry : fs::directory_iterator(dirs[0])) {
      if (entry.path().extension() != ".csv") continue;
      ++files;
      const std::string ref = slurp(entry.path());
      for (std::size_t d = 1; d < dirs.size(); ++d)
        if (slurp(dirs[d] / entry.path().filename()) != ref) {
          ++diffs;
          which += " " + to_string(base.experiment) + "/" + entry.path().filename().string();
        }
    }
  }
  fs::remove_all(root);
  return {diffs == 0 && files > 0, fmt("7 experiments x threads {1,4} x 2 runs; %d CSVs compared; %d differ", files, diffs) + which};
}

struct Criterion {
  int id;
  const char* name;
  double budget_s;
  std::function<Outcome()> body;
};

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> all{
      {1, "axiom suite", 10.0, axioms},
      {2, "oracle equivalence", 30.0, oracle_equivalence},
      {3, "surplus monotone in capacity", 10.0, [] { return phi_monotone(PhiMode::ProportionalToBeta); }},
      {4, "competitive self-consistency", 60.0, competitive_consistency},
      {5, "Nash enumeration", 60.0, nash_oracle},
      {6, "full-premium dominance", 300.0, [] { return dominance(PhiMode::ProportionalToBeta); }},
      {7, "monopoly pricing regimes", 120.0, [] { return regimes(PhiMode::ProportionalToBeta); }},
      {8, "homogeneous market split", 60.0, homogeneous},
      {9, "Public Option duopoly", 600.0, duopoly},
      {10, "epsilon/delta alignment", 600.0, alignment},
      {11, "independent phi replication", 10.0 + 300.0 + 120.0, nested_replication},
      {12, "determinism", 300.0, determinism},
  };
  return all;
}

bool run_one(const Criterion& c) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = c.body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool in_budget = secs < c.budget_s;
  const bool pass = o.pass && in_budget;
  std::cout << "criterion " << c.id << " (" << c.name << "): " << (pass ? "PASS" : "FAIL") << "  "
            << fmt("%.1fs of %.0fs budget%s", secs, c.budget_s, in_budget ? "" : " EXCEEDED") << "  " << o.detail
            << std::endl;
  return pass;
}

}  // namespace

int main(int argc, char** argv) {
  bool all_pass = true;
  if (argc > 1) {
    const int id = std::atoi(argv[1]);
    for (const auto& c : criteria())
      if (c.id == id) return run_one(c) ? 0 : 1;
    std::cerr << "unknown criterion " << argv[1] << "\n";
    return 2;
  }
  for (const auto& c : criteria()) all_pass &= run_one(c);
  return all_pass ? 0 : 1;
}
