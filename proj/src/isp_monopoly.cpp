#include "pubopt/isp_monopoly.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "pubopt/csv.hpp"
#include "pubopt/parallel.hpp"

namespace pubopt {

SweepRecord sweep_point(const CpTable& t, const IspStrategy& s, double nu) {
  SweepRecord r;
  r.kappa = s.kappa;
  r.c = s.c;
  r.nu = nu;
  try {
    const StrategyOutcome o = evaluate_strategy(t, s, nu);
    r.phi = o.phi;
    r.psi = o.psi;
    r.premium_count = o.premium_count;
    const double cap_p = s.kappa * nu;
    const double cap_o = (1.0 - s.kappa) * nu;
    r.premium_util = cap_p > 0.0 ? o.load_p / cap_p : 1.0;
    r.ordinary_util = cap_o > 0.0 ? o.load_o / cap_o : 1.0;
  } catch (const std::exception& e) {
    r.ok = false;
    r.error = e.what();
  }
  return r;
}

namespace {

void check_grid(std::span<const double> g, const char* name) {
  if (g.empty()) throw ValidationError(std::string(name) + " grid is empty");
  for (std::size_t i = 1; i < g.size(); ++i)
    if (!(g[i] > g[i - 1])) throw ValidationError(std::string(name) + " grid must be strictly ascending");
}

struct SweepPlan {
  CpTable table;
  std::vector<IspStrategy> strategies;
  std::vector<double> nus;
};

SweepPlan plan(std::span<const ContentProvider> cps, std::span<const double> kg,
               std::span<const double> cg, std::span<const double> ng) {
  check_grid(kg, "kappa");
  check_grid(cg, "c");
  check_grid(ng, "nu");
  for (const auto& cp : cps) cp.validate();
  SweepPlan p{CpTable(cps), {}, {}};
  for (double k : kg)
    for (double c : cg)
      for (double nu : ng) {
        IspStrategy s{k, c};
        s.validate();
        if (!(nu >= 0.0)) throw ValidationError("nu grid must be non-negative");
        p.strategies.push_back(s);
        p.nus.push_back(nu);
      }
  return p;
}

}  // namespace

std::vector<SweepRecord> monopoly_sweep(std::span<const ContentProvider> cps,
                                        std::span<const double> kappa_grid,
                                        std::span<const double> c_grid,
                                        std::span<const double> nu_grid, int threads) {
  const SweepPlan p = plan(cps, kappa_grid, c_grid, nu_grid);
  std::vector<SweepRecord> out(p.nus.size());
  parallel_for(out.size(), threads,
               [&](std::size_t i) { out[i] = sweep_point(p.table, p.strategies[i], p.nus[i]); });
  return out;
}

std::vector<SweepRecord> monopoly_sweep_serial(std::span<const ContentProvider> cps,
                                               std::span<const double> kappa_grid,
                                               std::span<const double> c_grid,
                                               std::span<const double> nu_grid) {
  const SweepPlan p = plan(cps, kappa_grid, c_grid, nu_grid);
  std::vector<SweepRecord> out(p.nus.size());
  serial_for(out.size(), [&](std::size_t i) { out[i] = sweep_point(p.table, p.strategies[i], p.nus[i]); });
  return out;
}

DominanceReport dominance_check(std::span<const ContentProvider> cps, double c,
                                std::span<const double> kappa_grid, double nu, int threads) {
  constexpr double tol = 1e-9;
  for (const auto& cp : cps) cp.validate();
  const CpTable t(cps);
  const std::size_t n = kappa_grid.size();
  std::vector<StrategyOutcome> outs(n + 1);
  std::vector<char> failed(n + 1, 0);
  parallel_for(n + 1, threads, [&](std::size_t i) {
    const double k = i < n ? kappa_grid[i] : 1.0;
    try {
      outs[i] = evaluate_strategy(t, IspStrategy{k, c}, nu);
    } catch (const SolverError&) {
      failed[i] = 1;
    }
  });

  DominanceReport r;
  r.c = c;
  r.nu = nu;
  if (failed[n]) {
    r.failed_points = 1;
    return r;
  }
  r.psi_full = outs[n].psi;
  for (std::size_t i = 0; i < n; ++i) {
    if (failed[i]) {
      ++r.failed_points;
      continue;
    }
    const double gap = outs[i].psi - r.psi_full;
    r.worst_gap = std::max(r.worst_gap, gap);
    if (gap > tol) r.violations.push_back({kappa_grid[i], gap});
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (failed[i] || failed[j] || !(kappa_grid[i] < kappa_grid[j])) continue;
      bool subset = true;
      for (std::size_t q = 0; q < t.size() && subset; ++q)
        if (outs[i].premium[q] && !outs[j].premium[q]) subset = false;
      const double gap = outs[i].psi - outs[j].psi;
      if (subset && gap > tol) r.subset_flags.push_back({kappa_grid[i], kappa_grid[j], gap});
    }
  }
  return r;
}

double epsilon_of_curve(std::span<const double> phi) {
  double best = 0.0;
  double running = -INFINITY;
  for (double p : phi) {
    running = std::max(running, p);
    best = std::max(best, running - p);
  }
  return best;
}

double epsilon_metric(std::span<const ContentProvider> cps, const IspStrategy& s,
                      std::span<const double> nu_grid, int threads) {
  if (nu_grid.size() < 2) throw ValidationError("epsilon metric needs at least two nu points");
  check_grid(nu_grid, "nu");
  s.validate();
  for (const auto& cp : cps) cp.validate();
  const CpTable t(cps);
  std::vector<double> phi(nu_grid.size());
  parallel_for(phi.size(), threads, [&](std::size_t i) { phi[i] = evaluate_strategy(t, s, nu_grid[i]).phi; });
  return epsilon_of_curve(phi);
}

std::string to_string(Regime r) {
  switch (r) {
    case Regime::FullUtilization: return "FullUtilization";
    case Regime::UnderUtilized: return "UnderUtilized";
    case Regime::Collapsed: return "Collapsed";
    case Regime::NotApplicable: return "NA";
    case Regime::Failed: return "Failed";
  }
  return "?";
}

std::vector<Regime> classify_regimes(std::span<const SweepRecord> series) {
  std::vector<Regime> out(series.size(), Regime::NotApplicable);
  double psi_max = -INFINITY;
  std::size_t arg = 0;
  for (std::size_t i = 0; i < series.size(); ++i) {
    if (series[i].ok && series[i].psi > psi_max) {
      psi_max = series[i].psi;
      arg = i;
    }
  }
  bool collapsed = false;
  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& r = series[i];
    if (!r.ok) {
      out[i] = Regime::Failed;
      continue;
    }
    if (r.kappa <= 0.0) continue;
    if (i > arg && r.psi <= 0.5 * psi_max) collapsed = true;
    if (collapsed || r.premium_count == 0) {
      out[i] = Regime::Collapsed;
    } else if (r.premium_util >= 1.0 - 1e-9) {
      out[i] = Regime::FullUtilization;
    } else {
      out[i] = Regime::UnderUtilized;
    }
  }
  return out;
}

std::vector<Regime> classify_sweep(std::span<const SweepRecord> records) {
  std::vector<Regime> out(records.size(), Regime::NotApplicable);
  // Group indices by (kappa, nu); records within a group keep c order.
  std::vector<std::size_t> idx(records.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (records[a].kappa != records[b].kappa) return records[a].kappa < records[b].kappa;
    if (records[a].nu != records[b].nu) return records[a].nu < records[b].nu;
    return records[a].c < records[b].c;
  });
  std::size_t start = 0;
  while (start < idx.size()) {
    std::size_t end = start;
    std::vector<SweepRecord> series;
    while (end < idx.size() && records[idx[end]].kappa == records[idx[start]].kappa &&
           records[idx[end]].nu == records[idx[start]].nu) {
      series.push_back(records[idx[end]]);
      ++end;
    }
    const auto labels = classify_regimes(series);
    for (std::size_t k = 0; k < labels.size(); ++k) out[idx[start + k]] = labels[k];
    start = end;
  }
  return out;
}

void write_sweep_csv(std::ostream& out, std::span<const SweepRecord> records,
                     std::span<const Regime> regimes) {
  csv::Writer w(out);
  w.header({"kappa", "c", "nu", "phi", "psi", "premium_count", "premium_util", "ordinary_util", "regime"});
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    w.field(r.kappa).field(r.c).field(r.nu);
    if (r.ok) {
      w.field(r.phi).field(r.psi).field(r.premium_count).field(r.premium_util).field(r.ordinary_util);
    } else {
      for (int k = 0; k < 5; ++k) w.field(std::string_view("nan"));
    }
    w.field(std::string_view(to_string(i < regimes.size() ? regimes[i] : Regime::NotApplicable)));
    w.end_row();
  }
}

std::vector<double> log_grid(double lo, double hi, int n) {
  if (n < 1 || !(lo > 0.0) || !(hi >= lo)) throw ValidationError("log grid needs 0 < lo <= hi and n >= 1");
  std::vector<double> g(static_cast<std::size_t>(n));
  if (n == 1) {
    g[0] = lo;
    return g;
  }
  const double a = std::log(lo), b = std::log(hi);
  for (int i = 0; i < n; ++i) g[static_cast<std::size_t>(i)] = std::exp(a + (b - a) * i / (n - 1));
  g.front() = lo;
  g.back() = hi;
  return g;
}

std::vector<double> linear_grid(double lo, double hi, double step) {
  if (!(step > 0.0) || !(hi >= lo)) throw ValidationError("linear grid needs step > 0 and hi >= lo");
  std::vector<double> g;
  for (long k = 0;; ++k) {
    double x = lo + static_cast<double>(k) * step;
    if (x > hi + 0.5 * step) break;
    x = std::round(x * 1e12) / 1e12;
    g.push_back(std::min(x, hi));
  }
  return g;
}

}  // namespace pubopt
