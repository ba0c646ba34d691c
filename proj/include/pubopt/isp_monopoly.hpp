#pragma once

// Single-ISP strategy analysis: (kappa, c, nu) sweeps, revenue dominance of
// kappa = 1, pricing-regime labels and the downward-gap metric.

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "pubopt/cp_game.hpp"
#include "pubopt/welfare.hpp"

namespace pubopt {

struct SweepRecord {
  double kappa = 0.0;
  double c = 0.0;
  double nu = 0.0;
  double phi = 0.0;
  double psi = 0.0;
  int premium_count = 0;
  double premium_util = 1.0;   ///< lambda_P / (kappa mu); 1 when kappa = 0
  double ordinary_util = 1.0;  ///< lambda_O / ((1-kappa) mu); 1 when kappa = 1
  bool ok = true;
  std::string error;  ///< solver message when !ok
};

/// One grid point. Never throws for solver failures; they land in `error`.
SweepRecord sweep_point(const CpTable& t, const IspStrategy& s, double nu);

/// Every (kappa, c, nu) combination, ordered by (kappa, c, nu). Grids must
/// be non-empty and ascending. Points run concurrently on `threads`
/// workers (0 = OpenMP default); the output does not depend on it.
std::vector<SweepRecord> monopoly_sweep(std::span<const ContentProvider> cps,
                                        std::span<const double> kappa_grid,
                                        std::span<const double> c_grid,
                                        std::span<const double> nu_grid, int threads = 0);

/// Same result computed in a plain loop.
std::vector<SweepRecord> monopoly_sweep_serial(std::span<const ContentProvider> cps,
                                               std::span<const double> kappa_grid,
                                               std::span<const double> c_grid,
                                               std::span<const double> nu_grid);

struct DominanceReport {
  struct Violation {
    double kappa;
    double gap;  ///< Psi(kappa, c) - Psi(1, c)
  };
  /// kappa < kappa' with P(kappa) a subset of P(kappa') but
  /// Psi(kappa) > Psi(kappa') + tolerance.
  struct SubsetFlag {
    double kappa;
    double kappa_prime;
    double gap;
  };
  double c = 0.0;
  double nu = 0.0;
  double psi_full = 0.0;  ///< Psi(1, c)
  double worst_gap = 0.0;
  std::vector<Violation> violations;
  std::vector<SubsetFlag> subset_flags;
  int failed_points = 0;

  bool passed() const { return violations.empty() && failed_points == 0; }
};

/// Checks Psi(1, c) >= Psi(kappa, c) - 1e-9 for every kappa in the grid.
DominanceReport dominance_check(std::span<const ContentProvider> cps, double c,
                                std::span<const double> kappa_grid, double nu, int threads = 0);

/// Largest downward gap max_{i<j} (phi[i] - phi[j]), floored at 0.
double epsilon_of_curve(std::span<const double> phi);

/// Grid approximation of the downward-gap metric of Phi(nu) under a fixed
/// strategy. nu_grid must be ascending with at least two points.
double epsilon_metric(std::span<const ContentProvider> cps, const IspStrategy& s,
                      std::span<const double> nu_grid, int threads = 0);

enum class Regime { FullUtilization, UnderUtilized, Collapsed, NotApplicable, Failed };

std::string to_string(Regime r);

/// Labels a price series with fixed (kappa, nu), records ascending in c.
/// Collapsed: P empty, or past the Psi maximum once Psi <= 0.5 max Psi
/// (and it stays collapsed). FullUtilization: premium utilization
/// >= 1 - 1e-9. Otherwise UnderUtilized. kappa = 0 rows are NotApplicable.
std::vector<Regime> classify_regimes(std::span<const SweepRecord> series);

/// Labels each (kappa, nu) series of a full sweep; same order as `records`.
std::vector<Regime> classify_sweep(std::span<const SweepRecord> records);

/// `kappa,c,nu,phi,psi,premium_count,premium_util,ordinary_util,regime`.
void write_sweep_csv(std::ostream& out, std::span<const SweepRecord> records,
                     std::span<const Regime> regimes);

/// n points log-spaced over [lo, hi], endpoints exact.
std::vector<double> log_grid(double lo, double hi, int n);
/// lo, lo+step, ... up to hi (inclusive within half a step), computed as
/// lo + k step rounded to 12 decimals.
std::vector<double> linear_grid(double lo, double hi, double step);

}  // namespace pubopt
