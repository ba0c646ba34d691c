#pragma once

// Consumer surplus, ISP surplus and CP utilities.

#include <map>
#include <span>
#include <vector>

#include "pubopt/cp_game.hpp"
#include "pubopt/fair_share.hpp"

namespace pubopt {

struct SurplusReport {
  double phi = 0.0;  ///< per-capita consumer surplus
  double psi = 0.0;  ///< per-capita ISP surplus
  double cs = 0.0;   ///< M phi
  double is_ = 0.0;  ///< M psi
  std::map<int, double> per_cp_utility;
};

/// Single-class Phi(nu, N) = sum phi_i alpha_i d_i(theta_i) theta_i.
double consumer_surplus_per_capita(double nu, std::span<const ContentProvider> cps);

/// Both classes evaluated at the given partition: ordinary at (1-kappa) nu,
/// premium at kappa nu. Utilities are v lambda (ordinary) and
/// (v - c) lambda (premium) with M consumers.
SurplusReport two_class_surplus(double nu, const IspStrategy& s, const Partition& p,
                                std::span<const ContentProvider> cps, double m = 1.0);

/// Everything a sweep needs from one (strategy, nu) point, per capita.
struct StrategyOutcome {
  std::vector<char> premium;
  double level_o = 0.0;
  double level_p = 0.0;
  double load_o = 0.0;  ///< ordinary-class carried traffic
  double load_p = 0.0;  ///< premium-class carried traffic
  double phi = 0.0;
  double psi = 0.0;
  int premium_count = 0;
  EquilibriumKind kind = EquilibriumKind::Competitive;
};

/// Solves the class game at (strategy, nu) and evaluates surplus.
StrategyOutcome evaluate_strategy(const CpTable& t, const IspStrategy& s, double nu,
                                  GamePolicy policy = GamePolicy::CompetitiveThenNash);

/// Surplus of an already-solved game state.
StrategyOutcome evaluate_state(const CpTable& t, const IspStrategy& s, GameState state);

}  // namespace pubopt
