#pragma once

// Second-stage CP class choice for a fixed ISP strategy: throughput-taking
// (competitive) equilibria by sequential best response, and exhaustive Nash
// enumeration for small CP sets.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "pubopt/allocation.hpp"
#include "pubopt/errors.hpp"
#include "pubopt/fair_share.hpp"

namespace pubopt {

/// kappa: premium share of capacity; c: premium price per unit traffic.
struct IspStrategy {
  double kappa = 0.0;
  double c = 0.0;

  void validate() const;
  static constexpr IspStrategy public_option() { return {0.0, 0.0}; }

  friend bool operator==(const IspStrategy&, const IspStrategy&) = default;
  friend auto operator<=>(const IspStrategy&, const IspStrategy&) = default;
};

/// CP ids in the ordinary and premium classes, each sorted ascending.
struct Partition {
  std::vector<int> ordinary;
  std::vector<int> premium;

  /// Throws ValidationError unless the two sets split `cps` exactly.
  void validate(std::span<const ContentProvider> cps) const;
  bool is_premium(int id) const;

  friend bool operator==(const Partition&, const Partition&) = default;
};

/// Carries the partition at the point the solver gave up and the CPs that
/// kept switching.
class NonConvergenceError : public SolverError {
 public:
  NonConvergenceError(const std::string& what, Partition last, std::vector<int> oscillating)
      : SolverError(what), last_(std::move(last)), oscillating_(std::move(oscillating)) {}
  const Partition& last_partition() const { return last_; }
  const std::vector<int>& oscillating() const { return oscillating_; }

 private:
  Partition last_;
  std::vector<int> oscillating_;
};

/// True when (v - c) rho_p beats v rho_o by more than the tie tolerance
/// 1e-9 max(1, |u|). Ties go to the ordinary class.
bool prefers_premium(double v, double c, double rho_o, double rho_p);

/// Throughput-taking estimate for a CP entering a class. With max-min the
/// entrant expects min(theta_hat, max achieved theta in the class); for an
/// empty class it gets the exact solo equilibrium at class_nu.
double estimate_rho(const ContentProvider& cp, const RateEquilibrium& class_eq, double class_nu);

enum class EquilibriumKind { Competitive, Nash };

/// CompetitiveOnly surfaces a best-response cycle as NonConvergenceError.
/// CompetitiveThenNash gives the competitive schedule 64 rounds; on a cycle
/// or when the budget runs out it continues from the current partition with
/// exact (Nash) deviation payoffs. Finite CP sets often have no
/// throughput-taking equilibrium at all, while a pure Nash one is found.
enum class GamePolicy { CompetitiveOnly, CompetitiveThenNash };

/// Per-position result of a class-choice solve on a CpTable.
struct GameState {
  std::vector<char> premium;  ///< 1 if the CP at this position is in P
  double level_o = 0.0;       ///< fair-share level of the ordinary class
  double level_p = 0.0;       ///< fair-share level of the premium class
  int rounds = 0;
  EquilibriumKind kind = EquilibriumKind::Competitive;
};

/// Competitive equilibrium by sequential best response: CPs visited by
/// descending v (ties by id), starting all-ordinary, both classes re-solved
/// after each switch, until a full round has no switch. kappa = 0 yields
/// (N, {}); kappa = 1 yields P = {i : v_i > c}. Throws NonConvergenceError
/// on a detected cycle or after 100 N rounds.
GameState solve_competitive(const CpTable& t, const IspStrategy& s, double nu);

/// solve_competitive, optionally followed by the Nash fallback. Throws
/// NonConvergenceError if the fallback cycles too.
GameState solve_class_game(const CpTable& t, const IspStrategy& s, double nu,
                           GamePolicy policy = GamePolicy::CompetitiveThenNash);

Partition to_partition(const CpTable& t, const std::vector<char>& premium);

Partition solve_competitive_partition(std::span<const ContentProvider> cps, const IspStrategy& s,
                                      double nu);

/// Re-checks the competitive inequalities for every CP (or the kappa
/// convention when kappa is 0 or 1).
bool verify_competitive(std::span<const ContentProvider> cps, const IspStrategy& s, double nu,
                        const Partition& p);

/// Re-checks the Nash inequalities with exact re-solves of the deviated
/// class for every CP.
bool verify_nash(std::span<const ContentProvider> cps, const IspStrategy& s, double nu,
                 const Partition& p);

/// All pure Nash partitions, in increasing premium-bitmask order. Refuses
/// (ValidationError) more than 20 CPs.
std::vector<Partition> enumerate_nash_partitions(std::span<const ContentProvider> cps,
                                                 const IspStrategy& s, double nu);

/// Solves the game at (M=1, mu=nu) with the fallback policy and checks the
/// same partition is still an equilibrium of the same kind at (xi, xi nu).
bool scaled_game_check(std::span<const ContentProvider> cps, const IspStrategy& s, double nu,
                       double xi);

/// CSV `cp_id,class` with class O or P, rows in CP id order.
void write_partition_csv(std::ostream& out, const Partition& p);

}  // namespace pubopt
