#pragma once

// Rate allocation: the max-min rate equilibrium and an axiom checker that
// works against any mechanism.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pubopt/population.hpp"

namespace pubopt {

/// (M, mu, N): consumer count, bottleneck capacity and the CP set.
struct SystemInstance {
  double m = 1.0;
  double mu = 0.0;
  std::vector<ContentProvider> cps;

  double nu() const { return mu / m; }
  void validate() const;
};

/// Rate equilibrium of a system. Vectors are aligned with the input CP
/// order; `ids` carries the CP ids.
struct RateEquilibrium {
  std::vector<int> ids;
  std::vector<double> theta;
  std::vector<double> lambda;
  double aggregate = 0.0;
  std::optional<double> fair_share_cap;  ///< theta*, set when capacity binds

  double theta_of(int id) const;
  double lambda_of(int id) const;
};

/// lambda_hat_i = alpha_i M theta_hat_i keyed by id.
std::map<int, double> unconstrained_rates(const SystemInstance& sys);

/// Max-min fair rate equilibrium. Throws ValidationError on invalid input.
RateEquilibrium solve_rate_equilibrium(const SystemInstance& sys);

/// rho = d(theta) theta. Throws DomainError outside [0, theta_hat].
double per_capita_throughput(const ContentProvider& cp, double theta);

/// CSV `cp_id,theta,lambda,demand`; `cps` must be the solved system's CPs.
void write_rate_equilibrium_csv(std::ostream& out, const RateEquilibrium& eq,
                                std::span<const ContentProvider> cps);

using RateMechanism = std::function<RateEquilibrium(const SystemInstance&)>;

struct AxiomReport {
  int trials = 0;
  /// Index 0..3: bounded throughput, work conservation, monotone in
  /// capacity, scale independence.
  int violations[4] = {0, 0, 0, 0};
  double worst[4] = {0.0, 0.0, 0.0, 0.0};
  double tolerance = 1e-8;

  int total_violations() const { return violations[0] + violations[1] + violations[2] + violations[3]; }
  bool passed() const { return total_violations() == 0; }
};

/// Random systems (N <= 50, M log-uniform, nu up to 1.5x saturation):
/// checks theta <= theta_hat, aggregate == min(mu, sum lambda_hat) per
/// capita, theta(mu1) <= theta(mu2) for mu1 < mu2, and
/// theta(M, mu) == theta(xi M, xi mu) for xi log-uniform in [1e-3, 1e3].
/// A check counts as violated when its error exceeds `tolerance`; worst[]
/// records the largest error seen regardless.
AxiomReport verify_axioms(const RateMechanism& mechanism, int trials, std::uint64_t seed,
                          double tolerance = 1e-8);

/// The shipped mechanism as a RateMechanism.
RateMechanism max_min_mechanism();

}  // namespace pubopt
