#pragma once

// Column-oriented max-min fair-share kernel shared by the rate solver, the
// CP class game and the benchmarks.

#include <span>
#include <vector>

#include "pubopt/population.hpp"

namespace pubopt {

/// Structure-of-arrays copy of a CP list. Indices into the columns are
/// positions in the original list, not CP ids.
struct CpTable {
  std::vector<int> id;
  std::vector<double> alpha, theta_hat, beta, v, phi;

  CpTable() = default;
  explicit CpTable(std::span<const ContentProvider> cps);
  std::size_t size() const { return id.size(); }
};

/// Max-min fair-share level L of the class `members` at per-capita capacity
/// nu: every member receives min(theta_hat_j, L). L is the largest achieved
/// throughput in the class, i.e. min(theta*, max theta_hat). Returns 0 for
/// an empty class or nu <= 0, and max theta_hat when nu covers every
/// member unconstrained.
///
/// `hint` > 0 seeds the Newton iteration; the result is a deterministic
/// function of (members in order, nu, hint).
double fair_share_level(const CpTable& t, std::span<const int> members, double nu,
                        double hint = -1.0);

/// Same, but also reports the iteration count (benchmarks, tests).
double fair_share_level(const CpTable& t, std::span<const int> members, double nu, double hint,
                        int& iterations);

/// Class load sum alpha_j rho_j at level L (per capita).
double class_load(const CpTable& t, std::span<const int> members, double level);

/// Class consumer surplus sum phi_j alpha_j rho_j at level L (per capita).
double class_phi(const CpTable& t, std::span<const int> members, double level);

/// rho of member j at class level L.
inline double rho_at_level(const CpTable& t, int j, double level) {
  double th = t.theta_hat[j] < level ? t.theta_hat[j] : level;
  return delivered(t.theta_hat[j], t.beta[j], th);
}

}  // namespace pubopt
