#include "pubopt/welfare.hpp"

#include <numeric>

namespace pubopt {

double consumer_surplus_per_capita(double nu, std::span<const ContentProvider> cps) {
  if (!(nu >= 0.0)) throw ValidationError("consumer surplus: nu must be non-negative");
  for (const auto& cp : cps) cp.validate();
  CpTable t(cps);
  std::vector<int> all(t.size());
  std::iota(all.begin(), all.end(), 0);
  return class_phi(t, all, fair_share_level(t, all, nu));
}

SurplusReport two_class_surplus(double nu, const IspStrategy& s, const Partition& p,
                                std::span<const ContentProvider> cps, double m) {
  s.validate();
  if (!(nu >= 0.0)) throw ValidationError("two-class surplus: nu must be non-negative");
  if (!(m > 0.0)) throw ValidationError("two-class surplus: M must be positive");
  for (const auto& cp : cps) cp.validate();
  p.validate(cps);

  CpTable t(cps);
  std::vector<int> o, pm;
  for (std::size_t i = 0; i < t.size(); ++i)
    (p.is_premium(t.id[i]) ? pm : o).push_back(static_cast<int>(i));
  const double lo = fair_share_level(t, o, (1.0 - s.kappa) * nu);
  const double lp = fair_share_level(t, pm, s.kappa * nu);

  SurplusReport r;
  r.phi = class_phi(t, o, lo) + class_phi(t, pm, lp);
  r.psi = s.c * class_load(t, pm, lp);
  r.cs = m * r.phi;
  r.is_ = m * r.psi;
  for (int j : o) r.per_cp_utility[t.id[j]] = t.v[j] * t.alpha[j] * m * rho_at_level(t, j, lo);
  for (int j : pm) r.per_cp_utility[t.id[j]] = (t.v[j] - s.c) * t.alpha[j] * m * rho_at_level(t, j, lp);
  return r;
}

StrategyOutcome evaluate_state(const CpTable& t, const IspStrategy& s, GameState state) {
  StrategyOutcome r;
  std::vector<int> o, pm;
  for (std::size_t i = 0; i < t.size(); ++i) (state.premium[i] ? pm : o).push_back(static_cast<int>(i));
  r.level_o = state.level_o;
  r.level_p = state.level_p;
  r.load_o = class_load(t, o, state.level_o);
  r.load_p = class_load(t, pm, state.level_p);
  r.phi = class_phi(t, o, state.level_o) + class_phi(t, pm, state.level_p);
  r.psi = s.c * r.load_p;
  r.premium_count = static_cast<int>(pm.size());
  r.kind = state.kind;
  r.premium = std::move(state.premium);
  return r;
}

StrategyOutcome evaluate_strategy(const CpTable& t, const IspStrategy& s, double nu,
                                  GamePolicy policy) {
  return evaluate_state(t, s, solve_class_game(t, s, nu, policy));
}

}  // namespace pubopt
