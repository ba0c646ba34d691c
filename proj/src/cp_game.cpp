#include "pubopt/cp_game.hpp"

#include <algorithm>
#include <climits>
#include <cmath>
#include <numeric>
#include <ostream>
#include <set>
#include <unordered_map>

#include "pubopt/csv.hpp"

namespace pubopt {

void IspStrategy::validate() const {
  if (!(kappa >= 0.0 && kappa <= 1.0)) throw ValidationError("strategy: kappa must be in [0,1]");
  if (!(c >= 0.0) || !std::isfinite(c)) throw ValidationError("strategy: c must be non-negative");
}

void Partition::validate(std::span<const ContentProvider> cps) const {
  std::set<int> ids;
  for (const auto& cp : cps) ids.insert(cp.id);
  if (ids.size() != cps.size()) throw ValidationError("partition: duplicate CP ids");
  std::set<int> seen;
  for (int id : ordinary) {
    if (!ids.count(id)) throw ValidationError("partition: unknown CP id " + std::to_string(id));
    if (!seen.insert(id).second) throw ValidationError("partition: CP listed twice " + std::to_string(id));
  }
  for (int id : premium) {
    if (!ids.count(id)) throw ValidationError("partition: unknown CP id " + std::to_string(id));
    if (!seen.insert(id).second) throw ValidationError("partition: classes overlap at CP " + std::to_string(id));
  }
  if (seen.size() != ids.size()) throw ValidationError("partition does not cover every CP");
}

bool Partition::is_premium(int id) const {
  return std::binary_search(premium.begin(), premium.end(), id);
}

bool prefers_premium(double v, double c, double rho_o, double rho_p) {
  const double uo = v * rho_o;
  const double up = (v - c) * rho_p;
  const double tol = 1e-9 * std::max({1.0, std::abs(uo), std::abs(up)});
  return up > uo + tol;
}

double estimate_rho(const ContentProvider& cp, const RateEquilibrium& class_eq, double class_nu) {
  cp.validate();
  double level;
  if (class_eq.theta.empty()) {
    CpTable t(std::span<const ContentProvider>(&cp, 1));
    const int only = 0;
    level = fair_share_level(t, std::span<const int>(&only, 1), class_nu);
  } else {
    level = *std::max_element(class_eq.theta.begin(), class_eq.theta.end());
  }
  const double th = std::min(cp.theta_hat, level);
  return delivered(cp.theta_hat, cp.beta, th);
}

namespace {

std::vector<int> members_of(const std::vector<char>& premium, char cls) {
  std::vector<int> out;
  for (std::size_t i = 0; i < premium.size(); ++i)
    if (premium[i] == cls) out.push_back(static_cast<int>(i));
  return out;
}

double solo_level(const CpTable& t, int j, double nu) {
  return fair_share_level(t, std::span<const int>(&j, 1), nu);
}

// Ordinary and premium per-unit rho for CP j given class levels. A CP
// outside a class takes that class's level as given; an empty class is
// replaced by the CP's solo equilibrium.
void class_rhos(const CpTable& t, int j, bool in_p, double lo, double lp, bool o_empty, bool p_empty,
                double cap_o, double cap_p, double& rho_o, double& rho_p) {
  if (in_p) {
    rho_p = rho_at_level(t, j, lp);
    rho_o = o_empty ? rho_at_level(t, j, solo_level(t, j, cap_o)) : rho_at_level(t, j, lo);
  } else {
    rho_o = rho_at_level(t, j, lo);
    rho_p = p_empty ? rho_at_level(t, j, solo_level(t, j, cap_p)) : rho_at_level(t, j, lp);
  }
}

std::uint64_t hash_bytes(const std::vector<char>& v) {
  std::uint64_t h = 1469598103934665603ull;
  for (char c : v) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  return h;
}

void erase_sorted(std::vector<int>& v, int x) {
  auto it = std::lower_bound(v.begin(), v.end(), x);
  if (it != v.end() && *it == x) v.erase(it);
}

void insert_sorted(std::vector<int>& v, int x) { v.insert(std::lower_bound(v.begin(), v.end(), x), x); }

GameState convention_state(const CpTable& t, const IspStrategy& s, double nu) {
  GameState g;
  const auto n = t.size();
  g.premium.assign(n, 0);
  if (s.kappa >= 1.0) {
    for (std::size_t i = 0; i < n; ++i) g.premium[i] = t.v[i] > s.c ? 1 : 0;
  }
  const auto o = members_of(g.premium, 0);
  const auto p = members_of(g.premium, 1);
  g.level_o = fair_share_level(t, o, (1.0 - s.kappa) * nu);
  g.level_p = fair_share_level(t, p, s.kappa * nu);
  return g;
}

}  // namespace

namespace {

// Competitive rounds allowed before the Nash fallback takes over. Converging
// instances on 1000-CP populations finish within ~60 rounds.
constexpr long long kFallbackRounds = 64;

std::vector<int> visit_order(const CpTable& t) {
  std::vector<int> order(t.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    if (t.v[a] != t.v[b]) return t.v[a] > t.v[b];
    return t.id[a] < t.id[b];
  });
  return order;
}

// Sequential best response from `g.premium`. In Competitive mode a CP
// compares its class with the other class's current level; in Nash mode the
// other class is re-solved with the CP added (cold, as the verifier does).
// When the other class is capacity-bound the estimate is an upper bound on
// that exact payoff, so a CP content under the estimate is skipped.
void best_response(const CpTable& t, const IspStrategy& s, double nu, EquilibriumKind mode,
                   long long round_cap, GameState& g) {
  const int n = static_cast<int>(t.size());
  const double cap_o = (1.0 - s.kappa) * nu;
  const double cap_p = s.kappa * nu;
  const auto order = visit_order(t);
  std::unordered_map<std::uint64_t, int> seen;
  std::vector<std::vector<int>> switched_by_round;
  const long long cap = std::min(round_cap, 100LL * std::max(n, 1));

  for (long long round = 0; round < cap; ++round) {
    std::vector<int> o = members_of(g.premium, 0);
    std::vector<int> p = members_of(g.premium, 1);
    double lo = fair_share_level(t, o, cap_o);
    double lp = fair_share_level(t, p, cap_p);

    const auto h = hash_bytes(g.premium);
    if (auto it = seen.find(h); it != seen.end()) {
      std::set<int> osc;
      for (std::size_t r = static_cast<std::size_t>(it->second); r < switched_by_round.size(); ++r)
        for (int j : switched_by_round[r]) osc.insert(t.id[j]);
      throw NonConvergenceError(std::string(mode == EquilibriumKind::Nash ? "Nash" : "competitive") +
                                    " best response cycles (period " +
                                    std::to_string(round - it->second) + " rounds)",
                                to_partition(t, g.premium), {osc.begin(), osc.end()});
    }
    seen.emplace(h, static_cast<int>(round));

    double full_o = 0.0, full_p = 0.0;
    for (int j : o) full_o += t.alpha[j] * t.theta_hat[j];
    for (int j : p) full_p += t.alpha[j] * t.theta_hat[j];

    std::vector<int> switched;
    for (int j : order) {
      const bool in_p = g.premium[j] != 0;
      double rho_o, rho_p;
      class_rhos(t, j, in_p, lo, lp, o.empty(), p.empty(), cap_o, cap_p, rho_o, rho_p);
      bool want_p = prefers_premium(t.v[j], s.c, rho_o, rho_p);
      double exact_level = -1.0;
      if (mode == EquilibriumKind::Nash) {
        const bool other_bound = in_p ? (!o.empty() && full_o > cap_o * (1.0 + 1e-9))
                                      : (!p.empty() && full_p > cap_p * (1.0 + 1e-9));
        if (want_p == in_p && other_bound) continue;
        auto with = in_p ? o : p;
        insert_sorted(with, j);
        exact_level = fair_share_level(t, with, in_p ? cap_o : cap_p);
        if (in_p) rho_o = rho_at_level(t, j, exact_level);
        else rho_p = rho_at_level(t, j, exact_level);
        want_p = prefers_premium(t.v[j], s.c, rho_o, rho_p);
      }
      if (want_p == in_p) continue;
      const double w = t.alpha[j] * t.theta_hat[j];
      full_o += want_p ? -w : w;
      full_p += want_p ? w : -w;
      g.premium[j] = want_p ? 1 : 0;
      if (want_p) {
        erase_sorted(o, j);
        insert_sorted(p, j);
      } else {
        erase_sorted(p, j);
        insert_sorted(o, j);
      }
      if (exact_level >= 0.0 && want_p) {
        lp = exact_level;
        lo = fair_share_level(t, o, cap_o, lo);
      } else if (exact_level >= 0.0) {
        lo = exact_level;
        lp = fair_share_level(t, p, cap_p, lp);
      } else {
        lo = fair_share_level(t, o, cap_o, lo);
        lp = fair_share_level(t, p, cap_p, lp);
      }
      switched.push_back(j);
    }
    switched_by_round.push_back(switched);
    if (switched.empty()) {
      g.level_o = lo;
      g.level_p = lp;
      g.rounds += static_cast<int>(round + 1);
      g.kind = mode;
      return;
    }
  }
  std::vector<int> osc;
  for (int j : switched_by_round.back()) osc.push_back(t.id[j]);
  std::sort(osc.begin(), osc.end());
  throw NonConvergenceError("best response hit the round cap", to_partition(t, g.premium), osc);
}

}  // namespace

GameState solve_competitive(const CpTable& t, const IspStrategy& s, double nu) {
  s.validate();
  if (!(nu >= 0.0)) throw ValidationError("game: nu must be non-negative");
  if (s.kappa <= 0.0 || s.kappa >= 1.0) return convention_state(t, s, nu);
  GameState g;
  g.premium.assign(t.size(), 0);
  best_response(t, s, nu, EquilibriumKind::Competitive, LLONG_MAX, g);
  return g;
}

GameState solve_class_game(const CpTable& t, const IspStrategy& s, double nu, GamePolicy policy) {
  if (policy == GamePolicy::CompetitiveOnly || s.kappa <= 0.0 || s.kappa >= 1.0)
    return solve_competitive(t, s, nu);
  if (!(nu >= 0.0)) throw ValidationError("game: nu must be non-negative");
  try {
    GameState g;
    g.premium.assign(t.size(), 0);
    best_response(t, s, nu, EquilibriumKind::Competitive, kFallbackRounds, g);
    return g;
  } catch (const NonConvergenceError& e) {
    GameState g;
    g.premium.assign(t.size(), 0);
    const Partition& last = e.last_partition();
    for (std::size_t i = 0; i < t.size(); ++i) g.premium[i] = last.is_premium(t.id[i]) ? 1 : 0;
    best_response(t, s, nu, EquilibriumKind::Nash, LLONG_MAX, g);
    return g;
  }
}

Partition to_partition(const CpTable& t, const std::vector<char>& premium) {
  Partition p;
  for (std::size_t i = 0; i < t.size(); ++i) (premium[i] ? p.premium : p.ordinary).push_back(t.id[i]);
  std::sort(p.ordinary.begin(), p.ordinary.end());
  std::sort(p.premium.begin(), p.premium.end());
  return p;
}

Partition solve_competitive_partition(std::span<const ContentProvider> cps, const IspStrategy& s,
                                      double nu) {
  for (const auto& cp : cps) cp.validate();
  CpTable t(cps);
  return to_partition(t, solve_competitive(t, s, nu).premium);
}

namespace {

std::vector<char> flags_of(std::span<const ContentProvider> cps, const Partition& p) {
  p.validate(cps);
  std::vector<char> f(cps.size(), 0);
  for (std::size_t i = 0; i < cps.size(); ++i) f[i] = p.is_premium(cps[i].id) ? 1 : 0;
  return f;
}

}  // namespace

bool verify_competitive(std::span<const ContentProvider> cps, const IspStrategy& s, double nu,
                        const Partition& p) {
  s.validate();
  CpTable t(cps);
  const auto flags = flags_of(cps, p);
  if (s.kappa <= 0.0 || s.kappa >= 1.0) return convention_state(t, s, nu).premium == flags;

  const double cap_o = (1.0 - s.kappa) * nu;
  const double cap_p = s.kappa * nu;
  const auto o = members_of(flags, 0);
  const auto pm = members_of(flags, 1);
  const double lo = fair_share_level(t, o, cap_o);
  const double lp = fair_share_level(t, pm, cap_p);
  for (std::size_t j = 0; j < t.size(); ++j) {
    const bool in_p = flags[j] != 0;
    double rho_o, rho_p;
    class_rhos(t, static_cast<int>(j), in_p, lo, lp, o.empty(), pm.empty(), cap_o, cap_p, rho_o, rho_p);
    if (prefers_premium(t.v[j], s.c, rho_o, rho_p) != in_p) return false;
  }
  return true;
}

bool verify_nash(std::span<const ContentProvider> cps, const IspStrategy& s, double nu,
                 const Partition& p) {
  s.validate();
  CpTable t(cps);
  const auto flags = flags_of(cps, p);
  if (s.kappa <= 0.0 || s.kappa >= 1.0) return convention_state(t, s, nu).premium == flags;

  const double cap_o = (1.0 - s.kappa) * nu;
  const double cap_p = s.kappa * nu;
  const auto o = members_of(flags, 0);
  const auto pm = members_of(flags, 1);
  const double lo = fair_share_level(t, o, cap_o);
  const double lp = fair_share_level(t, pm, cap_p);
  for (std::size_t jj = 0; jj < t.size(); ++jj) {
    const int j = static_cast<int>(jj);
    const bool in_p = flags[jj] != 0;
    double rho_o, rho_p;
    if (in_p) {
      auto with = o;
      insert_sorted(with, j);
      rho_o = rho_at_level(t, j, fair_share_level(t, with, cap_o));
      rho_p = rho_at_level(t, j, lp);
    } else {
      auto with = pm;
      insert_sorted(with, j);
      rho_o = rho_at_level(t, j, lo);
      rho_p = rho_at_level(t, j, fair_share_level(t, with, cap_p));
    }
    if (prefers_premium(t.v[jj], s.c, rho_o, rho_p) != in_p) return false;
  }
  return true;
}

std::vector<Partition> enumerate_nash_partitions(std::span<const ContentProvider> cps,
                                                 const IspStrategy& s, double nu) {
  s.validate();
  if (cps.size() > 20) throw ValidationError("Nash enumeration is limited to 20 CPs");
  for (const auto& cp : cps) cp.validate();
  CpTable t(cps);
  const int n = static_cast<int>(t.size());
  if (s.kappa <= 0.0 || s.kappa >= 1.0) return {to_partition(t, convention_state(t, s, nu).premium)};

  const double cap_o = (1.0 - s.kappa) * nu;
  const double cap_p = s.kappa * nu;
  const std::uint32_t count = 1u << n;
  std::vector<double> lev_o(count), lev_p(count);
  std::vector<int> mem;
  mem.reserve(static_cast<std::size_t>(n));
  for (std::uint32_t mask = 0; mask < count; ++mask) {
    mem.clear();
    for (int j = 0; j < n; ++j)
      if (mask >> j & 1u) mem.push_back(j);
    lev_o[mask] = fair_share_level(t, mem, cap_o);
    lev_p[mask] = fair_share_level(t, mem, cap_p);
  }

  std::vector<Partition> out;
  const std::uint32_t all = count - 1;
  for (std::uint32_t pmask = 0; pmask < count; ++pmask) {
    const std::uint32_t omask = all & ~pmask;
    bool ok = true;
    for (int j = 0; j < n && ok; ++j) {
      const std::uint32_t bit = 1u << j;
      const bool in_p = pmask & bit;
      double rho_o, rho_p;
      if (in_p) {
        rho_p = rho_at_level(t, j, lev_p[pmask]);
        rho_o = rho_at_level(t, j, lev_o[omask | bit]);
      } else {
        rho_o = rho_at_level(t, j, lev_o[omask]);
        rho_p = rho_at_level(t, j, lev_p[pmask | bit]);
      }
      ok = prefers_premium(t.v[j], s.c, rho_o, rho_p) == in_p;
    }
    if (ok) {
      std::vector<char> f(static_cast<std::size_t>(n));
      for (int j = 0; j < n; ++j) f[static_cast<std::size_t>(j)] = (pmask >> j & 1u) ? 1 : 0;
      out.push_back(to_partition(t, f));
    }
  }
  return out;
}

bool scaled_game_check(std::span<const ContentProvider> cps, const IspStrategy& s, double nu,
                       double xi) {
  if (!(xi > 0.0)) return false;
  // Whichever kind the solver realizes must survive the rescaling.
  const CpTable t(cps);
  const GameState st = solve_class_game(t, s, nu);
  const Partition p = to_partition(t, st.premium);
  const double scaled_nu = (xi * nu) / (xi * 1.0);
  return st.kind == EquilibriumKind::Competitive ? verify_competitive(cps, s, scaled_nu, p)
                                                 : verify_nash(cps, s, scaled_nu, p);
}

void write_partition_csv(std::ostream& out, const Partition& p) {
  std::vector<std::pair<int, char>> rows;
  for (int id : p.ordinary) rows.emplace_back(id, 'O');
  for (int id : p.premium) rows.emplace_back(id, 'P');
  std::sort(rows.begin(), rows.end());
  csv::Writer w(out);
  w.header({"cp_id", "class"});
  for (auto [id, cls] : rows) {
    w.field(id).field(std::string_view(&cls, 1));
    w.end_row();
  }
}

}  // namespace pubopt
