#include "pubopt/isp_multi.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>
#include <set>

#include "pubopt/csv.hpp"
#include "pubopt/isp_monopoly.hpp"
#include "pubopt/parallel.hpp"

namespace pubopt {

void validate_profiles(std::span<const IspProfile> isps) {
  if (isps.empty()) throw ValidationError("no ISPs given");
  std::set<int> ids;
  double sum = 0.0;
  for (const auto& p : isps) {
    if (!ids.insert(p.id).second) throw ValidationError("duplicate ISP id " + std::to_string(p.id));
    if (!(p.mu_share > 0.0 && p.mu_share <= 1.0))
      throw ValidationError("ISP " + std::to_string(p.id) + ": mu_share must be in (0,1]");
    p.strategy.validate();
    sum += p.mu_share;
  }
  if (std::abs(sum - 1.0) > 1e-12) throw ValidationError("ISP mu_share values must sum to 1");
}

std::size_t MarketEquilibrium::index_of(int id) const {
  for (std::size_t i = 0; i < ids.size(); ++i)
    if (ids[i] == id) return i;
  throw ValidationError("no ISP with id " + std::to_string(id));
}

double MarketEquilibrium::share_of(int id) const { return shares[index_of(id)]; }

double phi_of_share(const IspProfile& isp, double m, double total_m, double total_mu,
                    std::span<const ContentProvider> cps, GamePolicy policy) {
  if (!(m > 0.0 && m <= 1.0)) throw ValidationError("share must be in (0,1]");
  if (!(total_m > 0.0) || !(total_mu >= 0.0)) throw ValidationError("need M > 0 and mu >= 0");
  isp.strategy.validate();
  for (const auto& cp : cps) cp.validate();
  const double nu = (isp.mu_share * total_mu) / (m * total_m);
  return evaluate_strategy(CpTable(cps), isp.strategy, nu, policy).phi;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// ISPs with one strategy share a surplus curve Phi(nu); the pseudo-inverse
// is taken on that curve, so equal strategies get equal nu.
struct Group {
  IspStrategy strategy;
  std::vector<std::size_t> members;
  double lo = kInf;  // smallest nu any member can have (m = 1)
  double hi = 0.0;   // largest nu (m = floor)
  std::map<double, double> memo;
};

struct Bracket {
  double a;  // largest sampled nu below b (NaN when b == lo)
  double b;  // smallest sampled nu with Phi >= target (inf if none)
};

class Splitter {
 public:
  Splitter(std::span<const IspProfile> isps, double nu_bar, const CpTable& t, const MarketOptions& opt)
      : isps_(isps), nu_bar_(nu_bar), t_(t), opt_(opt), group_of_(isps.size()) {
    for (std::size_t i = 0; i < isps.size(); ++i) {
      std::size_t g = 0;
      while (g < groups_.size() && !(groups_[g].strategy == isps[i].strategy)) ++g;
      if (g == groups_.size()) groups_.push_back(Group{isps[i].strategy, {}, kInf, 0.0, {}});
      groups_[g].members.push_back(i);
      groups_[g].lo = std::min(groups_[g].lo, isps[i].mu_share * nu_bar);
      groups_[g].hi = std::max(groups_[g].hi, isps[i].mu_share * nu_bar / opt.share_floor);
      group_of_[i] = g;
    }
    for (auto& g : groups_) {
      phi(g, g.lo);
      phi(g, g.hi);
    }
  }

  double phi(Group& g, double nu) {
    if (auto it = g.memo.find(nu); it != g.memo.end()) return it->second;
    const double v = evaluate_strategy(t_, g.strategy, nu, opt_.policy).phi;
    ++evaluations;
    g.memo.emplace(nu, v);
    return v;
  }

  double max_sampled_phi() const {
    double m = 0.0;
    for (const auto& g : groups_)
      for (const auto& [nu, p] : g.memo) m = std::max(m, p);
    return m;
  }

  static Bracket bracket(const Group& g, double target) {
    double prev = std::numeric_limits<double>::quiet_NaN();
    for (const auto& [nu, p] : g.memo) {
      if (p >= target) return {prev, nu};
      prev = nu;
    }
    return {prev, kInf};
  }

  double clamp_share(double m) const { return std::clamp(m, opt_.share_floor, 1.0); }

  // Share interval [lo, hi] of ISP i given its group's bracket.
  std::pair<double, double> share_range(std::size_t i, const Bracket& br) const {
    const double num = isps_[i].mu_share * nu_bar_;
    if (std::isinf(br.b)) return {opt_.share_floor, opt_.share_floor};
    const double lo = clamp_share(num / br.b);
    if (std::isnan(br.a)) return {lo, lo};
    return {lo, clamp_share(num / br.a)};
  }

  bool refinable(const Group& g, const Bracket& br) const {
    if (std::isinf(br.b) || std::isnan(br.a)) return false;
    double width = 0.0;
    for (auto i : g.members) {
      auto [lo, hi] = share_range(i, br);
      width = std::max(width, hi - lo);
    }
    return width > opt_.share_tolerance && std::nextafter(br.a, kInf) < br.b;
  }

  // +1 when the shares demanded at `target` sum to >= 1, -1 otherwise.
  // Refines group brackets only until the sign is certain (or all are at
  // tolerance, in which case the sampled upper end decides).
  int sign(double target, bool refine_fully = false) {
    while (true) {
      double s_lo = 0.0, s_hi = 0.0;
      std::size_t widest = groups_.size();
      double widest_w = 0.0;
      for (std::size_t gi = 0; gi < groups_.size(); ++gi) {
        const Bracket br = bracket(groups_[gi], target);
        double w = 0.0;
        for (auto i : groups_[gi].members) {
          auto [lo, hi] = share_range(i, br);
          s_lo += lo;
          s_hi += hi;
          w += hi - lo;
        }
        if (refinable(groups_[gi], br) && w > widest_w) {
          widest_w = w;
          widest = gi;
        }
      }
      if (!refine_fully) {
        if (s_lo >= 1.0) return 1;
        if (s_hi < 1.0) return -1;
      }
      if (widest == groups_.size()) return s_lo >= 1.0 ? 1 : -1;
      Group& g = groups_[widest];
      const Bracket br = bracket(g, target);
      phi(g, std::sqrt(br.a * br.b));
    }
  }

  // Shares at `target` from the refined brackets (sampled crossing point).
  std::vector<double> shares_at(double target) {
    sign(target, true);
    std::vector<double> m(isps_.size());
    for (std::size_t i = 0; i < isps_.size(); ++i)
      m[i] = share_range(i, bracket(groups_[group_of_[i]], target)).first;
    return m;
  }

  double crossing_nu(std::size_t i, double target) const {
    return bracket(groups_[group_of_[i]], target).b;
  }

  std::size_t group_of(std::size_t i) const { return group_of_[i]; }

  int evaluations = 0;

 private:
  std::span<const IspProfile> isps_;
  double nu_bar_;
  const CpTable& t_;
  const MarketOptions& opt_;
  std::vector<Group> groups_;
  std::vector<std::size_t> group_of_;
};

double sum_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

}  // namespace

MarketEquilibrium solve_market_split(std::span<const IspProfile> isps, double total_m,
                                     double total_mu, std::span<const ContentProvider> cps,
                                     const MarketOptions& opt) {
  if (isps.size() < 2) throw ValidationError("market split needs at least two ISPs");
  validate_profiles(isps);
  if (!(total_m > 0.0) || !(total_mu > 0.0)) throw ValidationError("market split needs M > 0 and mu > 0");
  if (!(opt.share_floor > 0.0) || opt.share_floor * static_cast<double>(isps.size()) >= 1.0)
    throw ValidationError("share floor must be positive and leave room for the market");
  for (const auto& cp : cps) cp.validate();

  const CpTable t(cps);
  const double nu_bar = total_mu / total_m;
  Splitter sp(isps, nu_bar, t, opt);

  double lo = 0.0;
  double hi = sp.max_sampled_phi();
  hi = hi > 0.0 ? std::nextafter(hi * (1.0 + 1e-12), kInf) : 1e-300;
  const int s_lo = sp.sign(lo);
  const int s_hi = sp.sign(hi);
  if (s_lo < 0 || s_hi > 0) {
    const auto a = sp.shares_at(lo);
    const auto b = sp.shares_at(hi);
    throw MarketSplitError("market split not bracketed: sum of shares " + csv::format_double(sum_of(a)) +
                               " at surplus 0 and " + csv::format_double(sum_of(b)) + " at surplus " +
                               csv::format_double(hi),
                           sum_of(a), sum_of(b));
  }
  for (int it = 0; it < 200 && hi - lo > 1e-10 * std::max(1.0, hi); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (sp.sign(mid) > 0) lo = mid; else hi = mid;
  }

  // Crossings at both ends of the final bracket. Where they differ the ISP's
  // surplus curve is flat (spare capacity) or jumps (a class switch) at the
  // common level, and the share moves along 1/nu between the two ends. One
  // mixing weight t for every ISP keeps equal strategies at equal nu; it is
  // chosen so the clamped shares sum to 1.
  sp.sign(lo, true);
  sp.sign(hi, true);
  const std::size_t n = isps.size();
  std::vector<double> inv_up(n), inv_dn(n), num(n);
  for (std::size_t i = 0; i < n; ++i) {
    num[i] = isps[i].mu_share * nu_bar;
    const double b_up = sp.crossing_nu(i, lo), b_dn = sp.crossing_nu(i, hi);
    inv_up[i] = std::isinf(b_up) ? 0.0 : 1.0 / b_up;
    inv_dn[i] = std::isinf(b_dn) ? 0.0 : 1.0 / b_dn;
  }
  const auto inv_at = [&](std::size_t i, double t) { return (1.0 - t) * inv_up[i] + t * inv_dn[i]; };
  const auto share_at = [&](std::size_t i, double t) {
    return std::clamp(num[i] * inv_at(i, t), opt.share_floor, 1.0);
  };
  const auto total_at = [&](double t) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += share_at(i, t);
    return s;
  };
  double t_lo = 0.0, t_hi = 1.0;
  if (total_at(1.0) >= 1.0) {
    t_lo = 1.0;
  } else if (total_at(0.0) > 1.0) {
    for (int it = 0; it < 200 && t_hi - t_lo > 1e-17; ++it) {
      const double mid = 0.5 * (t_lo + t_hi);
      if (total_at(mid) >= 1.0) t_lo = mid; else t_hi = mid;
    }
  } else {
    t_hi = 0.0;
  }
  const double frac = t_lo;

  std::vector<char> corner(n, 0), clamped(n, 0);
  std::vector<double> m(n), w(n);
  double pinned = 0.0, free_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = inv_at(i, frac);
    const double raw = num[i] * w[i];
    m[i] = share_at(i, frac);
    corner[i] = raw <= opt.share_floor ? 1 : 0;
    clamped[i] = corner[i] || raw >= 1.0;
    (corner[i] ? pinned : free_sum) += m[i];
  }
  const double scale = free_sum > 0.0 ? free_sum / (1.0 - pinned) : 1.0;

  MarketEquilibrium eq;
  eq.ids.resize(n);
  eq.shares.resize(n);
  eq.nu.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    eq.ids[i] = isps[i].id;
    eq.shares[i] = corner[i] ? m[i] : m[i] / scale;
    // Unclamped ISPs take nu from the shared inverse-nu value, so equal
    // strategies see the same nu exactly.
    eq.nu[i] = clamped[i] ? num[i] / eq.shares[i] : scale / w[i];
  }

  eq.phi_per_isp.resize(n);
  eq.psi_per_isp.resize(n);
  eq.partitions.resize(n);
  eq.kinds.resize(n);
  eq.corner = corner;
  for (std::size_t i = 0; i < n; ++i) {
    const StrategyOutcome o = evaluate_strategy(t, isps[i].strategy, eq.nu[i], opt.policy);
    eq.phi_per_isp[i] = o.phi;
    eq.psi_per_isp[i] = o.psi;
    eq.partitions[i] = to_partition(t, o.premium);
    eq.kinds[i] = o.kind;
  }
  double pc = 0.0, level = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    pc += eq.shares[i] * eq.phi_per_isp[i];
    if (!corner[i]) level += eq.shares[i] * eq.phi_per_isp[i];
  }
  eq.phi_common = pc;
  // Equal surplus is required among the non-corner ISPs only.
  level /= 1.0 - pinned;
  double res = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    if (!corner[i]) res = std::max(res, std::abs(eq.phi_per_isp[i] - level) / std::max(1.0, level));
  eq.residual = res;
  eq.equalized = res <= opt.equalization_tolerance;
  eq.evaluations = sp.evaluations + static_cast<int>(n);
  return eq;
}

MarketCheck market_conditions_check(std::span<const IspProfile> isps, std::span<const double> shares,
                                    double total_m, double total_mu,
                                    std::span<const ContentProvider> cps, double phi_tolerance,
                                    GamePolicy policy) {
  validate_profiles(isps);
  if (shares.size() != isps.size()) throw ValidationError("one share per ISP required");
  const CpTable t(cps);
  MarketCheck r;
  std::vector<double> phis;
  for (std::size_t i = 0; i < isps.size(); ++i) {
    const double nu = (isps[i].mu_share * total_mu) / (shares[i] * total_m);
    const StrategyOutcome o = evaluate_strategy(t, isps[i].strategy, nu, policy);
    const Partition p = to_partition(t, o.premium);
    const bool ok = o.kind == EquilibriumKind::Competitive ? verify_competitive(cps, isps[i].strategy, nu, p)
                                                           : verify_nash(cps, isps[i].strategy, nu, p);
    r.partitions_ok = r.partitions_ok && ok;
    phis.push_back(o.phi);
  }
  const double top = *std::max_element(phis.begin(), phis.end());
  const double bottom = *std::min_element(phis.begin(), phis.end());
  r.worst_phi_gap = (top - bottom) / std::max(1.0, top);
  r.passed = r.partitions_ok && r.worst_phi_gap <= phi_tolerance;
  return r;
}

MarketCheck homogeneous_equilibrium_check(std::span<const IspProfile> isps, double total_m,
                                          double total_mu, std::span<const ContentProvider> cps) {
  validate_profiles(isps);
  for (const auto& p : isps)
    if (!(p.strategy == isps.front().strategy))
      throw ValidationError("homogeneous check needs identical strategies");
  std::vector<double> shares;
  for (const auto& p : isps) shares.push_back(p.mu_share);
  return market_conditions_check(isps, shares, total_m, total_mu, cps, 1e-12);
}

double delta_metric(std::span<const std::pair<double, double>> samples) {
  double best = 0.0;
  for (const auto& [m1, p1] : samples)
    for (const auto& [m2, p2] : samples)
      if (p1 <= p2) best = std::max(best, m1 - m2);
  return best;
}

BestResponseReport best_response_search(std::span<const IspProfile> isps, int focal_id,
                                        std::span<const double> kappa_grid,
                                        std::span<const double> c_grid, double total_m,
                                        double total_mu, std::span<const ContentProvider> cps,
                                        std::span<const double> epsilon_nu_grid,
                                        const MarketOptions& opt, int threads) {
  validate_profiles(isps);
  if (kappa_grid.empty() || c_grid.empty()) throw ValidationError("best response grids must be non-empty");
  std::size_t focal = isps.size();
  for (std::size_t i = 0; i < isps.size(); ++i)
    if (isps[i].id == focal_id) focal = i;
  if (focal == isps.size()) throw ValidationError("focal ISP id not found");

  BestResponseReport r;
  for (double k : kappa_grid)
    for (double c : c_grid) {
      BestResponsePoint p;
      p.strategy = IspStrategy{k, c};
      p.strategy.validate();
      r.points.push_back(p);
    }

  parallel_for(r.points.size(), threads, [&](std::size_t i) {
    auto& p = r.points[i];
    std::vector<IspProfile> prof(isps.begin(), isps.end());
    prof[focal].strategy = p.strategy;
    try {
      p.eq = solve_market_split(prof, total_m, total_mu, cps, opt);
      p.m_focal = p.eq.shares[focal];
      p.psi_focal = p.eq.psi_per_isp[focal];
      p.corner = p.eq.corner[focal] != 0;
    } catch (const SolverError& e) {
      p.ok = false;
      p.error = e.what();
    }
  });

  bool any = false;
  std::vector<std::pair<double, double>> samples;
  for (std::size_t i = 0; i < r.points.size(); ++i) {
    const auto& p = r.points[i];
    if (!p.ok) {
      ++r.failed;
      continue;
    }
    samples.emplace_back(p.m_focal, p.eq.phi_common);
    if (!any || p.m_focal > r.points[r.argmax_m].m_focal) r.argmax_m = i;
    if (!any || p.eq.phi_common > r.points[r.argmax_phi].eq.phi_common) r.argmax_phi = i;
    any = true;
  }
  if (!any) return r;
  r.phi_gap = r.points[r.argmax_phi].eq.phi_common - r.points[r.argmax_m].eq.phi_common;
  r.m_gap = r.points[r.argmax_m].m_focal - r.points[r.argmax_phi].m_focal;
  r.delta = delta_metric(samples);

  for (std::size_t j = 0; j < isps.size(); ++j) {
    if (j == focal) continue;
    std::vector<double> grid(epsilon_nu_grid.begin(), epsilon_nu_grid.end());
    for (const auto& p : r.points)
      if (p.ok) grid.push_back(p.eq.nu[j]);
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    if (grid.size() >= 2)
      r.epsilon_others = std::max(r.epsilon_others, epsilon_metric(cps, isps[j].strategy, grid, threads));
  }
  return r;
}

void write_best_response_csv(std::ostream& out, const BestResponseReport& r) {
  csv::Writer w(out);
  w.header({"kappa", "c", "m_I", "phi_common", "psi_I", "corner_flag"});
  for (const auto& p : r.points) {
    w.field(p.strategy.kappa).field(p.strategy.c);
    if (p.ok) {
      w.field(p.m_focal).field(p.eq.phi_common).field(p.psi_focal).field(p.corner);
    } else {
      w.field(std::string_view("nan")).field(std::string_view("nan")).field(std::string_view("nan"));
      w.field(std::string_view("nan"));
    }
    w.end_row();
  }
}

void write_market_csv(std::ostream& out, const MarketEquilibrium& eq) {
  csv::Writer w(out);
  w.header({"isp_id", "share", "phi", "psi"});
  for (std::size_t i = 0; i < eq.ids.size(); ++i) {
    w.field(eq.ids[i]).field(eq.shares[i]).field(eq.phi_per_isp[i]).field(eq.psi_per_isp[i]);
    w.end_row();
  }
}

}  // namespace pubopt
