#include "pubopt/allocation.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>

#include "pubopt/csv.hpp"
#include "pubopt/errors.hpp"
#include "pubopt/fair_share.hpp"

namespace pubopt {

CpTable::CpTable(std::span<const ContentProvider> cps) {
  const auto n = cps.size();
  id.resize(n);
  alpha.resize(n);
  theta_hat.resize(n);
  beta.resize(n);
  v.resize(n);
  phi.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    id[i] = cps[i].id;
    alpha[i] = cps[i].alpha;
    theta_hat[i] = cps[i].theta_hat;
    beta[i] = cps[i].beta;
    v[i] = cps[i].v;
    phi[i] = cps[i].phi;
  }
}

namespace {

// G(t) + nu and its derivative over members, t > 0.
void load_and_slope(const CpTable& t, std::span<const int> members, double x, double& g,
                    double& dg) {
  double s = 0.0, ds = 0.0;
  for (int j : members) {
    const double th = t.theta_hat[j];
    const double a = t.alpha[j];
    if (th <= x) {
      s += a * th;
    } else {
      const double b = t.beta[j];
      const double d = std::exp(-b * (th / x - 1.0));
      s += a * d * x;
      ds += a * d * (1.0 + b * th / x);
    }
  }
  g = s;
  dg = ds;
}

}  // namespace

double fair_share_level(const CpTable& t, std::span<const int> members, double nu, double hint,
                        int& iterations) {
  iterations = 0;
  if (members.empty() || !(nu > 0.0)) return 0.0;
  double top = 0.0, full = 0.0, asum = 0.0;
  for (int j : members) {
    top = std::max(top, t.theta_hat[j]);
    full += t.alpha[j] * t.theta_hat[j];
    asum += t.alpha[j];
  }
  if (nu >= full) return top;

  const double ftol = 1e-12 * std::max(1.0, nu);
  const double xtol = 1e-12 * std::max(1.0, top);
  double lo = 0.0, hi = top;
  double x;
  if (hint > 0.0 && hint < top) {
    x = hint;
  } else {
    x = nu / asum;  // level if nobody were capped and demand were inelastic
    if (!(x > lo && x < hi)) x = 0.5 * (lo + hi);
  }
  for (int it = 0; it < 200; ++it) {
    iterations = it + 1;
    double s, ds;
    load_and_slope(t, members, x, s, ds);
    const double g = s - nu;
    if (std::abs(g) <= ftol) return x;
    if (g < 0.0) lo = x; else hi = x;
    if (hi - lo <= xtol) return 0.5 * (lo + hi);
    double xn = ds > 0.0 ? x - g / ds : -1.0;
    if (!(xn > lo && xn < hi)) xn = 0.5 * (lo + hi);
    if (std::abs(xn - x) <= xtol) return xn;
    x = xn;
  }
  return x;
}

double fair_share_level(const CpTable& t, std::span<const int> members, double nu, double hint) {
  int it;
  return fair_share_level(t, members, nu, hint, it);
}

double class_load(const CpTable& t, std::span<const int> members, double level) {
  double s = 0.0;
  for (int j : members) s += t.alpha[j] * rho_at_level(t, j, level);
  return s;
}

double class_phi(const CpTable& t, std::span<const int> members, double level) {
  double s = 0.0;
  for (int j : members) s += t.phi[j] * t.alpha[j] * rho_at_level(t, j, level);
  return s;
}

void SystemInstance::validate() const {
  if (!(m > 0.0) || !std::isfinite(m)) throw ValidationError("system: M must be positive");
  if (!(mu >= 0.0) || !std::isfinite(mu)) throw ValidationError("system: mu must be non-negative");
  for (const auto& cp : cps) cp.validate();
}

double RateEquilibrium::theta_of(int id) const {
  for (std::size_t i = 0; i < ids.size(); ++i)
    if (ids[i] == id) return theta[i];
  throw ValidationError("no CP with id " + std::to_string(id));
}

double RateEquilibrium::lambda_of(int id) const {
  for (std::size_t i = 0; i < ids.size(); ++i)
    if (ids[i] == id) return lambda[i];
  throw ValidationError("no CP with id " + std::to_string(id));
}

std::map<int, double> unconstrained_rates(const SystemInstance& sys) {
  sys.validate();
  std::map<int, double> out;
  for (const auto& cp : sys.cps) out[cp.id] = cp.alpha * sys.m * cp.theta_hat;
  return out;
}

RateEquilibrium solve_rate_equilibrium(const SystemInstance& sys) {
  sys.validate();
  RateEquilibrium eq;
  const auto n = sys.cps.size();
  if (n == 0) return eq;

  CpTable t(sys.cps);
  std::vector<int> all(n);
  for (std::size_t i = 0; i < n; ++i) all[i] = static_cast<int>(i);
  const double nu = sys.nu();
  const double full = saturation_capacity(sys.cps);
  const double level = fair_share_level(t, all, nu);

  eq.ids = t.id;
  eq.theta.resize(n);
  eq.lambda.resize(n);
  double agg = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double th = std::min(t.theta_hat[i], level);
    eq.theta[i] = th;
    eq.lambda[i] = t.alpha[i] * sys.m * delivered(t.theta_hat[i], t.beta[i], th);
    agg += eq.lambda[i];
  }
  eq.aggregate = agg;
  if (nu < full) eq.fair_share_cap = level;
  return eq;
}

double per_capita_throughput(const ContentProvider& cp, double theta) {
  return demand(cp, theta) * theta;
}

void write_rate_equilibrium_csv(std::ostream& out, const RateEquilibrium& eq,
                                std::span<const ContentProvider> cps) {
  if (cps.size() != eq.ids.size()) throw ValidationError("rate CSV: CP list does not match equilibrium");
  csv::Writer w(out);
  w.header({"cp_id", "theta", "lambda", "demand"});
  for (std::size_t i = 0; i < cps.size(); ++i) {
    w.field(eq.ids[i]).field(eq.theta[i]).field(eq.lambda[i]).field(demand(cps[i], eq.theta[i]));
    w.end_row();
  }
}

RateMechanism max_min_mechanism() {
  return [](const SystemInstance& s) { return solve_rate_equilibrium(s); };
}

namespace {

struct Draw {
  std::mt19937_64 gen;
  explicit Draw(std::uint64_t s) : gen(s) {}
  double unit() { return static_cast<double>(gen() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * (1.0 - unit()); }
  double log_uniform(double lo, double hi) { return std::exp(uniform(std::log(lo), std::log(hi))); }
  int integer(int lo, int hi) { return lo + static_cast<int>(gen() % static_cast<std::uint64_t>(hi - lo + 1)); }
};

SystemInstance random_system(Draw& rng) {
  SystemInstance s;
  const int n = rng.integer(1, 50);
  s.cps.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    auto& cp = s.cps[static_cast<std::size_t>(i)];
    cp.id = i;
    cp.alpha = rng.uniform(0.0, 1.0);
    cp.theta_hat = rng.uniform(0.0, 10.0);
    cp.beta = rng.uniform(0.0, 10.0);
    cp.v = rng.uniform(0.0, 1.0);
    cp.phi = rng.uniform(0.0, cp.beta);
  }
  s.m = rng.log_uniform(1e-2, 1e4);
  const double nu = rng.uniform(0.0, 1.5 * saturation_capacity(s.cps));
  s.mu = nu * s.m;
  return s;
}

void record(AxiomReport& r, int axiom, double err) {
  if (!(err <= r.worst[axiom])) r.worst[axiom] = std::isnan(err) ? INFINITY : err;
  if (!(err <= r.tolerance)) ++r.violations[axiom];
}

}  // namespace

AxiomReport verify_axioms(const RateMechanism& mechanism, int trials, std::uint64_t seed,
                          double tolerance) {
  AxiomReport r;
  r.trials = trials;
  r.tolerance = tolerance;
  Draw rng(seed);
  for (int k = 0; k < trials; ++k) {
    SystemInstance s = random_system(rng);
    const RateEquilibrium e = mechanism(s);
    const auto n = s.cps.size();

    double bound = 0.0;
    double carried = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto& cp = s.cps[i];
      bound = std::max({bound, e.theta[i] - cp.theta_hat, -e.theta[i]});
      const double th = std::clamp(e.theta[i], 0.0, cp.theta_hat);
      carried += cp.alpha * delivered(cp.theta_hat, cp.beta, th);
    }
    record(r, 0, bound);

    const double target = std::min(s.nu(), saturation_capacity(s.cps));
    record(r, 1, std::abs(carried - target) / std::max(1.0, target));

    SystemInstance more = s;
    more.mu = s.mu * rng.uniform(1.0, 2.0);
    const RateEquilibrium e2 = mechanism(more);
    double drop = 0.0;
    for (std::size_t i = 0; i < n; ++i) drop = std::max(drop, e.theta[i] - e2.theta[i]);
    record(r, 2, drop);

    const double xi = rng.log_uniform(1e-3, 1e3);
    SystemInstance scaled = s;
    scaled.m = s.m * xi;
    scaled.mu = s.mu * xi;
    const RateEquilibrium e3 = mechanism(scaled);
    double diff = 0.0;
    for (std::size_t i = 0; i < n; ++i) diff = std::max(diff, std::abs(e.theta[i] - e3.theta[i]));
    record(r, 3, diff);
  }
  return r;
}

}  // namespace pubopt
