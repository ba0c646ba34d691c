#include "pubopt/population.hpp"

#include <cmath>
#include <fstream>
#include <random>

#include "pubopt/csv.hpp"
#include "pubopt/errors.hpp"

namespace pubopt {

void ContentProvider::validate() const {
  auto fail = [this](const std::string& what) {
    throw ValidationError("CP " + std::to_string(id) + ": " + what);
  };
  if (!(alpha > 0.0 && alpha <= 1.0)) fail("alpha must be in (0,1], got " + csv::format_double(alpha));
  if (!(theta_hat > 0.0) || !std::isfinite(theta_hat)) fail("theta_hat must be positive and finite");
  if (!(beta >= 0.0) || !std::isfinite(beta)) fail("beta must be non-negative and finite");
  if (!(v >= 0.0) || !std::isfinite(v)) fail("v must be non-negative and finite");
  if (!(phi >= 0.0) || !std::isfinite(phi)) fail("phi must be non-negative and finite");
}

double demand(const ContentProvider& cp, double theta) {
  if (!(theta >= 0.0 && theta <= cp.theta_hat)) {
    throw DomainError("demand: theta " + csv::format_double(theta) + " outside [0, " +
                      csv::format_double(cp.theta_hat) + "]");
  }
  return ExponentialDemand{}(cp, theta);
}

std::string to_string(PhiMode mode) {
  switch (mode) {
    case PhiMode::ProportionalToBeta: return "ProportionalToBeta";
    case PhiMode::IndependentNested: return "IndependentNested";
  }
  return "?";
}

PhiMode phi_mode_from_string(const std::string& name) {
  if (name == "ProportionalToBeta") return PhiMode::ProportionalToBeta;
  if (name == "IndependentNested") return PhiMode::IndependentNested;
  throw ValidationError("unknown phi_mode '" + name + "'");
}

void PopulationSpec::validate() const {
  if (n < 1) throw ValidationError("population n must be >= 1");
  auto check = [](const Range& r, const char* name) {
    if (!std::isfinite(r.lo) || !std::isfinite(r.hi) || r.lo > r.hi) {
      throw ValidationError(std::string("range ") + name + " must be finite with lo <= hi");
    }
  };
  check(alpha_dist, "alpha_dist");
  check(theta_hat_dist, "theta_hat_dist");
  check(beta_dist, "beta_dist");
  check(v_dist, "v_dist");
  if (alpha_dist.lo < 0.0 || alpha_dist.hi > 1.0) throw ValidationError("alpha_dist must lie in [0,1]");
  if (theta_hat_dist.lo < 0.0 || beta_dist.lo < 0.0 || v_dist.lo < 0.0) {
    throw ValidationError("theta_hat, beta and v ranges must be non-negative");
  }
  if (alpha_dist.hi <= 0.0 || theta_hat_dist.hi <= 0.0) {
    throw ValidationError("alpha_dist and theta_hat_dist need a positive upper bound");
  }
}

PopulationSpec default_population_spec(PhiMode mode, std::uint64_t seed) {
  PopulationSpec s;
  s.phi_mode = mode;
  s.seed = seed;
  return s;
}

namespace {

// u in [0,1) from the top 53 bits; mapped to (lo, hi].
struct Uniform {
  std::mt19937_64 gen;
  explicit Uniform(std::uint64_t seed) : gen(seed) {}
  double unit() { return static_cast<double>(gen() >> 11) * 0x1.0p-53; }
  double draw(double lo, double hi) { return lo + (hi - lo) * (1.0 - unit()); }
  double draw(const Range& r) { return draw(r.lo, r.hi); }
};

}  // namespace

std::vector<ContentProvider> generate_population(const PopulationSpec& spec) {
  spec.validate();
  Uniform rng(spec.seed);
  std::vector<ContentProvider> out;
  out.reserve(static_cast<std::size_t>(spec.n));
  for (int i = 0; i < spec.n; ++i) {
    ContentProvider cp;
    cp.id = i;
    cp.alpha = rng.draw(spec.alpha_dist);
    cp.theta_hat = rng.draw(spec.theta_hat_dist);
    cp.beta = rng.draw(spec.beta_dist);
    cp.v = rng.draw(spec.v_dist);
    double u1 = rng.unit();
    double u2 = rng.unit();
    if (spec.phi_mode == PhiMode::ProportionalToBeta) {
      cp.phi = cp.beta * (1.0 - u1);
    } else {
      double bound = 10.0 * (1.0 - u1);
      cp.phi = bound * (1.0 - u2);
    }
    out.push_back(cp);
  }
  return out;
}

double saturation_capacity(std::span<const ContentProvider> cps) {
  double s = 0.0;
  for (const auto& cp : cps) s += cp.alpha * cp.theta_hat;
  return s;
}

void write_population_csv(std::ostream& out, std::span<const ContentProvider> cps) {
  csv::Writer w(out);
  w.header({"id", "alpha", "theta_hat", "beta", "v", "phi"});
  for (const auto& cp : cps) {
    w.field(cp.id).field(cp.alpha).field(cp.theta_hat).field(cp.beta).field(cp.v).field(cp.phi);
    w.end_row();
  }
}

void write_population_csv(const std::string& path, std::span<const ContentProvider> cps) {
  std::ofstream f(path);
  if (!f) throw ValidationError("cannot open '" + path + "' for writing");
  write_population_csv(f, cps);
}

std::vector<ContentProvider> read_population_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("population CSV is empty");
  auto head = csv::split_line(line);
  const std::vector<std::string> expected{"id", "alpha", "theta_hat", "beta", "v", "phi"};
  if (head != expected) throw ValidationError("population CSV header must be id,alpha,theta_hat,beta,v,phi");
  std::vector<ContentProvider> out;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    auto f = csv::split_line(line);
    if (f.size() != 6) throw ValidationError("population CSV row " + std::to_string(row) + ": expected 6 fields");
    ContentProvider cp;
    cp.id = csv::parse_int(f[0], "id");
    cp.alpha = csv::parse_double(f[1], "alpha");
    cp.theta_hat = csv::parse_double(f[2], "theta_hat");
    cp.beta = csv::parse_double(f[3], "beta");
    cp.v = csv::parse_double(f[4], "v");
    cp.phi = csv::parse_double(f[5], "phi");
    cp.validate();
    out.push_back(cp);
  }
  if (out.empty()) throw ValidationError("population CSV has no rows");
  return out;
}

std::vector<ContentProvider> read_population_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ValidationError("cannot open population CSV '" + path + "'");
  return read_population_csv(f);
}

}  // namespace pubopt
