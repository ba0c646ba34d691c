#pragma once

// Content providers, the throughput-demand model, and seeded population
// generation.

#include <cmath>
#include <concepts>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace pubopt {

/// One content provider's parameter bundle.
///
/// alpha      popularity: fraction of consumers that ever access the CP, (0,1]
/// theta_hat  unconstrained per-user throughput, > 0
/// beta       throughput sensitivity of demand, >= 0
/// v          CP revenue per unit traffic, >= 0
/// phi        consumer utility per unit traffic, >= 0
struct ContentProvider {
  int id = 0;
  double alpha = 1.0;
  double theta_hat = 1.0;
  double beta = 0.0;
  double v = 0.0;
  double phi = 0.0;

  /// Throws ValidationError when an invariant is broken.
  void validate() const;

  friend bool operator==(const ContentProvider&, const ContentProvider&) = default;
};

/// Any demand model usable as d_i(theta): non-negative, continuous,
/// non-decreasing on [0, theta_hat] with d(theta_hat) == 1.
template <typename D>
concept DemandModel = requires(const D& d, const ContentProvider& cp, double theta) {
  { d(cp, theta) } -> std::convertible_to<double>;
};

/// d(theta) = exp(-beta (theta_hat / theta - 1)), extended by d(0) = 0.
struct ExponentialDemand {
  double operator()(const ContentProvider& cp, double theta) const noexcept {
    if (theta <= 0.0) return 0.0;
    return std::exp(-cp.beta * (cp.theta_hat / theta - 1.0));
  }
};

static_assert(DemandModel<ExponentialDemand>);

/// Demand fraction at achievable throughput theta. Throws DomainError unless
/// 0 <= theta <= theta_hat.
double demand(const ContentProvider& cp, double theta);

/// Per-user delivered throughput d(theta) * theta, without domain checks.
/// Hot-loop helper; callers guarantee 0 <= theta <= theta_hat.
inline double delivered(double theta_hat, double beta, double theta) noexcept {
  if (theta <= 0.0) return 0.0;
  return theta * std::exp(-beta * (theta_hat / theta - 1.0));
}

/// Closed interval used for uniform sampling. Draws land in (lo, hi], so
/// lo == hi yields exactly lo.
struct Range {
  double lo = 0.0;
  double hi = 1.0;

  friend bool operator==(const Range&, const Range&) = default;
};

enum class PhiMode {
  ProportionalToBeta,  ///< phi ~ U[0, beta]
  IndependentNested,   ///< u ~ U[0, 10], phi ~ U[0, u], independent of beta
};

std::string to_string(PhiMode mode);
/// Throws ValidationError on an unknown name.
PhiMode phi_mode_from_string(const std::string& name);

struct PopulationSpec {
  int n = 1000;
  Range alpha_dist{0.0, 1.0};
  Range theta_hat_dist{0.0, 1.0};
  Range beta_dist{0.0, 10.0};
  Range v_dist{0.0, 1.0};
  PhiMode phi_mode = PhiMode::ProportionalToBeta;
  std::uint64_t seed = 1;

  void validate() const;

  friend bool operator==(const PopulationSpec&, const PopulationSpec&) = default;
};

/// The 1000-CP population used throughout the monopoly and oligopoly
/// experiments: alpha, theta_hat, v ~ U[0,1], beta ~ U[0,10].
PopulationSpec default_population_spec(PhiMode mode = PhiMode::ProportionalToBeta,
                                       std::uint64_t seed = 1);

/// Draws spec.n CPs with std::mt19937_64 seeded by spec.seed. Per CP the
/// draw order is alpha, theta_hat, beta, v, then two draws for phi (both
/// modes consume two, so the other columns do not depend on phi_mode).
/// Uniform variates use the top 53 bits of each 64-bit output.
std::vector<ContentProvider> generate_population(const PopulationSpec& spec);

/// Sum of alpha_i * theta_hat_i: the per-capita capacity that serves every
/// CP at its unconstrained throughput.
double saturation_capacity(std::span<const ContentProvider> cps);

/// CSV with header `id,alpha,theta_hat,beta,v,phi`.
void write_population_csv(std::ostream& out, std::span<const ContentProvider> cps);
void write_population_csv(const std::string& path, std::span<const ContentProvider> cps);
std::vector<ContentProvider> read_population_csv(std::istream& in);
std::vector<ContentProvider> read_population_csv(const std::string& path);

}  // namespace pubopt
