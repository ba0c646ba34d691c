#pragma once

// Several ISPs sharing one consumer base: consumers migrate until every ISP
// delivers the same per-capita consumer surplus.

#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pubopt/cp_game.hpp"
#include "pubopt/welfare.hpp"

namespace pubopt {

/// mu_share is gamma_I = mu_I / mu.
struct IspProfile {
  int id = 0;
  double mu_share = 1.0;
  IspStrategy strategy;
};

/// Throws ValidationError unless ids are unique, shares positive and summing
/// to 1 within 1e-12, and strategies valid.
void validate_profiles(std::span<const IspProfile> isps);

struct MarketOptions {
  double share_floor = 1e-6;
  double share_tolerance = 1e-10;
  double equalization_tolerance = 1e-6;  ///< relative to max(1, phi_common)
  GamePolicy policy = GamePolicy::CompetitiveThenNash;
};

/// Vectors are aligned with the input ISP order.
struct MarketEquilibrium {
  std::vector<int> ids;
  std::vector<double> shares;       ///< m_I, summing to 1
  std::vector<double> nu;           ///< per-capita capacity gamma_I mu / (m_I M)
  std::vector<double> phi_per_isp;  ///< Phi_I
  std::vector<double> psi_per_isp;  ///< Psi_I per consumer of ISP I
  std::vector<Partition> partitions;
  std::vector<EquilibriumKind> kinds;
  std::vector<char> corner;  ///< pinned at the share floor
  double phi_common = 0.0;   ///< sum m_I Phi_I: total consumer surplus per capita
  double residual = 0.0;     ///< max non-corner |Phi_I - L| / max(1, L), L their share-weighted mean
  bool equalized = false;    ///< residual within the equalization tolerance
  int evaluations = 0;       ///< class-game solves spent

  double share_of(int id) const;
  std::size_t index_of(int id) const;
};

class MarketSplitError : public SolverError {
 public:
  MarketSplitError(const std::string& what, double sum_low, double sum_high)
      : SolverError(what), sum_low_(sum_low), sum_high_(sum_high) {}
  double sum_at_low() const { return sum_low_; }
  double sum_at_high() const { return sum_high_; }

 private:
  double sum_low_;
  double sum_high_;
};

/// Phi_I at share m: nu_I = gamma_I mu / (m M), class game solved there.
double phi_of_share(const IspProfile& isp, double m, double total_m, double total_mu,
                    std::span<const ContentProvider> cps,
                    GamePolicy policy = GamePolicy::CompetitiveThenNash);

/// Market-share equilibrium: bisection on the common surplus level, with
/// each ISP's share given by the pseudo-inverse "largest m with
/// Phi_I(m) >= level" (found in the nu domain, shared by ISPs with equal
/// strategies). Shares of non-corner ISPs are renormalized to sum to 1 and
/// the residual reports how far exact equalization is off (surplus jumps
/// when CPs change class can make it unattainable).
MarketEquilibrium solve_market_split(std::span<const IspProfile> isps, double total_m,
                                     double total_mu, std::span<const ContentProvider> cps,
                                     const MarketOptions& opt = {});

struct MarketCheck {
  bool partitions_ok = true;
  double worst_phi_gap = 0.0;  ///< max |Phi_I - Phi_J| / max(1, max Phi)
  bool passed = false;
};

/// Checks both market-equilibrium conditions at the given shares: every
/// ISP's partition is an equilibrium at its own (m_I M, mu_I), and all
/// Phi_I agree within `phi_tolerance` (relative).
MarketCheck market_conditions_check(std::span<const IspProfile> isps, std::span<const double> shares,
                                    double total_m, double total_mu,
                                    std::span<const ContentProvider> cps, double phi_tolerance,
                                    GamePolicy policy = GamePolicy::CompetitiveThenNash);

/// All strategies equal: shares m_I = gamma_I must satisfy both conditions,
/// with Phi equality to 1e-12.
MarketCheck homogeneous_equilibrium_check(std::span<const IspProfile> isps, double total_m,
                                          double total_mu, std::span<const ContentProvider> cps);

/// sup { m1 - m2 : phi1 <= phi2 } over (m, phi) samples, floored at 0.
double delta_metric(std::span<const std::pair<double, double>> samples);

struct BestResponsePoint {
  IspStrategy strategy;
  MarketEquilibrium eq;
  double m_focal = 0.0;
  double psi_focal = 0.0;
  bool corner = false;
  bool ok = true;
  std::string error;
};

struct BestResponseReport {
  std::vector<BestResponsePoint> points;  ///< ordered by (kappa, c)
  std::size_t argmax_m = 0;
  std::size_t argmax_phi = 0;
  double phi_gap = 0.0;         ///< max phi_common - phi_common(argmax_m)
  double m_gap = 0.0;           ///< max m_focal - m_focal(argmax_phi)
  double epsilon_others = 0.0;  ///< max downward-gap metric over non-focal ISPs
  double delta = 0.0;           ///< delta_metric over the focal samples
  int failed = 0;
};

/// Replaces the focal ISP's strategy by every (kappa, c) on the grids,
/// solves each market split (concurrently; the result does not depend on
/// `threads`), and compares the market-share and consumer-surplus argmaxes.
/// The non-focal downward-gap metric is evaluated on `epsilon_nu_grid`
/// merged with every per-capita capacity the non-focal ISPs realized.
BestResponseReport best_response_search(std::span<const IspProfile> isps, int focal_id,
                                        std::span<const double> kappa_grid,
                                        std::span<const double> c_grid, double total_m,
                                        double total_mu, std::span<const ContentProvider> cps,
                                        std::span<const double> epsilon_nu_grid,
                                        const MarketOptions& opt = {}, int threads = 0);

/// `kappa,c,m_I,phi_common,psi_I,corner_flag`, one row per grid point.
void write_best_response_csv(std::ostream& out, const BestResponseReport& r);

/// `isp_id,share,phi,psi`.
void write_market_csv(std::ostream& out, const MarketEquilibrium& eq);

}  // namespace pubopt
