#include <gtest/gtest.h>

#include <numeric>
#include <sstream>

#include "oracles.hpp"
#include "pubopt/isp_monopoly.hpp"
#include "pubopt/isp_multi.hpp"

using namespace pubopt;

namespace {

const std::vector<ContentProvider>& default_cps() {
  static const auto cps = generate_population(default_population_spec());
  return cps;
}

double sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

}  // namespace

TEST(Profiles, Validation) {
  std::vector<IspProfile> ok{{0, 0.5, {}}, {1, 0.5, {1.0, 0.2}}};
  EXPECT_NO_THROW(validate_profiles(ok));
  auto dup = ok;
  dup[1].id = 0;
  EXPECT_THROW(validate_profiles(dup), ValidationError);
  auto bad_sum = ok;
  bad_sum[1].mu_share = 0.6;
  EXPECT_THROW(validate_profiles(bad_sum), ValidationError);
  auto bad_s = ok;
  bad_s[0].strategy.kappa = 2.0;
  EXPECT_THROW(validate_profiles(bad_s), ValidationError);
}

TEST(PhiOfShare, PublicOptionAbundantIsMaximum) {
  const auto& cps = default_cps();
  double top = 0.0;
  for (const auto& cp : cps) top += cp.phi * cp.alpha * cp.theta_hat;
  const IspProfile isp{0, 0.5, {}};
  // nu_I = 0.5 * 1000 / 0.5 = 1000, above saturation.
  EXPECT_NEAR(phi_of_share(isp, 0.5, 1.0, 1000.0, cps), top, 1e-9 * top);
}

TEST(PhiOfShare, TinyCapacityGivesTinySurplus) {
  const IspProfile isp{0, 1e-6, {}};
  const double full = phi_of_share({0, 1.0, {}}, 1.0, 1.0, 150.0, default_cps());
  EXPECT_LT(phi_of_share(isp, 1.0, 1.0, 150.0, default_cps()), 1e-4 * full);
}

TEST(PhiOfShare, FullPremiumMatchesOracle) {
  const auto& cps = default_cps();
  std::vector<ContentProvider> premium;
  for (const auto& cp : cps)
    if (cp.v > 0.3) premium.push_back(cp);
  const IspProfile isp{0, 0.5, {1.0, 0.3}};
  const double got = phi_of_share(isp, 0.5, 1.0, 150.0, cps);
  EXPECT_NEAR(got, oracle::surplus(premium, 150.0), 1e-5 * got);
}

TEST(MarketSplit, HomogeneousSharesFollowCapacity) {
  const auto& cps = default_cps();
  for (std::vector<double> g : {std::vector<double>{0.5, 0.5}, std::vector<double>{0.3, 0.7}}) {
    std::vector<IspProfile> isps{{0, g[0], {0.5, 0.2}}, {1, g[1], {0.5, 0.2}}};
    const auto eq = solve_market_split(isps, 1.0, 150.0, cps);
    EXPECT_NEAR(eq.shares[0], g[0], 1e-9);
    EXPECT_NEAR(eq.shares[1], g[1], 1e-9);
    EXPECT_NEAR(sum(eq.shares), 1.0, 1e-9);
    EXPECT_TRUE(eq.equalized);
    EXPECT_LE(eq.residual, 1e-6);
  }
}

TEST(MarketSplit, PricedOutIspLosesItsConsumers) {
  const auto& cps = default_cps();
  std::vector<IspProfile> isps{{0, 0.5, {1.0, 0.99}}, {1, 0.5, IspStrategy::public_option()}};
  const auto eq = solve_market_split(isps, 1.0, 150.0, cps);
  EXPECT_LE(eq.share_of(0), 1e-3);
  EXPECT_TRUE(eq.corner[0]);
  EXPECT_FALSE(eq.corner[1]);
  EXPECT_NEAR(sum(eq.shares), 1.0, 1e-9);
}

TEST(MarketSplit, DuopolyAgainstPublicOptionEqualizes) {
  const auto& cps = default_cps();
  std::vector<IspProfile> isps{{0, 0.5, {1.0, 0.3}}, {1, 0.5, IspStrategy::public_option()}};
  const auto eq = solve_market_split(isps, 1.0, 150.0, cps);
  EXPECT_NEAR(sum(eq.shares), 1.0, 1e-9);
  EXPECT_TRUE(eq.equalized) << eq.residual;
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_NEAR(eq.phi_per_isp[i], eq.phi_common, 1e-6 * std::max(1.0, eq.phi_common));
    EXPECT_NEAR(eq.nu[i], 0.5 * 150.0 / eq.shares[i], 1e-9 * eq.nu[i]);
  }
  const auto chk = market_conditions_check(isps, eq.shares, 1.0, 150.0, cps, 1e-6);
  EXPECT_TRUE(chk.passed) << chk.worst_phi_gap;
}

TEST(MarketSplit, NeedsTwoIsps) {
  std::vector<IspProfile> one{{0, 1.0, {}}};
  EXPECT_THROW(solve_market_split(one, 1.0, 100.0, default_cps()), ValidationError);
}

TEST(Homogeneous, TwoPublicOptionsPass) {
  std::vector<IspProfile> isps{{0, 0.4, {}}, {1, 0.6, {}}};
  const auto chk = homogeneous_equilibrium_check(isps, 1.0, 150.0, default_cps());
  EXPECT_TRUE(chk.passed);
  EXPECT_EQ(chk.worst_phi_gap, 0.0);
}

TEST(Homogeneous, ThreeIspsPass) {
  std::vector<IspProfile> isps{{0, 0.2, {0.5, 0.2}}, {1, 0.3, {0.5, 0.2}}, {2, 0.5, {0.5, 0.2}}};
  const auto chk = homogeneous_equilibrium_check(isps, 1.0, 150.0, default_cps());
  EXPECT_TRUE(chk.passed) << chk.worst_phi_gap;
}

TEST(Homogeneous, WrongSharesFail) {
  std::vector<IspProfile> isps{{0, 0.5, {0.5, 0.2}}, {1, 0.5, {0.5, 0.2}}};
  const std::vector<double> shares{0.4, 0.6};
  const auto chk = market_conditions_check(isps, shares, 1.0, 150.0, default_cps(), 1e-6);
  EXPECT_FALSE(chk.passed);
  EXPECT_GT(chk.worst_phi_gap, 1e-3);
}

TEST(Delta, Examples) {
  using S = std::pair<double, double>;
  EXPECT_EQ(delta_metric(std::vector<S>{{0.1, 1.0}, {0.2, 2.0}, {0.4, 3.0}}), 0.0);
  EXPECT_NEAR(delta_metric(std::vector<S>{{0.5, 1.0}, {0.4, 2.0}}), 0.1, 1e-15);
  EXPECT_EQ(delta_metric(std::vector<S>{}), 0.0);
}

TEST(BestResponse, SinglePointGridHasNoGap) {
  const auto& cps = default_cps();
  std::vector<IspProfile> isps{{0, 0.5, {1.0, 0.2}}, {1, 0.5, {}}};
  const std::vector<double> k{1.0}, c{0.2};
  const auto eps_grid = log_grid(1.0, 1000.0, 20);
  const auto rep = best_response_search(isps, 0, k, c, 1.0, 150.0, cps, eps_grid);
  ASSERT_EQ(rep.points.size(), 1u);
  EXPECT_EQ(rep.failed, 0);
  EXPECT_EQ(rep.phi_gap, 0.0);
  EXPECT_EQ(rep.m_gap, 0.0);
  EXPECT_EQ(rep.epsilon_others, 0.0);
  EXPECT_EQ(rep.points[0].strategy, (IspStrategy{1.0, 0.2}));
}

TEST(BestResponse, SmallDuopolyGridAligns) {
  const auto& cps = default_cps();
  std::vector<IspProfile> isps{{0, 0.5, {1.0, 0.0}}, {1, 0.5, {}}};
  const std::vector<double> k{0.0, 1.0}, c{0.0, 0.3, 0.9};
  const auto eps_grid = log_grid(1.0, 1000.0, 20);
  const auto rep = best_response_search(isps, 0, k, c, 1.0, 200.0, cps, eps_grid, {}, 2);
  ASSERT_EQ(rep.points.size(), 6u);
  EXPECT_EQ(rep.failed, 0);
  for (const auto& p : rep.points) EXPECT_LE(p.m_focal, 0.6);
  EXPECT_LE(rep.phi_gap, rep.epsilon_others + 1e-6);
  std::stringstream ss;
  write_best_response_csv(ss, rep);
  std::string line;
  std::getline(ss, line);
  EXPECT_EQ(line, "kappa,c,m_I,phi_common,psi_I,corner_flag");
}

TEST(MarketCsv, OneRowPerIsp) {
  std::vector<IspProfile> isps{{3, 0.5, {}}, {7, 0.5, {}}};
  const auto eq = solve_market_split(isps, 1.0, 100.0, default_cps());
  std::stringstream ss;
  write_market_csv(ss, eq);
  std::string line;
  std::getline(ss, line);
  EXPECT_EQ(line, "isp_id,share,phi,psi");
  std::getline(ss, line);
  EXPECT_EQ(line.substr(0, 2), "3,");
  std::getline(ss, line);
  EXPECT_EQ(line.substr(0, 2), "7,");
}
