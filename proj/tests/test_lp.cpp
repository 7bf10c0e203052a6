#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "robust_bayes/lp.hpp"

using namespace robust_bayes;

namespace {

LinearProgram simplex_lp(std::vector<double> cost, std::vector<VariableBounds> bounds) {
  LinearProgram lp;
  for (std::size_t i = 0; i < cost.size(); ++i) lp.add_variable(cost[i], bounds[i]);
  lp.add_equality(std::vector<double>(cost.size(), 1.0), 1.0);
  return lp;
}

}  // namespace

TEST(SolveLp, VertexOfUnitSimplex) {
  const auto out = solve_lp(simplex_lp({1.0, 0.0}, {{0, 1}, {0, 1}}));
  ASSERT_EQ(out.status, LpStatus::Optimal);
  EXPECT_DOUBLE_EQ(out.value, 0.0);
  EXPECT_DOUBLE_EQ(out.point[0], 0.0);
  EXPECT_DOUBLE_EQ(out.point[1], 1.0);
}

TEST(SolveLp, BoundContradictionIsInfeasible) {
  LinearProgram lp;
  lp.add_variable(0.0, {0.0, 1.0});
  lp.add_equality(std::vector<double>{1.0}, 2.0);
  EXPECT_EQ(solve_lp(lp).status, LpStatus::Infeasible);
}

TEST(SolveLp, SegmentWithTightBounds) {
  // Vertices of the feasible segment are (0.3,0.7) -> 1.7 and (0.7,0.3) -> 1.3.
  const auto out = solve_lp(simplex_lp({1.0, 2.0}, {{0.3, 0.7}, {0.3, 0.7}}));
  ASSERT_EQ(out.status, LpStatus::Optimal);
  EXPECT_NEAR(out.value, 1.3, 1e-12);
  EXPECT_NEAR(out.point[0], 0.7, 1e-12);
  EXPECT_NEAR(out.point[1], 0.3, 1e-12);
}

TEST(SolveLp, UnboundedObjective) {
  LinearProgram lp;
  lp.add_variable(-1.0, {0.0, kInfinity});
  lp.add_variable(0.0, {0.0, kInfinity});
  lp.add_equality(std::vector<double>{1.0, -1.0}, 0.0);
  EXPECT_EQ(solve_lp(lp).status, LpStatus::Unbounded);
}

TEST(SolveLp, NegativeLowerBounds) {
  // min x + y, x + y >= -1 realized with a slack, x,y in [-2, 2]
  LinearProgram lp;
  lp.add_variable(1.0, {-2.0, 2.0});
  lp.add_variable(1.0, {-2.0, 2.0});
  lp.add_greater_equal(std::vector<double>{1.0, 1.0}, -1.0);
  const auto out = solve_lp(lp);
  ASSERT_TRUE(out.optimal());
  EXPECT_NEAR(out.value, -1.0, 1e-12);
}

TEST(SolveLp, StructuralErrorsAreNotStatuses) {
  LinearProgram lp;
  lp.add_variable(1.0, {0.0, 1.0});
  lp.eq_rhs.push_back(1.0);  // rhs without a row
  EXPECT_THROW(solve_lp(lp), DimensionError);

  LinearProgram crossed;
  crossed.add_variable(1.0, {1.0, 0.0});
  EXPECT_THROW(solve_lp(crossed), DimensionError);

  LinearProgram short_row;
  short_row.add_variable(1.0, {0.0, 1.0});
  short_row.add_variable(1.0, {0.0, 1.0});
  EXPECT_THROW(short_row.add_equality(std::vector<double>{1.0}, 1.0), DimensionError);
}

TEST(SolveLp, BealeCyclingExampleTerminates) {
  // Cycles under the textbook largest-coefficient rule; Bland's rule must not.
  LinearProgram lp;
  for (double c : {-0.75, 20.0, -0.5, 6.0}) lp.add_variable(c, {0.0, kInfinity});
  lp.add_greater_equal(std::vector<double>{-0.25, 8.0, 1.0, -9.0}, 0.0);
  lp.add_greater_equal(std::vector<double>{-0.5, 12.0, 0.5, -3.0, 0.0}, 0.0);
  lp.bounds[2].upper = 1.0;
  const auto out = solve_lp(lp);
  ASSERT_TRUE(out.optimal());
  EXPECT_NEAR(out.value, -1.25, 1e-12);
}

TEST(SolveLp, RedundantEqualityRows) {
  LinearProgram lp = simplex_lp({3.0, 1.0, 2.0}, {{0, 1}, {0, 1}, {0, 1}});
  lp.add_equality(std::vector<double>{2.0, 2.0, 2.0}, 2.0);
  const auto out = solve_lp(lp);
  ASSERT_TRUE(out.optimal());
  EXPECT_NEAR(out.value, 1.0, 1e-12);
}

TEST(SolveLp, PointSatisfiesConstraintsAndIsDeterministic) {
  oracle::Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t nv = rng.integer(2, 6), nc = rng.integer(1, 3);
    LinearProgram lp;
    for (std::size_t i = 0; i < nv; ++i) lp.add_variable(rng.uniform(-1, 1), {rng.uniform(-1, 0), rng.uniform(0.5, 2)});
    std::vector<double> x0(nv);
    for (std::size_t i = 0; i < nv; ++i) x0[i] = rng.uniform(lp.bounds[i].lower, lp.bounds[i].upper);
    for (std::size_t r = 0; r < nc; ++r) {
      std::vector<double> row(nv);
      for (auto& v : row) v = rng.uniform(-1, 1);
      lp.add_equality(row, dot(row, x0));  // feasible by construction
    }
    const auto a = solve_lp(lp), b = solve_lp(lp);
    ASSERT_TRUE(a.optimal());
    EXPECT_EQ(a.point, b.point);
    for (std::size_t r = 0; r < nc; ++r) EXPECT_NEAR(dot(lp.eq_matrix.row(r), a.point), lp.eq_rhs[r], 1e-9);
    for (std::size_t i = 0; i < nv; ++i) {
      EXPECT_GE(a.point[i], lp.bounds[i].lower - 1e-12);
      EXPECT_LE(a.point[i], lp.bounds[i].upper + 1e-12);
    }
    EXPECT_LE(a.value, dot(lp.objective, x0) + 1e-9);
  }
}

TEST(MinimizeOverBand, MatchesSegmentExample) {
  const auto r = minimize_over_band(std::vector<double>{1.0, 2.0}, BandBox({0.5, 0.5}, 0.2));
  EXPECT_NEAR(r.value, 1.3, 1e-12);
  EXPECT_NEAR(r.point[0], 0.7, 1e-12);
  EXPECT_NEAR(r.point[1], 0.3, 1e-12);
}

TEST(MinimizeOverBand, ZeroRadiusReturnsCenter) {
  const std::vector<double> c{0.2, 0.3, 0.5}, d{4.0, -1.0, 2.5};
  const auto r = minimize_over_band(d, BandBox(c, 0.0));
  EXPECT_EQ(r.point, c);
  EXPECT_DOUBLE_EQ(r.value, dot(c, d));
}

TEST(MinimizeOverBand, FullSimplexPutsMassOnMinimum) {
  const auto r = minimize_over_band(std::vector<double>{5.0, 1.0, 3.0}, BandBox({1.0 / 3, 1.0 / 3, 1.0 / 3}, 1.0));
  EXPECT_DOUBLE_EQ(r.value, 1.0);
  EXPECT_EQ(r.point, (std::vector<double>{0.0, 1.0, 0.0}));
}

TEST(MinimizeOverBand, TiesGoToLowerIndex) {
  const auto r = minimize_over_band(std::vector<double>{1.0, 1.0, 2.0}, BandBox({0.2, 0.2, 0.6}, 0.3));
  EXPECT_NEAR(r.point[0], 0.5, 1e-12);
  EXPECT_NEAR(r.point[1], 0.2, 1e-12);
  EXPECT_NEAR(r.point[2], 0.3, 1e-12);
}

TEST(MinimizeOverBand, DimensionMismatch) {
  EXPECT_THROW(minimize_over_band(std::vector<double>{1.0}, BandBox({0.5, 0.5}, 0.1)), DimensionError);
  EXPECT_THROW(BandBox({0.5, 0.6}, 0.1), DimensionError);
  EXPECT_THROW(BandBox({0.5, 0.5}, 1.5), DimensionError);
}

TEST(MinimizeOverBand, AgreesWithVertexEnumerationAndStaysInBand) {
  oracle::Rng rng(11);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t m = rng.integer(1, 6);
    const auto c = oracle::random_simplex_point(rng, m);
    const double eps = rng.uniform() < 0.1 ? 0.0 : rng.uniform();
    std::vector<double> d(m);
    for (auto& v : d) v = rng.uniform(-1, 1);
    const BandBox band(c, eps);
    const auto r = minimize_over_band(d, band);
    EXPECT_NEAR(r.value, oracle::band_min_by_vertices(d, band.lower(), band.upper()), 1e-12);
    double sum = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      EXPECT_GE(r.point[j], band.lower()[j]);
      EXPECT_LE(r.point[j], band.upper()[j]);
      sum += r.point[j];
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);

    // Negating the direction gives the maximum; the true max bounds the min.
    std::vector<double> neg(d);
    for (auto& v : neg) v = -v;
    const double max_value = -minimize_over_band(neg, band).value;
    EXPECT_GE(max_value, r.value - 1e-15);
    EXPECT_NEAR(-max_value, oracle::band_min_by_vertices(neg, band.lower(), band.upper()), 1e-12);
  }
}

TEST(BandFeasibility, NoHalfspacesGivesCenter) {
  const BandBox band({0.3, 0.7}, 0.1);
  const auto f = band_feasible_with_halfspaces(band, {});
  ASSERT_TRUE(f.feasible);
  EXPECT_EQ(*f.witness, band.center());
}

TEST(BandFeasibility, CenterAlreadySatisfies) {
  const std::vector<std::vector<double>> hs{{1.0, -1.0}};
  const auto f = band_feasible_with_halfspaces(BandBox({0.7, 0.3}, 0.1), hs);
  ASSERT_TRUE(f.feasible);
  EXPECT_GE((*f.witness)[0], (*f.witness)[1]);
}

TEST(BandFeasibility, OutOfReach) {
  const std::vector<std::vector<double>> hs{{1.0, -1.0}};
  EXPECT_FALSE(band_feasible_with_halfspaces(BandBox({0.2, 0.8}, 0.1), hs).feasible);
}

TEST(BandFeasibility, WitnessNeedsTheLp) {
  // Center violates the halfspace; eps = 0.2 reaches pi = (0.5, 0.5) exactly.
  const std::vector<std::vector<double>> hs{{1.0, -1.0}};
  const BandBox band({0.3, 0.7}, 0.25);
  const auto f = band_feasible_with_halfspaces(band, hs);
  ASSERT_TRUE(f.feasible);
  const auto& w = *f.witness;
  EXPECT_GE(w[0] - w[1], -1e-9);
  EXPECT_NEAR(w[0] + w[1], 1.0, 1e-9);
  EXPECT_GE(w[0], band.lower()[0] - 1e-12);
  EXPECT_LE(w[0], band.upper()[0] + 1e-12);
}

TEST(BandFeasibility, BarelyFeasibleBandDoesNotTripResidualCheck) {
  // Found by the contamination bisection property: at this radius phase 1
  // ends with a sub-tolerance artificial that used to be pivoted out unzeroed.
  const double u[4][4] = {{-0.71269466457239372, -0.44766553623031591, -0.4122297824991632, 0.8463208660444419},
                          {0.2075825895498995, -0.94657074704574007, 0.91383502269830208, -0.38469798139774203},
                          {0.70972147449466272, 0.12111373762770228, -0.83021106921839016, 0.11028993017101274},
                          {-0.20107822785253404, -0.32612602864205686, -0.4639562102956119, 0.48675588288447175}};
  const std::vector<double> c{0.14398430800022433, 0.57120085907041829, 0.26580223908048445, 0.019012593848872963};
  std::vector<std::vector<double>> hs;
  for (int b : {0, 2, 3}) {
    std::vector<double> h(4);
    for (int j = 0; j < 4; ++j) h[j] = u[1][j] - u[b][j];
    hs.push_back(h);
  }
  const auto f = band_feasible_with_halfspaces(BandBox(c, 0.08088387455791235), hs);
  ASSERT_TRUE(f.feasible);
  for (const auto& h : hs) EXPECT_GE(dot(h, *f.witness), -1e-8);
}
