#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "growthfit/deterministic.hpp"
#include "oracles.hpp"

using namespace growthfit;

namespace {

GrowthParams params(double k, double r, double p, double sigma = 0.0, double t0 = 0.0) {
  return GrowthParams{k, r, p, sigma, 0.0, t0};
}

}  // namespace

TEST(LogisticSolution, InitialCondition) {
  EXPECT_DOUBLE_EQ(logistic_solution(params(0.11, 4, 5e-5), 0.0), 5e-5);
  EXPECT_DOUBLE_EQ(logistic_solution(params(0.11, 4, 5e-5, 0.0, 3.5), 3.5), 5e-5);
}

TEST(LogisticSolution, MatchesOdeOracle) {
  // mpmath Taylor-series ODE solution of dx/dt = rx - (r/K)x^2.
  const double frozen = 0.0318089797793745160;
  const auto gp = params(0.15, 3, 1e-4);
  EXPECT_NEAR(logistic_solution(gp, 2.0), frozen, 1e-15);
  const double rk4 = oracle::rk4_integrate([&](double, double x) { return gp.r * x - gp.r / gp.k * x * x; },
                                           gp.p, 0.0, 2.0, 1e-16);
  EXPECT_NEAR(logistic_solution(gp, 2.0), rk4, 1e-12);
}

TEST(LogisticSolution, CarryingCapacityLimit) {
  const auto gp = params(0.15, 3, 1e-4);
  EXPECT_LT(std::abs(logistic_solution(gp, 61.0 / 3.0) - gp.k), 1e-9 * gp.k);
  EXPECT_DOUBLE_EQ(logistic_solution(gp, 1e6), 0.15);
}

TEST(LogisticSolution, MonotoneBelowCapacity) {
  const auto gp = params(0.15, 3, 1e-4);
  double prev = 0.0;
  for (int i = 0; i <= 1000; ++i) {
    const double v = logistic_solution(gp, 0.01 * i);
    EXPECT_GE(v, prev);
    prev = v;
  }
}

TEST(LogisticSolution, RejectsInvalidParameters) {
  EXPECT_THROW(logistic_solution(params(-1, 3, 1e-4), 1.0), InvalidInput);
  EXPECT_THROW(logistic_solution(params(0.1, 3, std::nan("")), 1.0), InvalidInput);
}

TEST(LogisticSolution, FiniteForLargeRateTimesElapsed) {
  // t0 far from zero: Q = (K/P - 1) e^{r t0} would overflow if formed directly.
  const auto gp = params(0.15, 3, 1e-4, 0.0, 300.0);
  for (double rt : {0.0, 1.0, 50.0, 300.0, 700.0}) {
    const double v = logistic_solution(gp, 300.0 + rt / 3.0);
    EXPECT_TRUE(std::isfinite(v));
    EXPECT_GT(v, 0.0);
  }
  EXPECT_TRUE(std::isfinite(logistic_solution(gp, 300.0 - 700.0 / 3.0)));
}

TEST(LnaaDeterministic, IdenticalToLogistic) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    const auto gp = params(0.05 + u(rng), 0.5 + 8 * u(rng), 1e-5 + 1e-3 * u(rng), u(rng), 2 * u(rng));
    const double t = gp.t0 + 10 * u(rng);
    EXPECT_EQ(lnaa_deterministic(gp, t), logistic_solution(gp, t));
  }
  EXPECT_DOUBLE_EQ(lnaa_deterministic(params(0.3, 6, 2e-4), 0.0), 2e-4);
}

TEST(LnaaDeterministic, MatchesOdeOracle) {
  const double frozen = 0.0636179595587490321;
  EXPECT_NEAR(lnaa_deterministic(params(0.3, 6, 2e-4), 1.0), frozen, 1e-15);
}

TEST(LnamDeterministic, InitialConditionIsLogP) {
  EXPECT_NEAR(lnam_deterministic(params(0.11, 4, 5e-5, 0.05), 0.0), std::log(5e-5), 1e-14);
}

TEST(LnamDeterministic, MatchesOdeOracle) {
  // mpmath solution of dV = (a - b e^V) dt with a = r - sigma^2/2, b = r/K.
  const double frozen = -2.20759202148520451889;
  const auto gp = params(0.11, 4, 5e-5, 0.05);
  EXPECT_NEAR(lnam_deterministic(gp, 5.0), frozen, 1e-13);
  const double a = gp.r - 0.5 * gp.sigma * gp.sigma;
  const double b = gp.r / gp.k;
  const double rk4 =
      oracle::rk4_integrate([&](double, double v) { return a - b * std::exp(v); }, std::log(gp.p), 0.0, 5.0);
  EXPECT_NEAR(lnam_deterministic(gp, 5.0), rk4, 1e-11);
}

TEST(LnamDeterministic, ZeroNoiseEqualsLogLogistic) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 500; ++i) {
    const auto gp = params(0.05 + u(rng), 0.5 + 8 * u(rng), 1e-5 + 1e-3 * u(rng), 0.0, u(rng));
    const double t = gp.t0 + 12 * u(rng);
    const double expect = std::log(logistic_solution(gp, t));
    EXPECT_LE(std::abs(lnam_deterministic(gp, t) - expect), 1e-12 * std::abs(expect));
  }
}

TEST(LnamDeterministic, FiniteUpToLargeExponents) {
  const auto gp = params(0.11, 4, 5e-5, 0.05);
  for (double at : {10.0, 100.0, 700.0, 2000.0}) {
    const double v = lnam_deterministic(gp, at / 4.0);
    EXPECT_TRUE(std::isfinite(v)) << at;
  }
  // Saturation: capacity a/b.
  const double a = 4 - 0.5 * 0.05 * 0.05;
  EXPECT_NEAR(lnam_deterministic(gp, 200.0), std::log(a / (4 / 0.11)), 1e-12);
}

TEST(LnamDeterministic, NonPositiveRateStillEvaluates) {
  const auto gp = params(0.11, 0.001, 5e-5, 1.0);  // a < 0
  const double v = lnam_deterministic(gp, 2.0);
  EXPECT_TRUE(std::isfinite(v));
  EXPECT_LT(v, std::log(5e-5));
  const double a = gp.r - 0.5;
  const double b = gp.r / gp.k;
  const double rk4 =
      oracle::rk4_integrate([&](double, double y) { return a - b * std::exp(y); }, std::log(gp.p), 0.0, 2.0);
  EXPECT_NEAR(v, rk4, 1e-10);
}

TEST(LogParams, RoundTripThroughNaturalScale) {
  const GrowthParams gp{0.15, 3, 1e-4, 0.01, 0.005, 0.0};
  const auto back = to_natural(to_log(gp));
  EXPECT_NEAR(back.k, gp.k, 1e-15);
  EXPECT_NEAR(back.r, gp.r, 1e-14);
  EXPECT_NEAR(back.p, gp.p, 1e-18);
  EXPECT_NEAR(back.sigma, gp.sigma, 1e-16);
  EXPECT_NEAR(back.nu, gp.nu, 1e-16);
  // sigma^-2 = 1e4
  EXPECT_NEAR(to_log(gp)[4], std::log(1e4), 1e-12);
}
