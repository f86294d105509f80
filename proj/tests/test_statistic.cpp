#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "robustz/statistic.hpp"
#include "support/oracles.hpp"

using namespace robustz;
using Catch::Approx;

TEST_CASE("pair stats of {4,1}") {
  const std::vector<double> v{4, 1};
  const PairStats s = pair_stats(v);
  CHECK(s.sum == 5);
  CHECK(s.sum_squares == 17);
  CHECK(s.sigma_hat == Approx(1.5).epsilon(1e-15));
  CHECK_FALSE(s.degenerate);
}

TEST_CASE("cancelling and constant selections") {
  const std::vector<double> c{3.25, -3.25};
  CHECK(pair_stats(c).sum == 0.0);
  const std::vector<double> flat{2, 2};
  const PairStats s = pair_stats(flat);
  CHECK(s.sigma_hat == 0.0);
  CHECK(s.degenerate);
  CHECK(z_statistic(s) == kInf);
  const std::vector<double> neg{-1, -1, -1};
  CHECK(z_statistic(pair_stats(neg)) == -kInf);
  const std::vector<double> zero{0, 0};
  CHECK(z_statistic(pair_stats(zero)) == 0.0);
}

TEST_CASE("sum is exact regardless of order") {
  const std::vector<double> a{1e16, 1.0, -1e16, 1.0};
  const std::vector<double> b{1.0, 1.0, 1e16, -1e16};
  CHECK(pair_stats(a).sum == 2.0);
  CHECK(pair_stats(b).sum == 2.0);
}

TEST_CASE("z statistic") {
  const PairStats s = pair_stats_from_sums(5, 17, 2);
  CHECK(z_statistic(s) == Approx(2.3570226039551585).epsilon(1e-12));
  const std::vector<double> v{4, 1};
  CHECK(z_statistic(pair_stats(v)) == Approx(oracle::z_direct(v)).epsilon(1e-14));
  CHECK_THROWS_AS(z_statistic(pair_stats_from_sums(1, 1, 1)), PreconditionError);
}

TEST_CASE("gamma roots") {
  GammaRoots g = gamma_roots(5, 13, 2);
  CHECK(g.max == Approx(7.0710678118654755).epsilon(1e-12));
  CHECK(g.min == -g.max);
  g = gamma_roots(0, 5, 3);
  CHECK(g.min == 0.0);
  CHECK(g.max == 0.0);
  g = gamma_roots(5, 17, 2);
  CHECK(g.max == Approx(2.3570226039551585).epsilon(1e-12));
  CHECK(g.max == Approx(z_statistic(pair_stats_from_sums(5, 17, 2))).epsilon(1e-12));
  g = gamma_roots(4, 8, 2);  // {2,2}
  CHECK(g.infinite);
}

TEST_CASE("spread is never negative") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-10, 10);
  std::uniform_int_distribution<int> len(1, 12);
  for (int t = 0; t < 10000; ++t) {
    std::vector<double> v(len(rng));
    for (double& x : v) x = u(rng);
    const PairStats s = pair_stats(v);
    CHECK(s.sigma_hat >= 0.0);
    const double n = static_cast<double>(s.n);
    // Rounding may push nQ - S^2 slightly below zero; allow relative slack.
    CHECK(n * s.sum_squares - s.sum * s.sum >= -1e-12 * n * s.sum_squares);
  }
}

TEST_CASE("normal upper tail") {
  CHECK(normal_upper_tail(0.0) == 0.5);
  CHECK(normal_upper_tail(1.959964) == Approx(0.025).margin(1e-6));
  CHECK(normal_upper_tail(kInf) == 0.0);
  CHECK(normal_upper_tail(-kInf) == 1.0);
  for (double z = -8.0; z <= 8.0; z += 0.25) {
    CHECK(normal_upper_tail(z) == Approx(oracle::normal_tail(z)).margin(1e-10));
    CHECK(normal_upper_tail(z) + normal_upper_tail(-z) == Approx(1.0).margin(1e-10));
  }
}

TEST_CASE("p values") {
  const PValues p = p_values(12.257, 0.927);
  CHECK(p.p_min < 1e-30);
  CHECK(p.p_max == Approx(0.1770).margin(1e-3));
  const PValues eq = p_values(1.3, 1.3);
  CHECK(eq.p_min == eq.p_max);
  const PValues lim = p_values(kInf, -kInf);
  CHECK(lim.p_min == 0.0);
  CHECK(lim.p_max == 1.0);
  CHECK_THROWS_AS(p_values(0.0, 1.0), PreconditionError);
}

TEST_CASE("robustness classification") {
  CHECK(classify_robustness(0.9908, 0.9908, 0.05) == Robustness::absolute_robust);
  CHECK(classify_robustness(0.01, 0.04, 0.05) == Robustness::alpha_robust);
  CHECK(classify_robustness(0.01, 0.90, 0.05) == Robustness::not_robust);
}

TEST_CASE("robustness margin") {
  RobustnessMargin m = robustness_margin(4.0, 0.05);
  CHECK(m.z_crit == Approx(1.6448536269514722).margin(1e-9));
  CHECK(*m.relative_margin == Approx(0.589).margin(1e-3));
  m = robustness_margin(2.0, 0.05);
  CHECK(*m.relative_margin == Approx(0.178).margin(1e-3));
  m = robustness_margin(critical_z(0.05), 0.05);
  CHECK(m.absolute_margin == 0.0);
  CHECK_FALSE(robustness_margin(0.0, 0.05).relative_margin);
}

TEST_CASE("assignment validation") {
  const auto e = EffectMatrix::from_entries(2, 2, {{0, 0, 4}, {1, 1, 1}});
  CHECK_FALSE(assignment_violation({{{0, 0}, {1, 1}}}, e.match()));
  CHECK(assignment_violation({{{0, 1}}}, e.match()));
  CHECK_THROWS_AS(assignment_stats({{{0, 0}, {0, 0}}}, e), PreconditionError);
  const PairStats s = assignment_stats({{{0, 0}, {1, 1}}}, e);
  CHECK(s.sum == 5);
}
