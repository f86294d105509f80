#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "robustz/oracle.hpp"
#include "support/oracles.hpp"

using namespace robustz;
using Catch::Approx;

TEST_CASE("oracle on the positive 2x2") {
  const OracleResult o = enumerate_extrema(EffectMatrix::dense({{4, 3}, {2, 1}}), 2);
  CHECK(o.z_max == Approx(7.0710678118654755).epsilon(1e-12));
  CHECK(o.z_min == Approx(2.3570226039551585).epsilon(1e-12));
  CHECK(o.argmax.pairs == std::vector<Pair>{{0, 1}, {1, 0}});
  CHECK(o.argmin.pairs == std::vector<Pair>{{0, 0}, {1, 1}});
  CHECK(o.enumerated == 2);
  CHECK_FALSE(o.degenerate_seen);
}

TEST_CASE("oracle reports degenerate extrema") {
  const OracleResult o = enumerate_extrema(EffectMatrix::dense({{-1, 2}, {2, 3}}), 2);
  CHECK(o.z_min == Approx(0.7071067811865476).epsilon(1e-12));
  CHECK(o.z_max == kInf);
  CHECK(o.degenerate_seen);
}

TEST_CASE("oracle errors") {
  const auto single = EffectMatrix::from_entries(2, 2, {{0, 0, 1}});
  CHECK_THROWS_AS(enumerate_extrema(single, 2), MatchingError);
  CHECK_THROWS_WITH(enumerate_extrema(single, 2), Catch::Matchers::ContainsSubstring("no assignment"));
  const auto full = EffectMatrix::dense(std::vector<std::vector<double>>(6, std::vector<double>(6, 1.0)));
  CHECK_THROWS_AS(enumerate_extrema(full, 6, 100), BudgetExceededError);
  CHECK_THROWS_AS(enumerate_extrema(full, 1), PreconditionError);
}

TEST_CASE("full k x k with n = k enumerates k! assignments") {
  std::uint64_t fact = 1;
  for (std::size_t k = 2; k <= 6; ++k) {
    fact *= k;
    std::vector<std::vector<double>> m(k, std::vector<double>(k));
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = 0; j < k; ++j) m[i][j] = double(i * k + j);
    CHECK(enumerate_extrema(EffectMatrix::dense(m), k).enumerated == fact);
  }
}

TEST_CASE("oracle agrees with subset enumeration, negation and relabeling") {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<std::size_t> side(2, 5), nn(2, 4);
  for (int t = 0; t < 200; ++t) {
    const std::size_t nt = side(rng), nc = side(rng);
    const auto e = oracle::random_effects(rng, nt, nc, 0.6);
    const std::size_t n = nn(rng);
    const oracle::Extrema ex = oracle::subset_extrema(e, n);
    if (ex.count == 0) {
      CHECK_THROWS_AS(enumerate_extrema(e, n), MatchingError);
      continue;
    }
    const OracleResult o = enumerate_extrema(e, n);
    CHECK(o.enumerated == ex.count);
    CHECK(o.z_max == Approx(ex.z_max).epsilon(1e-12));
    CHECK(o.z_min == Approx(ex.z_min).epsilon(1e-12));

    const OracleResult neg = enumerate_extrema(e.negated(), n);
    CHECK(o.z_max == -neg.z_min);
    CHECK(o.z_min == -neg.z_max);

    // Reverse both index orders.
    std::vector<EffectMatrix::Entry> rel;
    for (std::size_t k = 0; k < e.nnz(); ++k)
      rel.push_back({nt - 1 - e.pair(k).treated, nc - 1 - e.pair(k).control, e.value(k)});
    const OracleResult r = enumerate_extrema(EffectMatrix::from_entries(nt, nc, rel), n);
    CHECK(r.z_max == o.z_max);
    CHECK(r.z_min == o.z_min);
  }
}
