#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "robustz/greedy.hpp"
#include "robustz/oracle.hpp"
#include "support/oracles.hpp"

using namespace robustz;
using Catch::Approx;

namespace {

const EffectMatrix kPos = EffectMatrix::dense({{4, 3}, {2, 1}});
const EffectMatrix kNeg = EffectMatrix::dense({{-4, -2}, {-3, -1}});
const EffectMatrix kMixed = EffectMatrix::dense({{-1, 2}, {2, 3}});

Assignment pairs(std::initializer_list<Pair> p) { return {std::vector<Pair>(p)}; }

}  // namespace

TEST_CASE("sorted list order") {
  const SortedEffectList l = build_sorted_list(kPos);
  REQUIRE(l.size() == 4);
  CHECK(l[0] == EffectEntry{1, 1, 1});
  CHECK(l[1] == EffectEntry{2, 1, 0});
  CHECK(l[2] == EffectEntry{3, 0, 1});
  CHECK(l[3] == EffectEntry{4, 0, 0});

  const auto z = EffectMatrix::from_entries(2, 2, {{0, 0, 0.0}, {1, 1, 5}});
  CHECK(build_sorted_list(z)[0].value == 0.0);

  const auto tie = EffectMatrix::from_entries(2, 2, {{1, 0, 2}, {0, 1, 2}});
  const SortedEffectList t = build_sorted_list(tie);
  CHECK(t[0] == EffectEntry{2, 0, 1});
  CHECK(t[1] == EffectEntry{2, 1, 0});
}

TEST_CASE("reflected list matches sorting the negation") {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> small(-3, 3);
  for (int t = 0; t < 200; ++t) {
    std::vector<EffectMatrix::Entry> ent;
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t j = 0; j < 4; ++j) ent.push_back({i, j, double(small(rng))});
    const auto e = EffectMatrix::from_entries(4, 4, ent);
    CHECK(build_sorted_list(e).reflected().entries() == build_sorted_list(e.negated()).entries());
  }
}

TEST_CASE("greedy min case 2 on negative effects") {
  const auto sol = greedy_min(build_sorted_list(kNeg), 2, GreedyCase::case2);
  REQUIRE(sol);
  CHECK(sol->assignment == pairs({{0, 0}, {1, 1}}));
  CHECK(sol->stats.sum == -5);
  CHECK(sol->stats.sum_squares == 17);
  CHECK(sol->gamma == Approx(-2.3570226039551585).epsilon(1e-12));
  CHECK(sol->case_tag == CaseTag::min_case2);
}

TEST_CASE("greedy min case 2 rejects a positive completion") {
  CHECK_FALSE(greedy_min(build_sorted_list(kMixed), 2, GreedyCase::case2));
}

TEST_CASE("greedy min case 1 couples the anchor with its only partner") {
  const auto sol = greedy_min(build_sorted_list(kMixed), 2, GreedyCase::case1);
  REQUIRE(sol);
  CHECK(sol->assignment == pairs({{0, 0}, {1, 1}}));
  CHECK(sol->stats.sum == 2);
  CHECK(sol->stats.sum_squares == 10);
  CHECK(sol->gamma == Approx(0.7071067811865476).epsilon(1e-12));
  CHECK(sol->gamma == Approx(enumerate_extrema(kMixed, 2).z_min).epsilon(1e-12));
}

TEST_CASE("greedy max examples") {
  auto sol = greedy_max(build_sorted_list(kPos), 2, GreedyCase::case1);
  REQUIRE(sol);
  CHECK(sol->assignment == pairs({{0, 0}, {1, 1}}));
  CHECK(sol->gamma == Approx(2.3570226039551585).epsilon(1e-12));
  CHECK(sol->case_tag == CaseTag::max_case1);

  CHECK_FALSE(greedy_max(build_sorted_list(kNeg), 2, GreedyCase::case1));

  sol = greedy_max(build_sorted_list(kNeg), 2, GreedyCase::case2);
  REQUIRE(sol);
  CHECK(sol->gamma == Approx(-2.3570226039551585).epsilon(1e-12));
  CHECK(sol->gamma == Approx(enumerate_extrema(kNeg, 2).z_max).epsilon(1e-12));
  CHECK(sol->stats.sum == -5);
}

TEST_CASE("n below two is rejected") {
  CHECK_THROWS_AS(greedy_min(build_sorted_list(kPos), 1, GreedyCase::case1), PreconditionError);
  CHECK_THROWS_AS(greedy_max(build_sorted_list(kPos), 0, GreedyCase::case2), PreconditionError);
}

TEST_CASE("exhausted list is infeasible") {
  CHECK_FALSE(greedy_min(build_sorted_list(kNeg), 3, GreedyCase::case2));
  CHECK_FALSE(greedy_min(build_sorted_list(kPos), 3, GreedyCase::case1));
}

TEST_CASE("randomized feasibility, reflection and oracle bounds") {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<std::size_t> side(2, 5), nn(2, 4);
  std::uniform_real_distribution<double> dens(0.5, 1.0);
  int checked = 0;
  for (int t = 0; t < 400; ++t) {
    const auto e = oracle::random_effects(rng, side(rng), side(rng), dens(rng));
    if (e.nnz() == 0 || e.nnz() > 20) continue;
    const std::size_t n = nn(rng);
    const SortedEffectList list = build_sorted_list(e);
    const SortedEffectList neg = build_sorted_list(e.negated());
    const oracle::Extrema ex = oracle::subset_extrema(e, n);
    for (GreedyCase c : {GreedyCase::case1, GreedyCase::case2}) {
      const auto lo = greedy_min(list, n, c);
      const auto hi = greedy_max(list, n, c);
      for (const auto* sol : {&lo, &hi}) {
        if (!*sol) continue;
        const GreedySolution& s = **sol;
        CHECK(s.assignment.size() == n);
        CHECK_FALSE(assignment_violation(s.assignment, e.match()));
        const bool wants_nonneg = s.case_tag == CaseTag::min_case1 || s.case_tag == CaseTag::max_case1;
        CHECK((wants_nonneg ? assignment_stats(s.assignment, e).sum >= 0
                            : assignment_stats(s.assignment, e).sum <= 0));
        CHECK((wants_nonneg ? s.gamma >= 0 : s.gamma <= 0));
        ++checked;
      }
      if (lo) CHECK(lo->gamma >= ex.z_min - 1e-9 * std::max(1.0, std::abs(ex.z_min)));
      if (hi) CHECK(hi->gamma <= ex.z_max + 1e-9 * std::max(1.0, std::abs(ex.z_max)));

      // Reflection: max on e equals the negated mirrored min on -e.
      const GreedyCase mirror = c == GreedyCase::case1 ? GreedyCase::case2 : GreedyCase::case1;
      const auto ref = greedy_min(neg, n, mirror);
      REQUIRE(hi.has_value() == ref.has_value());
      if (hi) {
        CHECK(hi->gamma == -ref->gamma);
        CHECK(hi->assignment == ref->assignment);
      }
    }
    // Determinism.
    const auto again = greedy_min(build_sorted_list(e), n, GreedyCase::case1);
    const auto first = greedy_min(list, n, GreedyCase::case1);
    REQUIRE(again.has_value() == first.has_value());
    if (first) CHECK(first->assignment == again->assignment);
  }
  CHECK(checked > 100);
}

TEST_CASE("odd n ends with a single entry keeping S non-negative") {
  const auto e = EffectMatrix::dense({{-5, 1, 7}, {2, -1, 4}, {3, 6, -2}});
  const auto sol = greedy_min(build_sorted_list(e), 3, GreedyCase::case1);
  REQUIRE(sol);
  CHECK(sol->assignment.size() == 3);
  CHECK(sol->stats.sum >= 0);
}
