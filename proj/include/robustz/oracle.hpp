#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "robustz/error.hpp"
#include "robustz/matching.hpp"
#include "robustz/statistic.hpp"

namespace robustz {

inline constexpr std::uint64_t kDefaultOracleBudget = 10'000'000;

struct OracleResult {
  double z_max = -kInf;
  double z_min = kInf;
  Assignment argmax;
  Assignment argmin;
  std::uint64_t enumerated = 0;
  bool degenerate_seen = false;
};

/// Exact extrema of Z over every one-to-one assignment of exactly n eligible
/// pairs, by backtracking over treated rows in index order. The first
/// assignment in enumeration order wins ties. Throws BudgetExceededError
/// once more than `budget` assignments would be evaluated.
inline OracleResult enumerate_extrema(const EffectMatrix& effects, std::size_t n,
                                      std::uint64_t budget = kDefaultOracleBudget) {
  if (n < 2) throw PreconditionError("oracle needs n >= 2");
  if (budget < 1) throw PreconditionError("oracle budget must be positive");
  const MatchMatrix& match = effects.match();

  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < match.treated_count(); ++i)
    if (!match.row(i).empty()) rows.push_back(i);

  OracleResult out;
  std::vector<char> used(match.control_count(), 0);
  std::vector<Pair> picked;
  std::vector<double> values;
  picked.reserve(n);
  values.reserve(n);

  auto visit = [&]() {
    if (++out.enumerated > budget)
      throw BudgetExceededError("oracle budget of " + std::to_string(budget) +
                                " assignments exceeded");
    const PairStats s = pair_stats(values);
    if (s.degenerate) out.degenerate_seen = true;
    const double z = z_statistic(s);
    if (z > out.z_max || out.argmax.pairs.empty()) {
      out.z_max = z;
      out.argmax.pairs = picked;
    }
    if (z < out.z_min || out.argmin.pairs.empty()) {
      out.z_min = z;
      out.argmin.pairs = picked;
    }
  };

  auto descend = [&](auto&& self, std::size_t r) -> void {
    if (picked.size() == n) {
      visit();
      return;
    }
    if (picked.size() + (rows.size() - r) < n) return;
    const std::size_t i = rows[r];
    const auto row = match.row(i);
    const std::size_t base = *match.position(row.front());
    for (std::size_t e = 0; e < row.size(); ++e) {
      const std::size_t j = row[e].control;
      if (used[j]) continue;
      used[j] = 1;
      picked.push_back(row[e]);
      values.push_back(effects.value(base + e));
      self(self, r + 1);
      picked.pop_back();
      values.pop_back();
      used[j] = 0;
    }
    self(self, r + 1);
  };
  descend(descend, 0);

  if (out.enumerated == 0) throw MatchingError("no assignment of " + std::to_string(n) + " pairs");
  return out;
}

}  // namespace robustz
