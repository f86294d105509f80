#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string_view>
#include <vector>

#include "robustz/detail/exact_sum.hpp"
#include "robustz/detail/union_find.hpp"
#include "robustz/error.hpp"
#include "robustz/matching.hpp"
#include "robustz/statistic.hpp"

namespace robustz {

enum class Direction { min, max };

inline std::string_view to_string(Direction d) { return d == Direction::min ? "min" : "max"; }

/// Sign regime of a solution. Cases 1 and 2 are the quadratic cases solved
/// greedily, case 3 the linear one solved by assignment. `fallback` marks a
/// plain size-n matching returned when no case succeeded.
enum class CaseTag { min_case1, min_case2, min_case3, max_case1, max_case2, max_case3, fallback };

inline std::string_view to_string(CaseTag c) {
  switch (c) {
    case CaseTag::min_case1: return "min_case1";
    case CaseTag::min_case2: return "min_case2";
    case CaseTag::min_case3: return "min_case3";
    case CaseTag::max_case1: return "max_case1";
    case CaseTag::max_case2: return "max_case2";
    case CaseTag::max_case3: return "max_case3";
    case CaseTag::fallback: return "fallback";
  }
  return "?";
}

/// Which greedy case to run: case1 targets S >= 0, case2 targets S <= 0.
enum class GreedyCase { case1, case2 };

struct EffectEntry {
  double value;
  std::size_t treated;
  std::size_t control;

  friend bool operator==(const EffectEntry&, const EffectEntry&) = default;
};

/// Eligible effects in ascending order, ties broken by (treated, control).
/// Also indexes entry positions per treated row and per control column.
class SortedEffectList {
 public:
  SortedEffectList() = default;

  explicit SortedEffectList(const EffectMatrix& effects)
      : treated_count_(effects.match().treated_count()),
        control_count_(effects.match().control_count()) {
    entries_.reserve(effects.nnz());
    for (std::size_t k = 0; k < effects.nnz(); ++k) {
      const Pair p = effects.pair(k);
      entries_.push_back({effects.value(k), p.treated, p.control});
    }
    std::sort(entries_.begin(), entries_.end(), before);
    build_index();
  }

  [[nodiscard]] std::size_t size() const { return entries_.size(); }
  [[nodiscard]] const EffectEntry& operator[](std::size_t r) const { return entries_[r]; }
  [[nodiscard]] const std::vector<EffectEntry>& entries() const { return entries_; }
  [[nodiscard]] std::size_t treated_count() const { return treated_count_; }
  [[nodiscard]] std::size_t control_count() const { return control_count_; }

  [[nodiscard]] std::span<const std::size_t> row_positions(std::size_t i) const {
    return std::span<const std::size_t>(row_pos_).subspan(row_start_[i], row_start_[i + 1] - row_start_[i]);
  }
  [[nodiscard]] std::span<const std::size_t> column_positions(std::size_t j) const {
    return std::span<const std::size_t>(col_pos_).subspan(col_start_[j], col_start_[j + 1] - col_start_[j]);
  }

  /// First position whose value is >= v.
  [[nodiscard]] std::size_t lower_bound(double v) const {
    return static_cast<std::size_t>(
        std::lower_bound(entries_.begin(), entries_.end(), v,
                         [](const EffectEntry& e, double x) { return e.value < x; }) -
        entries_.begin());
  }

  /// The list of the negated effects, in linear time.
  [[nodiscard]] SortedEffectList reflected() const {
    SortedEffectList out;
    out.treated_count_ = treated_count_;
    out.control_count_ = control_count_;
    out.entries_.assign(entries_.rbegin(), entries_.rend());
    for (EffectEntry& e : out.entries_) e.value = -e.value;
    // Equal values came out in descending (i, j) order; restore ascending.
    for (auto first = out.entries_.begin(); first != out.entries_.end();) {
      auto last = std::find_if(first, out.entries_.end(),
                               [&](const EffectEntry& e) { return e.value != first->value; });
      std::reverse(first, last);
      first = last;
    }
    out.build_index();
    return out;
  }

  static bool before(const EffectEntry& a, const EffectEntry& b) {
    if (a.value != b.value) return a.value < b.value;
    if (a.treated != b.treated) return a.treated < b.treated;
    return a.control < b.control;
  }

 private:
  void build_index() {
    row_start_.assign(treated_count_ + 1, 0);
    col_start_.assign(control_count_ + 1, 0);
    for (const EffectEntry& e : entries_) {
      ++row_start_[e.treated + 1];
      ++col_start_[e.control + 1];
    }
    for (std::size_t i = 0; i < treated_count_; ++i) row_start_[i + 1] += row_start_[i];
    for (std::size_t j = 0; j < control_count_; ++j) col_start_[j + 1] += col_start_[j];
    row_pos_.resize(entries_.size());
    col_pos_.resize(entries_.size());
    std::vector<std::size_t> rfill(row_start_.begin(), row_start_.end() - 1);
    std::vector<std::size_t> cfill(col_start_.begin(), col_start_.end() - 1);
    for (std::size_t r = 0; r < entries_.size(); ++r) {
      row_pos_[rfill[entries_[r].treated]++] = r;
      col_pos_[cfill[entries_[r].control]++] = r;
    }
  }

  std::size_t treated_count_ = 0;
  std::size_t control_count_ = 0;
  std::vector<EffectEntry> entries_;
  std::vector<std::size_t> row_start_{0}, row_pos_;
  std::vector<std::size_t> col_start_{0}, col_pos_;
};

inline SortedEffectList build_sorted_list(const EffectMatrix& effects) {
  return SortedEffectList(effects);
}

/// A feasible assignment for one case together with its gamma.
struct GreedySolution {
  Assignment assignment;
  PairStats stats;
  double gamma = 0.0;
  CaseTag case_tag = CaseTag::min_case1;
};

namespace detail {

// Removal state of one greedy run over a shared, read-only list.
class GreedyState {
 public:
  explicit GreedyState(const SortedEffectList& list) : list_(list), alive_(list.size()) {}

  std::size_t first() { return alive_.next(0); }
  std::size_t last() { return list_.size() == 0 ? end() : alive_.prev(list_.size() - 1); }
  std::size_t next(std::size_t pos) { return alive_.next(pos); }
  std::size_t prev(std::size_t pos) { return pos == 0 ? end() : alive_.prev(pos - 1); }
  [[nodiscard]] std::size_t end() const { return list_.size(); }

  // Takes entry `pos` and deletes every entry sharing its row or column.
  void assign(std::size_t pos) {
    const EffectEntry& e = list_[pos];
    chosen_.push_back(pos);
    for (std::size_t r : list_.row_positions(e.treated)) alive_.erase(r);
    for (std::size_t r : list_.column_positions(e.control)) alive_.erase(r);
  }

  [[nodiscard]] const std::vector<std::size_t>& chosen() const { return chosen_; }

  [[nodiscard]] double chosen_sum() const {
    ExactAccumulator acc;
    for (std::size_t r : chosen_) acc.add(list_[r].value);
    return acc.value();
  }

 private:
  const SortedEffectList& list_;
  AliveIndex alive_;
  std::vector<std::size_t> chosen_;
};

inline GreedySolution finish(const SortedEffectList& list, const std::vector<std::size_t>& chosen,
                             GreedyCase which, CaseTag tag) {
  GreedySolution sol;
  std::vector<std::pair<Pair, double>> picked;
  picked.reserve(chosen.size());
  for (std::size_t r : chosen) picked.push_back({{list[r].treated, list[r].control}, list[r].value});
  std::sort(picked.begin(), picked.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<double> values;
  for (const auto& [p, v] : picked) {
    sol.assignment.pairs.push_back(p);
    values.push_back(v);
  }
  sol.stats = pair_stats(values);
  sol.case_tag = tag;
  if (sol.stats.degenerate) {
    sol.gamma = z_statistic(sol.stats);
  } else {
    const GammaRoots roots = gamma_roots(sol.stats.sum, sol.stats.sum_squares, sol.stats.n);
    sol.gamma = which == GreedyCase::case1 ? roots.max : roots.min;
  }
  return sol;
}

// Case 2: take the most negative remaining effect n times.
inline std::optional<GreedySolution> greedy_case2(const SortedEffectList& list, std::size_t n,
                                                  CaseTag tag) {
  GreedyState st(list);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t p = st.first();
    if (p == st.end() || list[p].value > 0.0) return std::nullopt;
    st.assign(p);
  }
  if (st.chosen_sum() > 0.0) return std::nullopt;
  return finish(list, st.chosen(), GreedyCase::case2, tag);
}

// Case 1: couples (anchor, partner) with a non-negative pair sum that is as
// small as possible; the anchor is the remaining extreme with the smaller
// magnitude. Odd n ends with one entry that keeps the running sum >= 0.
inline std::optional<GreedySolution> greedy_case1(const SortedEffectList& list, std::size_t n,
                                                  CaseTag tag) {
  GreedyState st(list);
  std::vector<std::size_t> stamp(list.size(), 0);  // anchor exclusion, per round
  std::size_t round = 0;

  auto find_partner = [&](std::size_t anchor) -> std::size_t {
    const EffectEntry& a = list[anchor];
    for (std::size_t q = st.next(list.lower_bound(-a.value)); q != st.end(); q = st.next(q + 1)) {
      const EffectEntry& e = list[q];
      if (q == anchor || e.treated == a.treated || e.control == a.control) continue;
      if (a.value + e.value >= 0.0) return q;
    }
    return st.end();
  };

  for (std::size_t couple = 0; couple < n / 2; ++couple) {
    ++round;
    for (;;) {
      std::size_t lo = st.first();
      while (lo != st.end() && stamp[lo] == round) lo = st.next(lo + 1);
      std::size_t hi = st.last();
      while (hi != st.end() && stamp[hi] == round) hi = st.prev(hi);
      if (lo == st.end() || hi == st.end()) return std::nullopt;
      if (list[hi].value < 0.0) return std::nullopt;
      const std::size_t anchor = std::abs(list[lo].value) <= list[hi].value ? lo : hi;
      const std::size_t partner = find_partner(anchor);
      if (partner == st.end()) {
        stamp[anchor] = round;
        continue;
      }
      st.assign(anchor);
      st.assign(partner);
      break;
    }
  }

  if (n % 2 == 1) {
    ExactAccumulator running;
    for (std::size_t r : st.chosen()) running.add(list[r].value);
    // The rounded sum is within one ulp, so start one step below its negation.
    const double floor = std::nextafter(-running.value(), -kInf);
    std::size_t q = st.next(list.lower_bound(floor));
    for (; q != st.end(); q = st.next(q + 1)) {
      ExactAccumulator trial = running;
      trial.add(list[q].value);
      if (trial.value() >= 0.0) break;
    }
    if (q == st.end()) return std::nullopt;
    st.assign(q);
  }
  if (st.chosen_sum() < 0.0) return std::nullopt;
  return finish(list, st.chosen(), GreedyCase::case1, tag);
}

}  // namespace detail

/// Greedy scheme for the minimisation cases. Case 2 returns gamma <= 0 with
/// S <= 0; case 1 returns gamma >= 0 with S >= 0. Nothing when the scheme
/// cannot place n pairs under the case's sign constraint.
inline std::optional<GreedySolution> greedy_min(const SortedEffectList& list, std::size_t n,
                                                GreedyCase which) {
  if (n < 2) throw PreconditionError("greedy solvers need n >= 2");
  return which == GreedyCase::case1 ? detail::greedy_case1(list, n, CaseTag::min_case1)
                                    : detail::greedy_case2(list, n, CaseTag::min_case2);
}

/// Maximisation by reflection: run greedy_min on the negated effects with the
/// mirrored case (max case1 <-> min case2, max case2 <-> min case1) and negate
/// the result. `reflected` must be `list.reflected()`; pass it in to reuse it.
inline std::optional<GreedySolution> greedy_max_reflected(const SortedEffectList& reflected,
                                                          std::size_t n, GreedyCase which) {
  if (n < 2) throw PreconditionError("greedy solvers need n >= 2");
  auto sol = which == GreedyCase::case1
                 ? detail::greedy_case2(reflected, n, CaseTag::max_case1)
                 : detail::greedy_case1(reflected, n, CaseTag::max_case2);
  if (!sol) return std::nullopt;
  sol->stats.sum = -sol->stats.sum;
  sol->gamma = -sol->gamma;
  return sol;
}

inline std::optional<GreedySolution> greedy_max(const SortedEffectList& list, std::size_t n,
                                                GreedyCase which) {
  return greedy_max_reflected(list.reflected(), n, which);
}

}  // namespace robustz
