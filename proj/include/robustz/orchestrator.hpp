#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstddef>
#include <exception>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "robustz/assignment.hpp"
#include "robustz/error.hpp"
#include "robustz/greedy.hpp"
#include "robustz/matching.hpp"
#include "robustz/statistic.hpp"

namespace robustz {

struct LadderStep {
  CaseTag tag;
  bool feasible;
};

/// Result of the case ladder for one direction. `solution` is empty when no
/// assignment of n pairs exists.
struct SolveOutcome {
  Direction direction = Direction::min;
  std::optional<GreedySolution> solution;
  std::vector<LadderStep> trace;

  [[nodiscard]] bool fallback() const {
    return solution && solution->case_tag == CaseTag::fallback;
  }
};

struct DirectionReport {
  SolveOutcome outcome;
  double gamma = 0.0;         // value returned by the ladder
  double z_assignment = 0.0;  // Z of the returned assignment
  double z = 0.0;             // reported extremum after cross-checking both directions
  double ms = 0.0;
};

struct TestResult {
  std::size_t n = 0;
  double alpha = 0.05;
  DirectionReport min;
  DirectionReport max;
  double z_min = 0.0;
  double z_max = 0.0;
  double p_min = 0.0;
  double p_max = 1.0;
  Robustness classification = Robustness::not_robust;
  bool degenerate = false;  // either returned assignment has zero spread
};

struct SweepRow {
  std::size_t n = 0;
  std::optional<TestResult> result;  // empty: no n pairs possible
  double ms = 0.0;
};

/// Which solve outcomes count as feasible when searching for the largest n.
enum class Feasibility {
  any_solution,  // fallback matchings count
  ladder_only    // only the three sign cases count
};

/// The case ladder and everything built on it, for one effect matrix. The
/// sorted lists and optimal matchings are computed on first use and shared
/// by later calls, which may come from several threads.
class RobustZTest {
 public:
  explicit RobustZTest(EffectMatrix effects)
      : effects_(std::move(effects)), cache_(std::make_unique<Cache>()) {}

  [[nodiscard]] const EffectMatrix& effects() const { return effects_; }

  /// Size of a maximum one-to-one matching over the eligible pairs.
  [[nodiscard]] std::size_t max_pairs() const {
    return effects_.nnz() == 0 ? 0 : min_matching().cardinality();
  }

  /// Min tries case 2, case 3, case 1; max tries case 1, case 3, case 2. The
  /// first feasible case wins. If all fail but n pairs can be matched, the
  /// case 3 matching is returned as a fallback with its actual Z.
  [[nodiscard]] SolveOutcome solve(std::size_t n, Direction dir) const {
    if (n < 2) throw PreconditionError("n must be at least 2");
    SolveOutcome out;
    out.direction = dir;
    if (max_pairs() < n) return out;

    auto attempt = [&](CaseTag tag, std::optional<GreedySolution> sol) {
      out.trace.push_back({tag, sol.has_value()});
      if (sol) out.solution = std::move(sol);
      return out.solution.has_value();
    };
    if (dir == Direction::min) {
      if (attempt(CaseTag::min_case2, greedy_min(sorted(), n, GreedyCase::case2))) return out;
      if (attempt(CaseTag::min_case3, case3_from_matching(effects_, min_matching(), n, dir)))
        return out;
      if (attempt(CaseTag::min_case1, greedy_min(sorted(), n, GreedyCase::case1))) return out;
    } else {
      if (attempt(CaseTag::max_case1, greedy_max_reflected(reflected(), n, GreedyCase::case1)))
        return out;
      if (attempt(CaseTag::max_case3, case3_from_matching(effects_, max_matching(), n, dir)))
        return out;
      if (attempt(CaseTag::max_case2, greedy_max_reflected(reflected(), n, GreedyCase::case2)))
        return out;
    }
    const CostMatching& m = dir == Direction::min ? min_matching() : max_matching();
    out.solution = case3_from_matching(effects_, m, n, dir, false);
    out.solution->case_tag = CaseTag::fallback;
    out.solution->gamma = z_statistic(out.solution->stats);
    out.trace.push_back({CaseTag::fallback, true});
    return out;
  }

  /// Both directions, P-values and classification. Throws NoPairsError when
  /// n pairs cannot be matched.
  [[nodiscard]] TestResult run_test(std::size_t n, double alpha) const {
    if (!(alpha > 0.0 && alpha < 1.0)) throw PreconditionError("alpha must lie in (0,1)");
    TestResult r;
    r.n = n;
    r.alpha = alpha;
    r.min = timed(n, Direction::min);
    r.max = timed(n, Direction::max);
    if (!r.min.outcome.solution || !r.max.outcome.solution)
      throw NoPairsError(std::to_string(n) + " pairs are not possible");

    // Both returned assignments are witnesses for both extrema.
    const double lo = std::min(r.min.z_assignment, r.max.z_assignment);
    const double hi = std::max(r.min.z_assignment, r.max.z_assignment);
    r.min.z = std::min(r.min.gamma, lo);
    r.max.z = std::max(r.max.gamma, hi);
    r.z_min = r.min.z;
    r.z_max = r.max.z;
    const PValues p = p_values(r.z_max, r.z_min);
    r.p_min = p.p_min;
    r.p_max = p.p_max;
    r.classification = classify_robustness(r.p_min, r.p_max, alpha);
    r.degenerate = r.min.outcome.solution->stats.degenerate ||
                   r.max.outcome.solution->stats.degenerate;
    return r;
  }

  /// One row per n in n_min, n_min + step, ..., up to n_max, in n order.
  /// With jobs > 1 the values of n are solved concurrently.
  [[nodiscard]] std::vector<SweepRow> sweep(std::size_t n_min, std::size_t n_max, std::size_t step,
                                            double alpha, unsigned jobs = 1) const {
    if (n_min < 2 || n_min > n_max) throw PreconditionError("sweep needs 2 <= n_min <= n_max");
    if (step < 1) throw PreconditionError("sweep step must be positive");
    std::vector<SweepRow> rows;
    for (std::size_t n = n_min; n <= n_max; n += step) rows.push_back({n, std::nullopt, 0.0});

    auto work = [&](SweepRow& row) {
      const auto t0 = std::chrono::steady_clock::now();
      try {
        row.result = run_test(row.n, alpha);
      } catch (const NoPairsError&) {
        row.result.reset();
      }
      row.ms = elapsed_ms(t0);
    };
    if (jobs <= 1 || rows.size() < 2) {
      for (SweepRow& row : rows) work(row);
      return rows;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_lock;
    std::vector<std::thread> pool;
    const unsigned k = std::min<unsigned>(jobs, static_cast<unsigned>(rows.size()));
    for (unsigned t = 0; t < k; ++t)
      pool.emplace_back([&] {
        for (std::size_t idx; (idx = next++) < rows.size();) {
          try {
            work(rows[idx]);
          } catch (...) {
            std::lock_guard lock(failure_lock);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    for (std::thread& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
    return rows;
  }

  /// Largest n in [n_min, n_max] at which both directions are feasible,
  /// found by bisection. If bisection finds nothing the range is scanned
  /// downward from n_max.
  [[nodiscard]] std::optional<std::size_t> find_max_feasible_n(
      std::size_t n_min, std::size_t n_max, Feasibility rule = Feasibility::any_solution) const {
    if (n_min < 2 || n_min > n_max)
      throw PreconditionError("binary search needs 2 <= n_min <= n_max");
    std::map<std::size_t, bool> memo;
    auto feasible = [&](std::size_t n) {
      auto it = memo.find(n);
      if (it != memo.end()) return it->second;
      bool ok = n <= max_pairs();
      for (Direction d : {Direction::min, Direction::max}) {
        if (!ok) break;
        const SolveOutcome s = solve(n, d);
        ok = s.solution && (rule == Feasibility::any_solution || !s.fallback());
      }
      memo[n] = ok;
      return ok;
    };

    std::optional<std::size_t> best;
    std::size_t lo = n_min, hi = std::min(n_max, std::max(n_min, max_pairs()));
    while (lo <= hi) {
      const std::size_t mid = lo + (hi - lo) / 2;
      if (feasible(mid)) {
        best = mid;
        lo = mid + 1;
      } else {
        if (mid == n_min) break;
        hi = mid - 1;
      }
    }
    if (best) return best;
    for (std::size_t n = std::min(n_max, max_pairs()); n >= n_min && n >= 2; --n)
      if (feasible(n)) return n;
    return std::nullopt;
  }

  /// Default upper end of the n search: the size of the smaller group.
  [[nodiscard]] std::size_t default_n_max() const {
    return std::min(effects_.match().treated_count(), effects_.match().control_count());
  }

 private:
  struct Cache {
    std::once_flag sorted_once, reflected_once, min_once, max_once;
    SortedEffectList sorted, reflected;
    CostMatching min_matching, max_matching;
  };

  static double elapsed_ms(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
        .count();
  }

  DirectionReport timed(std::size_t n, Direction dir) const {
    const auto t0 = std::chrono::steady_clock::now();
    DirectionReport rep;
    rep.outcome = solve(n, dir);
    rep.ms = elapsed_ms(t0);
    if (const auto& s = rep.outcome.solution) {
      rep.gamma = s->gamma;
      rep.z_assignment = z_statistic(s->stats);
      // The greedy cases return a gamma equal to Z of their assignment up to
      // rounding; report the exactly evaluated Z for them.
      if (s->case_tag != CaseTag::min_case3 && s->case_tag != CaseTag::max_case3)
        rep.gamma = rep.z_assignment;
    }
    return rep;
  }

  const SortedEffectList& sorted() const {
    std::call_once(cache_->sorted_once, [&] { cache_->sorted = build_sorted_list(effects_); });
    return cache_->sorted;
  }
  const SortedEffectList& reflected() const {
    std::call_once(cache_->reflected_once, [&] { cache_->reflected = sorted().reflected(); });
    return cache_->reflected;
  }
  const CostMatching& min_matching() const {
    std::call_once(cache_->min_once, [&] { cache_->min_matching = hungarian_min(effects_); });
    return cache_->min_matching;
  }
  const CostMatching& max_matching() const {
    std::call_once(cache_->max_once,
                   [&] { cache_->max_matching = hungarian_min(effects_.negated()); });
    return cache_->max_matching;
  }

  EffectMatrix effects_;
  std::unique_ptr<Cache> cache_;
};

}  // namespace robustz
