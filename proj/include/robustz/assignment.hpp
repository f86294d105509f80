#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <queue>
#include <utility>
#include <vector>

#include "robustz/detail/exact_sum.hpp"
#include "robustz/error.hpp"
#include "robustz/greedy.hpp"
#include "robustz/matching.hpp"
#include "robustz/statistic.hpp"

namespace robustz {

struct CostedPair {
  std::size_t treated = 0;
  std::size_t control = 0;
  double cost = 0.0;

  friend bool operator==(const CostedPair&, const CostedPair&) = default;
};

/// Minimum-cost matching of maximum cardinality. Pairs sorted by (i, j).
struct CostMatching {
  std::vector<CostedPair> pairs;
  double total_cost = 0.0;

  [[nodiscard]] std::size_t cardinality() const { return pairs.size(); }
};

namespace detail {

inline constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

// Successive shortest augmenting paths on one connected component, with
// Johnson potentials so that negative costs need no shift. Left nodes are
// 0..L-1, right nodes L..L+R-1, the sink is L+R.
class ShortestPathMatcher {
 public:
  struct Edge {
    std::size_t right;
    double cost;
  };

  ShortestPathMatcher(std::size_t left, std::size_t right, std::vector<std::vector<Edge>> adj)
      : L_(left), R_(right), adj_(std::move(adj)), mate_l_(left, kNone), mate_r_(right, kNone) {
    std::size_t edges = 0;
    for (const auto& a : adj_) edges += a.size();
    const double v = static_cast<double>(L_ + R_ + 1);
    dense_ = static_cast<double>(edges) * std::log2(v) >= v * v;

    pi_.assign(L_ + R_ + 1, 0.0);
    for (std::size_t r = 0; r < R_; ++r) pi_[L_ + r] = kInf;
    for (std::size_t u = 0; u < L_; ++u)
      for (const Edge& e : adj_[u]) pi_[L_ + e.right] = std::min(pi_[L_ + e.right], e.cost);
    double sink = kInf;
    for (std::size_t r = 0; r < R_; ++r) {
      if (pi_[L_ + r] == kInf) pi_[L_ + r] = 0.0;  // isolated column
      sink = std::min(sink, pi_[L_ + r]);
    }
    pi_[L_ + R_] = R_ == 0 ? 0.0 : sink;
  }

  void run() {
    while (augment()) {
    }
  }

  [[nodiscard]] const std::vector<std::size_t>& left_mates() const { return mate_l_; }

 private:
  [[nodiscard]] std::size_t sink() const { return L_ + R_; }

  // Relaxes the out-edges of settled node x. `relax(y, d, from)` is called
  // with reduced distances.
  template <class Relax>
  void scan(std::size_t x, double d, Relax&& relax) {
    if (x < L_) {
      for (const Edge& e : adj_[x]) {
        if (mate_l_[x] == e.right) continue;
        const double rc = std::max(0.0, e.cost + pi_[x] - pi_[L_ + e.right]);
        relax(L_ + e.right, d + rc, x);
      }
    } else {
      const std::size_t r = x - L_;
      if (mate_r_[r] == kNone)
        relax(sink(), d + std::max(0.0, pi_[x] - pi_[sink()]), x);
      else
        relax(mate_r_[r], d, x);
    }
  }

  bool augment() {
    const std::size_t V = L_ + R_ + 1;
    dist_.assign(V, kInf);
    pred_.assign(V, kNone);
    done_.assign(V, 0);
    bool any_free = false;
    for (std::size_t u = 0; u < L_; ++u)
      if (mate_l_[u] == kNone) {
        dist_[u] = 0.0;
        any_free = true;
      }
    if (!any_free) return false;

    auto relax = [&](std::size_t y, double nd, std::size_t from) {
      if (!done_[y] && nd < dist_[y]) {
        dist_[y] = nd;
        pred_[y] = from;
        if (!dense_) heap_.push({nd, y});
      }
    };

    if (dense_) {
      for (;;) {
        std::size_t x = kNone;
        for (std::size_t y = 0; y < V; ++y)
          if (!done_[y] && dist_[y] < kInf && (x == kNone || dist_[y] < dist_[x])) x = y;
        if (x == kNone) break;
        done_[x] = 1;
        if (x == sink()) break;
        scan(x, dist_[x], relax);
      }
    } else {
      heap_ = {};
      for (std::size_t u = 0; u < L_; ++u)
        if (mate_l_[u] == kNone) heap_.push({0.0, u});
      while (!heap_.empty()) {
        const auto [d, x] = heap_.top();
        heap_.pop();
        if (done_[x] || d > dist_[x]) continue;
        done_[x] = 1;
        if (x == sink()) break;
        scan(x, d, relax);
      }
    }
    if (!done_[sink()]) return false;

    const double D = dist_[sink()];
    for (std::size_t y = 0; y < V; ++y) pi_[y] += std::min(dist_[y], D);

    std::size_t r = pred_[sink()] - L_;
    for (;;) {
      const std::size_t u = pred_[L_ + r];
      const std::size_t next = mate_l_[u];
      mate_l_[u] = r;
      mate_r_[r] = u;
      if (next == kNone) break;
      r = next;
    }
    return true;
  }

  using Item = std::pair<double, std::size_t>;

  std::size_t L_, R_;
  std::vector<std::vector<Edge>> adj_;
  std::vector<std::size_t> mate_l_, mate_r_;
  std::vector<double> pi_, dist_;
  std::vector<std::size_t> pred_;
  std::vector<char> done_;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap_;
  bool dense_ = false;
};

inline CostMatching min_cost_matching(const MatchMatrix& match, std::span<const double> cost) {
  if (match.nnz() == 0) throw PreconditionError("assignment needs at least one eligible pair");
  const BlockPartition parts = partition_blocks(match);
  std::vector<std::size_t> local_col(match.control_count(), kNone);
  CostMatching out;
  for (const Block& b : parts.blocks) {
    for (std::size_t k = 0; k < b.control.size(); ++k) local_col[b.control[k]] = k;
    std::vector<std::vector<ShortestPathMatcher::Edge>> adj(b.treated.size());
    for (std::size_t k = 0; k < b.treated.size(); ++k) {
      const std::size_t i = b.treated[k];
      const std::size_t base = *match.position({i, match.row(i).front().control});
      for (std::size_t e = 0; e < match.row(i).size(); ++e)
        adj[k].push_back({local_col[match.row(i)[e].control], cost[base + e]});
    }
    ShortestPathMatcher solver(b.treated.size(), b.control.size(), std::move(adj));
    solver.run();
    for (std::size_t k = 0; k < b.treated.size(); ++k) {
      const std::size_t r = solver.left_mates()[k];
      if (r == kNone) continue;
      const Pair p{b.treated[k], b.control[r]};
      out.pairs.push_back({p.treated, p.control, cost[*match.position(p)]});
    }
  }
  std::sort(out.pairs.begin(), out.pairs.end(), [](const CostedPair& a, const CostedPair& b) {
    return std::pair(a.treated, a.control) < std::pair(b.treated, b.control);
  });
  ExactAccumulator total;
  for (const CostedPair& p : out.pairs) total.add(p.cost);
  out.total_cost = total.value();
  return out;
}

}  // namespace detail

/// Minimum total effect over all maximum-cardinality matchings of the
/// eligible pairs. Solved independently on each connected component.
inline CostMatching hungarian_min(const EffectMatrix& effects) {
  return detail::min_cost_matching(effects.match(), effects.values());
}

/// Linear case from an already computed optimal matching: `matching` is
/// hungarian_min(effects) for the min direction and hungarian_min of the
/// negated effects for the max direction. Takes the n smallest (min) or
/// largest (max) effects of the matching and checks the sign of their sum.
inline std::optional<GreedySolution> case3_from_matching(const EffectMatrix& effects,
                                                         const CostMatching& matching,
                                                         std::size_t n, Direction dir,
                                                         bool check_sign = true) {
  if (n < 2) throw PreconditionError("case 3 needs n >= 2");
  if (matching.cardinality() < n) return std::nullopt;
  std::vector<EffectEntry> picks;
  picks.reserve(matching.cardinality());
  for (const CostedPair& p : matching.pairs)
    picks.push_back({effects.at({p.treated, p.control}), p.treated, p.control});
  std::sort(picks.begin(), picks.end(), SortedEffectList::before);
  if (dir == Direction::max) {
    // Largest first, equal values still in (i, j) order.
    std::stable_sort(picks.begin(), picks.end(),
                     [](const EffectEntry& a, const EffectEntry& b) { return a.value > b.value; });
  }
  picks.resize(n);

  GreedySolution sol;
  std::vector<double> values;
  std::sort(picks.begin(), picks.end(), [](const EffectEntry& a, const EffectEntry& b) {
    return std::pair(a.treated, a.control) < std::pair(b.treated, b.control);
  });
  for (const EffectEntry& e : picks) {
    sol.assignment.pairs.push_back({e.treated, e.control});
    values.push_back(e.value);
  }
  sol.stats = pair_stats(values);
  sol.case_tag = dir == Direction::min ? CaseTag::min_case3 : CaseTag::max_case3;
  sol.gamma = 0.0;
  if (check_sign) {
    if (dir == Direction::min && sol.stats.sum > 0.0) return std::nullopt;
    if (dir == Direction::max && sol.stats.sum < 0.0) return std::nullopt;
  }
  return sol;
}

/// The linear case: gamma = 0 when the n extreme effects of an optimal
/// matching satisfy the direction's sign constraint.
inline std::optional<GreedySolution> case3_test(const EffectMatrix& effects, std::size_t n,
                                                Direction dir) {
  if (n < 2) throw PreconditionError("case 3 needs n >= 2");
  const CostMatching m =
      dir == Direction::min ? hungarian_min(effects) : hungarian_min(effects.negated());
  return case3_from_matching(effects, m, n, dir);
}

}  // namespace robustz
