#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "robustz/detail/exact_sum.hpp"
#include "robustz/error.hpp"
#include "robustz/matching.hpp"
#include "robustz/types.hpp"

namespace robustz {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// One-to-one set of eligible pairs, kept sorted by (treated, control).
struct Assignment {
  std::vector<Pair> pairs;

  [[nodiscard]] std::size_t size() const { return pairs.size(); }
  void normalize() { std::sort(pairs.begin(), pairs.end()); }

  friend bool operator==(const Assignment&, const Assignment&) = default;
};

/// Checks the one-to-one and eligibility constraints. Returns an error
/// message, or nothing when the assignment is valid.
inline std::optional<std::string> assignment_violation(const Assignment& a,
                                                       const MatchMatrix& match) {
  std::vector<char> row_used(match.treated_count(), 0), col_used(match.control_count(), 0);
  for (const Pair& p : a.pairs) {
    if (!match.contains(p))
      return "pair (" + std::to_string(p.treated) + "," + std::to_string(p.control) +
             ") is not eligible";
    if (row_used[p.treated]++) return "treated index " + std::to_string(p.treated) + " used twice";
    if (col_used[p.control]++) return "control index " + std::to_string(p.control) + " used twice";
  }
  return std::nullopt;
}

/// Sum, sum of squares and spread of the selected pair effects.
///
/// `sum` and `sum_squares` are correctly rounded, so they do not depend on the
/// order of the pairs and the sign of `sum` is exact. `sigma_hat` is the
/// population standard deviation sqrt(Q/n - (S/n)^2), computed in two passes.
struct PairStats {
  double sum = 0.0;
  double sum_squares = 0.0;
  std::size_t n = 0;
  double sigma_hat = 0.0;
  bool degenerate = true;  // sigma_hat == 0
};

inline PairStats pair_stats(std::span<const double> effects) {
  PairStats s;
  s.n = effects.size();
  if (s.n == 0) return s;
  detail::ExactAccumulator sum, sq;
  for (double v : effects) {
    sum.add(v);
    sq.add(v * v);
  }
  s.sum = sum.value();
  s.sum_squares = sq.value();
  s.degenerate = std::all_of(effects.begin(), effects.end(),
                             [&](double v) { return v == effects.front(); });
  if (!s.degenerate) {
    const double mean = s.sum / static_cast<double>(s.n);
    detail::ExactAccumulator dev;
    for (double v : effects) dev.add((v - mean) * (v - mean));
    s.sigma_hat = std::sqrt(dev.value() / static_cast<double>(s.n));
    if (s.sigma_hat == 0.0) s.degenerate = true;
  }
  return s;
}

/// Stats from given S, Q, n; degenerate when nQ - S^2 <= 0.
inline PairStats pair_stats_from_sums(double sum, double sum_squares, std::size_t n) {
  PairStats s{sum, sum_squares, n, 0.0, true};
  if (n == 0) return s;
  const double dn = static_cast<double>(n);
  const double spread = dn * sum_squares - sum * sum;
  if (spread > 0.0) {
    s.sigma_hat = std::sqrt(spread) / dn;
    s.degenerate = false;
  }
  return s;
}

/// Stats of an assignment's effects. Throws PreconditionError if the
/// assignment is not valid against the effect matrix.
inline PairStats assignment_stats(const Assignment& a, const EffectMatrix& effects) {
  if (auto why = assignment_violation(a, effects.match())) throw PreconditionError(*why);
  std::vector<double> values;
  values.reserve(a.size());
  for (const Pair& p : a.pairs) values.push_back(effects.at(p));
  return pair_stats(values);
}

/// Z = (S / sqrt(n)) / sigma_hat. A zero-spread selection maps to +inf, -inf
/// or 0 following the sign of S.
inline double z_statistic(const PairStats& s) {
  if (s.n < 2) throw PreconditionError("Z statistic needs n >= 2");
  if (s.degenerate) {
    if (s.sum > 0.0) return kInf;
    if (s.sum < 0.0) return -kInf;
    return 0.0;
  }
  return (s.sum / std::sqrt(static_cast<double>(s.n))) / s.sigma_hat;
}

struct GammaRoots {
  double min = 0.0;
  double max = 0.0;
  bool infinite = false;  // nQ == S^2 with S != 0: the roots diverge
};

/// Roots of (n g^2 / (n + g^2)) Q = S^2, i.e. g = +-sqrt(n S^2 / (n Q - S^2)).
inline GammaRoots gamma_roots(double sum, double sum_squares, std::size_t n) {
  if (n == 0) throw PreconditionError("gamma roots need n >= 1");
  const double dn = static_cast<double>(n);
  const double spread = dn * sum_squares - sum * sum;
  if (spread <= 0.0) {
    if (sum == 0.0) return {0.0, 0.0, false};
    return {-kInf, kInf, true};
  }
  const double g = std::sqrt(dn * sum * sum / spread);
  return {-g, g, false};
}

/// Upper-tail probability of the standard normal distribution.
inline double normal_upper_tail(double z) {
  if (std::isnan(z)) throw PreconditionError("normal tail of NaN");
  return 0.5 * std::erfc(z / std::numbers::sqrt2);
}

struct PValues {
  double p_min = 0.0;
  double p_max = 1.0;
};

/// p_min from the largest Z, p_max from the smallest Z (upper-tail convention).
inline PValues p_values(double z_max, double z_min) {
  if (z_min > z_max) throw PreconditionError("p_values requires z_min <= z_max");
  return {normal_upper_tail(z_max), normal_upper_tail(z_min)};
}

enum class Robustness { absolute_robust, alpha_robust, not_robust };

inline std::string_view to_string(Robustness r) {
  switch (r) {
    case Robustness::absolute_robust: return "absolute_robust";
    case Robustness::alpha_robust: return "alpha_robust";
    case Robustness::not_robust: return "not_robust";
  }
  return "?";
}

inline constexpr double kAbsoluteRobustTolerance = 1e-12;

inline Robustness classify_robustness(double p_min, double p_max, double alpha) {
  const double gap = std::abs(p_max - p_min);
  if (gap <= kAbsoluteRobustTolerance) return Robustness::absolute_robust;
  if (gap <= alpha) return Robustness::alpha_robust;
  return Robustness::not_robust;
}

/// z such that normal_upper_tail(z) == alpha, by bisection to 1e-12.
inline double critical_z(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw PreconditionError("alpha must lie in (0,1)");
  double lo = -40.0, hi = 40.0;
  while (hi - lo > 1e-12) {
    const double mid = 0.5 * (lo + hi);
    if (normal_upper_tail(mid) > alpha)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

/// How far Z can move before it crosses the critical value at alpha.
struct RobustnessMargin {
  double z_crit = 0.0;
  double absolute_margin = 0.0;
  std::optional<double> relative_margin;  // absent when z == 0
};

inline RobustnessMargin robustness_margin(double z, double alpha) {
  RobustnessMargin m;
  m.z_crit = critical_z(alpha);
  m.absolute_margin = z - m.z_crit;
  if (std::isinf(z))
    m.relative_margin = 1.0;
  else if (z != 0.0)
    m.relative_margin = m.absolute_margin / z;
  return m;
}

}  // namespace robustz
