#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "robustz/detail/union_find.hpp"
#include "robustz/error.hpp"
#include "robustz/types.hpp"

namespace robustz {

/// Sparse eligibility structure D over (treated, control) pairs.
///
/// Eligible pairs are kept sorted by (treated, control) with a row offset
/// table, so membership is a binary search inside one row.
class MatchMatrix {
 public:
  MatchMatrix() = default;

  MatchMatrix(std::vector<std::string> treated_ids, std::vector<std::string> control_ids,
              std::vector<Pair> eligible)
      : treated_ids_(std::move(treated_ids)),
        control_ids_(std::move(control_ids)),
        eligible_(std::move(eligible)) {
    std::sort(eligible_.begin(), eligible_.end());
    if (std::adjacent_find(eligible_.begin(), eligible_.end()) != eligible_.end())
      throw MatchingError("duplicate eligible pair");
    row_start_.assign(treated_ids_.size() + 1, 0);
    for (const Pair& p : eligible_) {
      if (p.treated >= treated_ids_.size() || p.control >= control_ids_.size())
        throw MatchingError("eligible pair index out of range");
      ++row_start_[p.treated + 1];
    }
    for (std::size_t i = 0; i < treated_ids_.size(); ++i) row_start_[i + 1] += row_start_[i];
  }

  /// Match matrix with generated ids "t<i>" / "c<j>".
  static MatchMatrix with_generated_ids(std::size_t treated_count, std::size_t control_count,
                                        std::vector<Pair> eligible) {
    std::vector<std::string> t(treated_count), c(control_count);
    for (std::size_t i = 0; i < treated_count; ++i) t[i] = "t" + std::to_string(i);
    for (std::size_t j = 0; j < control_count; ++j) c[j] = "c" + std::to_string(j);
    return {std::move(t), std::move(c), std::move(eligible)};
  }

  [[nodiscard]] std::size_t treated_count() const { return treated_ids_.size(); }
  [[nodiscard]] std::size_t control_count() const { return control_ids_.size(); }
  [[nodiscard]] std::size_t nnz() const { return eligible_.size(); }
  [[nodiscard]] const std::vector<std::string>& treated_ids() const { return treated_ids_; }
  [[nodiscard]] const std::vector<std::string>& control_ids() const { return control_ids_; }
  [[nodiscard]] std::span<const Pair> eligible() const { return eligible_; }

  /// Eligible pairs of treated row i, sorted by control index.
  [[nodiscard]] std::span<const Pair> row(std::size_t i) const {
    return std::span<const Pair>(eligible_).subspan(row_start_[i],
                                                    row_start_[i + 1] - row_start_[i]);
  }

  /// Position of (i, j) in eligible(), if eligible.
  [[nodiscard]] std::optional<std::size_t> position(Pair p) const {
    if (p.treated >= treated_count() || p.control >= control_count()) return std::nullopt;
    const auto first = eligible_.begin() + static_cast<std::ptrdiff_t>(row_start_[p.treated]);
    const auto last = eligible_.begin() + static_cast<std::ptrdiff_t>(row_start_[p.treated + 1]);
    const auto it = std::lower_bound(first, last, p);
    if (it == last || *it != p) return std::nullopt;
    return static_cast<std::size_t>(it - eligible_.begin());
  }

  [[nodiscard]] bool contains(Pair p) const { return position(p).has_value(); }

  /// Treated rows that have at least one eligible control.
  [[nodiscard]] std::size_t active_treated_count() const {
    std::size_t count = 0;
    for (std::size_t i = 0; i < treated_count(); ++i)
      if (row_start_[i + 1] > row_start_[i]) ++count;
    return count;
  }

  /// Control columns that have at least one eligible treated unit.
  [[nodiscard]] std::size_t active_control_count() const {
    std::vector<char> seen(control_count(), 0);
    for (const Pair& p : eligible_) seen[p.control] = 1;
    return static_cast<std::size_t>(std::count(seen.begin(), seen.end(), 1));
  }

 private:
  std::vector<std::string> treated_ids_;
  std::vector<std::string> control_ids_;
  std::vector<Pair> eligible_;
  std::vector<std::size_t> row_start_{0};
};

/// Treatment effects y_t - y_c keyed by the eligible pairs of a MatchMatrix.
/// Zero effects are stored like any other value.
class EffectMatrix {
 public:
  EffectMatrix() = default;

  EffectMatrix(MatchMatrix match, std::vector<double> effects)
      : match_(std::move(match)), effects_(std::move(effects)) {
    if (effects_.size() != match_.nnz())
      throw MatchingError("effect count does not match eligible pair count");
    for (double v : effects_)
      if (!std::isfinite(v)) throw MatchingError("treatment effects must be finite");
  }

  struct Entry {
    std::size_t treated;
    std::size_t control;
    double value;
  };

  /// Builds an effect matrix from explicit (i, j, value) triples; ids are generated.
  static EffectMatrix from_entries(std::size_t treated_count, std::size_t control_count,
                                   std::vector<Entry> entries) {
    std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
      return std::pair(a.treated, a.control) < std::pair(b.treated, b.control);
    });
    std::vector<Pair> pairs;
    std::vector<double> values;
    pairs.reserve(entries.size());
    values.reserve(entries.size());
    for (const Entry& e : entries) {
      pairs.push_back({e.treated, e.control});
      values.push_back(e.value);
    }
    return {MatchMatrix::with_generated_ids(treated_count, control_count, std::move(pairs)),
            std::move(values)};
  }

  /// Dense rows x cols matrix, every pair eligible.
  static EffectMatrix dense(const std::vector<std::vector<double>>& values) {
    std::vector<Entry> entries;
    const std::size_t rows = values.size();
    const std::size_t cols = rows == 0 ? 0 : values.front().size();
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < cols; ++j) entries.push_back({i, j, values[i][j]});
    return from_entries(rows, cols, std::move(entries));
  }

  [[nodiscard]] const MatchMatrix& match() const { return match_; }
  [[nodiscard]] std::size_t nnz() const { return effects_.size(); }
  [[nodiscard]] std::span<const double> values() const { return effects_; }
  [[nodiscard]] Pair pair(std::size_t k) const { return match_.eligible()[k]; }
  [[nodiscard]] double value(std::size_t k) const { return effects_[k]; }

  [[nodiscard]] std::optional<double> effect(Pair p) const {
    const auto pos = match_.position(p);
    if (!pos) return std::nullopt;
    return effects_[*pos];
  }

  [[nodiscard]] double at(Pair p) const {
    const auto pos = match_.position(p);
    if (!pos) throw MatchingError("pair (" + std::to_string(p.treated) + "," +
                                  std::to_string(p.control) + ") is not eligible");
    return effects_[*pos];
  }

  /// Same eligibility, every effect negated.
  [[nodiscard]] EffectMatrix negated() const {
    std::vector<double> neg(effects_.size());
    std::transform(effects_.begin(), effects_.end(), neg.begin(), [](double v) { return -v; });
    return {match_, std::move(neg)};
  }

 private:
  MatchMatrix match_;
  std::vector<double> effects_;
};

/// Connected components of the bipartite eligibility graph.
struct Block {
  std::vector<std::size_t> treated;  // ascending
  std::vector<std::size_t> control;  // ascending
  std::size_t nnz = 0;
  bool identical_rows = false;  // every treated row has the same eligible column set
};

struct BlockPartition {
  std::vector<Block> blocks;  // ordered by smallest treated index

  [[nodiscard]] bool all_identical_rows() const {
    return std::all_of(blocks.begin(), blocks.end(),
                       [](const Block& b) { return b.identical_rows; });
  }
};

namespace detail {

inline bool exact_equal(const CovariateValue& a, const CovariateValue& b) {
  if (a.number && b.number) return *a.number == *b.number;
  return a.text == b.text;
}

// Bucket key for the exact rules of a unit. Numeric values are normalised so
// that "1" and "1.0" share a bucket, matching exact_equal.
inline std::string exact_key(const Unit& u, std::span<const std::size_t> columns) {
  std::string key;
  char buf[40];
  for (std::size_t c : columns) {
    const CovariateValue& v = u.covariates[c];
    if (v.number) {
      const double x = *v.number == 0.0 ? 0.0 : *v.number;  // fold -0 into 0
      std::snprintf(buf, sizeof buf, "#%.17g", x);
      key += buf;
    } else {
      key += 's';
      key += v.text;
    }
    key += '\x1f';
  }
  return key;
}

}  // namespace detail

/// Builds D: (i, j) is eligible iff every rule holds.
inline MatchMatrix build_match_matrix(const Dataset& data, std::span<const CovariateRule> rules) {
  if (rules.empty()) throw MatchingError("at least one covariate rule is required");

  std::vector<std::size_t> exact_cols, caliper_cols;
  std::vector<double> tolerances;
  for (const CovariateRule& r : rules) {
    const auto col = data.covariate_index(r.column);
    if (!col) throw MatchingError("missing column '" + r.column + "'");
    if (r.kind == RuleKind::exact) {
      exact_cols.push_back(*col);
    } else {
      if (!(r.tolerance >= 0.0) || !std::isfinite(r.tolerance))
        throw MatchingError("caliper tolerance for '" + r.column + "' must be >= 0");
      for (const Unit& u : data.units)
        if (!u.covariates[*col].number)
          throw MatchingError("caliper on categorical column '" + r.column + "' (value '" +
                              u.covariates[*col].text + "' of unit " + u.id + ")");
      caliper_cols.push_back(*col);
      tolerances.push_back(r.tolerance);
    }
  }

  const auto treated_rows = data.treated_rows();
  const auto control_rows = data.control_rows();
  std::vector<std::string> treated_ids, control_ids;
  for (std::size_t r : treated_rows) treated_ids.push_back(data.units[r].id);
  for (std::size_t r : control_rows) control_ids.push_back(data.units[r].id);

  // Exact rules partition units into buckets; calipers are only checked
  // within a bucket.
  std::map<std::string, std::vector<std::size_t>> control_buckets;
  for (std::size_t j = 0; j < control_rows.size(); ++j)
    control_buckets[detail::exact_key(data.units[control_rows[j]], exact_cols)].push_back(j);

  std::vector<Pair> eligible;
  for (std::size_t i = 0; i < treated_rows.size(); ++i) {
    const Unit& t = data.units[treated_rows[i]];
    const auto bucket = control_buckets.find(detail::exact_key(t, exact_cols));
    if (bucket == control_buckets.end()) continue;
    for (std::size_t j : bucket->second) {
      const Unit& c = data.units[control_rows[j]];
      bool ok = true;
      for (std::size_t k = 0; ok && k < exact_cols.size(); ++k)
        ok = detail::exact_equal(t.covariates[exact_cols[k]], c.covariates[exact_cols[k]]);
      for (std::size_t k = 0; ok && k < caliper_cols.size(); ++k)
        ok = std::abs(*t.covariates[caliper_cols[k]].number -
                      *c.covariates[caliper_cols[k]].number) <= tolerances[k];
      if (ok) eligible.push_back({i, j});
    }
  }
  return {std::move(treated_ids), std::move(control_ids), std::move(eligible)};
}

/// Attaches effect(i, j) = outcome(treated i) - outcome(control j) to each eligible pair.
inline EffectMatrix build_effect_matrix(const MatchMatrix& match, const Dataset& data) {
  std::map<std::string, double> treated_outcome, control_outcome;
  for (const Unit& u : data.units) (u.treated ? treated_outcome : control_outcome)[u.id] = u.outcome;

  auto lookup = [](const std::map<std::string, double>& m, const std::string& id) {
    const auto it = m.find(id);
    if (it == m.end()) throw MatchingError("unit id '" + id + "' not found in dataset");
    return it->second;
  };
  std::vector<double> yt(match.treated_count()), yc(match.control_count());
  for (std::size_t i = 0; i < yt.size(); ++i) yt[i] = lookup(treated_outcome, match.treated_ids()[i]);
  for (std::size_t j = 0; j < yc.size(); ++j) yc[j] = lookup(control_outcome, match.control_ids()[j]);

  std::vector<double> effects;
  effects.reserve(match.nnz());
  for (const Pair& p : match.eligible()) effects.push_back(yt[p.treated] - yc[p.control]);
  return {match, std::move(effects)};
}

/// Connected components of D via union-find, with the identical-rows flag per block.
inline BlockPartition partition_blocks(const MatchMatrix& match) {
  const std::size_t nt = match.treated_count();
  detail::UnionFind uf(nt + match.control_count());
  for (const Pair& p : match.eligible()) uf.unite(p.treated, nt + p.control);

  BlockPartition out;
  std::vector<std::size_t> block_of_root(uf.size(), static_cast<std::size_t>(-1));
  auto block_for = [&](std::size_t node) -> Block& {
    const std::size_t root = uf.find(node);
    if (block_of_root[root] == static_cast<std::size_t>(-1)) {
      block_of_root[root] = out.blocks.size();
      out.blocks.emplace_back();
    }
    return out.blocks[block_of_root[root]];
  };

  for (std::size_t i = 0; i < nt; ++i)
    if (!match.row(i).empty()) block_for(i).treated.push_back(i);
  std::vector<char> seen(match.control_count(), 0);
  for (const Pair& p : match.eligible()) {
    Block& b = block_for(p.treated);
    ++b.nnz;
    if (!seen[p.control]) {
      seen[p.control] = 1;
      b.control.push_back(p.control);
    }
  }
  for (Block& b : out.blocks) {
    std::sort(b.control.begin(), b.control.end());
    b.identical_rows = true;
    const auto first = match.row(b.treated.front());
    for (std::size_t i : b.treated) {
      const auto r = match.row(i);
      if (!std::equal(r.begin(), r.end(), first.begin(), first.end(),
                      [](const Pair& x, const Pair& y) { return x.control == y.control; })) {
        b.identical_rows = false;
        break;
      }
    }
  }
  return out;
}

/// Coordinate-list dump of D and its effects: one `i,j,effect` line per
/// eligible pair, sorted by (i, j), 0-based indices.
inline void write_coordinate_list(std::ostream& os, const EffectMatrix& effects) {
  char buf[64];
  for (std::size_t k = 0; k < effects.nnz(); ++k) {
    const Pair p = effects.pair(k);
    std::snprintf(buf, sizeof buf, "%.17g", effects.value(k));
    os << p.treated << ',' << p.control << ',' << buf << '\n';
  }
}

}  // namespace robustz
