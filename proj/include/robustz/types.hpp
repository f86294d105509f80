#pragma once

#include <compare>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace robustz {

/// A (treated, control) index pair. Indices are 0-based positions in the
/// treated and control groups, in dataset row order.
struct Pair {
  std::size_t treated = 0;
  std::size_t control = 0;

  friend auto operator<=>(const Pair&, const Pair&) = default;
};

/// Raw covariate cell. `number` is set when the text parses as a finite number.
struct CovariateValue {
  std::string text;
  std::optional<double> number;

  friend bool operator==(const CovariateValue&, const CovariateValue&) = default;
};

struct Unit {
  std::string id;
  std::vector<CovariateValue> covariates;  // aligned with Dataset::covariate_names
  bool treated = false;
  double outcome = 0.0;

  friend bool operator==(const Unit&, const Unit&) = default;
};

/// Treated and control units kept after applying the treatment rule.
/// Units appear in CSV row order; excluded rows are only counted.
struct Dataset {
  std::vector<std::string> covariate_names;
  std::vector<Unit> units;
  std::size_t excluded_count = 0;

  [[nodiscard]] std::vector<std::size_t> treated_rows() const {
    std::vector<std::size_t> rows;
    for (std::size_t k = 0; k < units.size(); ++k)
      if (units[k].treated) rows.push_back(k);
    return rows;
  }

  [[nodiscard]] std::vector<std::size_t> control_rows() const {
    std::vector<std::size_t> rows;
    for (std::size_t k = 0; k < units.size(); ++k)
      if (!units[k].treated) rows.push_back(k);
    return rows;
  }

  [[nodiscard]] std::optional<std::size_t> covariate_index(const std::string& name) const {
    for (std::size_t k = 0; k < covariate_names.size(); ++k)
      if (covariate_names[k] == name) return k;
    return std::nullopt;
  }

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

enum class RuleKind { exact, caliper };

/// Eligibility rule on one covariate. Caliper pairs are eligible when
/// |x_t - x_c| <= tolerance (inclusive).
struct CovariateRule {
  std::string column;
  RuleKind kind = RuleKind::exact;
  double tolerance = 0.0;

  static CovariateRule exact(std::string column) {
    return {std::move(column), RuleKind::exact, 0.0};
  }
  static CovariateRule caliper(std::string column, double tolerance) {
    return {std::move(column), RuleKind::caliper, tolerance};
  }

  friend bool operator==(const CovariateRule&, const CovariateRule&) = default;
};

}  // namespace robustz
