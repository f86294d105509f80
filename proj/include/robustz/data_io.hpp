#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "robustz/error.hpp"
#include "robustz/types.hpp"

namespace robustz {

enum class CompareOp { eq, ne, lt, le, gt, ge };

/// `column <op> value`. Ordering ops need numbers on both sides; == and !=
/// fall back to exact string comparison when either side is not numeric.
struct Predicate {
  CompareOp op = CompareOp::eq;
  CovariateValue value;

  [[nodiscard]] bool holds(const CovariateValue& x) const {
    if (x.number && value.number) {
      const double a = *x.number, b = *value.number;
      switch (op) {
        case CompareOp::eq: return a == b;
        case CompareOp::ne: return a != b;
        case CompareOp::lt: return a < b;
        case CompareOp::le: return a <= b;
        case CompareOp::gt: return a > b;
        case CompareOp::ge: return a >= b;
      }
    }
    if (op == CompareOp::eq) return x.text == value.text;
    if (op == CompareOp::ne) return x.text != value.text;
    throw DataError("ordering comparison on non-numeric value '" + x.text + "'");
  }
};

struct TreatmentRule {
  std::string column;
  std::vector<Predicate> treated;  // conjunction
  std::vector<Predicate> control;  // conjunction
};

struct NSpec {
  enum class Kind { fixed, sweep, binary_search };
  Kind kind = Kind::fixed;
  std::size_t n = 0;  // fixed
  std::size_t n_min = 0;
  std::size_t n_max = 0;  // 0 in binary_search: use the smaller group size
  std::size_t step = 1;
};

struct RunConfig {
  std::filesystem::path data_path;
  TreatmentRule treatment_rule;
  std::string outcome_column;
  std::vector<CovariateRule> covariate_rules;
  double alpha = 0.05;
  std::optional<NSpec> n_spec;
  std::uint64_t oracle_budget = 10'000'000;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

inline std::optional<double> parse_number(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

inline CovariateValue make_value(std::string text) {
  CovariateValue v;
  v.number = parse_number(text);
  v.text = std::move(text);
  return v;
}

}  // namespace detail

/// RFC 4180 records: quoted fields may hold commas, doubled quotes and line
/// breaks; CRLF and LF both end a record. A final empty line is ignored.
inline std::vector<std::vector<std::string>> parse_csv(std::istream& in) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false, in_record = false, after_quote = false;
  std::size_t line = 1;
  auto end_field = [&] {
    row.push_back(std::move(field));
    field.clear();
    after_quote = false;
  };
  auto end_record = [&] {
    end_field();
    rows.push_back(std::move(row));
    row.clear();
    in_record = false;
  };
  for (int ch; (ch = in.get()) != std::char_traits<char>::eof();) {
    const char c = static_cast<char>(ch);
    if (quoted) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get();
          field += '"';
        } else {
          quoted = false;
          after_quote = true;
        }
      } else {
        if (c == '\n') ++line;
        field += c;
      }
      continue;
    }
    switch (c) {
      case '"':
        if (!field.empty() || after_quote)
          throw DataError("line " + std::to_string(line) + ": stray quote in field");
        quoted = true;
        in_record = true;
        break;
      case ',':
        end_field();
        in_record = true;
        break;
      case '\r':
        if (in.peek() == '\n') break;
        [[fallthrough]];
      case '\n':
        if (in_record || !field.empty() || !row.empty()) end_record();
        ++line;
        break;
      default:
        if (after_quote)
          throw DataError("line " + std::to_string(line) + ": text after closing quote");
        field += c;
        in_record = true;
    }
  }
  if (quoted) throw DataError("unterminated quoted field");
  if (in_record || !field.empty() || !row.empty()) end_record();
  return rows;
}

/// Applies the treatment rule and keeps the columns named by the covariate
/// rules. Units get their 1-based data row number as id.
inline Dataset load_dataset(std::istream& in, const RunConfig& config) {
  const auto rows = parse_csv(in);
  if (rows.empty()) throw DataError("empty CSV file");
  const auto& header = rows.front();
  auto column = [&](const std::string& name) {
    for (std::size_t k = 0; k < header.size(); ++k)
      if (header[k] == name) return k;
    throw DataError("missing column '" + name + "'");
  };

  const std::size_t treat_col = column(config.treatment_rule.column);
  const std::size_t outcome_col = column(config.outcome_column);
  Dataset data;
  std::vector<std::size_t> cov_cols;
  for (const CovariateRule& r : config.covariate_rules) {
    if (data.covariate_index(r.column)) continue;
    data.covariate_names.push_back(r.column);
    cov_cols.push_back(column(r.column));
  }

  auto cell = [&](const std::vector<std::string>& row, std::size_t col, std::size_t rownum,
                  const std::string& name) -> const std::string& {
    if (col >= row.size() || detail::trim(row[col]).empty())
      throw DataError("row " + std::to_string(rownum) + ": missing value in column '" + name + "'");
    return row[col];
  };

  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != header.size())
      throw DataError("row " + std::to_string(r) + ": expected " + std::to_string(header.size()) +
                      " fields, found " + std::to_string(row.size()));
    const CovariateValue t =
        detail::make_value(cell(row, treat_col, r, config.treatment_rule.column));
    auto all = [&](const std::vector<Predicate>& ps) {
      for (const Predicate& p : ps)
        if (!p.holds(t)) return false;
      return true;
    };
    const bool is_t = all(config.treatment_rule.treated);
    const bool is_c = all(config.treatment_rule.control);
    if (is_t && is_c)
      throw ConfigError("row " + std::to_string(r) + " satisfies both treated and control predicates");

    Unit u;
    u.id = std::to_string(r);
    u.treated = is_t;
    const auto y = detail::parse_number(cell(row, outcome_col, r, config.outcome_column));
    if (!y) throw DataError("row " + std::to_string(r) + ": non-numeric outcome");
    u.outcome = *y;
    for (std::size_t k = 0; k < cov_cols.size(); ++k)
      u.covariates.push_back(detail::make_value(cell(row, cov_cols[k], r, data.covariate_names[k])));
    if (!is_t && !is_c) {
      ++data.excluded_count;
      continue;
    }
    data.units.push_back(std::move(u));
  }
  if (data.treated_rows().empty()) throw DataError("empty treated group");
  if (data.control_rows().empty()) throw DataError("empty control group");
  return data;
}

inline Dataset load_dataset(const std::filesystem::path& csv_path, const RunConfig& config) {
  std::ifstream in(csv_path, std::ios::binary);
  if (!in) throw DataError("cannot open " + csv_path.string());
  return load_dataset(in, config);
}

namespace detail {

using nlohmann::json;

inline void reject_unknown(const json& obj, std::initializer_list<std::string_view> keys,
                           const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [k, v] : obj.items()) {
    bool known = false;
    for (auto key : keys) known = known || key == k;
    if (!known) throw ConfigError(where + ": unknown field '" + k + "'");
  }
}

inline const json& required(const json& obj, const std::string& key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ConfigError(where + ": missing field '" + key + "'");
  return *it;
}

inline std::string get_string(const json& v, const std::string& field) {
  if (!v.is_string()) throw ConfigError(field + ": expected a string");
  return v.get<std::string>();
}

inline std::size_t get_count(const json& v, const std::string& field) {
  if (!v.is_number_integer() || v.get<std::int64_t>() < 0)
    throw ConfigError(field + ": expected a non-negative integer");
  return v.get<std::size_t>();
}

inline CompareOp parse_op(const std::string& s, const std::string& field) {
  if (s == "==") return CompareOp::eq;
  if (s == "!=") return CompareOp::ne;
  if (s == "<") return CompareOp::lt;
  if (s == "<=") return CompareOp::le;
  if (s == ">") return CompareOp::gt;
  if (s == ">=") return CompareOp::ge;
  throw ConfigError(field + ": unknown operator '" + s + "'");
}

inline std::vector<Predicate> parse_predicates(const json& v, const std::string& field) {
  if (!v.is_array() || v.empty()) throw ConfigError(field + ": expected a non-empty array");
  std::vector<Predicate> out;
  for (std::size_t k = 0; k < v.size(); ++k) {
    const std::string where = field + "[" + std::to_string(k) + "]";
    reject_unknown(v[k], {"op", "value"}, where);
    Predicate p;
    p.op = parse_op(get_string(required(v[k], "op", where), where + ".op"), where + ".op");
    const json& val = required(v[k], "value", where);
    if (val.is_number()) {
      p.value.number = val.get<double>();
      p.value.text = val.dump();
    } else if (val.is_string()) {
      p.value = make_value(val.get<std::string>());
    } else {
      throw ConfigError(where + ".value: expected a number or string");
    }
    out.push_back(std::move(p));
  }
  return out;
}

inline NSpec parse_n_spec(const json& v) {
  NSpec s;
  if (v.is_number_integer()) {
    s.n = get_count(v, "n_spec");
  } else {
    reject_unknown(v, {"fixed", "sweep", "binary_search"}, "n_spec");
    if (v.size() != 1) throw ConfigError("n_spec: expected exactly one of fixed, sweep, binary_search");
    if (v.contains("fixed")) {
      s.n = get_count(v["fixed"], "n_spec.fixed");
    } else if (v.contains("sweep")) {
      const json& w = v["sweep"];
      reject_unknown(w, {"n_min", "n_max", "step"}, "n_spec.sweep");
      s.kind = NSpec::Kind::sweep;
      s.n_min = get_count(required(w, "n_min", "n_spec.sweep"), "n_spec.sweep.n_min");
      s.n_max = get_count(required(w, "n_max", "n_spec.sweep"), "n_spec.sweep.n_max");
      if (w.contains("step")) s.step = get_count(w["step"], "n_spec.sweep.step");
      if (s.step < 1) throw ConfigError("n_spec.sweep.step: must be positive");
    } else {
      const json& w = v["binary_search"];
      reject_unknown(w, {"n_min", "n_max"}, "n_spec.binary_search");
      s.kind = NSpec::Kind::binary_search;
      s.n_min = w.contains("n_min") ? get_count(w["n_min"], "n_spec.binary_search.n_min") : 2;
      s.n_max = w.contains("n_max") ? get_count(w["n_max"], "n_spec.binary_search.n_max") : 0;
    }
  }
  if (s.kind == NSpec::Kind::fixed && s.n < 2) throw ConfigError("n_spec: n must be at least 2");
  if (s.kind != NSpec::Kind::fixed) {
    if (s.n_min < 2) throw ConfigError("n_spec: n_min must be at least 2");
    if (s.n_max != 0 || s.kind == NSpec::Kind::sweep)
      if (s.n_min > s.n_max) throw ConfigError("n_spec: n_min > n_max");
  }
  return s;
}

}  // namespace detail

/// Parses a run configuration. Unknown fields are rejected; `data_path` is
/// resolved against `base_dir` when relative.
inline RunConfig parse_config(std::string_view text, const std::filesystem::path& base_dir = {}) {
  using detail::json;
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what());
  }
  detail::reject_unknown(root,
                         {"data_path", "treatment_rule", "outcome_column", "covariate_rules",
                          "alpha", "n_spec", "oracle_budget"},
                         "config");
  RunConfig c;
  c.data_path = detail::get_string(detail::required(root, "data_path", "config"), "data_path");
  if (c.data_path.is_relative() && !base_dir.empty()) c.data_path = base_dir / c.data_path;

  const json& tr = detail::required(root, "treatment_rule", "config");
  detail::reject_unknown(tr, {"column", "treated", "control"}, "treatment_rule");
  c.treatment_rule.column =
      detail::get_string(detail::required(tr, "column", "treatment_rule"), "treatment_rule.column");
  c.treatment_rule.treated = detail::parse_predicates(
      detail::required(tr, "treated", "treatment_rule"), "treatment_rule.treated");
  c.treatment_rule.control = detail::parse_predicates(
      detail::required(tr, "control", "treatment_rule"), "treatment_rule.control");

  c.outcome_column =
      detail::get_string(detail::required(root, "outcome_column", "config"), "outcome_column");

  const json& rules = detail::required(root, "covariate_rules", "config");
  if (!rules.is_array() || rules.empty())
    throw ConfigError("covariate_rules: expected a non-empty array");
  for (std::size_t k = 0; k < rules.size(); ++k) {
    const std::string where = "covariate_rules[" + std::to_string(k) + "]";
    detail::reject_unknown(rules[k], {"column", "kind", "tolerance"}, where);
    const std::string col = detail::get_string(detail::required(rules[k], "column", where), where + ".column");
    const std::string kind = detail::get_string(detail::required(rules[k], "kind", where), where + ".kind");
    if (kind == "exact") {
      if (rules[k].contains("tolerance")) throw ConfigError(where + ".tolerance: only for calipers");
      c.covariate_rules.push_back(CovariateRule::exact(col));
    } else if (kind == "caliper") {
      const json& t = detail::required(rules[k], "tolerance", where);
      if (!t.is_number() || !(t.get<double>() >= 0.0) || !std::isfinite(t.get<double>()))
        throw ConfigError(where + ".tolerance: expected a non-negative number");
      c.covariate_rules.push_back(CovariateRule::caliper(col, t.get<double>()));
    } else {
      throw ConfigError(where + ".kind: expected \"exact\" or \"caliper\"");
    }
  }

  if (root.contains("alpha")) {
    const json& a = root["alpha"];
    if (!a.is_number()) throw ConfigError("alpha: expected a number");
    c.alpha = a.get<double>();
  }
  if (!(c.alpha > 0.0 && c.alpha < 1.0)) throw ConfigError("alpha: must lie in (0,1)");
  if (root.contains("n_spec")) c.n_spec = detail::parse_n_spec(root["n_spec"]);
  if (root.contains("oracle_budget")) {
    const json& b = root["oracle_budget"];
    if (!b.is_number_integer() || b.get<std::int64_t>() < 1)
      throw ConfigError("oracle_budget: expected a positive integer");
    c.oracle_budget = b.get<std::uint64_t>();
  }
  return c;
}

inline RunConfig load_config(const std::filesystem::path& json_path) {
  std::ifstream in(json_path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + json_path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), json_path.parent_path());
}

}  // namespace robustz
