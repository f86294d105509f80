#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "robustz/detail/exact_sum.hpp"
#include "robustz/error.hpp"
#include "robustz/greedy.hpp"
#include "robustz/matching.hpp"

namespace robustz {

enum class ModelKind { qip, ilp };
enum class Sense { le, ge, eq };

struct LinearTerm {
  std::size_t var;
  double coef;
};

struct Constraint {
  std::string name;
  std::vector<LinearTerm> terms;
  Sense sense = Sense::le;
  double rhs = 0.0;
};

/// A model over one binary variable per eligible pair, in (i, j) order.
///
/// The quadratic part is `scale * (sum_p w_p a_p)^2`, which expands to
/// square terms scale*w_p^2 a_p^2 and cross terms 2*scale*w_p*w_q a_p a_q
/// for every p < q. It is kept factored because the expansion has
/// nnz*(nnz-1)/2 terms.
struct ModelSpec {
  ModelKind kind = ModelKind::qip;
  bool maximize = true;
  std::vector<std::string> variables;
  std::vector<Pair> pairs;
  std::vector<double> linear;  // objective coefficient per variable
  double quad_scale = 0.0;
  std::vector<double> quad_weights;
  std::vector<Constraint> constraints;
  std::vector<std::string> comments;

  [[nodiscard]] std::size_t square_term_count() const {
    return quad_scale == 0.0 ? 0 : quad_weights.size();
  }
  [[nodiscard]] std::size_t cross_term_count() const {
    const std::size_t k = quad_scale == 0.0 ? 0 : quad_weights.size();
    return k < 2 ? 0 : k * (k - 1) / 2;
  }
  [[nodiscard]] double square_coef(std::size_t p) const {
    return quad_scale * quad_weights[p] * quad_weights[p];
  }
  [[nodiscard]] double cross_coef(std::size_t p, std::size_t q) const {
    return 2.0 * quad_scale * quad_weights[p] * quad_weights[q];
  }
  [[nodiscard]] const Constraint* constraint(const std::string& name) const {
    for (const Constraint& c : constraints)
      if (c.name == name) return &c;
    return nullptr;
  }
};

namespace detail {

inline ModelSpec base_model(const EffectMatrix& effects, std::size_t n, ModelKind kind) {
  if (effects.nnz() == 0) throw PreconditionError("cannot export a model without eligible pairs");
  if (n < 2) throw PreconditionError("n must be at least 2");
  const MatchMatrix& m = effects.match();
  ModelSpec spec;
  spec.kind = kind;
  std::vector<std::vector<LinearTerm>> rows(m.treated_count()), cols(m.control_count());
  Constraint card{"card", {}, Sense::eq, static_cast<double>(n)};
  for (std::size_t k = 0; k < effects.nnz(); ++k) {
    const Pair p = effects.pair(k);
    spec.pairs.push_back(p);
    spec.variables.push_back("a_" + std::to_string(p.treated) + "_" + std::to_string(p.control));
    rows[p.treated].push_back({k, 1.0});
    cols[p.control].push_back({k, 1.0});
    card.terms.push_back({k, 1.0});
  }
  for (std::size_t i = 0; i < rows.size(); ++i)
    if (!rows[i].empty())
      spec.constraints.push_back({"row_" + std::to_string(i), std::move(rows[i]), Sense::le, 1.0});
  for (std::size_t j = 0; j < cols.size(); ++j)
    if (!cols[j].empty())
      spec.constraints.push_back({"col_" + std::to_string(j), std::move(cols[j]), Sense::le, 1.0});
  spec.constraints.push_back(std::move(card));
  return spec;
}

inline Constraint effect_row(const EffectMatrix& effects, std::string name, Sense sense, double rhs,
                             bool squared) {
  Constraint c{std::move(name), {}, sense, rhs};
  for (std::size_t k = 0; k < effects.nnz(); ++k) {
    const double v = effects.value(k);
    c.terms.push_back({k, squared ? v * v : v});
  }
  return c;
}

}  // namespace detail

/// Coupled quadratic model for one sign case.
///
///   min case 1, max case 2: maximize Q - S^2
///   min case 2, max case 1: maximize S^2 - Q
///
/// with Q = sum d^2 a (linear for binaries) and S = sum d a, subject to one
/// pair per row and column, n pairs, and S >= 0 (case 1) or S <= 0 (case 2).
inline ModelSpec export_qip(const EffectMatrix& effects, std::size_t n, Direction dir,
                            GreedyCase which) {
  ModelSpec spec = detail::base_model(effects, n, ModelKind::qip);
  const bool q_minus_s2 = (dir == Direction::min) == (which == GreedyCase::case1);
  const double sign = q_minus_s2 ? 1.0 : -1.0;
  for (std::size_t k = 0; k < effects.nnz(); ++k) {
    const double v = effects.value(k);
    spec.linear.push_back(sign * v * v);
    spec.quad_weights.push_back(v);
  }
  spec.quad_scale = -sign;
  spec.constraints.push_back(detail::effect_row(
      effects, "sign", which == GreedyCase::case1 ? Sense::ge : Sense::le, 0.0, false));
  return spec;
}

/// Linearized model: optimize sum d a (maximize for max, minimize for min)
/// subject to sum d^2 a <= b_l and the matching constraints.
inline ModelSpec export_ilp(const EffectMatrix& effects, std::size_t n, Direction dir, double b_l,
                            std::optional<std::pair<double, double>> b_l_range = std::nullopt) {
  if (!(b_l > 0.0) || !std::isfinite(b_l)) throw PreconditionError("b_l must be positive");
  ModelSpec spec = detail::base_model(effects, n, ModelKind::ilp);
  spec.maximize = dir == Direction::max;
  double smallest = kInf;
  for (std::size_t k = 0; k < effects.nnz(); ++k) {
    spec.linear.push_back(effects.value(k));
    smallest = std::min(smallest, effects.value(k) * effects.value(k));
  }
  spec.constraints.push_back(detail::effect_row(effects, "bound", Sense::le, b_l, true));
  if (b_l < smallest)
    spec.comments.push_back("b_l is below every squared effect: infeasible for n >= 1");
  if (b_l_range) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "b_l range %.17g .. %.17g", b_l_range->first,
                  b_l_range->second);
    spec.comments.push_back(buf);
  }
  return spec;
}

/// Objective value at a 0/1 vector (one entry per variable).
inline double evaluate_objective(const ModelSpec& spec, const std::vector<double>& x) {
  if (x.size() != spec.variables.size()) throw PreconditionError("solution size mismatch");
  detail::ExactAccumulator lin, w;
  for (std::size_t p = 0; p < x.size(); ++p) {
    lin.add(spec.linear[p] * x[p]);
    if (spec.quad_scale != 0.0) w.add(spec.quad_weights[p] * x[p]);
  }
  const double s = w.value();
  return lin.value() + spec.quad_scale * s * s;
}

inline bool satisfies_constraints(const ModelSpec& spec, const std::vector<double>& x) {
  if (x.size() != spec.variables.size()) throw PreconditionError("solution size mismatch");
  for (double v : x)
    if (v != 0.0 && v != 1.0) return false;
  for (const Constraint& c : spec.constraints) {
    detail::ExactAccumulator acc;
    for (const LinearTerm& t : c.terms) acc.add(t.coef * x[t.var]);
    const double lhs = acc.value();
    if (c.sense == Sense::le && !(lhs <= c.rhs)) return false;
    if (c.sense == Sense::ge && !(lhs >= c.rhs)) return false;
    if (c.sense == Sense::eq && lhs != c.rhs) return false;
  }
  return true;
}

/// Reads `name value` lines; blank lines and lines starting with '#' are
/// skipped. Variables not listed are 0.
inline std::vector<double> read_solution(std::istream& in, const ModelSpec& spec) {
  std::map<std::string, std::size_t, std::less<>> index;
  for (std::size_t k = 0; k < spec.variables.size(); ++k) index[spec.variables[k]] = k;
  std::vector<double> x(spec.variables.size(), 0.0);
  std::string line;
  for (std::size_t ln = 1; std::getline(in, line); ++ln) {
    std::istringstream ss(line);
    std::string name;
    if (!(ss >> name) || name.front() == '#') continue;
    double v = 0.0;
    if (!(ss >> v)) throw DataError("solution line " + std::to_string(ln) + ": missing value");
    auto it = index.find(name);
    if (it == index.end())
      throw DataError("solution line " + std::to_string(ln) + ": unknown variable " + name);
    x[it->second] = v;
  }
  return x;
}

namespace detail {

inline std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Writes "+ c term" pieces, wrapping lines well below the usual 510-char limit.
class TermWriter {
 public:
  explicit TermWriter(std::ostream& os) : os_(os) {}

  void put(double coef, const std::string& term) {
    std::string piece = coef < 0.0 ? "- " + num(-coef) : "+ " + num(coef);
    piece += ' ' + term;
    raw(piece);
  }
  void raw(const std::string& piece) {
    if (width_ + piece.size() > 200) {
      os_ << "\n   ";
      width_ = 3;
    }
    os_ << ' ' << piece;
    width_ += piece.size() + 1;
  }
  void reset(std::size_t width) { width_ = width; }

 private:
  std::ostream& os_;
  std::size_t width_ = 0;
};

}  // namespace detail

/// LP text: objective, constraints, Binary section. Quadratic objective terms
/// go in a `[ ... ] / 2` block with doubled coefficients.
inline void write_lp(std::ostream& os, const ModelSpec& spec) {
  os << "\\ robustz " << (spec.kind == ModelKind::qip ? "qip" : "ilp") << " model\n";
  for (const std::string& c : spec.comments) os << "\\ " << c << '\n';
  os << (spec.maximize ? "Maximize\n" : "Minimize\n") << " obj:";
  detail::TermWriter w(os);
  w.reset(5);
  for (std::size_t p = 0; p < spec.linear.size(); ++p) w.put(spec.linear[p], spec.variables[p]);
  if (spec.square_term_count() > 0) {
    w.raw("+ [");
    const std::size_t k = spec.variables.size();
    for (std::size_t p = 0; p < k; ++p) w.put(2.0 * spec.square_coef(p), spec.variables[p] + " ^2");
    for (std::size_t p = 0; p < k; ++p)
      for (std::size_t q = p + 1; q < k; ++q)
        w.put(2.0 * spec.cross_coef(p, q), spec.variables[p] + " * " + spec.variables[q]);
    w.raw("] / 2");
  }
  os << "\nSubject To\n";
  for (const Constraint& c : spec.constraints) {
    os << ' ' << c.name << ':';
    w.reset(c.name.size() + 2);
    for (const LinearTerm& t : c.terms) w.put(t.coef, spec.variables[t.var]);
    const char* op = c.sense == Sense::le ? "<=" : c.sense == Sense::ge ? ">=" : "=";
    os << ' ' << op << ' ' << detail::num(c.rhs) << '\n';
  }
  os << "Binary\n";
  w.reset(0);
  for (const std::string& v : spec.variables) w.raw(v);
  os << "\nEnd\n";
}

inline std::string to_lp(const ModelSpec& spec) {
  std::ostringstream os;
  write_lp(os, spec);
  return os.str();
}

/// Variable index map for solver-side tooling.
inline nlohmann::json model_sidecar(const ModelSpec& spec, const EffectMatrix& effects) {
  nlohmann::json vars = nlohmann::json::array();
  const MatchMatrix& m = effects.match();
  for (std::size_t k = 0; k < spec.variables.size(); ++k) {
    const Pair p = spec.pairs[k];
    vars.push_back({{"name", spec.variables[k]},
                    {"index", k},
                    {"treated", p.treated},
                    {"control", p.control},
                    {"treated_id", m.treated_ids()[p.treated]},
                    {"control_id", m.control_ids()[p.control]},
                    {"effect", effects.value(k)}});
  }
  return {{"schema_version", 1},
          {"kind", spec.kind == ModelKind::qip ? "qip" : "ilp"},
          {"sense", spec.maximize ? "maximize" : "minimize"},
          {"variable_count", spec.variables.size()},
          {"cross_term_count", spec.cross_term_count()},
          {"variables", std::move(vars)}};
}

}  // namespace robustz
