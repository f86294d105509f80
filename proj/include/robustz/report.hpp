#pragma once

#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>

#include <nlohmann/json.hpp>

#include "robustz/matching.hpp"
#include "robustz/oracle.hpp"
#include "robustz/orchestrator.hpp"

namespace robustz {

inline constexpr int kReportSchemaVersion = 1;

/// JSON has no infinity; write it as the strings "inf" and "-inf".
inline nlohmann::json json_number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

inline nlohmann::json assignment_json(const Assignment& a) {
  nlohmann::json out = nlohmann::json::array();
  for (const Pair& p : a.pairs) out.push_back({p.treated, p.control});
  return out;
}

inline nlohmann::json direction_json(const DirectionReport& d) {
  nlohmann::json trace = nlohmann::json::array();
  for (const LadderStep& s : d.outcome.trace)
    trace.push_back({{"case", to_string(s.tag)}, {"feasible", s.feasible}});
  const GreedySolution& sol = *d.outcome.solution;
  return {{"z", json_number(d.z)},
          {"gamma", json_number(d.gamma)},
          {"z_assignment", json_number(d.z_assignment)},
          {"case", to_string(sol.case_tag)},
          {"fallback", d.outcome.fallback()},
          {"sum", sol.stats.sum},
          {"sum_squares", sol.stats.sum_squares},
          {"sigma_hat", sol.stats.sigma_hat},
          {"degenerate", sol.stats.degenerate},
          {"assignment", assignment_json(sol.assignment)},
          {"trace", std::move(trace)},
          {"ms", d.ms}};
}

inline nlohmann::json test_result_json(const TestResult& r) {
  return {{"schema_version", kReportSchemaVersion},
          {"n", r.n},
          {"alpha", r.alpha},
          {"z_min", json_number(r.z_min)},
          {"z_max", json_number(r.z_max)},
          {"p_min", r.p_min},
          {"p_max", r.p_max},
          {"classification", to_string(r.classification)},
          {"degenerate", r.degenerate},
          {"min", direction_json(r.min)},
          {"max", direction_json(r.max)}};
}

inline nlohmann::json match_report_json(const EffectMatrix& effects, std::size_t excluded) {
  const MatchMatrix& m = effects.match();
  const BlockPartition parts = partition_blocks(m);
  return {{"schema_version", kReportSchemaVersion},
          {"treated", m.treated_count()},
          {"control", m.control_count()},
          {"excluded", excluded},
          {"active_treated", m.active_treated_count()},
          {"active_control", m.active_control_count()},
          {"nnz", m.nnz()},
          {"blocks", parts.blocks.size()},
          {"identical_rows", parts.all_identical_rows()}};
}

inline nlohmann::json oracle_json(const OracleResult& o, std::size_t n) {
  return {{"schema_version", kReportSchemaVersion},
          {"n", n},
          {"z_max", json_number(o.z_max)},
          {"z_min", json_number(o.z_min)},
          {"argmax", assignment_json(o.argmax)},
          {"argmin", assignment_json(o.argmin)},
          {"enumerated", o.enumerated},
          {"degenerate_seen", o.degenerate_seen}};
}

inline void write_sweep_header(std::ostream& os) {
  os << "n,z_min,z_max,p_min,p_max,classification,ms\n";
}

inline void write_sweep_row(std::ostream& os, const SweepRow& row) {
  char buf[256];
  if (!row.result) {
    std::snprintf(buf, sizeof buf, "%zu,,,,,no_pairs,%.3f\n", row.n, row.ms);
  } else {
    const TestResult& r = *row.result;
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g,%s,%.3f\n", row.n, r.z_min,
                  r.z_max, r.p_min, r.p_max, std::string(to_string(r.classification)).c_str(),
                  row.ms);
  }
  os << buf;
}

}  // namespace robustz
