// Command-line front end: match, test, sweep, oracle, export.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "robustz/robustz.hpp"

namespace {

using namespace robustz;

enum Exit { kOk = 0, kUsage = 1, kEmptyMatch = 2, kNoPairs = 3 };

struct ExitError {
  int code;
  std::string message;
};

struct Loaded {
  RunConfig config;
  Dataset data;
  std::unique_ptr<EffectMatrix> effects;
};

Loaded load(const std::string& config_path) {
  Loaded l;
  l.config = load_config(config_path);
  l.data = load_dataset(l.config.data_path, l.config);
  const MatchMatrix match = build_match_matrix(l.data, l.config.covariate_rules);
  l.effects = std::make_unique<EffectMatrix>(build_effect_matrix(match, l.data));
  return l;
}

void require_matches(const EffectMatrix& e) {
  if (e.nnz() == 0) throw ExitError{kEmptyMatch, "no good matches"};
}

// Writes to --out when given, stdout otherwise.
class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty()) {
      file_.open(path, std::ios::binary);
      if (!file_) throw ExitError{kUsage, "cannot write " + path};
    }
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

std::size_t fixed_n(const RunConfig& c, std::optional<std::size_t> flag) {
  if (flag) {
    if (*flag < 2) throw ExitError{kUsage, "--n must be at least 2"};
    return *flag;
  }
  if (c.n_spec && c.n_spec->kind == NSpec::Kind::fixed) return c.n_spec->n;
  throw ExitError{kUsage, "no n given: pass --n or set a fixed n_spec"};
}

// "a:b" or "a:b:step".
NSpec parse_range(const std::string& text, NSpec::Kind kind) {
  NSpec s;
  s.kind = kind;
  char sep1 = 0, sep2 = 0;
  std::istringstream in(text);
  if (!(in >> s.n_min >> sep1 >> s.n_max) || sep1 != ':')
    throw ExitError{kUsage, "expected a range n_min:n_max, got '" + text + "'"};
  if (in >> sep2) {
    if (sep2 != ':' || !(in >> s.step) || kind != NSpec::Kind::sweep)
      throw ExitError{kUsage, "bad range '" + text + "'"};
  }
  if (s.n_min < 2 || s.n_min > s.n_max || s.step < 1)
    throw ExitError{kUsage, "range needs 2 <= n_min <= n_max"};
  return s;
}

double pick_alpha(const RunConfig& c, std::optional<double> flag) {
  const double a = flag ? *flag : c.alpha;
  if (!(a > 0.0 && a < 1.0)) throw ExitError{kUsage, "--alpha must lie in (0,1)"};
  return a;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robust Z-test over matched-pair assignments"};
  app.require_subcommand(1);

  std::string config_path, out_path, dump_path, sweep_range, bisect_range, kind = "qip",
                                                                           direction = "min";
  std::optional<std::size_t> n_flag;
  std::optional<double> alpha_flag, bl_flag;
  std::optional<std::uint64_t> budget_flag;
  unsigned jobs = 1;
  int case_flag = 1;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "run configuration (JSON)")->required();
    sub->add_option("--out", out_path, "output file (default: stdout)");
  };

  CLI::App* match = app.add_subcommand("match", "build D and report its structure");
  common(match);
  match->add_option("--dump", dump_path, "write D as i,j,effect lines");

  CLI::App* test = app.add_subcommand("test", "run the robust test at one n");
  common(test);
  test->add_option("--n", n_flag, "number of pairs");
  test->add_option("--alpha", alpha_flag, "significance level");

  CLI::App* sweep = app.add_subcommand("sweep", "CSV over a range of n");
  common(sweep);
  sweep->add_option("--sweep", sweep_range, "n_min:n_max[:step]");
  sweep->add_option("--binary-search", bisect_range, "n_min:n_max");
  sweep->add_option("--alpha", alpha_flag, "significance level");
  sweep->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);

  CLI::App* oracle = app.add_subcommand("oracle", "exact extrema by enumeration");
  common(oracle);
  oracle->add_option("--n", n_flag, "number of pairs");
  oracle->add_option("--oracle-budget", budget_flag, "maximum assignments to enumerate");

  CLI::App* exp = app.add_subcommand("export", "write a solver model file");
  common(exp);
  exp->add_option("--n", n_flag, "number of pairs");
  exp->add_option("--kind", kind, "qip or ilp")->check(CLI::IsMember({"qip", "ilp"}));
  exp->add_option("--case", case_flag, "1 or 2 (qip)")->check(CLI::IsMember({1, 2}));
  exp->add_option("--direction", direction, "min or max")->check(CLI::IsMember({"min", "max"}));
  exp->add_option("--bl", bl_flag, "bound on the sum of squared effects (ilp)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    Loaded l = load(config_path);
    const EffectMatrix& effects = *l.effects;

    if (match->parsed()) {
      Output out(out_path);
      out.stream() << match_report_json(effects, l.data.excluded_count).dump(2) << '\n';
      if (!dump_path.empty()) {
        std::ofstream dump(dump_path, std::ios::binary);
        if (!dump) throw ExitError{kUsage, "cannot write " + dump_path};
        write_coordinate_list(dump, effects);
      }
      require_matches(effects);
      return kOk;
    }

    require_matches(effects);
    const RobustZTest rz(effects);

    if (test->parsed()) {
      const std::size_t n = fixed_n(l.config, n_flag);
      const double alpha = pick_alpha(l.config, alpha_flag);
      const TestResult r = rz.run_test(n, alpha);
      Output out(out_path);
      out.stream() << test_result_json(r).dump(2) << '\n';
      return kOk;
    }

    if (sweep->parsed()) {
      if (!sweep_range.empty() && !bisect_range.empty())
        throw ExitError{kUsage, "--sweep and --binary-search are exclusive"};
      const double alpha = pick_alpha(l.config, alpha_flag);
      NSpec spec;
      if (!sweep_range.empty())
        spec = parse_range(sweep_range, NSpec::Kind::sweep);
      else if (!bisect_range.empty())
        spec = parse_range(bisect_range, NSpec::Kind::binary_search);
      else if (l.config.n_spec)
        spec = *l.config.n_spec;
      else
        throw ExitError{kUsage, "no n range: pass --sweep, --binary-search or set n_spec"};

      if (spec.kind == NSpec::Kind::binary_search) {
        const std::size_t hi = spec.n_max != 0 ? spec.n_max : rz.default_n_max();
        if (hi < spec.n_min) throw ExitError{kNoPairs, "no feasible n in range"};
        const auto n = rz.find_max_feasible_n(spec.n_min, hi);
        if (!n) throw ExitError{kNoPairs, "no feasible n in range"};
        spec.n_min = spec.n_max = *n;
      } else if (spec.kind == NSpec::Kind::fixed) {
        spec.n_min = spec.n_max = spec.n;
      }
      Output out(out_path);
      write_sweep_header(out.stream());
      for (const SweepRow& row : rz.sweep(spec.n_min, spec.n_max, spec.step, alpha, jobs))
        write_sweep_row(out.stream(), row);
      return kOk;
    }

    if (oracle->parsed()) {
      const std::size_t n = fixed_n(l.config, n_flag);
      const std::uint64_t budget = budget_flag ? *budget_flag : l.config.oracle_budget;
      if (budget < 1) throw ExitError{kUsage, "--oracle-budget must be positive"};
      if (rz.max_pairs() < n) throw ExitError{kNoPairs, std::to_string(n) + " pairs are not possible"};
      const OracleResult o = enumerate_extrema(effects, n, budget);
      Output out(out_path);
      out.stream() << oracle_json(o, n).dump(2) << '\n';
      return kOk;
    }

    if (exp->parsed()) {
      const std::size_t n = fixed_n(l.config, n_flag);
      const Direction dir = direction == "min" ? Direction::min : Direction::max;
      ModelSpec spec;
      if (kind == "qip") {
        spec = export_qip(effects, n, dir, case_flag == 1 ? GreedyCase::case1 : GreedyCase::case2);
      } else {
        if (!bl_flag || !(*bl_flag > 0.0)) throw ExitError{kUsage, "--bl must be positive"};
        spec = export_ilp(effects, n, dir, *bl_flag);
      }
      Output out(out_path);
      write_lp(out.stream(), spec);
      if (!out_path.empty()) {
        std::ofstream side(out_path + ".json", std::ios::binary);
        side << model_sidecar(spec, effects).dump(2) << '\n';
      }
      return kOk;
    }
  } catch (const ExitError& e) {
    std::cerr << "error: " << e.message << '\n';
    return e.code;
  } catch (const NoPairsError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNoPairs;
  } catch (const BudgetExceededError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const robustz::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  }
  return kUsage;
}
