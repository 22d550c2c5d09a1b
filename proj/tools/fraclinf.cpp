#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "fraclinf/config.hpp"
#include "fraclinf/io.hpp"
#include "fraclinf/operator_check.hpp"
#include "fraclinf/verify.hpp"

using namespace fraclinf;
using nlohmann::json;

namespace {

constexpr int exit_pass = 0;
constexpr int exit_fail = 1;
constexpr int exit_usage = 2;

struct CommonArgs {
  std::string config_path;
  std::string scenario;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::vector<double> p_schedule;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  auto* cfg = cmd->add_option("-c,--config", args.config_path, "JSON run config");
  auto* sc = cmd->add_option("--scenario", args.scenario, "built-in scenario (bump1d, twobump1d, ball2d, trivial1d)");
  cfg->excludes(sc);
  cmd->add_option("-o,--out", args.out_dir, "output directory (overrides the config)");
  cmd->add_option("--seed", args.seed, "PRNG seed (overrides the config)");
  cmd->add_option("--p-schedule", args.p_schedule, "comma-separated p values (overrides the config)")->delimiter(',');
}

RunConfig load_config(const CommonArgs& args) {
  if (args.config_path.empty() && args.scenario.empty())
    throw Error(ErrorCode::config_error, "give --config FILE or --scenario NAME");
  RunConfig cfg = args.config_path.empty() ? scenario_config(args.scenario) : parse_config(args.config_path);
  if (!args.out_dir.empty()) cfg.output_dir = args.out_dir;
  if (args.seed) cfg.seed = *args.seed;
  if (!args.p_schedule.empty()) {
    json doc = config_to_json(cfg);
    doc["p_schedule"] = args.p_schedule;
    const std::string out = cfg.output_dir;
    cfg = config_from_json(doc);
    cfg.output_dir = out;
  }
  return cfg;
}

BuiltProblem build_or_usage(const RunConfig& cfg) {
  try {
    return build_problem(cfg);
  } catch (const Error& e) {
    // Anything rejected while building the problem is a property of the config.
    throw Error(ErrorCode::config_error, e.what());
  }
}

std::string path_in(const RunConfig& cfg, const std::string& rel) {
  return (std::filesystem::path(cfg.output_dir) / rel).string();
}

void write_config(const RunConfig& cfg, const std::string& hash) {
  ensure_directory(cfg.output_dir);
  json doc = config_to_json(cfg);
  doc["config_hash"] = hash;
  write_json(path_in(cfg, "config.json"), doc);
}

void degenerate_banner(const ProblemSpec& spec) {
  if (spec.degenerate)
    std::cerr << "WARNING: degenerate scenario: u0 vanishes outside Omega, so the solution is identically zero "
                 "and the dual field is undefined\n";
}

void print_trajectory(const ContinuationResult& res) {
  std::printf("%8s %24s %12s %6s %s\n", "p", "e_p", "grad_norm", "iters", "converged");
  for (const auto& st : res.stages)
    std::printf("%8g %24.17g %12.3e %6d %s\n", st.p, st.e_p, st.gradient_norm, st.iterations, st.converged ? "yes" : "NO");
  std::printf("e_inf: monotone lower estimate %.17g, 1/p extrapolation %.17g (delta %.3e)\n", res.e_inf_estimate,
              res.e_inf_extrapolated, res.extrapolation_delta);
}

int cmd_solve(const RunConfig& cfg) {
  const BuiltProblem bp = build_or_usage(cfg);
  const ProblemSpec& spec = bp.spec;
  const std::string hash = config_hash(cfg);
  degenerate_banner(spec);
  write_config(cfg, hash);
  ensure_directory(path_in(cfg, "fields"));
  ensure_directory(path_in(cfg, "duals"));
  const ContinuationResult res = continuation(spec, cfg.p_schedule, bp.options);
  for (const auto& st : res.stages) {
    write_csv(path_in(cfg, "fields/u_" + p_label(st.p) + ".csv"), field_table(spec, st), hash);
    if (!spec.degenerate) write_csv(path_in(cfg, "duals/f_" + p_label(st.p) + ".csv"), dual_table(spec, dual_field(st, spec)), hash);
  }
  write_csv(path_in(cfg, "trajectory.csv"), trajectory_table(res), hash);
  print_trajectory(res);
  return res.all_converged ? exit_pass : exit_fail;
}

int cmd_verify(const RunConfig& cfg) {
  const BuiltProblem bp = build_or_usage(cfg);
  const ProblemSpec& spec = bp.spec;
  const std::string hash = config_hash(cfg);
  degenerate_banner(spec);
  write_config(cfg, hash);
  SuiteOptions opts;
  opts.p_schedule = cfg.p_schedule;
  opts.solver = bp.options;
  opts.seed = cfg.seed;
  const VerificationSuite suite = run_suite(spec, opts);
  ReportContext ctx{cfg.scenario, hash, cfg.seed, bp.options.tol_grad, config_to_json(cfg)};
  const json report = full_report(spec, suite, ctx);
  write_json(path_in(cfg, "report.json"), report);
  write_csv(path_in(cfg, "trajectory.csv"), trajectory_table(*suite.result), hash);
  for (const auto& c : report["checks"])
    std::printf("%-30s %-5s %s\n", c["name"].get<std::string>().c_str(), c["kind"].get<std::string>().c_str(),
                c["status"].get<std::string>().c_str());
  const bool pass = report_hard_pass(report);
  std::printf("hard checks: %s\n", pass ? "PASS" : "FAIL");
  return pass ? exit_pass : exit_fail;
}

int cmd_sweep(const RunConfig& cfg) {
  const BuiltProblem bp = build_or_usage(cfg);
  const ProblemSpec& spec = bp.spec;
  const std::string hash = config_hash(cfg);
  degenerate_banner(spec);
  write_config(cfg, hash);
  const ContinuationResult res = continuation(spec, cfg.p_schedule, bp.options);
  CsvTable t;
  t.header = {"p", "e_p", "mass", "duality_gap", "saturated_fraction"};
  for (const auto& st : res.stages) {
    if (spec.degenerate) {
      t.add_row({st.p, st.e_p, 0.0, 0.0, 0.0});
      continue;
    }
    const DualField d = dual_field(st, spec);
    const double frac = saturated_fraction(spec, st.u, st.e_p, sign_band_mask(d, *spec.grid), 0.05);
    t.add_row({st.p, st.e_p, d.mass, duality_identity(d, st, spec), frac});
  }
  write_csv(path_in(cfg, "sweep.csv"), t, hash);
  for (const auto& row : t.rows) {
    for (std::size_t k = 0; k < row.size(); ++k) std::printf("%s%s", k ? "," : "", row[k].c_str());
    std::printf("\n");
  }
  return res.all_converged ? exit_pass : exit_fail;
}

int cmd_uniqueness(const RunConfig& cfg) {
  const BuiltProblem bp = build_or_usage(cfg);
  const std::string hash = config_hash(cfg);
  degenerate_banner(bp.spec);
  write_config(cfg, hash);
  const UniquenessReport u = uniqueness_experiment(bp.spec, cfg.p_schedule, cfg.seed, bp.options);
  const json doc{{"schema", "fraclinf-uniqueness/1"},
                 {"config_hash", hash},
                 {"seed", u.seed},
                 {"p_max", u.p_max},
                 {"pair_distance", u.pair_distance},
                 {"relative_distance", u.relative_distance},
                 {"penalized_distance", u.penalized_distance},
                 {"penalized_chain_ok", u.penalized_chain_ok},
                 {"fraction_a", u.fraction_a},
                 {"fraction_b", u.fraction_b},
                 {"fraction_average", u.fraction_average},
                 {"average_gap", u.average_gap},
                 {"degenerate", u.degenerate},
                 {"pass", u.pass}};
  write_json(path_in(cfg, "uniqueness.json"), doc);
  std::printf("pair distance %.3e (relative %.3e), penalized route %.3e, saturation a/b/avg %.4f/%.4f/%.4f: %s\n",
              u.pair_distance, u.relative_distance, u.penalized_distance, u.fraction_a, u.fraction_b,
              u.fraction_average, u.pass ? "PASS" : "FAIL");
  return u.pass ? exit_pass : exit_fail;
}

int cmd_operator_check(const RunConfig& cfg, std::size_t probes) {
  const std::string hash = config_hash(cfg);
  write_config(cfg, hash);
  const AgreementTable t = oracle_agreement(cfg.n, cfg.s, cfg.L, cfg.h, probes);
  const KelvinCheck k = kelvin_identity_check(cfg.n == 1 ? cfg.s : 0.25);
  bool pass = k.max_gap <= 1e-6;
  CsvTable table;
  table.header = {"function", "s", "h", "max_abs_error", "relative_error", "max_abs_error_half_h",
                  "relative_error_half_h", "improvement"};
  std::printf("%-10s %10s %14s %14s %12s\n", "function", "h", "rel. error", "rel. err h/2", "improvement");
  json rows = json::array();
  for (std::size_t j = 0; j < t.coarse.size(); ++j) {
    const auto& c = t.coarse[j];
    const auto& f = t.fine[j];
    pass = pass && t.improvement[j] >= 1.5;
    table.rows.push_back({c.function, format_double(c.s), format_double(c.h), format_double(c.max_abs_error),
                          format_double(c.relative_error), format_double(f.max_abs_error),
                          format_double(f.relative_error), format_double(t.improvement[j])});
    rows.push_back({{"function", c.function}, {"h", c.h}, {"relative_error", c.relative_error},
                    {"relative_error_half_h", f.relative_error}, {"improvement", t.improvement[j]}});
    std::printf("%-10s %10.5g %14.3e %14.3e %12.2f\n", c.function.c_str(), c.h, c.relative_error, f.relative_error,
                t.improvement[j]);
  }
  std::printf("Kelvin identity: max gap %.3e over %zu probes\n", k.max_gap, k.probes.size());
  write_csv(path_in(cfg, "operator_check.csv"), table, hash);
  write_json(path_in(cfg, "operator_check.json"),
             json{{"config_hash", hash}, {"agreement", rows}, {"kelvin_max_gap", k.max_gap}, {"pass", pass}});
  std::printf("operator check: %s\n", pass ? "PASS" : "FAIL");
  return pass ? exit_pass : exit_fail;
}

int cmd_export(const RunConfig& cfg, const std::string& report_path, bool with_operator) {
  const std::string hash = config_hash(cfg);
  ensure_directory(cfg.output_dir);
  const std::string rp = report_path.empty() ? path_in(cfg, "report.json") : report_path;
  bool wrote = false;
  if (std::filesystem::exists(rp)) {
    const json report = read_json(rp);
    const std::string rh = report.value("config_hash", hash);
    write_csv(path_in(cfg, "report_stages.csv"), report_stage_table(report), rh);
    write_csv(path_in(cfg, "report_checks.csv"), report_check_table(report), rh);
    std::printf("wrote report_stages.csv and report_checks.csv\n");
    wrote = true;
  } else if (!report_path.empty()) {
    throw Error(ErrorCode::io_error, "no report at '" + rp + "'");
  }
  if (with_operator) {
    GridPtr grid = build_grid(cfg.n, cfg.L, cfg.h);
    if (grid->node_count() > FracLapOperator::dense_limit)
      throw Error(ErrorCode::config_error, "operator export is limited to grids with at most " +
                                               std::to_string(FracLapOperator::dense_limit) + " nodes");
    const FracLapOperator op(grid, cfg.s);
    ensure_directory(path_in(cfg, "operator"));
    write_csv(path_in(cfg, "operator/matrix.csv"), operator_matrix_table(op), hash);
    write_csv(path_in(cfg, "operator/tail.csv"), operator_tail_table(op), hash);
    std::printf("wrote operator/matrix.csv and operator/tail.csv (%zu nodes)\n", grid->node_count());
    wrote = true;
  }
  if (!wrote) std::printf("nothing to export: no report.json in %s (use --operator for the matrix)\n", cfg.output_dir.c_str());
  return exit_pass;
}

int cmd_refine(const RunConfig& cfg) {
  const std::string hash = config_hash(cfg);
  write_config(cfg, hash);
  const BuiltProblem coarse = build_or_usage(cfg);
  RunConfig fine_cfg = cfg;
  fine_cfg.h = 0.5 * coarse.spec.grid->spacing();
  const BuiltProblem fine = build_or_usage(fine_cfg);
  const RefinementDelta r = refinement_delta(coarse.spec, fine.spec, cfg.p_schedule, coarse.options);
  std::printf("p = %g: e_h = %.10g  e_h/2 = %.10g  |f_h - f_h/2|_L1 = %.3e (|f_h|_L1 = %.3e)\n", r.p, r.e_coarse,
              r.e_fine, r.f_l1_delta, r.f_l1_coarse);
  std::printf("zero-set fraction: %.4f at h = %g, %.4f at h/2\n", r.zero_fraction_coarse, r.h_coarse,
              r.zero_fraction_fine);
  write_json(path_in(cfg, "refine.json"),
             json{{"config_hash", hash}, {"p", r.p}, {"h_coarse", r.h_coarse}, {"h_fine", r.h_fine},
                  {"e_coarse", r.e_coarse}, {"e_fine", r.e_fine}, {"f_l1_delta", r.f_l1_delta},
                  {"f_l1_coarse", r.f_l1_coarse}, {"zero_fraction_coarse", r.zero_fraction_coarse},
                  {"zero_fraction_fine", r.zero_fraction_fine}, {"converged", r.converged}});
  return r.converged ? exit_pass : exit_fail;
}

int exit_code_for(const Error& e) {
  switch (e.code()) {
    case ErrorCode::config_error:
    case ErrorCode::hypothesis_violation:
    case ErrorCode::invalid_argument:
    case ErrorCode::io_error:
      return exit_usage;
    default:
      return exit_fail;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fraclinf: L-infinity minimisation of the fractional Laplacian via p-continuation"};
  app.require_subcommand(1);
  CommonArgs args;
  std::size_t probes = 20;
  std::string report_path;
  bool with_operator = false;

  auto* solve = app.add_subcommand("solve", "run the p-continuation and write fields, duals and trajectory");
  auto* verify = app.add_subcommand("verify", "run every check and write report.json; exit code reflects hard checks");
  auto* sweep = app.add_subcommand("sweep-p", "per-stage p, e_p, dual mass, duality gap and saturation");
  auto* uniq = app.add_subcommand("uniqueness", "compare two independent solution paths");
  auto* opcheck = app.add_subcommand("operator-check", "oracle agreement at h and h/2 plus the Kelvin identity");
  auto* exp = app.add_subcommand("export", "convert report.json to CSV and optionally dump the dense operator");
  auto* refine = app.add_subcommand("refine", "solve at h and h/2 and report the dual-field and zero-set deltas");
  for (auto* cmd : {solve, verify, sweep, uniq, opcheck, exp, refine}) add_common(cmd, args);
  opcheck->add_option("--probes", probes, "number of probe nodes");
  exp->add_option("--report", report_path, "report.json to convert (default: <out>/report.json)");
  exp->add_flag("--operator", with_operator, "write the dense operator matrix and tail vector");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? exit_pass : exit_usage;
  }

  try {
    const RunConfig cfg = load_config(args);
    if (*solve) return cmd_solve(cfg);
    if (*verify) return cmd_verify(cfg);
    if (*sweep) return cmd_sweep(cfg);
    if (*uniq) return cmd_uniqueness(cfg);
    if (*opcheck) return cmd_operator_check(cfg, probes);
    if (*exp) return cmd_export(cfg, report_path, with_operator);
    if (*refine) return cmd_refine(cfg);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_fail;
  }
  return exit_usage;
}
