// Command line front end: run built-in or file-defined problems, compare
// first-term constructions, sweep a parameter, export built-ins.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lieode/builtins.hpp"
#include "lieode/problem_file.hpp"
#include "lieode/report.hpp"
#include "lieode/runner.hpp"

namespace {

using namespace lieode;

struct Overrides {
  int hidden = -1;
  double eta = -1.0;
  int iters = -1;
  long long seed = -1;
  std::string optimizer;
  int points = -1;
  double target_loss = -1.0;
  int eval_points = -1;
  std::vector<std::string> params;  // key=value, built-in parameters
};

void add_override_flags(CLI::App* cmd, Overrides& ov) {
  cmd->add_option("--m", ov.hidden, "hidden neurons");
  cmd->add_option("--eta", ov.eta, "learning rate");
  cmd->add_option("--iters", ov.iters, "max iterations");
  cmd->add_option("--seed", ov.seed, "network init seed");
  cmd->add_option("--optimizer", ov.optimizer, "gd or adam")
      ->check(CLI::IsMember({"gd", "adam"}));
  cmd->add_option("--points", ov.points, "collocation points");
  cmd->add_option("--target-loss", ov.target_loss, "stop when loss reaches this");
  cmd->add_option("--eval-points", ov.eval_points, "solution CSV rows");
  cmd->add_option("--set", ov.params,
                  "built-in parameter override, e.g. --set epsilon=0.5");
}

std::map<std::string, double> parse_params(const std::vector<std::string>& kv) {
  std::map<std::string, double> out;
  for (const std::string& s : kv) {
    const auto eq = s.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("--set expects key=value, got '" + s + "'");
    out[s.substr(0, eq)] = std::stod(s.substr(eq + 1));
  }
  return out;
}

ProblemDef load_problem(const std::string& source, const Overrides& ov) {
  ProblemDef def;
  if (is_builtin(source)) {
    def = make_builtin(source, parse_params(ov.params));
  } else {
    if (!std::filesystem::exists(source))
      throw std::runtime_error("'" + source +
                               "' is neither a built-in problem nor a file");
    if (!ov.params.empty())
      throw std::invalid_argument("--set only applies to built-in problems");
    def = read_problem_file(source);
  }
  if (ov.hidden > 0) def.network.hidden = ov.hidden;
  if (ov.eta > 0) def.train.eta = ov.eta;
  if (ov.iters > 0) def.train.max_iters = ov.iters;
  if (ov.seed >= 0) def.network.seed = static_cast<std::uint64_t>(ov.seed);
  if (!ov.optimizer.empty()) def.train.optimizer = ov.optimizer;
  if (ov.points > 1) def.train.points = ov.points;
  if (ov.target_loss > 0) def.train.target_loss = ov.target_loss;
  if (ov.eval_points > 1) def.eval_points = ov.eval_points;
  return def;
}

void print_metrics_line(const char* name, const Metrics& m) {
  std::printf("  %-8s samples=%-3d max_err=%.3e ave_dev=%.3e ave_err=%.3e\n",
              name, m.points, m.max_abs_error, m.ave_deviation, m.ave_error);
}

void print_run(const RunResult& run) {
  std::printf("%s: %s after %d iterations, final loss %.3e (first term: %s)\n",
              run.problem.def.label.c_str(),
              run.report.status == TrainReport::Status::TargetReached
                  ? "converged"
                  : (run.report.status == TrainReport::Status::Diverged
                         ? "DIVERGED"
                         : "stopped at max iterations"),
              run.report.iterations, run.report.final_loss,
              run.trial.first.label.c_str());
  print_metrics_line("training", run.train_metrics);
  print_metrics_line("predict", run.predict_metrics);
  print_metrics_line("test", run.test_metrics);
}

void print_files(const Artifacts& artifacts) {
  for (const auto& f : artifacts.files) std::printf("wrote %s\n", f.c_str());
}

int cmd_run(const std::string& source, const Overrides& ov,
            const std::string& out_dir) {
  const ProblemDef def = load_problem(source, ov);
  const RunResult run = run_solve(def);
  print_run(run);
  print_files(write_run_artifacts(run, out_dir));
  return run.report.status == TrainReport::Status::Diverged ? 1 : 0;
}

int cmd_compare(const std::string& source, const std::string& baseline,
                const Overrides& ov, const std::string& out_dir) {
  const ProblemDef def = load_problem(source, ov);
  const CompareResult cmp = run_compare(def, baseline);
  print_run(cmp.lie);
  print_run(cmp.baseline);
  std::printf("first-term max error on [%g, %g]: lie %.3e vs %s %.3e\n",
              cmp.window.lo, cmp.window.hi, cmp.lie_first_term_error,
              cmp.baseline_kind.c_str(), cmp.baseline_first_term_error);
  print_files(write_compare_artifacts(cmp, out_dir));
  const bool ok =
      cmp.lie.report.status != TrainReport::Status::Diverged &&
      cmp.baseline.report.status != TrainReport::Status::Diverged;
  return ok ? 0 : 1;
}

int cmd_sweep(const std::string& source, const std::string& param,
              const std::vector<double>& values, const Overrides& ov,
              const std::string& out_dir) {
  if (!is_builtin(source))
    throw std::invalid_argument("sweep needs a built-in problem template");
  auto make = [&](double value) {
    Overrides o = ov;
    o.params.push_back(param + "=" + std::to_string(value));
    ProblemDef def = load_problem(source, o);
    return def;
  };
  const SweepResult sweep = run_sweep(make, param, values);
  for (const SweepRow& row : sweep.rows) {
    if (row.ok) {
      std::printf("%s=%-6g %-8s ave_err=%.3e ave_dev=%.3e\n", param.c_str(),
                  row.value, row.data_class.c_str(), row.metrics.ave_error,
                  row.metrics.ave_deviation);
    } else {
      std::printf("%s=%-6g FAILED: %s\n", param.c_str(), row.value,
                  row.error.c_str());
    }
  }
  print_files(write_sweep_artifacts(sweep, source, out_dir));
  return sweep.all_ok ? 0 : 1;
}

int cmd_export(const std::string& name, const Overrides& ov,
               const std::string& out_dir) {
  if (!is_builtin(name))
    throw std::invalid_argument("unknown built-in '" + name + "'");
  ProblemDef def = make_builtin(name, parse_params(ov.params));
  std::filesystem::create_directories(out_dir);
  const std::string path =
      (std::filesystem::path(out_dir) / (name + ".problem")).string();
  write_problem_file(def, path);
  std::printf("wrote %s\n", path.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "lieode: neural-network IVP solver with Lie-split first terms.\n"
      "The trial solution is ybar(x) + x*N(x; theta); ybar solves the\n"
      "associated IVP of the chosen operator split, N is trained on the\n"
      "collocation residual."};
  app.require_subcommand(1);

  std::string source, out_dir = "runs", baseline = "constant", param;
  std::vector<double> values;
  Overrides ov;

  CLI::App* run = app.add_subcommand("run", "solve a problem and write artifacts");
  run->add_option("problem", source, "built-in name or problem file")->required();
  run->add_option("--out", out_dir, "output directory");
  add_override_flags(run, ov);

  CLI::App* compare = app.add_subcommand(
      "compare", "train with the Lie first term and a baseline first term");
  compare->add_option("problem", source, "built-in name or problem file")
      ->required();
  compare->add_option("--baseline", baseline, "constant or poly")
      ->check(CLI::IsMember({"constant", "poly"}));
  compare->add_option("--out", out_dir, "output directory");
  add_override_flags(compare, ov);

  CLI::App* sweep = app.add_subcommand(
      "sweep", "run a built-in once per parameter value, tabulate metrics");
  sweep->add_option("problem", source, "built-in name")->required();
  sweep->add_option("--param", param, "parameter to vary")->required();
  sweep->add_option("--values", values, "parameter values")
      ->required()
      ->delimiter(',');
  sweep->add_option("--out", out_dir, "output directory");
  add_override_flags(sweep, ov);

  CLI::App* exp = app.add_subcommand("export-builtin",
                                     "write a built-in as a problem file");
  exp->add_option("name", source, "built-in name")->required();
  exp->add_option("--out", out_dir, "output directory");
  exp->add_option("--set", ov.params, "built-in parameter override");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(source, ov, out_dir);
    if (compare->parsed()) return cmd_compare(source, baseline, ov, out_dir);
    if (sweep->parsed()) return cmd_sweep(source, param, values, ov, out_dir);
    if (exp->parsed()) return cmd_export(source, ov, out_dir);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
