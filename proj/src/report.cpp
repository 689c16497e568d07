#include "lieode/report.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace lieode {

namespace {

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::ofstream open_out(const std::string& dir, const std::string& name,
                       Artifacts& artifacts) {
  std::filesystem::create_directories(dir);
  const std::string path = (std::filesystem::path(dir) / name).string();
  std::ofstream out(path, std::ios::binary);  // no platform newline mangling
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  artifacts.files.push_back(path);
  return out;
}

const char* status_name(TrainReport::Status s) {
  switch (s) {
    case TrainReport::Status::TargetReached: return "target-reached";
    case TrainReport::Status::MaxIterations: return "max-iterations";
    case TrainReport::Status::Diverged: return "diverged";
  }
  return "?";
}

std::vector<std::size_t> reported_components(const IvpSystem& system) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < system.size(); ++i)
    if (!system.is_time(i)) out.push_back(i);
  return out;
}

// One table of pointwise data, reused by the dense solution CSV and the
// per-grid CSVs that back the summary metrics.
void write_solution_table(std::ofstream& out, const RunResult& run,
                          std::span<const double> grid) {
  const IvpSystem& system = run.problem.system;
  const std::vector<std::size_t> comps = reported_components(system);

  out << "x";
  for (auto i : comps) out << ",yhat_" << system.variables[i];
  for (auto i : comps) out << ",ybar_" << system.variables[i];
  for (auto i : comps) out << ",yref_" << system.variables[i];
  for (auto i : comps) out << ",err_" << system.variables[i];
  for (auto i : comps) out << ",dev_" << system.variables[i];
  for (auto i : comps) out << ",res_" << system.variables[i];
  out << ",extrapolated\n";

  for (double x : grid) {
    const TrialSolution::Eval e = run.trial.eval(x);
    const std::vector<double> ybar = run.trial.first.value(x);
    const std::vector<double> yref = run.problem.reference(x);
    out << fmt17(x + run.problem.shift);
    for (auto i : comps) out << ',' << fmt17(e.value[i]);
    for (auto i : comps) out << ',' << fmt17(ybar[i]);
    for (auto i : comps) out << ',' << fmt17(yref[i]);
    for (auto i : comps) out << ',' << fmt17(yref[i] - e.value[i]);
    for (auto i : comps) out << ',' << fmt17(std::abs(x * (yref[i] - e.value[i])));
    for (auto i : comps) {
      const double r = e.derivative[i] - system.rhs[i].eval(e.value);
      out << ',' << fmt17(r);
    }
    out << ',' << (system.interval.contains(x) ? 0 : 1) << "\n";
  }
}

std::vector<double> dense_grid(const RunResult& run) {
  const Interval iv = run.problem.system.interval;
  const double pad = run.problem.def.extension * iv.length();
  Interval span = iv;
  if (iv.lo < 0.0) span.lo -= pad;
  if (iv.hi > 0.0) span.hi += pad;
  return collocation_grid(span, run.problem.def.eval_points);
}

void write_metric_rows(std::ofstream& out, const RunResult& run) {
  const struct {
    const char* name;
    const Metrics* m;
  } rows[3] = {{"training", &run.train_metrics},
               {"predict", &run.predict_metrics},
               {"test", &run.test_metrics}};
  out << "grid samples max_error mean_error max_deviation ave_deviation "
         "ave_error\n";
  for (const auto& row : rows) {
    out << row.name << ' ' << row.m->points << ' ' << fmt17(row.m->max_abs_error)
        << ' ' << fmt17(row.m->mean_abs_error) << ' '
        << fmt17(row.m->max_deviation) << ' ' << fmt17(row.m->ave_deviation)
        << ' ' << fmt17(row.m->ave_error) << "\n";
  }
}

void write_run_summary(std::ofstream& out, const RunResult& run) {
  const ProblemDef& def = run.problem.def;
  out << "lieode run summary\n";
  out << "label = " << def.label << "\n";
  out << "status = " << status_name(run.report.status) << "\n";
  out << "first_term = " << run.trial.first.label;
  switch (run.trial.first.source) {
    case AssociatedSolution::Source::ClosedForm: out << " (closed form)"; break;
    case AssociatedSolution::Source::Numeric: out << " (numeric)"; break;
    case AssociatedSolution::Source::Baseline: out << " (baseline)"; break;
  }
  out << "\n";
  out << "split_mode = " << def.split.mode << "\n";
  out << "hidden = " << def.network.hidden << "\n";
  out << "seed = " << def.network.seed << "\n";
  out << "points = " << def.train.points << "\n";
  out << "optimizer = " << def.train.optimizer << "\n";
  out << "eta = " << fmt17(def.train.eta) << "\n";
  out << "final_eta = " << fmt17(run.report.final_learning_rate) << "\n";
  out << "max_iters = " << def.train.max_iters << "\n";
  out << "target_loss = " << fmt17(def.train.target_loss) << "\n";
  out << "iterations = " << run.report.iterations << "\n";
  out << "final_loss = " << fmt17(run.report.final_loss) << "\n";
  out << "anchor_error = " << fmt17(run.anchor_error) << "\n";
  out << "interval = " << fmt17(def.interval.lo) << ' ' << fmt17(def.interval.hi)
      << "\n";
  out << "start = " << fmt17(def.start) << "\n";
  out << "extension = " << fmt17(def.extension) << "\n";
  out << "reference = " << (run.problem.exact_reference ? "exact" : "runge-kutta")
      << "\n";
  write_metric_rows(out, run);
  out << "wall_seconds = " << fmt17(run.report.wall_seconds) << "\n";
}

Artifacts write_run_artifacts_prefixed(const RunResult& run,
                                       const std::string& out_dir,
                                       const std::string& prefix) {
  Artifacts artifacts;
  artifacts.directory = out_dir;

  {
    auto out = open_out(out_dir, prefix + "_solution.csv", artifacts);
    write_solution_table(out, run, dense_grid(run));
  }
  const struct {
    const char* suffix;
    const std::vector<double>* grid;
  } grids[3] = {{"training", &run.train_grid},
                {"predict", &run.predict_grid},
                {"test", &run.test_grid}};
  for (const auto& g : grids) {
    auto out =
        open_out(out_dir, prefix + "_grid_" + g.suffix + ".csv", artifacts);
    write_solution_table(out, run, *g.grid);
  }
  {
    auto out = open_out(out_dir, prefix + "_loss.csv", artifacts);
    out << "iteration,loss\n";
    for (std::size_t k = 0; k < run.report.loss_trajectory.size(); ++k)
      out << k << ',' << fmt17(run.report.loss_trajectory[k]) << "\n";
  }
  {
    auto out = open_out(out_dir, prefix + "_summary.txt", artifacts);
    write_run_summary(out, run);
    out << "files:\n";
    for (const auto& f : artifacts.files) out << "  " << f << "\n";
  }
  return artifacts;
}

}  // namespace

Artifacts write_run_artifacts(const RunResult& run, const std::string& out_dir) {
  if (run.report.loss_trajectory.empty())
    throw std::invalid_argument("refusing to write empty run artifacts");
  return write_run_artifacts_prefixed(run, out_dir, run.problem.def.label);
}

Artifacts write_compare_artifacts(const CompareResult& cmp,
                                  const std::string& out_dir) {
  if (cmp.lie.report.loss_trajectory.empty() ||
      cmp.baseline.report.loss_trajectory.empty())
    throw std::invalid_argument("refusing to write empty compare artifacts");

  const std::string label = cmp.lie.problem.def.label;
  Artifacts artifacts =
      write_run_artifacts_prefixed(cmp.lie, out_dir, label + "_lie");
  Artifacts base = write_run_artifacts_prefixed(
      cmp.baseline, out_dir, label + "_" + cmp.baseline_kind);
  artifacts.files.insert(artifacts.files.end(), base.files.begin(),
                         base.files.end());

  const IvpSystem& system = cmp.lie.problem.system;
  const std::vector<std::size_t> comps = reported_components(system);
  {
    auto out = open_out(out_dir, label + "_compare.csv", artifacts);
    out << "x";
    for (auto i : comps) out << ",yref_" << system.variables[i];
    for (auto i : comps) out << ",ybar_lie_" << system.variables[i];
    for (auto i : comps)
      out << ",ybar_" << cmp.baseline_kind << '_' << system.variables[i];
    out << "\n";
    const double shift = cmp.lie.problem.shift;
    const Interval window = {cmp.window.lo - shift, cmp.window.hi - shift};
    for (double x : collocation_grid(window, 201)) {
      const std::vector<double> y = cmp.lie.problem.reference(x);
      const std::vector<double> a = cmp.lie.trial.first.value(x);
      const std::vector<double> b = cmp.baseline.trial.first.value(x);
      out << fmt17(x + shift);
      for (auto i : comps) out << ',' << fmt17(y[i]);
      for (auto i : comps) out << ',' << fmt17(a[i]);
      for (auto i : comps) out << ',' << fmt17(b[i]);
      out << "\n";
    }
  }
  {
    auto out = open_out(out_dir, label + "_compare_summary.txt", artifacts);
    out << "lieode compare summary\n";
    out << "label = " << label << "\n";
    out << "baseline = " << cmp.baseline_kind << "\n";
    out << "window = " << fmt17(cmp.window.lo) << ' ' << fmt17(cmp.window.hi)
        << "\n";
    out << "lie_first_term_max_error = " << fmt17(cmp.lie_first_term_error)
        << "\n";
    out << cmp.baseline_kind
        << "_first_term_max_error = " << fmt17(cmp.baseline_first_term_error)
        << "\n";
    out << "lie_final_loss = " << fmt17(cmp.lie.report.final_loss) << "\n";
    out << cmp.baseline_kind
        << "_final_loss = " << fmt17(cmp.baseline.report.final_loss) << "\n";
    out << "files:\n";
    for (const auto& f : artifacts.files) out << "  " << f << "\n";
  }
  return artifacts;
}

Artifacts write_sweep_artifacts(const SweepResult& sweep,
                                const std::string& label,
                                const std::string& out_dir) {
  if (sweep.rows.empty())
    throw std::invalid_argument("refusing to write empty sweep artifacts");

  Artifacts artifacts;
  artifacts.directory = out_dir;
  {
    auto out = open_out(out_dir, label + "_sweep.csv", artifacts);
    out << "parameter,value,data_class,samples,ave_error,ave_deviation,"
           "max_error,max_deviation,status\n";
    for (const SweepRow& row : sweep.rows) {
      out << sweep.parameter << ',' << fmt17(row.value) << ',' << row.data_class
          << ',' << row.samples << ',' << fmt17(row.metrics.ave_error) << ','
          << fmt17(row.metrics.ave_deviation) << ','
          << fmt17(row.metrics.max_abs_error) << ','
          << fmt17(row.metrics.max_deviation) << ','
          << (row.ok ? "ok" : "failed") << "\n";
    }
  }
  {
    auto out = open_out(out_dir, label + "_sweep_summary.txt", artifacts);
    out << "lieode sweep summary\n";
    out << "label = " << label << "\n";
    out << "parameter = " << sweep.parameter << "\n";
    out << "values =";
    for (double v : sweep.values) out << ' ' << fmt17(v);
    out << "\n";
    out << "all_ok = " << (sweep.all_ok ? "yes" : "no") << "\n";
    for (const SweepRow& row : sweep.rows) {
      if (!row.ok)
        out << "failed " << sweep.parameter << " = " << fmt17(row.value) << ": "
            << row.error << "\n";
    }
    out << "files:\n";
    for (const auto& f : artifacts.files) out << "  " << f << "\n";
  }
  return artifacts;
}

}  // namespace lieode
