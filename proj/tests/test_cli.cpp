#include <cmath>
#include <cstdio>
#include <doctest.h>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "lieode/builtins.hpp"
#include "lieode/problem_file.hpp"
#include "lieode/report.hpp"
#include "lieode/runner.hpp"

using namespace lieode;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "lieode_tests" / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

// Small training budget: these tests exercise plumbing, not accuracy.
ProblemDef quick(ProblemDef def, int iters = 400) {
  def.train.max_iters = iters;
  def.train.eta = 0.05;
  return def;
}

const char* kOscillatorFile = R"(# damped oscillator written as a problem file
[problem]
label = osc
order = 2
interval = 0 2
initial = 0 1

[rhs]
y = -0.4*exp(-0.4*x)*cos(x) - y - 0.4*y'

[split]
mode = explicit
y1 = y2
y2 = -(y1+0.4*y2)

[assoc]
form = example2
epsilon = 0.2
a = 0
b = 1

[network]
hidden = 3
seed = 7

[train]
points = 21
eta = 0.05
max_iters = 300
target_loss = 1e-9
optimizer = adam

[reference]
y = exp(-0.4*x)*sin(x)
)";

}  // namespace

TEST_CASE("problem file: parse and field round trip") {
  std::istringstream in(kOscillatorFile);
  const ProblemDef def = read_problem(in);
  CHECK(def.label == "osc");
  CHECK(def.order == 2);
  CHECK(def.initial == std::vector<double>{0.0, 1.0});
  CHECK(def.split.mode == "explicit");
  CHECK(def.split.g.size() == 2);
  CHECK(def.assoc.form == "example2");
  CHECK(def.assoc.params.at("epsilon") == 0.2);
  CHECK(def.train.max_iters == 300);
  CHECK(def.reference.size() == 1);

  std::ostringstream out;
  write_problem(def, out);
  std::istringstream in2(out.str());
  const ProblemDef def2 = read_problem(in2);
  CHECK(def2.label == def.label);
  CHECK(def2.order == def.order);
  CHECK(def2.order_rhs == def.order_rhs);
  CHECK(def2.initial == def.initial);
  CHECK(def2.split.mode == def.split.mode);
  CHECK(def2.split.g == def.split.g);
  CHECK(def2.assoc.params == def.assoc.params);
  CHECK(def2.network.seed == def.network.seed);
  CHECK(def2.train.eta == def.train.eta);
  CHECK(def2.reference == def.reference);
}

TEST_CASE("problem file: malformed input is reported with a line number") {
  auto parse_text = [](const char* text) {
    std::istringstream in(text);
    return read_problem(in);
  };
  CHECK_THROWS_AS(parse_text("[problem]\nvariables y1\n"), ProblemFileError);
  CHECK_THROWS_AS(parse_text("[nonsense]\n"), ProblemFileError);
  CHECK_THROWS_AS(
      parse_text("[problem]\nvariables = y1\ninterval = 0 1\ninitial = 0\n"
                 "[rhs]\ny1 = 2*\n"),
      ProblemFileError);
  try {
    parse_text("[problem]\nvariables = y1\ninterval = 0 1\ninitial = 0\n"
               "[rhs]\ny1 = cos(y1\n");
    CHECK(false);
  } catch (const ProblemFileError& e) {
    CHECK(e.line == 6);
    CHECK(std::string(e.what()).find("cos(y1") != std::string::npos);
  }
}

TEST_CASE("builtins: catalogue and parameters") {
  CHECK(builtin_names() == std::vector<std::string>{"example1", "example2", "example3"});
  CHECK(is_builtin("example2"));
  CHECK_FALSE(is_builtin("example9"));
  CHECK_THROWS(make_builtin("example9"));
  CHECK_THROWS(make_builtin("example1", {{"epsilon", 0.3}}));

  const ProblemDef e2 = make_builtin("example2", {{"epsilon", 0.5}});
  CHECK(e2.assoc.params.at("epsilon") == 0.5);
  CHECK(e2.reference.empty());  // exact solution only for the default config
  CHECK_FALSE(make_builtin("example2").reference.empty());
}

TEST_CASE("normalize: example2 reduces to the paper's first-order system") {
  const NormalizedProblem np = normalize(make_builtin("example2"));
  REQUIRE(np.system.size() == 3);
  CHECK(np.system.variables == std::vector<std::string>{"y0", "y1", "y2"});
  CHECK(np.system.is_time(0));
  CHECK(np.exact_reference);
  CHECK(np.assoc.source == AssociatedSolution::Source::ClosedForm);
  // g pinned to 1 on the time component
  CHECK(np.opsplit.g[0].constant_value() == 1.0);
}

TEST_CASE("normalize: nonzero start point is translated and mapped back") {
  ProblemDef def;
  def.label = "shifted";
  def.variables = {"y1"};
  def.rhs = {"x"};
  def.initial = {0.0};
  def.start = 2.0;
  def.interval = {2.0, 3.0};
  def.split.mode = "full";
  def.train.points = 5;
  def.train.max_iters = 50;
  const NormalizedProblem np = normalize(def);
  CHECK(np.shift == 2.0);
  CHECK(np.system.interval.lo == 0.0);
  CHECK(np.system.interval.hi == 1.0);
  // y' = x, y(2) = 0 has exact solution (x^2 - 4) / 2; internal x = 1 is
  // original x = 3.
  const auto ref = np.reference(1.0);
  CHECK(ref[1] == doctest::Approx(2.5).epsilon(1e-8));
}

TEST_CASE("run_solve: full-split problem needs no training at all") {
  ProblemDef def;
  def.label = "rotation";
  def.variables = {"y1", "y2"};
  def.rhs = {"y2", "-y1"};
  def.initial = {1.0, 0.0};
  def.interval = {0.0, 2.0};
  def.split.mode = "full";
  def.network.seed = 3;
  def.train.points = 11;
  def.train.max_iters = 4000;
  def.train.eta = 0.05;
  def.train.target_loss = 1e-14;
  def.reference = {{"y1", "cos(x)"}, {"y2", "-sin(x)"}};
  const RunResult run = run_solve(def);
  // D2 = 0: training only has to shrink the randomly initialized network
  CHECK(run.report.final_loss <= 1e-5);
  CHECK(run.train_metrics.max_abs_error <= 2e-3);
  CHECK(run.anchor_error <= 1e-12);
}

TEST_CASE("run_solve: diverged runs are reported, not thrown") {
  ProblemDef def = quick(make_builtin("example3"), 50);
  def.train.eta = 1e8;
  def.train.optimizer = "adam";
  const RunResult run = run_solve(def);
  CHECK(run.report.status == TrainReport::Status::Diverged);
}

TEST_CASE("run artifacts: deterministic byte-identical CSVs") {
  const ProblemDef def = quick(make_builtin("example1"), 300);
  const auto dir_a = temp_dir("det_a");
  const auto dir_b = temp_dir("det_b");
  const Artifacts a = write_run_artifacts(run_solve(def), dir_a.string());
  const Artifacts b = write_run_artifacts(run_solve(def), dir_b.string());
  REQUIRE(a.files.size() == b.files.size());
  for (std::size_t i = 0; i < a.files.size(); ++i) {
    if (a.files[i].find(".csv") == std::string::npos) continue;
    CHECK(slurp(a.files[i]) == slurp(b.files[i]));
  }
}

TEST_CASE("run artifacts: row counts and summary consistency") {
  ProblemDef def = quick(make_builtin("example1"), 300);
  def.eval_points = 101;
  const RunResult run = run_solve(def);
  const auto dir = temp_dir("rows");
  const Artifacts art = write_run_artifacts(run, dir.string());

  auto count_rows = [](const std::string& path) {
    std::ifstream in(path);
    std::string line;
    int rows = -1;  // minus header
    while (std::getline(in, line))
      if (!line.empty()) ++rows;
    return rows;
  };
  CHECK(count_rows((dir / "example1_solution.csv").string()) == 101);
  CHECK(count_rows((dir / "example1_grid_training.csv").string()) == 21);
  CHECK(count_rows((dir / "example1_grid_predict.csv").string()) == 21);
  CHECK(count_rows((dir / "example1_grid_test.csv").string()) == 26);
  CHECK(count_rows((dir / "example1_loss.csv").string()) ==
        static_cast<int>(run.report.loss_trajectory.size()));

  // summary ave_deviation is recomputable from the training-grid CSV
  const std::string csv = slurp((dir / "example1_grid_training.csv").string());
  std::istringstream lines(csv);
  std::string header;
  std::getline(lines, header);
  // columns: x, yhat*2, ybar*2, yref*2, err*2, dev*2, res*2, extrapolated
  double dev_sum = 0.0, res_sum = 0.0;
  int rows = 0;
  for (std::string line; std::getline(lines, line);) {
    if (line.empty()) continue;
    std::vector<double> cells;
    std::stringstream ls(line);
    for (std::string cell; std::getline(ls, cell, ',');)
      cells.push_back(std::stod(cell));
    REQUIRE(cells.size() == 14);
    dev_sum += cells[9] + cells[10];
    res_sum += cells[11] * cells[11] + cells[12] * cells[12];
    ++rows;
  }
  CHECK(rows == 21);
  CHECK(dev_sum / (2 * rows) ==
        doctest::Approx(run.train_metrics.ave_deviation).epsilon(1e-12));
  CHECK(res_sum / rows ==
        doctest::Approx(run.train_metrics.ave_error).epsilon(1e-12));
}

TEST_CASE("export/import round trip reproduces identical artifacts") {
  ProblemDef def = quick(make_builtin("example3"), 250);
  const auto dir = temp_dir("round");
  const std::string problem_path = (dir / "example3.problem").string();
  write_problem_file(def, problem_path);
  const ProblemDef reloaded = read_problem_file(problem_path);

  const Artifacts a =
      write_run_artifacts(run_solve(def), (dir / "a").string());
  const Artifacts b =
      write_run_artifacts(run_solve(reloaded), (dir / "b").string());
  REQUIRE(a.files.size() == b.files.size());
  for (std::size_t i = 0; i < a.files.size(); ++i) {
    if (a.files[i].find(".csv") == std::string::npos) continue;
    CHECK(slurp(a.files[i]) ==
          slurp(b.files[i]));
  }
}

TEST_CASE("compare: identical seeds, first term is the only difference") {
  ProblemDef def = quick(make_builtin("example1"), 250);
  const CompareResult cmp = run_compare(def, "constant");
  CHECK(cmp.lie.trial.params.seed == cmp.baseline.trial.params.seed);
  // both legs trained over the same config; initial parameters identical
  CHECK(init_params(def.network.hidden, 2, def.network.seed).flatten() ==
        init_params(def.network.hidden, 2, def.network.seed).flatten());
  CHECK(cmp.baseline.trial.first.source == AssociatedSolution::Source::Baseline);
  // anchor holds for the baseline too
  CHECK(cmp.baseline.anchor_error <= 1e-12);
}

TEST_CASE("compare: poly baseline reproduces the literature form x(1+x)") {
  // For example2 (a = 0, b = 1) the poly baseline must evaluate to x(1+x)
  // on the solution component.
  const NormalizedProblem np = normalize(make_builtin("example2"));
  const AssociatedSolution base = baseline_first_term(np.system, "poly");
  for (double x : {0.0, 0.3, 1.0, 1.7}) {
    CHECK(base.value(x)[1] == doctest::Approx(x * (1.0 + x)).epsilon(1e-14));
  }
  CHECK(base.value(0.5)[0] == 0.5);  // time component stays exact
}

TEST_CASE("sweep: single value matches run_solve metrics") {
  auto make = [](double eps) {
    return quick(make_builtin("example3", {{"epsilon", eps}}), 250);
  };
  const SweepResult sweep = run_sweep(make, "epsilon", {0.5});
  REQUIRE(sweep.rows.size() == 3);
  const RunResult run = run_solve(make(0.5));
  CHECK(sweep.rows[0].metrics.ave_error ==
        doctest::Approx(run.train_metrics.ave_error).epsilon(1e-12));
  CHECK(sweep.rows[0].metrics.ave_deviation ==
        doctest::Approx(run.train_metrics.ave_deviation).epsilon(1e-12));
  CHECK(sweep.rows[1].data_class == "predict");
  CHECK(sweep.rows[2].data_class == "test");
}

TEST_CASE("sweep: failed rows are marked and the sweep continues") {
  auto make = [](double eps) {
    ProblemDef def = quick(make_builtin("example3"), 100);
    if (eps > 0.9) def.rhs[0] = "nonsense(";  // malformed on purpose
    return def;
  };
  const SweepResult sweep = run_sweep(make, "epsilon", {0.5, 1.0});
  CHECK_FALSE(sweep.all_ok);
  REQUIRE(sweep.rows.size() == 4);  // 3 ok rows + 1 failure row
  CHECK(sweep.rows[3].ok == false);
  CHECK(sweep.rows[3].error.find("nonsense") != std::string::npos);
}

TEST_CASE("report: empty artifacts are refused") {
  SweepResult empty;
  empty.parameter = "epsilon";
  const auto dir = temp_dir("empty");
  CHECK_THROWS(write_sweep_artifacts(empty, "x", dir.string()));
}

TEST_CASE("report: sweep table layout") {
  auto make = [](double eps) {
    return quick(make_builtin("example3", {{"epsilon", eps}}), 150);
  };
  const SweepResult sweep = run_sweep(make, "epsilon", {0.25, 0.5});
  const auto dir = temp_dir("sweeptab");
  const Artifacts art = write_sweep_artifacts(sweep, "example3", dir.string());
  const std::string csv = slurp((dir / "example3_sweep.csv").string());
  // header + 2 values x 3 data classes
  int lines = 0;
  for (char ch : csv)
    if (ch == '\n') ++lines;
  CHECK(lines == 7);
  CHECK(csv.find("epsilon,0.25,training,21,") != std::string::npos);
  CHECK(csv.find(",test,26,") != std::string::npos);
}
