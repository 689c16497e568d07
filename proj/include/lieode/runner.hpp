#pragma once

#include <functional>
#include <string>
#include <vector>

#include "lieode/assoc.hpp"
#include "lieode/problem_def.hpp"
#include "lieode/train.hpp"

namespace lieode {

/// A problem definition resolved into executable pieces: the normalized
/// autonomous system (translated, order-reduced, autonomized as needed),
/// its operator split, the associated solution, and a reference evaluator
/// for error metrics. `shift` maps internal coordinates back to the
/// original ones: x_original = x + shift.
struct NormalizedProblem {
  ProblemDef def;
  IvpSystem system;
  OperatorSplit opsplit;
  AssociatedSolution assoc;
  double shift = 0.0;
  ReferenceFn reference;  // internal x -> full internal state
  bool exact_reference = false;
  std::optional<BoundaryCondition> boundary;
};

NormalizedProblem normalize(const ProblemDef& def);

/// Comparison first terms from the literature: "constant" holds the initial
/// vector, "poly" uses alpha_i + f_i(alpha) x (1 + x). The synthetic time
/// component stays exact in both.
AssociatedSolution baseline_first_term(const IvpSystem& system,
                                       const std::string& kind,
                                       double extension = 0.5);

struct RunResult {
  NormalizedProblem problem;
  TrialSolution trial;  // after training
  TrainReport report;
  std::vector<double> train_grid, predict_grid, test_grid;  // internal coords
  Metrics train_metrics, predict_metrics, test_metrics;
  double anchor_error = 0.0;  // max_i |yhat_i(0) - alpha_i|
};

/// Normalize, train, and measure a problem. Throws on definition errors;
/// a diverged training run is reported through report.status.
RunResult run_solve(const ProblemDef& def);

/// run_solve with the first term swapped for a baseline; same seed/config.
RunResult run_solve_with_baseline(const ProblemDef& def,
                                  const std::string& baseline_kind);

struct CompareResult {
  std::string baseline_kind;
  RunResult lie;
  RunResult baseline;
  Interval window;  // where the first terms are compared (original coords)
  double lie_first_term_error = 0.0;       // sup |ybar - y| over the window
  double baseline_first_term_error = 0.0;
};

CompareResult run_compare(const ProblemDef& def, const std::string& baseline_kind);

struct SweepRow {
  double value = 0.0;
  std::string data_class;  // training | predict | test
  int samples = 0;
  Metrics metrics;
  bool ok = true;
  std::string error;
};

struct SweepResult {
  std::string parameter;
  std::vector<double> values;
  std::vector<SweepRow> rows;  // 3 rows per value; failed runs keep one row
  bool all_ok = true;
};

/// One full run per value; `make` builds the problem for a value. Failed
/// rows are marked and the sweep continues.
SweepResult run_sweep(const std::function<ProblemDef(double)>& make,
                      const std::string& parameter,
                      const std::vector<double>& values);

/// Grids used by the standard run, in internal coordinates.
std::vector<double> predict_grid(const IvpSystem& system, double extension,
                                 int points);
std::vector<double> test_grid(const IvpSystem& system, double extension,
                              int points = 26);

}  // namespace lieode
