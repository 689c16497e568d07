#include "lieode/runner.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "lieode/builtins.hpp"

namespace lieode {

namespace {

Expr parse_named(const std::string& text, const std::string& what) {
  try {
    return parse_expression(text);
  } catch (const ParseError& e) {
    throw std::invalid_argument(what + ": bad expression '" + text + "': " +
                                e.what() + " at offset " +
                                std::to_string(e.position));
  }
}

SplitSpec resolve_split(const ProblemDef& def) {
  if (def.split.mode == "full") return SplitSpec::full();
  if (def.split.mode == "heuristic") return SplitSpec::heuristic();
  if (def.split.mode == "explicit") {
    std::map<std::string, Expr> g;
    for (const auto& [var, text] : def.split.g)
      g.emplace(var, parse_named(text, "split g for " + var));
    return SplitSpec::explicit_parts(std::move(g));
  }
  throw std::invalid_argument("unknown split mode '" + def.split.mode + "'");
}

// Reference exprs in original coordinates -> evaluator of the full internal
// state. High-order problems declare only y; derivatives are derived
// symbolically.
ReferenceFn exact_reference(const ProblemDef& def, const IvpSystem& system,
                            double shift) {
  std::vector<Expr> per_component(system.size());
  const std::vector<std::string> xonly = {"x"};

  if (def.order > 0) {
    std::string y_text;
    for (const auto& [var, text] : def.reference)
      if (var == "y" || var == "y1") y_text = text;
    if (y_text.empty())
      throw std::invalid_argument(
          "reference for a high-order problem must define y");
    Expr cur = parse_named(y_text, "reference y");
    for (std::size_t i = 0; i < system.size(); ++i) {
      if (system.is_time(i)) {
        per_component[i] = Expr::variable("x");
      } else {
        per_component[i] = cur;
        cur = cur.diff("x");
      }
    }
  } else {
    for (std::size_t i = 0; i < system.size(); ++i) {
      if (system.is_time(i)) {
        per_component[i] = Expr::variable("x");
        continue;
      }
      const std::string& name = system.variables[i];
      bool found = false;
      for (const auto& [var, text] : def.reference) {
        if (var == name) {
          per_component[i] = parse_named(text, "reference " + var);
          found = true;
        }
      }
      if (!found)
        throw std::invalid_argument("reference is missing variable '" + name +
                                    "'");
    }
  }
  for (Expr& e : per_component) e = e.bind(xonly);

  return [per_component, shift](double x) {
    const double xo = x + shift;
    std::vector<double> out(per_component.size());
    for (std::size_t i = 0; i < out.size(); ++i)
      out[i] = per_component[i].eval(std::span<const double>(&xo, 1));
    return out;
  };
}

// Runge-Kutta reference on the full split (D2 = 0): fine fixed step so the
// reference error stays well below the tolerances it checks.
ReferenceFn rk_reference(const IvpSystem& system, double extension) {
  OperatorSplit full = split(system, SplitSpec::full());
  const int steps =
      std::max(20000, static_cast<int>(std::ceil(system.interval.length() / 1e-4)));
  AssociatedSolution sol = solve_numeric(full, extension, steps);
  return [sol](double x) { return sol.value(x); };
}

std::size_t variable_index(const IvpSystem& system, const std::string& name,
                           int order) {
  const std::string resolved = (order > 0 && name == "y") ? "y1" : name;
  for (std::size_t i = 0; i < system.size(); ++i)
    if (system.variables[i] == resolved) return i;
  throw std::invalid_argument("unknown variable '" + name + "'");
}

TrainConfig train_config(const NormalizedProblem& np) {
  const ProblemDef::Train& t = np.def.train;
  TrainConfig cfg;
  cfg.grid_points = t.points;
  cfg.learning_rate = t.eta;
  cfg.max_iterations = t.max_iters;
  cfg.target_loss = t.target_loss;
  cfg.optimizer = t.optimizer == "gd" ? TrainConfig::Optimizer::PlainGd
                                      : TrainConfig::Optimizer::Adam;
  cfg.boundary = np.boundary;
  return cfg;
}

RunResult run_with_first_term(const NormalizedProblem& np,
                              AssociatedSolution first) {
  RunResult run;
  run.problem = np;
  run.trial = TrialSolution::make(np.opsplit, std::move(first),
                                  np.def.network.hidden, np.def.network.seed);

  const auto anchor = [&run, &np]() {
    const TrialSolution::Eval at0 = run.trial.eval(0.0);
    double worst = 0.0;
    for (std::size_t i = 0; i < run.trial.dimension(); ++i)
      worst = std::max(worst, std::abs(at0.value[i] - np.system.initial[i]));
    return worst;
  };
  run.anchor_error = anchor();  // before training
  run.report = train(run.trial, train_config(np));
  run.anchor_error = std::max(run.anchor_error, anchor());

  run.train_grid = collocation_grid(np.system.interval, np.def.train.points);
  run.predict_grid = predict_grid(np.system, np.def.extension, np.def.train.points);
  run.test_grid = test_grid(np.system, np.def.extension);

  run.train_metrics = metrics(run.trial, np.reference, run.train_grid);
  run.predict_metrics = metrics(run.trial, np.reference, run.predict_grid);
  run.test_metrics = metrics(run.trial, np.reference, run.test_grid);
  return run;
}

}  // namespace

NormalizedProblem normalize(const ProblemDef& def) {
  NormalizedProblem np;
  np.def = def;
  np.shift = def.start;

  Interval internal = {def.interval.lo - def.start, def.interval.hi - def.start};

  if (def.order > 0) {
    Expr rhs = parse_named(def.order_rhs, "rhs y");
    if (def.start != 0.0) {
      TranslatedRhs tr = translate_origin({rhs}, def.interval, def.start);
      rhs = tr.rhs[0];
      internal = tr.interval;
    }
    np.system = reduce_order(def.order, rhs, def.initial, internal, def.label);
  } else {
    std::vector<Expr> rhs;
    rhs.reserve(def.rhs.size());
    for (std::size_t i = 0; i < def.rhs.size(); ++i)
      rhs.push_back(parse_named(def.rhs[i], "rhs " + def.variables[i]));
    if (def.start != 0.0) {
      TranslatedRhs tr = translate_origin(rhs, def.interval, def.start);
      rhs = std::move(tr.rhs);
      internal = tr.interval;
    }
    bool mentions_x = false;
    for (const Expr& e : rhs) mentions_x = mentions_x || e.uses("x");
    if (mentions_x) {
      np.system =
          autonomize(def.variables, rhs, def.initial, internal, def.label);
    } else {
      np.system = IvpSystem::make(def.label, def.variables, std::move(rhs),
                                  def.initial, internal);
    }
  }

  np.opsplit = split(np.system, resolve_split(def));
  np.assoc = solve_associated(np.opsplit, def.assoc.form, def.assoc.params);

  if (!def.reference.empty()) {
    np.reference = exact_reference(def, np.system, np.shift);
    np.exact_reference = true;
  } else {
    np.reference = rk_reference(np.system, 0.5);
    np.exact_reference = false;
  }

  if (def.train.boundary) {
    const auto& bc = *def.train.boundary;
    BoundaryCondition internal_bc;
    internal_bc.x = bc.x - np.shift;
    internal_bc.component = variable_index(np.system, bc.variable, def.order);
    internal_bc.value = bc.value;
    internal_bc.weight = bc.weight;
    np.boundary = internal_bc;
  }
  return np;
}

AssociatedSolution baseline_first_term(const IvpSystem& system,
                                       const std::string& kind,
                                       double extension) {
  AssociatedSolution sol;
  sol.source = AssociatedSolution::Source::Baseline;
  sol.domain = system.interval.extended(extension);
  sol.label = kind;

  const std::vector<double> alpha = system.initial;
  const std::optional<std::size_t> time_index = system.time_index;

  if (kind == "constant") {
    sol.value = [alpha, time_index](double x) {
      std::vector<double> y = alpha;
      if (time_index) y[*time_index] = x;
      return y;
    };
    sol.derivative = [alpha, time_index](double x) {
      (void)x;
      std::vector<double> d(alpha.size(), 0.0);
      if (time_index) d[*time_index] = 1.0;
      return d;
    };
    return sol;
  }
  if (kind == "poly") {
    // alpha_i + f_i(alpha) x (1 + x): matches the literature form x(1+x)
    // when alpha_i = 0 and f_i(alpha) = 1.
    std::vector<double> slope(system.size());
    for (std::size_t i = 0; i < system.size(); ++i)
      slope[i] = system.rhs[i].eval(alpha);
    sol.value = [alpha, slope, time_index](double x) {
      std::vector<double> y(alpha.size());
      for (std::size_t i = 0; i < y.size(); ++i)
        y[i] = alpha[i] + slope[i] * x * (1.0 + x);
      if (time_index) y[*time_index] = x;
      return y;
    };
    sol.derivative = [alpha, slope, time_index](double x) {
      std::vector<double> d(alpha.size());
      for (std::size_t i = 0; i < d.size(); ++i)
        d[i] = slope[i] * (1.0 + 2.0 * x);
      if (time_index) d[*time_index] = 1.0;
      return d;
    };
    return sol;
  }
  throw std::invalid_argument("unknown baseline '" + kind +
                              "' (expected constant or poly)");
}

RunResult run_solve(const ProblemDef& def) {
  NormalizedProblem np = normalize(def);
  return run_with_first_term(np, np.assoc);
}

RunResult run_solve_with_baseline(const ProblemDef& def,
                                  const std::string& baseline_kind) {
  NormalizedProblem np = normalize(def);
  return run_with_first_term(np, baseline_first_term(np.system, baseline_kind));
}

CompareResult run_compare(const ProblemDef& def,
                          const std::string& baseline_kind) {
  CompareResult cmp;
  cmp.baseline_kind = baseline_kind;
  cmp.lie = run_solve(def);
  cmp.baseline = run_solve_with_baseline(def, baseline_kind);

  // First terms are compared around the initial point: the middle half of
  // the training interval, clipped to it.
  const Interval iv = cmp.lie.problem.system.interval;
  const double quarter = iv.length() / 4.0;
  Interval window = {std::max(iv.lo, -quarter), std::min(iv.hi, quarter)};
  cmp.window = {window.lo + cmp.lie.problem.shift,
                window.hi + cmp.lie.problem.shift};

  const ReferenceFn& ref = cmp.lie.problem.reference;
  double lie_err = 0.0, base_err = 0.0;
  for (int k = 0; k <= 200; ++k) {
    const double x = window.lo + window.length() * k / 200.0;
    const std::vector<double> y = ref(x);
    const std::vector<double> a = cmp.lie.trial.first.value(x);
    const std::vector<double> b = cmp.baseline.trial.first.value(x);
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (cmp.lie.problem.system.is_time(i)) continue;
      lie_err = std::max(lie_err, std::abs(a[i] - y[i]));
      base_err = std::max(base_err, std::abs(b[i] - y[i]));
    }
  }
  cmp.lie_first_term_error = lie_err;
  cmp.baseline_first_term_error = base_err;
  return cmp;
}

SweepResult run_sweep(const std::function<ProblemDef(double)>& make,
                      const std::string& parameter,
                      const std::vector<double>& values) {
  SweepResult sweep;
  sweep.parameter = parameter;
  sweep.values = values;
  for (double value : values) {
    try {
      const RunResult run = run_solve(make(value));
      const char* classes[3] = {"training", "predict", "test"};
      const Metrics* ms[3] = {&run.train_metrics, &run.predict_metrics,
                              &run.test_metrics};
      const std::size_t sizes[3] = {run.train_grid.size(),
                                    run.predict_grid.size(),
                                    run.test_grid.size()};
      for (int c = 0; c < 3; ++c) {
        SweepRow row;
        row.value = value;
        row.data_class = classes[c];
        row.samples = static_cast<int>(sizes[c]);
        row.metrics = *ms[c];
        if (run.report.status == TrainReport::Status::Diverged) {
          row.ok = false;
          row.error = "training diverged";
          sweep.all_ok = false;
        }
        sweep.rows.push_back(std::move(row));
      }
    } catch (const std::exception& e) {
      SweepRow row;
      row.value = value;
      row.data_class = "training";
      row.ok = false;
      row.error = e.what();
      sweep.rows.push_back(std::move(row));
      sweep.all_ok = false;
    }
  }
  return sweep;
}

std::vector<double> predict_grid(const IvpSystem& system, double extension,
                                 int points) {
  // Strictly outside the training data: (hi, hi + extension * length].
  const Interval iv = system.interval;
  const double pad = extension * iv.length();
  std::vector<double> xs;
  xs.reserve(static_cast<std::size_t>(points));
  for (int k = 1; k <= points; ++k)
    xs.push_back(iv.hi + pad * k / points);
  return xs;
}

std::vector<double> test_grid(const IvpSystem& system, double extension,
                              int points) {
  const Interval iv = system.interval;
  const double pad = extension * iv.length();
  return collocation_grid({iv.lo, iv.hi + pad}, points);
}

}  // namespace lieode
