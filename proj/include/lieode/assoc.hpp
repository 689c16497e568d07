#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lieode/problem.hpp"

namespace lieode {

/// First term of the trial solution: an evaluator for ybar(x) with
/// ybar(0) = alpha, plus its derivative. For Lie-split sources the
/// derivative is g(ybar(x)) by definition of the associated IVP; baseline
/// (comparison) first terms carry their own derivative.
///
/// Immutable after construction; the evaluators are pure.
struct AssociatedSolution {
  enum class Source { ClosedForm, Numeric, Baseline };
  Source source = Source::Numeric;
  Interval domain;  // where the evaluators are defined (training interval + margin)
  std::function<std::vector<double>(double)> value;
  std::function<std::vector<double>(double)> derivative;
  double accuracy = 0.0;  // step-halving error estimate (numeric source)
  std::string label;

  std::vector<double> at(double x) const { return value(x); }
};

/// A registered analytic solution of an associated IVP.
struct ClosedForm {
  std::string key;
  std::function<std::vector<double>(double)> value;  // full state vector
};

/// Closed forms for the built-in problems. Keys: "example1" (coupled
/// nonlinear pair), "example2" (damped oscillator; params epsilon, a, b),
/// "example3" (linear rotation). Returns nullopt for unknown keys.
std::optional<ClosedForm> builtin_closed_form(
    const std::string& key, const std::map<std::string, double>& params);

/// Wrap a registered closed form as the associated solution of `split`.
/// Throws if the form does not reproduce the initial values at x = 0.
AssociatedSolution solve_closed_form(const OperatorSplit& split,
                                     const ClosedForm& form,
                                     double extension = 0.5);

/// Integrate the associated IVP dybar/dx = g(ybar), ybar(0) = alpha with
/// classic RK4 at a fixed step no larger than interval length / min_steps,
/// forward and backward from 0 over the extended interval. Evaluation
/// between nodes uses cubic Hermite interpolation on the stored g slopes.
AssociatedSolution solve_numeric(const OperatorSplit& split,
                                 double extension = 0.5, int min_steps = 1000);

/// Closed form when `key` is registered, otherwise numeric. A registered
/// form is cross-checked against the numeric solution on the training
/// interval; if they disagree by more than `check_tol` anywhere, the
/// numeric solution is returned instead (label notes the fallback).
AssociatedSolution solve_associated(const OperatorSplit& split,
                                    const std::string& key,
                                    const std::map<std::string, double>& params,
                                    double extension = 0.5,
                                    double check_tol = 1e-6);

}  // namespace lieode
