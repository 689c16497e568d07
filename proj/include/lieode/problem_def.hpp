#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lieode/problem.hpp"

namespace lieode {

/// Textual problem description, the common currency of problem files, the
/// built-in catalogue and the run orchestration. Expressions are stored as
/// strings in the original coordinates (independent variable `x`, data given
/// at x = start).
struct ProblemDef {
  std::string label;

  // Either a first-order system ...
  std::vector<std::string> variables;
  std::vector<std::string> rhs;  // parallel to variables
  // ... or a scalar high-order equation y^(order) = order_rhs(x, y, y', ...).
  int order = 0;
  std::string order_rhs;

  std::vector<double> initial;
  double start = 0.0;
  Interval interval;  // original coordinates, contains `start`

  struct Split {
    std::string mode = "heuristic";  // heuristic | full | explicit
    // Explicit g per variable (reduced names y1..yn for high-order problems).
    std::vector<std::pair<std::string, std::string>> g;
  } split;

  struct Assoc {
    std::string form;  // closed-form registry key; empty = numeric
    std::map<std::string, double> params;
  } assoc;

  struct Network {
    int hidden = 3;
    std::uint64_t seed = 42;
  } network;

  struct Train {
    int points = 21;
    double eta = 0.02;
    int max_iters = 50000;
    double target_loss = 1e-9;
    std::string optimizer = "adam";  // gd | adam
    // Optional second-point condition folded into the loss as
    // weight * (yhat_component(x) - value)^2.
    struct Boundary {
      double x = 0.0;
      std::string variable;
      double value = 0.0;
      double weight = 1.0;
    };
    std::optional<Boundary> boundary;
  } train;

  // Exact solutions over x in original coordinates, keyed by variable name
  // ("y" for high-order problems; derivative references are derived).
  std::vector<std::pair<std::string, std::string>> reference;

  double extension = 0.25;  // predict/test extension fraction of the interval
  int eval_points = 201;    // rows in the solution CSV
};

}  // namespace lieode
