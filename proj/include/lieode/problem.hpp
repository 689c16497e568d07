#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lieode/expr.hpp"

namespace lieode {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double length() const { return hi - lo; }
  bool contains(double x) const { return x >= lo && x <= hi; }
  /// Interval grown by `fraction` of its length on each side.
  Interval extended(double fraction) const {
    const double pad = fraction * length();
    return {lo - pad, hi + pad};
  }
};

/// An initial value problem in the normalized autonomous first-order form
/// dy/dx = f(y), y(0) = alpha. When the original problem mentioned the
/// independent variable, a synthetic component with f = 1 and initial value 0
/// stands in for it; `time_index` points at it (always index 0 here).
struct IvpSystem {
  std::string label;
  std::vector<std::string> variables;
  std::vector<Expr> rhs;  // bound against `variables`
  std::vector<double> initial;
  Interval interval;  // contains 0
  std::optional<std::size_t> time_index;

  std::size_t size() const { return variables.size(); }
  bool is_time(std::size_t i) const { return time_index && *time_index == i; }

  /// Validates the size and interval invariants and binds every rhs.
  static IvpSystem make(std::string label, std::vector<std::string> variables,
                        std::vector<Expr> rhs, std::vector<double> initial,
                        Interval interval,
                        std::optional<std::size_t> time_index = std::nullopt);
};

/// The decomposition f = g + h. g drives the associated IVP; h is what the
/// network learns. gi + hi agrees with fi pointwise.
struct OperatorSplit {
  IvpSystem system;
  std::vector<Expr> g;
  std::vector<Expr> h;
};

/// How to choose g when splitting a system.
struct SplitSpec {
  enum class Mode {
    Heuristic,  // additive terms of degree <= 1 in the non-time variables
    Full,       // g = f, h = 0
    Explicit,   // caller-provided g per variable; h = f - g
  };
  Mode mode = Mode::Heuristic;
  std::map<std::string, Expr> explicit_g;

  static SplitSpec heuristic() { return {}; }
  static SplitSpec full() { return {Mode::Full, {}}; }
  static SplitSpec explicit_parts(std::map<std::string, Expr> g) {
    return {Mode::Explicit, std::move(g)};
  }
};

/// Append the synthetic component y0 = x (inserted at index 0) and replace
/// every textual occurrence of `x` in the right-hand sides by it. Initial
/// data must be given at x = 0; translate_origin handles other start points.
IvpSystem autonomize(const std::vector<std::string>& variables,
                     const std::vector<Expr>& rhs,
                     const std::vector<double>& initial, Interval interval,
                     std::string label);

/// Reduce the scalar n-th order equation y^(n) = rhs(x, y, y', ..., y^(n-1))
/// to first order via y1 = y, y2 = y', .... The synthetic time component is
/// added only when rhs mentions x. `initial` lists y(0), y'(0), ...
IvpSystem reduce_order(int order, const Expr& rhs,
                       const std::vector<double>& initial, Interval interval,
                       std::string label);

struct TranslatedRhs {
  std::vector<Expr> rhs;  // over the shifted variable, still named x
  Interval interval;      // shifted so the start point is 0
  double shift;           // x_original = x_shifted + shift
};

/// Shift a problem whose data is given at x = x0 to the origin: substitutes
/// x -> x + x0 in each rhs and moves the interval. Outputs map back through
/// x_original = x + shift.
TranslatedRhs translate_origin(const std::vector<Expr>& rhs, Interval interval,
                               double x0);

/// Split the system's operator. The synthetic time component always keeps
/// its full rhs in g. For Mode::Explicit, every non-time variable needs an
/// entry in explicit_g.
OperatorSplit split(const IvpSystem& system, const SplitSpec& spec);

}  // namespace lieode
