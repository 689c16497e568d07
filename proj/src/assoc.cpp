#include "lieode/assoc.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>

namespace lieode {

namespace {

double param_or(const std::map<std::string, double>& params,
                const std::string& name, double fallback) {
  auto it = params.find(name);
  return it == params.end() ? fallback : it->second;
}

std::vector<CompiledExpr> compile_all(const std::vector<Expr>& fs) {
  std::vector<CompiledExpr> out;
  out.reserve(fs.size());
  for (const Expr& f : fs) out.emplace_back(f);
  return out;
}

std::vector<double> eval_all(const std::vector<CompiledExpr>& fs,
                             const std::vector<double>& y) {
  std::vector<double> out(fs.size());
  for (std::size_t i = 0; i < fs.size(); ++i) out[i] = fs[i].eval(y);
  return out;
}

// One RK4 trajectory from x = 0 with signed step h, storing nodes and slopes.
struct Leg {
  std::vector<double> xs;
  std::vector<std::vector<double>> ys;
  std::vector<std::vector<double>> slopes;  // g evaluated at the node
};

Leg integrate_leg(const std::vector<CompiledExpr>& g,
                  const std::vector<double>& alpha, double h, int steps) {
  const std::size_t n = alpha.size();
  Leg leg;
  leg.xs.reserve(static_cast<std::size_t>(steps) + 1);
  leg.ys.reserve(static_cast<std::size_t>(steps) + 1);
  leg.slopes.reserve(static_cast<std::size_t>(steps) + 1);

  std::vector<double> y = alpha;
  std::vector<double> k1(n), k2(n), k3(n), k4(n), tmp(n);
  double x = 0.0;
  leg.xs.push_back(x);
  leg.ys.push_back(y);
  try {
    leg.slopes.push_back(eval_all(g, y));
    for (int s = 0; s < steps; ++s) {
      k1 = leg.slopes.back();
      for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * h * k1[i];
      k2 = eval_all(g, tmp);
      for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * h * k2[i];
      k3 = eval_all(g, tmp);
      for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * k3[i];
      k4 = eval_all(g, tmp);
      for (std::size_t i = 0; i < n; ++i)
        y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
      x = h * (s + 1);
      leg.xs.push_back(x);
      leg.ys.push_back(y);
      leg.slopes.push_back(eval_all(g, y));
    }
  } catch (const EvalError& e) {
    throw EvalError("associated IVP integration failed at x = " +
                    std::to_string(x) + ": " + e.what());
  }
  return leg;
}

// Dense trajectory over [domain.lo, domain.hi] anchored at x = 0.
struct DenseTable {
  // Nodes in increasing x; node_of_zero indexes the anchor.
  std::vector<double> xs;
  std::vector<std::vector<double>> ys;
  std::vector<std::vector<double>> slopes;
  std::size_t dim = 0;

  std::vector<double> eval(double x) const {
    // Clamp roundoff-level overshoot; genuine out-of-domain is the caller's
    // responsibility to prevent.
    if (x <= xs.front()) return ys.front();
    if (x >= xs.back()) return ys.back();
    auto it = std::upper_bound(xs.begin(), xs.end(), x);
    const std::size_t j = static_cast<std::size_t>(it - xs.begin());
    const double x0 = xs[j - 1], x1 = xs[j];
    if (x == x0) return ys[j - 1];
    const double hstep = x1 - x0;
    const double t = (x - x0) / hstep;
    // Cubic Hermite basis.
    const double t2 = t * t, t3 = t2 * t;
    const double h00 = 2 * t3 - 3 * t2 + 1;
    const double h10 = t3 - 2 * t2 + t;
    const double h01 = -2 * t3 + 3 * t2;
    const double h11 = t3 - t2;
    std::vector<double> out(dim);
    for (std::size_t i = 0; i < dim; ++i)
      out[i] = h00 * ys[j - 1][i] + h10 * hstep * slopes[j - 1][i] +
               h01 * ys[j][i] + h11 * hstep * slopes[j][i];
    return out;
  }
};

std::shared_ptr<DenseTable> build_table(const std::vector<CompiledExpr>& g,
                                        const std::vector<double>& alpha,
                                        Interval domain, double max_step) {
  auto table = std::make_shared<DenseTable>();
  table->dim = alpha.size();

  Leg fwd, bwd;
  if (domain.hi > 0.0) {
    int steps = static_cast<int>(std::ceil(domain.hi / max_step - 1e-12));
    fwd = integrate_leg(g, alpha, domain.hi / steps, steps);
  }
  if (domain.lo < 0.0) {
    int steps = static_cast<int>(std::ceil(-domain.lo / max_step - 1e-12));
    bwd = integrate_leg(g, alpha, domain.lo / steps, steps);
  }

  // Backward leg reversed, then the forward leg (anchor shared once).
  for (std::size_t i = bwd.xs.size(); i-- > 1;) {
    table->xs.push_back(bwd.xs[i]);
    table->ys.push_back(bwd.ys[i]);
    table->slopes.push_back(bwd.slopes[i]);
  }
  if (!fwd.xs.empty()) {
    table->xs.insert(table->xs.end(), fwd.xs.begin(), fwd.xs.end());
    table->ys.insert(table->ys.end(), fwd.ys.begin(), fwd.ys.end());
    table->slopes.insert(table->slopes.end(), fwd.slopes.begin(), fwd.slopes.end());
  } else {
    table->xs.push_back(0.0);
    table->ys.push_back(alpha);
    table->slopes.push_back(eval_all(g, alpha));
  }
  return table;
}

void check_dimension(const OperatorSplit& split, const ClosedForm& form) {
  const std::vector<double> at0 = form.value(0.0);
  if (at0.size() != split.system.size())
    throw std::invalid_argument("closed form '" + form.key + "' has dimension " +
                                std::to_string(at0.size()) + ", system has " +
                                std::to_string(split.system.size()));
  for (std::size_t i = 0; i < at0.size(); ++i) {
    if (std::abs(at0[i] - split.system.initial[i]) > 1e-9)
      throw std::invalid_argument("closed form '" + form.key +
                                  "' does not satisfy the initial values");
  }
}

}  // namespace

std::optional<ClosedForm> builtin_closed_form(
    const std::string& key, const std::map<std::string, double>& params) {
  if (key == "example1") {
    // Associated system of the coupled pair from the first worked example:
    // linear in (y1, y2) with trigonometric forcing; integrates in closed form.
    return ClosedForm{
        key, [](double x) {
          const double s = std::sin(x), c = std::cos(x);
          const double y1 =
              x * x * s + x / 2.0 - 4.0 * s + std::sin(2.0 * x) / 4.0 + 4.0 * x * c;
          const double y2 = 2.0 + x * x + x * x * c - 2.0 * x * s - c;
          return std::vector<double>{x, y1, y2};
        }};
  }
  if (key == "example2") {
    // Damped linear oscillator ybar'' + 2 eps ybar' + ybar = 0 with
    // ybar(0) = a, ybar'(0) = b; underdamped branch (|eps| < 1).
    const double eps = param_or(params, "epsilon", 0.2);
    const double a = param_or(params, "a", 0.0);
    const double b = param_or(params, "b", 1.0);
    if (!(std::abs(eps) < 1.0)) return std::nullopt;
    const double sigma = std::sqrt(1.0 - eps * eps);
    const double A = (a * eps + b) / sigma;
    const double B = a;
    return ClosedForm{
        key, [eps, sigma, A, B](double t) {
          const double e = std::exp(-eps * t);
          const double s = std::sin(sigma * t), c = std::cos(sigma * t);
          const double y1 = e * (A * s + B * c);
          const double y2 = e * ((-eps * A - B * sigma) * s + (A * sigma - eps * B) * c);
          return std::vector<double>{t, y1, y2};
        }};
  }
  if (key == "example3") {
    // Linear rotation part of the Duffing split: ybar1 = cos t, ybar2 = -sin t.
    return ClosedForm{key, [](double t) {
                        return std::vector<double>{std::cos(t), -std::sin(t)};
                      }};
  }
  return std::nullopt;
}

AssociatedSolution solve_closed_form(const OperatorSplit& split,
                                     const ClosedForm& form, double extension) {
  check_dimension(split, form);
  AssociatedSolution sol;
  sol.source = AssociatedSolution::Source::ClosedForm;
  sol.domain = split.system.interval.extended(extension);
  sol.value = form.value;
  sol.label = form.key;
  const std::vector<CompiledExpr> g = compile_all(split.g);
  auto value = form.value;
  sol.derivative = [g, value](double x) { return eval_all(g, value(x)); };
  return sol;
}

AssociatedSolution solve_numeric(const OperatorSplit& split, double extension,
                                 int min_steps) {
  const Interval domain = split.system.interval.extended(extension);
  const double max_step = split.system.interval.length() / min_steps;

  const std::vector<CompiledExpr> g = compile_all(split.g);
  auto table = build_table(g, split.system.initial, domain, max_step);
  auto half = build_table(g, split.system.initial, domain, max_step / 2.0);

  double est = 0.0;
  for (std::size_t j = 0; j < table->xs.size(); ++j) {
    const std::vector<double> fine = half->eval(table->xs[j]);
    for (std::size_t i = 0; i < table->dim; ++i)
      est = std::max(est, std::abs(fine[i] - table->ys[j][i]));
  }

  AssociatedSolution sol;
  sol.source = AssociatedSolution::Source::Numeric;
  sol.domain = domain;
  sol.accuracy = est;
  sol.label = "rk4";
  sol.value = [half](double x) { return half->eval(x); };
  sol.derivative = [g, half](double x) { return eval_all(g, half->eval(x)); };
  return sol;
}

AssociatedSolution solve_associated(const OperatorSplit& split,
                                    const std::string& key,
                                    const std::map<std::string, double>& params,
                                    double extension, double check_tol) {
  if (key.empty()) return solve_numeric(split, extension);
  auto form = builtin_closed_form(key, params);
  if (!form) return solve_numeric(split, extension);

  AssociatedSolution closed = solve_closed_form(split, *form, extension);
  AssociatedSolution numeric = solve_numeric(split, extension);
  const Interval win = split.system.interval;
  double worst = 0.0;
  for (int k = 0; k <= 100; ++k) {
    const double x = win.lo + win.length() * k / 100.0;
    const std::vector<double> a = closed.value(x);
    const std::vector<double> b = numeric.value(x);
    for (std::size_t i = 0; i < a.size(); ++i)
      worst = std::max(worst, std::abs(a[i] - b[i]));
  }
  if (worst > check_tol) {
    numeric.label = key + " (numeric fallback, closed form off by " +
                    std::to_string(worst) + ")";
    return numeric;
  }
  return closed;
}

}  // namespace lieode
