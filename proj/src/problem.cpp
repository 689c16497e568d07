#include "lieode/problem.hpp"

#include <algorithm>
#include <stdexcept>

namespace lieode {

namespace {

const std::string kIndependent = "x";

std::string time_var_name(const std::vector<std::string>& taken) {
  if (std::find(taken.begin(), taken.end(), "y0") == taken.end()) return "y0";
  if (std::find(taken.begin(), taken.end(), kIndependent) == taken.end())
    return kIndependent;
  throw std::invalid_argument("variable names y0 and x are both taken");
}

}  // namespace

IvpSystem IvpSystem::make(std::string label, std::vector<std::string> variables,
                          std::vector<Expr> rhs, std::vector<double> initial,
                          Interval interval,
                          std::optional<std::size_t> time_index) {
  if (variables.empty()) throw std::invalid_argument("empty system");
  if (rhs.size() != variables.size() || initial.size() != variables.size())
    throw std::invalid_argument(
        "variables, right-hand sides and initial values must have equal length");
  if (!(interval.lo <= 0.0 && 0.0 <= interval.hi))
    throw std::invalid_argument("training interval must contain 0");
  IvpSystem sys;
  sys.label = std::move(label);
  sys.variables = std::move(variables);
  sys.rhs.reserve(rhs.size());
  for (const Expr& e : rhs) sys.rhs.push_back(e.bind(sys.variables));
  sys.initial = std::move(initial);
  sys.interval = interval;
  sys.time_index = time_index;
  return sys;
}

IvpSystem autonomize(const std::vector<std::string>& variables,
                     const std::vector<Expr>& rhs,
                     const std::vector<double>& initial, Interval interval,
                     std::string label) {
  const std::string t = time_var_name(variables);
  std::vector<std::string> vars;
  vars.reserve(variables.size() + 1);
  vars.push_back(t);
  vars.insert(vars.end(), variables.begin(), variables.end());

  std::vector<Expr> f;
  f.reserve(rhs.size() + 1);
  f.push_back(Expr::constant(1.0));
  const Expr tvar = Expr::variable(t);
  for (const Expr& e : rhs) f.push_back(e.substitute(kIndependent, tvar));

  std::vector<double> alpha;
  alpha.reserve(initial.size() + 1);
  alpha.push_back(0.0);
  alpha.insert(alpha.end(), initial.begin(), initial.end());

  return IvpSystem::make(std::move(label), std::move(vars), std::move(f),
                         std::move(alpha), interval, 0);
}

IvpSystem reduce_order(int order, const Expr& rhs,
                       const std::vector<double>& initial, Interval interval,
                       std::string label) {
  if (order < 1) throw std::invalid_argument("order must be at least 1");
  if (initial.size() != static_cast<std::size_t>(order))
    throw std::invalid_argument("expected " + std::to_string(order) +
                                " initial values, got " +
                                std::to_string(initial.size()));

  // y -> y1, y' -> y2, ..., y^(k) -> y(k+1)
  Expr f = rhs;
  for (int k = 0; k < order; ++k) {
    std::string from = "y" + std::string(static_cast<std::size_t>(k), '\'');
    f = f.substitute(from, Expr::variable("y" + std::to_string(k + 1)));
  }

  std::vector<std::string> vars;
  std::vector<Expr> fs;
  for (int k = 1; k < order; ++k) {
    vars.push_back("y" + std::to_string(k));
    fs.push_back(Expr::variable("y" + std::to_string(k + 1)));
  }
  vars.push_back("y" + std::to_string(order));
  fs.push_back(f);

  if (rhs.uses(kIndependent))
    return autonomize(vars, fs, initial, interval, std::move(label));
  return IvpSystem::make(std::move(label), std::move(vars), std::move(fs),
                         initial, interval);
}

TranslatedRhs translate_origin(const std::vector<Expr>& rhs, Interval interval,
                               double x0) {
  const Expr shifted_x = Expr::binary(Expr::Op::Add, Expr::variable(kIndependent),
                                      Expr::constant(x0));
  TranslatedRhs out;
  out.rhs.reserve(rhs.size());
  for (const Expr& e : rhs) out.rhs.push_back(e.substitute(kIndependent, shifted_x));
  out.interval = {interval.lo - x0, interval.hi - x0};
  out.shift = x0;
  return out;
}

namespace {

// The heuristic of keeping g linear: a term belongs to g when its total
// polynomial degree in the dependent variables (the synthetic time component
// excluded) is at most 1. Pure-time terms are forcing; they keep the
// associated system linear, so they stay in g as well.
void heuristic_split(const IvpSystem& sys, std::size_t i, Expr& g, Expr& h) {
  std::vector<std::string> counted;
  for (std::size_t j = 0; j < sys.size(); ++j)
    if (!sys.is_time(j)) counted.push_back(sys.variables[j]);

  std::vector<SignedTerm> to_g, to_h;
  for (const SignedTerm& t : additive_terms(sys.rhs[i])) {
    auto deg = polynomial_degree(t.term, counted);
    if (deg && *deg <= 1) {
      to_g.push_back(t);
    } else {
      to_h.push_back(t);
    }
  }
  g = sum_of_terms(to_g);
  h = sum_of_terms(to_h);
}

}  // namespace

OperatorSplit split(const IvpSystem& system, const SplitSpec& spec) {
  OperatorSplit out;
  out.system = system;
  out.g.resize(system.size());
  out.h.resize(system.size());

  for (std::size_t i = 0; i < system.size(); ++i) {
    if (system.is_time(i) || spec.mode == SplitSpec::Mode::Full) {
      out.g[i] = system.rhs[i];
      out.h[i] = Expr::constant(0.0);
      continue;
    }
    switch (spec.mode) {
      case SplitSpec::Mode::Heuristic:
        heuristic_split(system, i, out.g[i], out.h[i]);
        break;
      case SplitSpec::Mode::Explicit: {
        auto it = spec.explicit_g.find(system.variables[i]);
        if (it == spec.explicit_g.end())
          throw std::invalid_argument("split selector is missing g for variable '" +
                                      system.variables[i] + "'");
        out.g[i] = it->second;
        out.h[i] = Expr::binary(Expr::Op::Sub, system.rhs[i], out.g[i]);
        break;
      }
      case SplitSpec::Mode::Full:
        break;  // handled above
    }
    out.g[i] = out.g[i].bind(system.variables);
    out.h[i] = out.h[i].bind(system.variables);
  }
  return out;
}

}  // namespace lieode
