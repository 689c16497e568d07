#include "lieode/builtins.hpp"

#include <charconv>
#include <stdexcept>

namespace lieode {

namespace {

std::string fmt(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, end);
}

double take(const std::map<std::string, double>& in, const std::string& key,
            double fallback) {
  auto it = in.find(key);
  return it == in.end() ? fallback : it->second;
}

void reject_unknown(const std::map<std::string, double>& params,
                    std::initializer_list<std::string> known,
                    const std::string& name) {
  for (const auto& [key, value] : params) {
    (void)value;
    bool ok = false;
    for (const auto& k : known)
      if (k == key) ok = true;
    if (!ok)
      throw std::invalid_argument("built-in '" + name +
                                  "' has no parameter '" + key + "'");
  }
}

ProblemDef example1() {
  ProblemDef def;
  def.label = "example1";
  def.variables = {"y1", "y2"};
  def.rhs = {"cos(x)+y1^2+y2-(1+x^2+sin(x)^2)", "2*x-(1+x^2)*sin(x)+y1*y2"};
  def.initial = {0.0, 1.0};
  def.interval = {-1.0, 1.0};
  def.split.mode = "heuristic";
  def.assoc.form = "example1";
  def.network.hidden = 3;
  def.network.seed = 13;
  def.train.points = 21;
  def.train.optimizer = "adam";
  def.train.eta = 0.002;
  def.train.max_iters = 1000000;
  def.train.target_loss = 1e-10;
  def.reference = {{"y1", "sin(x)"}, {"y2", "1+x^2"}};
  return def;
}

ProblemDef example2(const std::map<std::string, double>& params) {
  const double eps = take(params, "epsilon", 0.2);
  const double a = take(params, "a", 0.0);
  const double b = take(params, "b", 1.0);
  const std::string forcing = "-0.4*exp(-0.4*x)*cos(x)";

  ProblemDef def;
  def.label = "example2";
  def.order = 2;
  def.order_rhs = forcing + " - y - " + fmt(2.0 * eps) + "*y'";
  def.initial = {a, b};
  def.interval = {0.0, 2.0};
  def.split.mode = "explicit";
  def.split.g = {{"y1", "y2"}, {"y2", "-(y1+" + fmt(2.0 * eps) + "*y2)"}};
  def.assoc.form = "example2";
  def.assoc.params = {{"epsilon", eps}, {"a", a}, {"b", b}};
  def.network.hidden = 3;
  def.network.seed = 7;
  def.train.points = 21;
  def.train.optimizer = "adam";
  def.train.eta = 0.002;
  def.train.max_iters = 1000000;
  def.train.target_loss = 1e-10;
  if (eps == 0.2 && a == 0.0 && b == 1.0) {
    // Exact solution of the default configuration.
    def.reference = {{"y", "exp(-0.4*x)*sin(x)"}};
  }
  return def;
}

ProblemDef example3(const std::map<std::string, double>& params) {
  const double eps = take(params, "epsilon", 0.5);

  ProblemDef def;
  def.label = "example3";
  def.variables = {"y1", "y2"};
  def.rhs = {"y2", "-y1-" + fmt(2.0 * eps) + "*y1^3"};
  def.initial = {1.0, 0.0};
  def.interval = {0.0, 2.0};
  def.split.mode = "explicit";
  def.split.g = {{"y1", "y2"}, {"y2", "-y1"}};
  def.assoc.form = "example3";
  def.network.hidden = 5;
  def.network.seed = 13;
  def.train.points = 21;
  def.train.optimizer = "adam";
  def.train.eta = 0.002;
  def.train.max_iters = 1000000;
  def.train.target_loss = 1e-10;
  return def;
}

}  // namespace

std::vector<std::string> builtin_names() {
  return {"example1", "example2", "example3"};
}

bool is_builtin(const std::string& name) {
  for (const auto& n : builtin_names())
    if (n == name) return true;
  return false;
}

ProblemDef make_builtin(const std::string& name,
                        const std::map<std::string, double>& params) {
  if (name == "example1") {
    reject_unknown(params, {}, name);
    return example1();
  }
  if (name == "example2") {
    reject_unknown(params, {"epsilon", "a", "b"}, name);
    return example2(params);
  }
  if (name == "example3") {
    reject_unknown(params, {"epsilon"}, name);
    return example3(params);
  }
  throw std::invalid_argument("unknown built-in problem '" + name + "'");
}

}  // namespace lieode
