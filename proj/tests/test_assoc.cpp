#include "lieode/assoc.hpp"

#include <cmath>
#include <doctest.h>

#include "oracle.hpp"

using namespace lieode;

namespace {

OperatorSplit example1_split() {
  std::vector<Expr> rhs = {
      parse_expression("cos(x)+y1^2+y2-(1+x^2+sin(x)^2)"),
      parse_expression("2*x-(1+x^2)*sin(x)+y1*y2")};
  const IvpSystem sys =
      autonomize({"y1", "y2"}, rhs, {0.0, 1.0}, {-1.0, 1.0}, "example1");
  return split(sys, SplitSpec::heuristic());
}

OperatorSplit duffing_linear_split() {
  std::vector<Expr> rhs = {parse_expression("y2"), parse_expression("-y1-y1^3")};
  const IvpSystem sys =
      IvpSystem::make("duffing", {"y1", "y2"}, rhs, {1.0, 0.0}, {0.0, 2.0});
  std::map<std::string, Expr> g;
  g.emplace("y1", parse_expression("y2"));
  g.emplace("y2", parse_expression("-y1"));
  return split(sys, SplitSpec::explicit_parts(std::move(g)));
}

oracle::Rhs split_g_rhs(const OperatorSplit& sp) {
  return [&sp](double, const std::vector<double>& y) {
    std::vector<double> out(sp.g.size());
    for (std::size_t i = 0; i < sp.g.size(); ++i) out[i] = sp.g[i].eval(y);
    return out;
  };
}

}  // namespace

TEST_CASE("closed form example1: anchor and frozen values") {
  const OperatorSplit sp = example1_split();
  const auto form = builtin_closed_form("example1", {});
  REQUIRE(form.has_value());
  const AssociatedSolution sol = solve_closed_form(sp, *form);

  const auto at0 = sol.value(0.0);
  CHECK(at0[0] == 0.0);
  CHECK(at0[1] == 0.0);
  CHECK(at0[2] == 1.0);

  // ybar2(1) = 3 - 2 sin 1 (mpmath: 1.3170580303842069867)
  const auto at1 = sol.value(1.0);
  CHECK(at1[2] == doctest::Approx(1.3170580303842070).epsilon(1e-14));
  // ybar1(1) (mpmath: 0.3641206257552897735)
  CHECK(at1[1] == doctest::Approx(0.36412062575528977).epsilon(1e-13));

  // cross-check against the RK oracle at 1e-8
  const auto rk = oracle::rk4(split_g_rhs(sp), sp.system.initial, 0.0, 1.0, 4000);
  CHECK(std::abs(at1[1] - rk[1]) <= 1e-8);
  CHECK(std::abs(at1[2] - rk[2]) <= 1e-8);
}

TEST_CASE("closed form example2: anchor at t = 0 for a = 0, b = 1") {
  std::vector<Expr> rhs = {
      parse_expression("y2"),
      parse_expression("-0.4*exp(-0.4*x)*cos(x)-y1-0.4*y2")};
  const IvpSystem sys =
      autonomize({"y1", "y2"}, rhs, {0.0, 1.0}, {0.0, 2.0}, "example2");
  std::map<std::string, Expr> g;
  g.emplace("y1", parse_expression("y2"));
  g.emplace("y2", parse_expression("-(y1+0.4*y2)"));
  const OperatorSplit sp = split(sys, SplitSpec::explicit_parts(std::move(g)));

  const auto form =
      builtin_closed_form("example2", {{"epsilon", 0.2}, {"a", 0.0}, {"b", 1.0}});
  REQUIRE(form.has_value());
  const AssociatedSolution sol = solve_closed_form(sp, *form);
  const auto at0 = sol.value(0.0);
  CHECK(at0[1] == 0.0);
  CHECK(at0[2] == 1.0);

  // frozen from mpmath: ybar1(1) = 0.69387986210972081, ybar2(1) = 0.31741428779399945
  const auto at1 = sol.value(1.0);
  CHECK(at1[1] == doctest::Approx(0.69387986210972081).epsilon(1e-14));
  CHECK(at1[2] == doctest::Approx(0.31741428779399945).epsilon(1e-13));

  // and against the RK oracle
  const auto rk = oracle::rk4(split_g_rhs(sp), sp.system.initial, 0.0, 1.0, 4000);
  CHECK(std::abs(at1[1] - rk[1]) <= 1e-9);
  CHECK(std::abs(at1[2] - rk[2]) <= 1e-9);
}

TEST_CASE("solve_numeric: single constant equation reproduces x") {
  std::vector<Expr> rhs = {parse_expression("x")};  // forces the y0 component in
  const IvpSystem sys = autonomize({"y1"}, rhs, {0.0}, {0.0, 1.0}, "t");
  const OperatorSplit sp = split(sys, SplitSpec::full());
  const AssociatedSolution sol = solve_numeric(sp);
  // RK4 is exact here up to accumulated roundoff
  for (double x : {0.0, 0.125, 0.25, 0.5, 0.75, 1.0}) {
    CHECK(std::abs(sol.value(x)[0] - x) <= 1e-12);
  }
  CHECK(sol.value(0.0)[0] == 0.0);  // the anchor node itself is exact
}

TEST_CASE("solve_numeric: Duffing linear part gives cos/-sin") {
  const AssociatedSolution sol = solve_numeric(duffing_linear_split());
  CHECK(std::abs(sol.value(1.0)[0] - std::cos(1.0)) <= 1e-9);
  CHECK(std::abs(sol.value(1.0)[1] + std::sin(1.0)) <= 1e-9);
  CHECK(sol.accuracy <= 1e-9);
}

TEST_CASE("solve_numeric vs closed form on example1: <= 1e-8 on [-1, 1]") {
  const OperatorSplit sp = example1_split();
  const auto form = builtin_closed_form("example1", {});
  const AssociatedSolution closed = solve_closed_form(sp, *form);
  const AssociatedSolution numeric = solve_numeric(sp);
  double worst = 0.0;
  for (int k = 0; k <= 400; ++k) {
    const double x = -1.0 + 2.0 * k / 400.0;
    const auto a = closed.value(x);
    const auto b = numeric.value(x);
    for (std::size_t i = 0; i < a.size(); ++i)
      worst = std::max(worst, std::abs(a[i] - b[i]));
  }
  CHECK(worst <= 1e-8);
}

TEST_CASE("numeric anchor: ybar(0) = alpha to 1e-12") {
  const AssociatedSolution sol = solve_numeric(example1_split());
  const auto at0 = sol.value(0.0);
  CHECK(std::abs(at0[0] - 0.0) <= 1e-12);
  CHECK(std::abs(at0[1] - 0.0) <= 1e-12);
  CHECK(std::abs(at0[2] - 1.0) <= 1e-12);
}

TEST_CASE("derivative evaluator equals g(ybar(x)) and matches finite differences") {
  const OperatorSplit sp = duffing_linear_split();
  const AssociatedSolution sol = solve_numeric(sp);
  oracle::Rng rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    const double x = rng.uniform(0.0, 2.0);
    const auto d = sol.derivative(x);
    const auto y = sol.value(x);
    // definitional identity
    for (std::size_t i = 0; i < y.size(); ++i)
      CHECK(d[i] == doctest::Approx(sp.g[i].eval(y)).epsilon(1e-14));
    // residual check against central differences of the dense output
    const double delta = 1e-5;
    const auto yp = sol.value(x + delta);
    const auto ym = sol.value(x - delta);
    for (std::size_t i = 0; i < y.size(); ++i) {
      const double fd = (yp[i] - ym[i]) / (2.0 * delta);
      CHECK(std::abs(fd - d[i]) <= 1e-6);
    }
  }
}

TEST_CASE("full split with known solution reproduces it (Theorem 2, D2 = 0)") {
  // Rotation system y1' = y2, y2' = -y1 has exact solution (cos, -sin).
  std::vector<Expr> rhs = {parse_expression("y2"), parse_expression("-y1")};
  const IvpSystem sys =
      IvpSystem::make("rotation", {"y1", "y2"}, rhs, {1.0, 0.0}, {0.0, 2.0});
  const AssociatedSolution sol = solve_numeric(split(sys, SplitSpec::full()));
  for (double x : {0.0, 0.4, 1.0, 1.7, 2.0}) {
    CHECK(std::abs(sol.value(x)[0] - std::cos(x)) <= 1e-8);
    CHECK(std::abs(sol.value(x)[1] + std::sin(x)) <= 1e-8);
  }
}

TEST_CASE("dense output against halved-step RK4 at off-node points") {
  const OperatorSplit sp = example1_split();
  const AssociatedSolution sol = solve_numeric(sp);
  const auto g = split_g_rhs(sp);
  oracle::Rng rng(23);
  for (int trial = 0; trial < 50; ++trial) {
    const double x = rng.uniform(-1.0, 1.0);
    const auto dense = sol.value(x);
    const auto fine = oracle::rk4(g, sp.system.initial, 0.0, x, 8000);
    for (std::size_t i = 0; i < dense.size(); ++i)
      CHECK(std::abs(dense[i] - fine[i]) <= 1e-7);
  }
}

TEST_CASE("solve_associated falls back to numeric when the form disagrees") {
  // Feed example3's closed form (cos, -sin) to the FULL Duffing split, whose
  // true associated solution includes the cubic term: must fall back.
  std::vector<Expr> rhs = {parse_expression("y2"), parse_expression("-y1-y1^3")};
  const IvpSystem sys =
      IvpSystem::make("duffing", {"y1", "y2"}, rhs, {1.0, 0.0}, {0.0, 2.0});
  const OperatorSplit full = split(sys, SplitSpec::full());
  const AssociatedSolution sol = solve_associated(full, "example3", {});
  CHECK(sol.source == AssociatedSolution::Source::Numeric);
  CHECK(sol.label.find("fallback") != std::string::npos);

  // With the matching linear split the closed form is kept.
  const AssociatedSolution lin = solve_associated(duffing_linear_split(), "example3", {});
  CHECK(lin.source == AssociatedSolution::Source::ClosedForm);
}

TEST_CASE("integration failure reports the failing x") {
  // y' = ln(y), y(0) = 0.5: y decreases through 0 and ln turns into a
  // domain error along the forward trajectory.
  std::vector<Expr> rhs = {parse_expression("ln(y1)")};
  const IvpSystem sys = IvpSystem::make("blow", {"y1"}, rhs, {0.5}, {0.0, 1.0});
  const OperatorSplit sp = split(sys, SplitSpec::full());
  try {
    solve_numeric(sp);
    CHECK(false);
  } catch (const EvalError& e) {
    CHECK(std::string(e.what()).find("failed at x") != std::string::npos);
  }
}

TEST_CASE("unknown closed-form key solves numerically") {
  const AssociatedSolution sol =
      solve_associated(duffing_linear_split(), "no-such-form", {});
  CHECK(sol.source == AssociatedSolution::Source::Numeric);
}
