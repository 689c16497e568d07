#include "lieode/problem.hpp"

#include <cmath>
#include <doctest.h>

#include "oracle.hpp"

using namespace lieode;

namespace {

std::vector<Expr> parse_all(std::initializer_list<const char*> texts) {
  std::vector<Expr> out;
  for (const char* t : texts) out.push_back(parse_expression(t));
  return out;
}

oracle::Rhs system_rhs(const IvpSystem& sys) {
  return [&sys](double, const std::vector<double>& y) {
    std::vector<double> f(sys.size());
    for (std::size_t i = 0; i < sys.size(); ++i) f[i] = sys.rhs[i].eval(y);
    return f;
  };
}

}  // namespace

TEST_CASE("autonomize: the worked example becomes a 3-equation system") {
  const auto rhs = parse_all({"cos(x)+y1^2+y2-(1+x^2+sin(x)^2)",
                              "2*x-(1+x^2)*sin(x)+y1*y2"});
  const IvpSystem sys = autonomize({"y1", "y2"}, rhs, {0.0, 1.0}, {-1.0, 1.0},
                                   "example1");
  REQUIRE(sys.size() == 3);
  CHECK(sys.variables == std::vector<std::string>{"y0", "y1", "y2"});
  CHECK(sys.initial == std::vector<double>{0.0, 0.0, 1.0});
  CHECK(sys.time_index.has_value());
  CHECK(*sys.time_index == 0);
  // appended equation is the constant 1
  CHECK(sys.rhs[0].is_constant());
  CHECK(sys.rhs[0].constant_value() == 1.0);
  // x was replaced by the new variable: f1 at (y0,y1,y2)=(0,0,1) is 1
  const double y[3] = {0.0, 0.0, 1.0};
  CHECK(sys.rhs[1].eval(std::span<const double>(y, 3)) == doctest::Approx(1.0));
  CHECK(sys.rhs[2].eval(std::span<const double>(y, 3)) == doctest::Approx(0.0));
}

TEST_CASE("autonomize: already autonomous rhs gains only the trivial equation") {
  const auto rhs = parse_all({"y2", "-y1"});
  const IvpSystem sys =
      autonomize({"y1", "y2"}, rhs, {1.0, 0.0}, {0.0, 2.0}, "rotation");
  REQUIRE(sys.size() == 3);
  const double y[3] = {0.5, 2.0, 3.0};
  CHECK(sys.rhs[0].eval(std::span<const double>(y, 3)) == 1.0);
  CHECK(sys.rhs[1].eval(std::span<const double>(y, 3)) == 3.0);
  CHECK(sys.rhs[2].eval(std::span<const double>(y, 3)) == -2.0);
}

TEST_CASE("autonomize: y' = x integrates to x^2/2") {
  const IvpSystem sys =
      autonomize({"y1"}, parse_all({"x"}), {0.0}, {0.0, 1.0}, "quadrature");
  REQUIRE(sys.size() == 2);
  // oracle: RK4 on the same system, y1(1) should be 0.5 (exact by quadrature)
  const auto y = oracle::rk4(system_rhs(sys), sys.initial, 0.0, 1.0, 200);
  CHECK(y[1] == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(y[0] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("autonomize: synthetic component reproduces x along the trajectory") {
  const auto rhs = parse_all({"cos(x)+y1^2+y2-(1+x^2+sin(x)^2)",
                              "2*x-(1+x^2)*sin(x)+y1*y2"});
  const IvpSystem sys =
      autonomize({"y1", "y2"}, rhs, {0.0, 1.0}, {-1.0, 1.0}, "example1");
  for (double target : {0.25, 0.5, 1.0, -0.5, -1.0}) {
    const auto y = oracle::rk4(system_rhs(sys), sys.initial, 0.0, target, 400);
    CHECK(y[0] == doctest::Approx(target).epsilon(1e-12));
  }
}

TEST_CASE("reduce_order: Duffing stays two-dimensional") {
  // u'' + u + 2*0.5*u^3 = 0 -> y1' = y2, y2' = -y1 - y1^3
  const Expr rhs = parse_expression("-y-y^3");
  const IvpSystem sys = reduce_order(2, rhs, {1.0, 0.0}, {0.0, 2.0}, "duffing");
  REQUIRE(sys.size() == 2);
  CHECK(sys.variables == std::vector<std::string>{"y1", "y2"});
  CHECK_FALSE(sys.time_index.has_value());
  const double y[2] = {2.0, 5.0};
  CHECK(sys.rhs[0].eval(std::span<const double>(y, 2)) == 5.0);
  CHECK(sys.rhs[1].eval(std::span<const double>(y, 2)) == doctest::Approx(-10.0));
}

TEST_CASE("reduce_order: forced oscillator gains the time component") {
  // y'' = f(x) - y - 0.4 y' with f(x) = -0.4 exp(-0.4 x) cos x
  const Expr rhs = parse_expression("-0.4*exp(-0.4*x)*cos(x)-y-0.4*y'");
  const IvpSystem sys = reduce_order(2, rhs, {0.0, 1.0}, {0.0, 2.0}, "example2");
  REQUIRE(sys.size() == 3);
  CHECK(sys.variables == std::vector<std::string>{"y0", "y1", "y2"});
  CHECK(sys.initial == std::vector<double>{0.0, 0.0, 1.0});
  // f0 = 1, f1 = y2, f2 = f(y0) - y1 - 0.4 y2
  const double y[3] = {0.0, 0.25, 2.0};
  CHECK(sys.rhs[0].eval(std::span<const double>(y, 3)) == 1.0);
  CHECK(sys.rhs[1].eval(std::span<const double>(y, 3)) == 2.0);
  CHECK(sys.rhs[2].eval(std::span<const double>(y, 3)) ==
        doctest::Approx(-0.4 - 0.25 - 0.8));
}

TEST_CASE("reduce_order: first order constant problem") {
  const IvpSystem sys =
      reduce_order(1, parse_expression("0"), {5.0}, {0.0, 1.0}, "constant");
  REQUIRE(sys.size() == 1);
  const auto y = oracle::rk4(system_rhs(sys), sys.initial, 0.0, 1.0, 10);
  CHECK(y[0] == 5.0);
}

TEST_CASE("reduce_order: rejects wrong number of initial values") {
  CHECK_THROWS(reduce_order(2, parse_expression("-y"), {1.0}, {0.0, 1.0}, "bad"));
}

TEST_CASE("reduce_order: RK trajectory satisfies the original high-order ODE") {
  // y'' = -y - y^3, components chained so y2 = y1' exactly by construction;
  // check d(y2)/dx == rhs by finite differences along the oracle trajectory.
  const Expr rhs = parse_expression("-y-y^3");
  const IvpSystem sys = reduce_order(2, rhs, {1.0, 0.0}, {0.0, 2.0}, "duffing");
  const auto f = system_rhs(sys);
  for (double x : {0.3, 0.7, 1.1, 1.9}) {
    const double delta = 1e-4;
    const auto ym = oracle::rk4(f, sys.initial, 0.0, x - delta, 4000);
    const auto yp = oracle::rk4(f, sys.initial, 0.0, x + delta, 4000);
    const auto y0 = oracle::rk4(f, sys.initial, 0.0, x, 4000);
    const double d2y = (yp[1] - ym[1]) / (2.0 * delta);  // d(y2)/dx
    const double want = -y0[0] - y0[0] * y0[0] * y0[0];
    CHECK(std::abs(d2y - want) <= 1e-6);
  }
}

TEST_CASE("translate_origin: autonomous rhs unaffected, interval shifted") {
  const auto rhs = parse_all({"y2", "-y1"});
  const TranslatedRhs tr = translate_origin(rhs, {2.0, 4.0}, 3.0);
  CHECK(tr.interval.lo == -1.0);
  CHECK(tr.interval.hi == 1.0);
  CHECK(tr.shift == 3.0);
  const std::map<std::string, double> at{{"y1", 1.5}, {"y2", -2.5}};
  CHECK(tr.rhs[0].eval(at) == -2.5);
  CHECK(tr.rhs[1].eval(at) == -1.5);
}

TEST_CASE("translate_origin: y' = x with data at x = 2") {
  const TranslatedRhs tr = translate_origin(parse_all({"x"}), {2.0, 3.0}, 2.0);
  // y' = x~ + 2 in the shifted variable
  CHECK(tr.rhs[0].eval({{"x", 0.0}}) == 2.0);
  CHECK(tr.rhs[0].eval({{"x", 1.0}}) == 3.0);
}

TEST_CASE("translate_origin: mapped-back solution satisfies the original IVP") {
  // y' = x, y(2) = 0; exact y(x) = (x^2 - 4)/2.
  const TranslatedRhs tr = translate_origin(parse_all({"x"}), {2.0, 3.0}, 2.0);
  const IvpSystem sys =
      autonomize({"y1"}, tr.rhs, {0.0}, tr.interval, "shifted");
  const auto y = oracle::rk4(system_rhs(sys), sys.initial, 0.0, 1.0, 400);
  // internal x = 1 corresponds to original x = 3: y = (9 - 4)/2 = 2.5
  CHECK(y[1] == doctest::Approx(2.5).epsilon(1e-10));
}

TEST_CASE("split: heuristic recovers the worked-example selection") {
  const auto rhs = parse_all({"cos(x)+y1^2+y2-(1+x^2+sin(x)^2)",
                              "2*x-(1+x^2)*sin(x)+y1*y2"});
  const IvpSystem sys =
      autonomize({"y1", "y2"}, rhs, {0.0, 1.0}, {-1.0, 1.0}, "example1");
  const OperatorSplit sp = split(sys, SplitSpec::heuristic());

  // Paper's selection: g1 = cos(y0)+y2-(1+y0^2+sin(y0)^2), g2 = 2y0-(1+y0^2)sin(y0),
  // g0 = 1; h1 = y1^2, h2 = y1*y2.
  const Expr want_g1 =
      parse_expression("cos(y0)+y2-(1+y0^2+sin(y0)^2)").bind(sys.variables);
  const Expr want_g2 =
      parse_expression("2*y0-(1+y0^2)*sin(y0)").bind(sys.variables);
  oracle::Rng rng(11);
  for (int i = 0; i < 50; ++i) {
    const std::vector<double> y = {rng.uniform(-1.0, 1.0), rng.uniform(-2.0, 2.0),
                                   rng.uniform(-2.0, 2.0)};
    CHECK(sp.g[1].eval(y) == doctest::Approx(want_g1.eval(y)).epsilon(1e-12));
    CHECK(sp.g[2].eval(y) == doctest::Approx(want_g2.eval(y)).epsilon(1e-12));
    CHECK(sp.h[1].eval(y) == doctest::Approx(y[1] * y[1]).epsilon(1e-12));
    CHECK(sp.h[2].eval(y) == doctest::Approx(y[1] * y[2]).epsilon(1e-12));
  }
  CHECK(sp.g[0].constant_value() == 1.0);
  CHECK(sp.h[0].constant_value() == 0.0);
}

TEST_CASE("split: explicit selector, Duffing linear part") {
  const auto rhs = parse_all({"y2", "-y1-y1^3"});
  const IvpSystem sys =
      IvpSystem::make("duffing", {"y1", "y2"}, rhs, {1.0, 0.0}, {0.0, 2.0});
  std::map<std::string, Expr> g;
  g.emplace("y1", parse_expression("y2"));
  g.emplace("y2", parse_expression("-y1"));
  const OperatorSplit sp = split(sys, SplitSpec::explicit_parts(std::move(g)));
  const std::vector<double> y = {0.7, -1.2};
  CHECK(sp.g[0].eval(y) == -1.2);
  CHECK(sp.g[1].eval(y) == doctest::Approx(-0.7));
  CHECK(sp.h[0].eval(y) == 0.0);
  CHECK(sp.h[1].eval(y) == doctest::Approx(-0.343));
}

TEST_CASE("split: explicit selector must cover every variable") {
  const auto rhs = parse_all({"y2", "-y1"});
  const IvpSystem sys =
      IvpSystem::make("rot", {"y1", "y2"}, rhs, {1.0, 0.0}, {0.0, 1.0});
  std::map<std::string, Expr> g;
  g.emplace("y1", parse_expression("y2"));
  CHECK_THROWS(split(sys, SplitSpec::explicit_parts(std::move(g))));
}

TEST_CASE("split: full selector leaves h identically zero") {
  const auto rhs = parse_all({"cos(x)+y1^2+y2-(1+x^2+sin(x)^2)",
                              "2*x-(1+x^2)*sin(x)+y1*y2"});
  const IvpSystem sys =
      autonomize({"y1", "y2"}, rhs, {0.0, 1.0}, {-1.0, 1.0}, "example1");
  const OperatorSplit sp = split(sys, SplitSpec::full());
  for (const Expr& h : sp.h) {
    CHECK(h.is_constant());
    CHECK(h.constant_value() == 0.0);
  }
}

TEST_CASE("split: sum invariant g + h = f on random points") {
  const auto rhs = parse_all({"cos(x)+y1^2+y2-(1+x^2+sin(x)^2)",
                              "2*x-(1+x^2)*sin(x)+y1*y2"});
  const IvpSystem sys =
      autonomize({"y1", "y2"}, rhs, {0.0, 1.0}, {-1.0, 1.0}, "example1");
  for (const SplitSpec& spec : {SplitSpec::heuristic(), SplitSpec::full()}) {
    const OperatorSplit sp = split(sys, spec);
    oracle::Rng rng(3);
    for (int i = 0; i < 200; ++i) {
      const std::vector<double> y = {rng.uniform(-1.0, 1.0),
                                     rng.uniform(-2.0, 2.0),
                                     rng.uniform(-2.0, 2.0)};
      for (std::size_t c = 0; c < sys.size(); ++c) {
        const double f = sys.rhs[c].eval(y);
        const double gh = sp.g[c].eval(y) + sp.h[c].eval(y);
        CHECK(std::abs(f - gh) <= 1e-12 * std::max(1.0, std::abs(f)));
      }
    }
  }
}

TEST_CASE("system invariants are validated") {
  CHECK_THROWS(IvpSystem::make("bad", {"y1"}, parse_all({"y1", "y1"}), {0.0},
                               {0.0, 1.0}));
  CHECK_THROWS(IvpSystem::make("bad", {"y1"}, parse_all({"y1"}), {0.0},
                               {0.5, 1.0}));  // 0 not inside
  CHECK_THROWS(IvpSystem::make("bad", {"y1"}, parse_all({"y2"}), {0.0},
                               {0.0, 1.0}));  // unknown symbol
}
