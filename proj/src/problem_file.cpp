#include "lieode/problem_file.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "lieode/expr.hpp"

namespace lieode {

namespace {

std::string trim(std::string s) {
  const auto notspace = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), notspace));
  s.erase(std::find_if(s.rbegin(), s.rend(), notspace).base(), s.end());
  return s;
}

std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream iss(s);
  std::string tok;
  while (iss >> tok) out.push_back(tok);
  return out;
}

double parse_number(const std::string& s, int line) {
  double v = 0.0;
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end)
    throw ProblemFileError("expected a number, got '" + s + "'", line);
  return v;
}

std::uint64_t parse_u64(const std::string& s, int line) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw ProblemFileError("expected an unsigned integer, got '" + s + "'", line);
  return v;
}

int parse_int(const std::string& s, int line) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw ProblemFileError("expected an integer, got '" + s + "'", line);
  return v;
}

void check_expression(const std::string& text, int line) {
  try {
    parse_expression(text);
  } catch (const ParseError& e) {
    throw ProblemFileError("bad expression '" + text + "' (" + e.what() +
                               " at offset " + std::to_string(e.position) + ")",
                           line);
  }
}

}  // namespace

ProblemDef read_problem(std::istream& in) {
  ProblemDef def;
  std::string section;
  std::string raw;
  int line = 0;
  bool saw_eval_points = false;

  while (std::getline(in, raw)) {
    ++line;
    std::string s = raw;
    if (auto pos = s.find('#'); pos != std::string::npos) s.erase(pos);
    s = trim(s);
    if (s.empty()) continue;

    if (s.front() == '[') {
      if (s.back() != ']')
        throw ProblemFileError("unterminated section header", line);
      section = trim(s.substr(1, s.size() - 2));
      static const char* known[] = {"problem", "rhs",   "split",    "assoc",
                                    "network", "train", "reference"};
      bool ok = false;
      for (const char* k : known) ok = ok || section == k;
      if (!ok) throw ProblemFileError("unknown section [" + section + "]", line);
      continue;
    }

    const auto eq = s.find('=');
    if (eq == std::string::npos)
      throw ProblemFileError("expected 'key = value'", line);
    const std::string key = trim(s.substr(0, eq));
    const std::string value = trim(s.substr(eq + 1));
    if (key.empty()) throw ProblemFileError("empty key", line);

    if (section == "problem") {
      if (key == "label") {
        def.label = value;
      } else if (key == "variables") {
        def.variables = split_ws(value);
      } else if (key == "interval") {
        auto parts = split_ws(value);
        if (parts.size() != 2)
          throw ProblemFileError("interval needs two numbers", line);
        def.interval = {parse_number(parts[0], line), parse_number(parts[1], line)};
      } else if (key == "initial") {
        def.initial.clear();
        for (const auto& p : split_ws(value))
          def.initial.push_back(parse_number(p, line));
      } else if (key == "start") {
        def.start = parse_number(value, line);
      } else if (key == "order") {
        def.order = parse_int(value, line);
      } else if (key == "extension") {
        def.extension = parse_number(value, line);
      } else if (key == "eval_points") {
        def.eval_points = parse_int(value, line);
        saw_eval_points = true;
      } else {
        throw ProblemFileError("unknown key '" + key + "' in [problem]", line);
      }
    } else if (section == "rhs") {
      check_expression(value, line);
      if (def.order > 0 && key == "y") {
        def.order_rhs = value;
      } else {
        def.rhs.push_back(value);
        if (std::find(def.variables.begin(), def.variables.end(), key) ==
            def.variables.end())
          throw ProblemFileError("rhs for undeclared variable '" + key + "'",
                                 line);
        // Reorder on write-out keeps rhs parallel to `variables`; enforce
        // declaration order here to keep files unambiguous.
        if (def.rhs.size() > def.variables.size() ||
            def.variables[def.rhs.size() - 1] != key)
          throw ProblemFileError(
              "rhs lines must follow the declared variable order", line);
      }
    } else if (section == "split") {
      if (key == "mode") {
        if (value != "heuristic" && value != "full" && value != "explicit")
          throw ProblemFileError("split mode must be heuristic, full or explicit",
                                 line);
        def.split.mode = value;
      } else {
        check_expression(value, line);
        def.split.g.emplace_back(key, value);
      }
    } else if (section == "assoc") {
      if (key == "form") {
        def.assoc.form = value;
      } else {
        def.assoc.params[key] = parse_number(value, line);
      }
    } else if (section == "network") {
      if (key == "hidden" || key == "m") {
        def.network.hidden = parse_int(value, line);
      } else if (key == "seed") {
        def.network.seed = parse_u64(value, line);
      } else {
        throw ProblemFileError("unknown key '" + key + "' in [network]", line);
      }
    } else if (section == "train") {
      if (key == "points") {
        def.train.points = parse_int(value, line);
      } else if (key == "eta") {
        def.train.eta = parse_number(value, line);
      } else if (key == "max_iters") {
        def.train.max_iters = parse_int(value, line);
      } else if (key == "target_loss") {
        def.train.target_loss = parse_number(value, line);
      } else if (key == "optimizer") {
        if (value != "gd" && value != "adam")
          throw ProblemFileError("optimizer must be gd or adam", line);
        def.train.optimizer = value;
      } else if (key == "boundary") {
        // boundary = <x> <variable> <value> <weight>
        auto parts = split_ws(value);
        if (parts.size() != 4)
          throw ProblemFileError("boundary needs: x variable value weight", line);
        ProblemDef::Train::Boundary bc;
        bc.x = parse_number(parts[0], line);
        bc.variable = parts[1];
        bc.value = parse_number(parts[2], line);
        bc.weight = parse_number(parts[3], line);
        def.train.boundary = bc;
      } else {
        throw ProblemFileError("unknown key '" + key + "' in [train]", line);
      }
    } else if (section == "reference") {
      check_expression(value, line);
      def.reference.emplace_back(key, value);
    } else {
      throw ProblemFileError("key outside of any section", line);
    }
  }

  if (def.order > 0) {
    if (def.order_rhs.empty())
      throw ProblemFileError("order > 0 needs an 'y = ...' line in [rhs]", line);
    if (!def.variables.empty())
      throw ProblemFileError(
          "high-order problems must not declare first-order variables", line);
  } else {
    if (def.variables.empty())
      throw ProblemFileError("missing 'variables' in [problem]", line);
    if (def.rhs.size() != def.variables.size())
      throw ProblemFileError("need one rhs per declared variable", line);
  }
  const std::size_t expect =
      def.order > 0 ? static_cast<std::size_t>(def.order) : def.variables.size();
  if (def.initial.size() != expect)
    throw ProblemFileError("expected " + std::to_string(expect) +
                               " initial values, got " +
                               std::to_string(def.initial.size()),
                           line);
  if (!(def.interval.lo <= def.start && def.start <= def.interval.hi))
    throw ProblemFileError("interval must contain the start point", line);
  if (saw_eval_points && def.eval_points < 2)
    throw ProblemFileError("eval_points must be at least 2", line);
  return def;
}

ProblemDef read_problem_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open problem file '" + path + "'");
  return read_problem(in);
}

void write_problem(const ProblemDef& def, std::ostream& out) {
  char buf[64];
  auto num = [&buf](double v) {
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, end);
  };

  out << "[problem]\n";
  out << "label = " << def.label << "\n";
  if (def.order > 0) {
    out << "order = " << def.order << "\n";
  } else {
    out << "variables =";
    for (const auto& v : def.variables) out << ' ' << v;
    out << "\n";
  }
  out << "interval = " << num(def.interval.lo) << ' ' << num(def.interval.hi)
      << "\n";
  out << "initial =";
  for (double a : def.initial) out << ' ' << num(a);
  out << "\n";
  if (def.start != 0.0) out << "start = " << num(def.start) << "\n";
  out << "extension = " << num(def.extension) << "\n";
  out << "eval_points = " << def.eval_points << "\n";

  out << "\n[rhs]\n";
  if (def.order > 0) {
    out << "y = " << def.order_rhs << "\n";
  } else {
    for (std::size_t i = 0; i < def.variables.size(); ++i)
      out << def.variables[i] << " = " << def.rhs[i] << "\n";
  }

  out << "\n[split]\n";
  out << "mode = " << def.split.mode << "\n";
  for (const auto& [var, g] : def.split.g) out << var << " = " << g << "\n";

  if (!def.assoc.form.empty() || !def.assoc.params.empty()) {
    out << "\n[assoc]\n";
    if (!def.assoc.form.empty()) out << "form = " << def.assoc.form << "\n";
    for (const auto& [k, v] : def.assoc.params)
      out << k << " = " << num(v) << "\n";
  }

  out << "\n[network]\n";
  out << "hidden = " << def.network.hidden << "\n";
  out << "seed = " << def.network.seed << "\n";

  out << "\n[train]\n";
  out << "points = " << def.train.points << "\n";
  out << "eta = " << num(def.train.eta) << "\n";
  out << "max_iters = " << def.train.max_iters << "\n";
  out << "target_loss = " << num(def.train.target_loss) << "\n";
  out << "optimizer = " << def.train.optimizer << "\n";
  if (def.train.boundary) {
    const auto& bc = *def.train.boundary;
    out << "boundary = " << num(bc.x) << ' ' << bc.variable << ' '
        << num(bc.value) << ' ' << num(bc.weight) << "\n";
  }

  if (!def.reference.empty()) {
    out << "\n[reference]\n";
    for (const auto& [var, expr] : def.reference)
      out << var << " = " << expr << "\n";
  }
}

void write_problem_file(const ProblemDef& def, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write problem file '" + path + "'");
  write_problem(def, out);
}

}  // namespace lieode
