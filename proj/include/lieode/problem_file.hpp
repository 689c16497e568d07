#pragma once

#include <iosfwd>
#include <string>

#include "lieode/problem_def.hpp"

namespace lieode {

/// Problem-file syntax or consistency error; carries a 1-based line number.
struct ProblemFileError : std::runtime_error {
  ProblemFileError(const std::string& msg, int line)
      : std::runtime_error("line " + std::to_string(line) + ": " + msg),
        line(line) {}
  int line;
};

/// Parse the line-oriented problem format:
///
///   [problem]
///   label = example1
///   variables = y1 y2
///   interval = -1 1
///   initial = 0 1
///   [rhs]
///   y1 = cos(x)+y1^2+y2-(1+x^2+sin(x)^2)
///   ...
///
/// Sections: problem, rhs, split, assoc, network, train, reference.
/// `#` starts a comment. Expression strings are validated by the expression
/// parser at load time so syntax errors carry the offending line.
ProblemDef read_problem(std::istream& in);
ProblemDef read_problem_file(const std::string& path);

/// Write a definition in the same format; read_problem(write_problem(d))
/// reproduces d field for field.
void write_problem(const ProblemDef& def, std::ostream& out);
void write_problem_file(const ProblemDef& def, const std::string& path);

}  // namespace lieode
