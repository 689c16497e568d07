#pragma once

#include <map>
#include <string>
#include <vector>

#include "lieode/problem_def.hpp"

namespace lieode {

/// Names of the built-in problems, in catalogue order.
std::vector<std::string> builtin_names();

bool is_builtin(const std::string& name);

/// Construct a built-in problem definition. Recognized parameter overrides
/// (all optional): example2 takes epsilon, a, b and the forcing term is
/// fixed; example3 takes epsilon. Unknown parameter names throw.
ProblemDef make_builtin(const std::string& name,
                        const std::map<std::string, double>& params = {});

}  // namespace lieode
