#pragma once

#include <string>

#include "lqmp/model.hpp"

namespace lqmp {

/// Reads a problem document: keys A, B, C, D, e, Q, R, N, x0, xT, T with
/// matrices as arrays of rows. C, D, e and N may be omitted (no constraints,
/// no cross term). Optional: "coordinates" ("original" or "brunovsky"),
/// "state_names", "control_names", "constraint_names". Unknown keys are
/// rejected. Throws InvalidInput naming the line or the field at fault.
LqProblem parse_problem(const std::string& text);
LqProblem load_problem(const std::string& path);

std::string problem_to_json(const LqProblem& problem);
void save_problem(const LqProblem& problem, const std::string& path);

}  // namespace lqmp
