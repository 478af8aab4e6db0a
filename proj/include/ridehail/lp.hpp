#pragma once

#include <string>
#include <utility>
#include <vector>

#include "ridehail/instance.hpp"

namespace ridehail {

// Variable metadata: which edge a column stands for. realization is -1 for
// the basic model. Columns are laid out ball-major, then realization, then
// bin, so var(i,t) = t*m + i in the basic model.
struct LpVariable {
  int bin = 0;
  int ball = 0;
  int realization = -1;
};

// One row "sum of terms <= bound". Terms are (column, coefficient).
struct LpConstraint {
  std::vector<std::pair<int, double>> terms;
  double bound = 0.0;
  std::string label;
};

// A maximization LP over non-negative variables.
struct LpProblem {
  int num_vars = 0;
  std::vector<double> objective;
  std::vector<LpConstraint> constraints;
  std::vector<LpVariable> variables;
};

// The relaxation for the basic model:
//   max sum w[i][t] * x[i][t]
//   (1) per bin i:       sum_t x[i][t] <= 1
//   (2) per ball t:      sum_i x[i][t] <= p_t
//   (3) per edge (i,t):  x[i][t] <= p_t * (1 - sum_{t'<t} x[i][t'])
//   (4) x >= 0
// Constraint (3) separates online from offline play: an online algorithm
// cannot match (i,t) more often than "t arrives" times "i still free", and
// those events are independent. Passing with_online_constraint=false drops
// family (3), leaving the plain fractional-matching relaxation.
LpProblem build_lp_match(const Instance& instance,
                         bool with_online_constraint = true);

// Realization-indexed analogue for the general model, with variables
// y[i][t][j] and prefix sums running over all realizations of earlier balls.
LpProblem build_lp_match_gen(const GeneralInstance& instance,
                             bool with_online_constraint = true);

enum class SolveStatus { Optimal, IterationLimit, Infeasible, Unbounded };

struct LpSolution {
  SolveStatus status = SolveStatus::Optimal;
  double objective = 0.0;
  std::vector<double> values;  // aligned with LpProblem columns
  std::vector<double> duals;   // one multiplier per constraint row
  long iterations = 0;
};

struct SimplexOptions {
  double tol = 1e-9;
  long max_iterations = 0;  // 0 = automatic, scales with problem size
};

// Dense two-phase tableau simplex with Bland's pivot rule. Deterministic;
// on hitting the iteration cap the best feasible point found is returned
// with status IterationLimit.
LpSolution solve_lp(const LpProblem& problem, const SimplexOptions& options = {});

// Reshape a solution vector into x[t][i] (basic) or y[t][j][i] (general).
std::vector<std::vector<double>> x_matrix(const LpProblem& problem,
                                          const std::vector<double>& values);
std::vector<std::vector<std::vector<double>>> y_tensor(
    const LpProblem& problem, const std::vector<double>& values);

struct FeasibilityViolation {
  std::string constraint;
  double excess = 0.0;  // amount by which the bound is exceeded
};

struct FeasibilityReport {
  std::vector<FeasibilityViolation> violations;
  bool feasible() const { return violations.empty(); }
};

// Checks a candidate edge-probability table against the full constraint
// system at the given tolerance. Violations are data, not errors.
FeasibilityReport check_online_feasible(
    const std::vector<std::vector<double>>& x, const Instance& instance,
    double tol = 1e-7);
FeasibilityReport check_online_feasible(
    const std::vector<std::vector<std::vector<double>>>& y,
    const GeneralInstance& instance, double tol = 1e-7);

// Text dump in CPLEX LP format, for cross-checking against external solvers.
std::string write_lp_format(const LpProblem& problem);

}  // namespace ridehail
