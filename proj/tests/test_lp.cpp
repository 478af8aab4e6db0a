#include <cmath>
#include <functional>
#include <vector>

#include "doctest.h"
#include "ridehail/instance.hpp"
#include "ridehail/lp.hpp"
#include "ridehail/oracles.hpp"
#include "test_util.hpp"

using namespace ridehail;

namespace {

// Independent optimum oracle: enumerate every basic point of
// {Ax <= b, x >= 0} by solving all square subsystems of tight rows, keep the
// feasible ones, return the best objective. Exponential in the variable
// count; only run it on tiny problems.
double enumerate_lp_optimum(const LpProblem& lp) {
  const int n = lp.num_vars;
  const int m = static_cast<int>(lp.constraints.size());
  std::vector<std::vector<double>> rows;  // combined rows: Ax <= b, -x <= 0
  std::vector<double> bounds;
  for (const LpConstraint& c : lp.constraints) {
    std::vector<double> row(n, 0.0);
    for (auto [col, coef] : c.terms) row[col] += coef;
    rows.push_back(std::move(row));
    bounds.push_back(c.bound);
  }
  for (int j = 0; j < n; ++j) {
    std::vector<double> row(n, 0.0);
    row[j] = -1.0;
    rows.push_back(std::move(row));
    bounds.push_back(0.0);
  }
  const int total = m + n;

  double best = 0.0;  // x = 0 is always feasible here
  std::vector<int> pick(n);
  std::vector<std::vector<double>> sys(n, std::vector<double>(n + 1));
  std::vector<int> stack;

  std::function<void(int, int)> choose = [&](int from, int depth) {
    if (depth == n) {
      for (int r = 0; r < n; ++r) {
        for (int c = 0; c < n; ++c) sys[r][c] = rows[stack[r]][c];
        sys[r][n] = bounds[stack[r]];
      }
      // Gaussian elimination with partial pivoting.
      std::vector<double> x(n);
      bool singular = false;
      for (int col = 0; col < n && !singular; ++col) {
        int piv = col;
        for (int r = col + 1; r < n; ++r) {
          if (std::abs(sys[r][col]) > std::abs(sys[piv][col])) piv = r;
        }
        if (std::abs(sys[piv][col]) < 1e-11) {
          singular = true;
          break;
        }
        std::swap(sys[col], sys[piv]);
        for (int r = col + 1; r < n; ++r) {
          const double f = sys[r][col] / sys[col][col];
          for (int c = col; c <= n; ++c) sys[r][c] -= f * sys[col][c];
        }
      }
      if (!singular) {
        for (int r = n - 1; r >= 0; --r) {
          double v = sys[r][n];
          for (int c = r + 1; c < n; ++c) v -= sys[r][c] * x[c];
          x[r] = v / sys[r][r];
        }
        bool feasible = true;
        for (int r = 0; r < total && feasible; ++r) {
          double lhs = 0.0;
          for (int c = 0; c < n; ++c) lhs += rows[r][c] * x[c];
          feasible = lhs <= bounds[r] + 1e-8;
        }
        if (feasible) {
          double obj = 0.0;
          for (int c = 0; c < n; ++c) obj += lp.objective[c] * x[c];
          best = std::max(best, obj);
        }
      }
      return;
    }
    for (int r = from; r < total; ++r) {
      stack.push_back(r);
      choose(r + 1, depth + 1);
      stack.pop_back();
    }
  };
  choose(0, 0);
  return best;
}

}  // namespace

TEST_CASE("single edge instance solves to its arrival mass") {
  Instance inst{1, {{1.0, {1.0}}}};
  const LpProblem lp = build_lp_match(inst);
  CHECK(lp.num_vars == 1);
  CHECK(lp.constraints.size() == 3);  // bin, ball, online
  const LpSolution sol = solve_lp(lp);
  CHECK(sol.status == SolveStatus::Optimal);
  CHECK(sol.objective == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(sol.values[0] == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("one bin, heavy late ball: optimum stays at one") {
  // Hand solution: objective x1 + 2 x2 with x2 <= (1 - x1) / 2 peaks at 1.
  Instance inst{1, {{1.0, {1.0}}, {0.5, {2.0}}}};
  const LpSolution sol = solve_lp(build_lp_match(inst));
  CHECK(sol.objective == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(opt_online(inst).value == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("online constraint is emitted for the first ball as well") {
  Instance inst{1, {{0.25, {1.0}}}};
  const LpProblem lp = build_lp_match(inst);
  bool found = false;
  for (const LpConstraint& c : lp.constraints) {
    if (c.label.rfind("online", 0) == 0) {
      found = true;
      CHECK(c.terms.size() == 1);
      CHECK(c.bound == doctest::Approx(0.25));
    }
  }
  CHECK(found);
  const LpSolution sol = solve_lp(lp);
  CHECK(sol.objective == doctest::Approx(0.25).epsilon(1e-9));
}

TEST_CASE("gap instance: generalized LP reaches objective two") {
  const GeneralInstance gap = gap_instance();
  const LpProblem lp = build_lp_match_gen(gap);
  const LpSolution sol = solve_lp(lp);
  CHECK(sol.objective == doctest::Approx(2.0).epsilon(1e-7));

  // The balanced half-half assignment is feasible for the same system.
  std::vector<std::vector<std::vector<double>>> y = {
      {{0.5, 0.0}}, {{0.0, 0.5}}, {{0.5, 0.5}}};
  CHECK(check_online_feasible(y, gap).feasible());
}

TEST_CASE("single ball single realization solves to its weight") {
  GeneralInstance inst{1, {{{{1.0, {5.0}}}}}};
  const LpSolution sol = solve_lp(build_lp_match_gen(inst));
  CHECK(sol.objective == doctest::Approx(5.0).epsilon(1e-7));
}

TEST_CASE("all-zero weights solve to zero") {
  Instance inst{2, {{0.7, {0.0, 0.0}}, {0.3, {0.0, 0.0}}}};
  const LpSolution sol = solve_lp(build_lp_match(inst));
  CHECK(sol.objective == doctest::Approx(0.0));
}

TEST_CASE("simplex agrees with exhaustive vertex enumeration on tiny LPs") {
  for (int k = 0; k < 12; ++k) {
    const int bins = 1 + k % 3;
    const int balls = 1 + (k / 3) % 2 + (bins == 1 ? 3 : 0);
    const Instance inst =
        testutil::rough_basic_instance(bins, balls, 2200 + k, 2.0);
    const LpProblem lp = build_lp_match(inst);
    if (lp.num_vars > 6) continue;
    const LpSolution sol = solve_lp(lp);
    REQUIRE(sol.status == SolveStatus::Optimal);
    const double brute = enumerate_lp_optimum(lp);
    CHECK(sol.objective == doctest::Approx(brute).epsilon(1e-6));
  }
}

TEST_CASE("larger random instance carries a strong-duality certificate") {
  const Instance inst = testutil::rough_basic_instance(4, 6, 31337, 5.0);
  const LpProblem lp = build_lp_match(inst);
  const LpSolution sol = solve_lp(lp);
  REQUIRE(sol.status == SolveStatus::Optimal);

  std::vector<double> reduced(lp.num_vars, 0.0);
  double dual_obj = 0.0;
  for (std::size_t r = 0; r < lp.constraints.size(); ++r) {
    CHECK(sol.duals[r] >= -1e-7);
    dual_obj += sol.duals[r] * lp.constraints[r].bound;
    for (auto [col, coef] : lp.constraints[r].terms) {
      reduced[col] += coef * sol.duals[r];
    }
  }
  for (int j = 0; j < lp.num_vars; ++j) {
    CHECK(reduced[j] >= lp.objective[j] - 1e-7);
  }
  CHECK(dual_obj == doctest::Approx(sol.objective).epsilon(1e-7));
  // And the optimum upper-bounds the best online play.
  CHECK(sol.objective >= opt_online(inst).value - 1e-6);
}

TEST_CASE("solution satisfies the declared invariants on random instances") {
  for (int k = 0; k < 10; ++k) {
    const Instance inst =
        testutil::rough_basic_instance(2 + k % 4, 3 + k % 6, 5100 + k, 4.0);
    const LpProblem lp = build_lp_match(inst);
    const LpSolution sol = solve_lp(lp);
    REQUIRE(sol.status == SolveStatus::Optimal);
    for (double v : sol.values) CHECK(v >= 0.0);
    CHECK(check_online_feasible(x_matrix(lp, sol.values), inst).feasible());
    double recomputed = 0.0;
    for (int j = 0; j < lp.num_vars; ++j) {
      recomputed += lp.objective[j] * sol.values[j];
    }
    CHECK(recomputed == doctest::Approx(sol.objective).epsilon(1e-7));
  }
}

TEST_CASE("dropping the online constraint can only increase the optimum") {
  for (int k = 0; k < 8; ++k) {
    const Instance inst =
        testutil::rough_basic_instance(2 + k % 3, 4 + k % 5, 6100 + k, 3.0);
    const double with = solve_lp(build_lp_match(inst, true)).objective;
    const double without = solve_lp(build_lp_match(inst, false)).objective;
    CHECK(without >= with - 1e-9);
  }
}

TEST_CASE("scaling weights scales the optimum and keeps the solution optimal") {
  const Instance base = testutil::rough_basic_instance(3, 6, 777, 1.0);
  Instance scaled = base;
  const double lambda = 3.5;
  for (Ball& b : scaled.balls) {
    for (double& w : b.weights) w *= lambda;
  }
  const LpProblem lp1 = build_lp_match(base);
  const LpSolution sol1 = solve_lp(lp1);
  const LpProblem lp2 = build_lp_match(scaled);
  const LpSolution sol2 = solve_lp(lp2);
  CHECK(sol2.objective == doctest::Approx(lambda * sol1.objective).epsilon(1e-8));
  // The unscaled optimizer achieves the scaled optimum, so it stays optimal.
  double cross = 0.0;
  for (int j = 0; j < lp2.num_vars; ++j) {
    cross += lp2.objective[j] * sol1.values[j];
  }
  CHECK(cross == doctest::Approx(sol2.objective).epsilon(1e-8));
}

TEST_CASE("check_online_feasible flags the violated family") {
  Instance inst{1, {{0.5, {1.0}}}};
  std::vector<std::vector<double>> x = {{0.6}};  // exceeds p_1
  const FeasibilityReport report = check_online_feasible(x, inst);
  REQUIRE(!report.feasible());
  CHECK(report.violations.front().constraint.find("online") != std::string::npos);

  std::vector<std::vector<double>> zeros = {{0.0}};
  CHECK(check_online_feasible(zeros, inst).feasible());
}

TEST_CASE("optimal online marginals are feasible for the LP") {
  const Instance inst = testutil::rough_basic_instance(3, 3, 909, 2.0);
  const OptOnlineMarginals marg = opt_online_marginals(inst);
  std::vector<std::vector<double>> x(inst.num_balls(),
                                     std::vector<double>(inst.num_bins, 0.0));
  for (int t = 0; t < inst.num_balls(); ++t) {
    for (int i = 0; i < inst.num_bins; ++i) x[t][i] = marg.marginals[t][0][i];
  }
  CHECK(check_online_feasible(x, inst).feasible());
}

TEST_CASE("generic solver handles negative bounds via phase one") {
  // max x subject to -x <= -0.5, x <= 1: feasible band [0.5, 1].
  LpProblem lp;
  lp.num_vars = 1;
  lp.objective = {1.0};
  lp.variables = {{0, 0, -1}};
  lp.constraints.push_back({{{0, -1.0}}, -0.5, "lower"});
  lp.constraints.push_back({{{0, 1.0}}, 1.0, "upper"});
  const LpSolution sol = solve_lp(lp);
  REQUIRE(sol.status == SolveStatus::Optimal);
  CHECK(sol.objective == doctest::Approx(1.0).epsilon(1e-9));

  LpProblem bad = lp;
  bad.constraints[0].bound = -2.0;  // demands x >= 2 while x <= 1
  CHECK(solve_lp(bad).status == SolveStatus::Infeasible);
}

TEST_CASE("LP text dump names every variable and constraint") {
  const std::string text = write_lp_format(build_lp_match(Instance{1, {{0.5, {1.0}}}}));
  CHECK(text.find("Maximize") != std::string::npos);
  CHECK(text.find("x_1_1") != std::string::npos);
  CHECK(text.find("Subject To") != std::string::npos);
  CHECK(text.find("End") != std::string::npos);
}
