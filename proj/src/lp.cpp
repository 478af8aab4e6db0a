#include "ridehail/lp.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ridehail {

namespace {

std::string edge_label(int bin, int ball, int realization) {
  std::ostringstream os;
  os << "i=" << bin + 1 << ",t=" << ball + 1;
  if (realization >= 0) os << ",j=" << realization + 1;
  return os.str();
}

}  // namespace

LpProblem build_lp_match(const Instance& instance, bool with_online_constraint) {
  const int m = instance.num_bins;
  const int n = instance.num_balls();
  LpProblem lp;
  lp.num_vars = m * n;
  lp.objective.resize(lp.num_vars);
  lp.variables.resize(lp.num_vars);
  for (int t = 0; t < n; ++t) {
    for (int i = 0; i < m; ++i) {
      const int v = t * m + i;
      lp.objective[v] = instance.balls[t].weights[i];
      lp.variables[v] = {i, t, -1};
    }
  }

  for (int i = 0; i < m; ++i) {
    LpConstraint row;
    row.bound = 1.0;
    row.label = "bin_capacity(i=" + std::to_string(i + 1) + ")";
    for (int t = 0; t < n; ++t) row.terms.emplace_back(t * m + i, 1.0);
    lp.constraints.push_back(std::move(row));
  }
  for (int t = 0; t < n; ++t) {
    LpConstraint row;
    row.bound = instance.balls[t].arrival_prob;
    row.label = "ball_mass(t=" + std::to_string(t + 1) + ")";
    for (int i = 0; i < m; ++i) row.terms.emplace_back(t * m + i, 1.0);
    lp.constraints.push_back(std::move(row));
  }
  if (with_online_constraint) {
    // x[i][t] + p_t * sum_{t'<t} x[i][t'] <= p_t, emitted for every pair,
    // including t=1 where it degenerates to x[i][1] <= p_1.
    for (int i = 0; i < m; ++i) {
      for (int t = 0; t < n; ++t) {
        const double p = instance.balls[t].arrival_prob;
        LpConstraint row;
        row.bound = p;
        row.label = "online(" + edge_label(i, t, -1) + ")";
        row.terms.emplace_back(t * m + i, 1.0);
        for (int tp = 0; tp < t; ++tp) row.terms.emplace_back(tp * m + i, p);
        lp.constraints.push_back(std::move(row));
      }
    }
  }
  return lp;
}

LpProblem build_lp_match_gen(const GeneralInstance& instance,
                             bool with_online_constraint) {
  const int m = instance.num_bins;
  const int n = instance.num_balls();
  LpProblem lp;
  std::vector<int> offset(n + 1, 0);
  for (int t = 0; t < n; ++t) {
    offset[t + 1] =
        offset[t] + m * static_cast<int>(instance.balls[t].realizations.size());
  }
  lp.num_vars = offset[n];
  lp.objective.resize(lp.num_vars);
  lp.variables.resize(lp.num_vars);
  auto var = [&](int i, int t, int j) { return offset[t] + j * m + i; };
  for (int t = 0; t < n; ++t) {
    const auto& reals = instance.balls[t].realizations;
    for (int j = 0; j < static_cast<int>(reals.size()); ++j) {
      for (int i = 0; i < m; ++i) {
        lp.objective[var(i, t, j)] = reals[j].weights[i];
        lp.variables[var(i, t, j)] = {i, t, j};
      }
    }
  }

  for (int i = 0; i < m; ++i) {
    LpConstraint row;
    row.bound = 1.0;
    row.label = "bin_capacity(i=" + std::to_string(i + 1) + ")";
    for (int t = 0; t < n; ++t) {
      for (int j = 0; j < static_cast<int>(instance.balls[t].realizations.size());
           ++j) {
        row.terms.emplace_back(var(i, t, j), 1.0);
      }
    }
    lp.constraints.push_back(std::move(row));
  }
  for (int t = 0; t < n; ++t) {
    const auto& reals = instance.balls[t].realizations;
    for (int j = 0; j < static_cast<int>(reals.size()); ++j) {
      LpConstraint row;
      row.bound = reals[j].prob;
      row.label = "ball_mass(t=" + std::to_string(t + 1) +
                  ",j=" + std::to_string(j + 1) + ")";
      for (int i = 0; i < m; ++i) row.terms.emplace_back(var(i, t, j), 1.0);
      lp.constraints.push_back(std::move(row));
    }
  }
  if (with_online_constraint) {
    for (int i = 0; i < m; ++i) {
      for (int t = 0; t < n; ++t) {
        const auto& reals = instance.balls[t].realizations;
        for (int j = 0; j < static_cast<int>(reals.size()); ++j) {
          const double p = reals[j].prob;
          LpConstraint row;
          row.bound = p;
          row.label = "online(" + edge_label(i, t, j) + ")";
          row.terms.emplace_back(var(i, t, j), 1.0);
          for (int tp = 0; tp < t; ++tp) {
            for (int jp = 0;
                 jp < static_cast<int>(instance.balls[tp].realizations.size());
                 ++jp) {
              row.terms.emplace_back(var(i, tp, jp), p);
            }
          }
          lp.constraints.push_back(std::move(row));
        }
      }
    }
  }
  return lp;
}

// ---------------------------------------------------------------------------
// Two-phase dense tableau simplex, Bland's rule throughout.
//
// Column layout: [structural 0..N) | slack N..N+M) | artificial ... | rhs].
// Rows with a negative bound are negated up front so every basic solution we
// visit has a non-negative rhs; such rows get an artificial variable and a
// phase-1 objective drives the artificials to zero. Bland's rule (smallest
// eligible entering index, leaving ties broken by smallest basic variable)
// makes the method finite even under degeneracy, at some cost in pivots --
// acceptable at the problem sizes this module handles.
// ---------------------------------------------------------------------------

LpSolution solve_lp(const LpProblem& problem, const SimplexOptions& options) {
  const int n_struct = problem.num_vars;
  const int n_rows = static_cast<int>(problem.constraints.size());
  const double tol = options.tol;

  std::vector<bool> negated(n_rows, false);
  std::vector<int> artificial_of_row;  // rows that received an artificial
  for (int r = 0; r < n_rows; ++r) {
    if (problem.constraints[r].bound < 0.0) artificial_of_row.push_back(r);
  }
  const int n_art = static_cast<int>(artificial_of_row.size());
  const int n_cols = n_struct + n_rows + n_art;  // excluding rhs
  const int rhs = n_cols;

  std::vector<std::vector<double>> tab(n_rows,
                                       std::vector<double>(n_cols + 1, 0.0));
  std::vector<int> basis(n_rows);
  for (int r = 0; r < n_rows; ++r) {
    const LpConstraint& row = problem.constraints[r];
    for (const auto& [col, coef] : row.terms) tab[r][col] += coef;
    tab[r][n_struct + r] = 1.0;
    tab[r][rhs] = row.bound;
    basis[r] = n_struct + r;
    if (row.bound < 0.0) {
      negated[r] = true;
      for (double& v : tab[r]) v = -v;
    }
  }
  for (int a = 0; a < n_art; ++a) {
    const int r = artificial_of_row[a];
    tab[r][n_struct + n_rows + a] = 1.0;
    basis[r] = n_struct + n_rows + a;
  }

  std::vector<double> obj(n_cols + 1, 0.0);  // phase-2 row: reduced costs
  for (int j = 0; j < n_struct; ++j) obj[j] = -problem.objective[j];

  long iterations = 0;
  const long max_iter = options.max_iterations > 0
                            ? options.max_iterations
                            : 200 + 50L * (n_struct + n_rows);

  auto pivot = [&](int r, int j, std::vector<double>* extra_obj) {
    const double piv = tab[r][j];
    for (double& v : tab[r]) v /= piv;
    for (int rr = 0; rr < n_rows; ++rr) {
      if (rr == r || std::abs(tab[rr][j]) < 1e-14) continue;
      const double f = tab[rr][j];
      for (int k = 0; k <= n_cols; ++k) tab[rr][k] -= f * tab[r][k];
    }
    for (std::vector<double>* row : {&obj, extra_obj}) {
      if (!row || std::abs((*row)[j]) < 1e-14) continue;
      const double f = (*row)[j];
      for (int k = 0; k <= n_cols; ++k) (*row)[k] -= f * tab[r][k];
    }
    basis[r] = j;
  };

  // Returns false on hitting the iteration cap, sets *unbounded on a ray.
  auto run = [&](std::vector<double>& objective_row, int allowed_cols,
                 std::vector<double>* other_row, bool* unbounded) -> bool {
    *unbounded = false;
    while (true) {
      int enter = -1;
      for (int j = 0; j < allowed_cols; ++j) {
        if (objective_row[j] < -tol) {
          enter = j;
          break;  // Bland: smallest improving index
        }
      }
      if (enter < 0) return true;
      int leave = -1;
      double best_ratio = 0.0;
      for (int r = 0; r < n_rows; ++r) {
        if (tab[r][enter] <= tol) continue;
        const double ratio = tab[r][rhs] / tab[r][enter];
        if (leave < 0 || ratio < best_ratio - 1e-15 ||
            (std::abs(ratio - best_ratio) <= 1e-15 && basis[r] < basis[leave])) {
          leave = r;
          best_ratio = ratio;
        }
      }
      if (leave < 0) {
        *unbounded = true;
        return true;
      }
      if (&objective_row == &obj) {
        pivot(leave, enter, other_row);
      } else {
        pivot(leave, enter, &objective_row);
      }
      if (++iterations > max_iter) return false;
    }
  };

  LpSolution result;
  bool hit_cap = false;
  bool unbounded = false;

  if (n_art > 0) {
    std::vector<double> phase1(n_cols + 1, 0.0);
    for (int a = 0; a < n_art; ++a) phase1[n_struct + n_rows + a] = 1.0;
    for (const int r : artificial_of_row) {
      for (int k = 0; k <= n_cols; ++k) phase1[k] -= tab[r][k];
    }
    if (!run(phase1, n_cols, &obj, &unbounded)) hit_cap = true;
    if (!hit_cap && phase1[rhs] < -1e-7) {
      result.status = SolveStatus::Infeasible;
      result.iterations = iterations;
      return result;
    }
    // Drive any leftover artificial out of the basis; rows where that is
    // impossible are redundant and stay pinned at zero.
    for (int r = 0; r < n_rows && !hit_cap; ++r) {
      if (basis[r] < n_struct + n_rows) continue;
      for (int j = 0; j < n_struct + n_rows; ++j) {
        if (std::abs(tab[r][j]) > tol) {
          pivot(r, j, &phase1);
          break;
        }
      }
    }
  }

  if (!hit_cap) {
    if (!run(obj, n_struct + n_rows, nullptr, &unbounded)) hit_cap = true;
  }

  result.iterations = iterations;
  result.values.assign(n_struct, 0.0);
  for (int r = 0; r < n_rows; ++r) {
    if (basis[r] < n_struct) result.values[basis[r]] = tab[r][rhs];
  }
  for (double& v : result.values) {
    if (v < 0.0) v = 0.0;  // rounding noise only; simplex keeps x >= 0
  }
  result.objective = 0.0;
  for (int j = 0; j < n_struct; ++j) {
    result.objective += problem.objective[j] * result.values[j];
  }
  result.duals.assign(n_rows, 0.0);
  for (int r = 0; r < n_rows; ++r) {
    const double entry = obj[n_struct + r];
    result.duals[r] = negated[r] ? -entry : entry;
  }
  if (unbounded) {
    result.status = SolveStatus::Unbounded;
  } else if (hit_cap) {
    result.status = SolveStatus::IterationLimit;
  } else {
    result.status = SolveStatus::Optimal;
  }
  return result;
}

std::vector<std::vector<double>> x_matrix(const LpProblem& problem,
                                          const std::vector<double>& values) {
  int n = 0, m = 0;
  for (const LpVariable& v : problem.variables) {
    n = std::max(n, v.ball + 1);
    m = std::max(m, v.bin + 1);
  }
  std::vector<std::vector<double>> x(n, std::vector<double>(m, 0.0));
  for (int col = 0; col < problem.num_vars; ++col) {
    const LpVariable& v = problem.variables[col];
    x[v.ball][v.bin] += values[col];
  }
  return x;
}

std::vector<std::vector<std::vector<double>>> y_tensor(
    const LpProblem& problem, const std::vector<double>& values) {
  int n = 0, m = 0;
  for (const LpVariable& v : problem.variables) {
    n = std::max(n, v.ball + 1);
    m = std::max(m, v.bin + 1);
  }
  std::vector<int> reals(n, 0);
  for (const LpVariable& v : problem.variables) {
    reals[v.ball] = std::max(reals[v.ball], v.realization + 1);
  }
  std::vector<std::vector<std::vector<double>>> y(n);
  for (int t = 0; t < n; ++t) {
    y[t].assign(std::max(reals[t], 1), std::vector<double>(m, 0.0));
  }
  for (int col = 0; col < problem.num_vars; ++col) {
    const LpVariable& v = problem.variables[col];
    y[v.ball][std::max(v.realization, 0)][v.bin] = values[col];
  }
  return y;
}

namespace {

void check_rows(const std::vector<std::vector<std::vector<double>>>& y,
                const std::vector<std::vector<double>>& probs, int num_bins,
                double tol, FeasibilityReport& report) {
  const int n = static_cast<int>(y.size());
  auto add = [&report](std::string label, double excess) {
    report.violations.push_back({std::move(label), excess});
  };

  std::vector<double> bin_total(num_bins, 0.0);
  for (int t = 0; t < n; ++t) {
    for (std::size_t j = 0; j < y[t].size(); ++j) {
      double ball_total = 0.0;
      for (int i = 0; i < num_bins; ++i) {
        const double v = y[t][j][i];
        if (v < -tol) {
          add("nonneg(" + edge_label(i, t, probs[t].size() > 1 ? int(j) : -1) + ")",
              -v);
        }
        // Online constraint, with the prefix evaluated before this ball.
        const double cap = probs[t][j] * (1.0 - bin_total[i]);
        if (v > cap + tol) {
          add("online(" + edge_label(i, t, probs[t].size() > 1 ? int(j) : -1) + ")",
              v - cap);
        }
        ball_total += v;
      }
      if (ball_total > probs[t][j] + tol) {
        add("ball_mass(t=" + std::to_string(t + 1) + ")",
            ball_total - probs[t][j]);
      }
    }
    for (int i = 0; i < num_bins; ++i) {
      for (std::size_t j = 0; j < y[t].size(); ++j) bin_total[i] += y[t][j][i];
    }
  }
  for (int i = 0; i < num_bins; ++i) {
    if (bin_total[i] > 1.0 + tol) {
      add("bin_capacity(i=" + std::to_string(i + 1) + ")", bin_total[i] - 1.0);
    }
  }
}

}  // namespace

FeasibilityReport check_online_feasible(const std::vector<std::vector<double>>& x,
                                        const Instance& instance, double tol) {
  std::vector<std::vector<std::vector<double>>> y(x.size());
  std::vector<std::vector<double>> probs(x.size());
  for (std::size_t t = 0; t < x.size(); ++t) {
    y[t] = {x[t]};
    probs[t] = {instance.balls[t].arrival_prob};
  }
  FeasibilityReport report;
  check_rows(y, probs, instance.num_bins, tol, report);
  return report;
}

FeasibilityReport check_online_feasible(
    const std::vector<std::vector<std::vector<double>>>& y,
    const GeneralInstance& instance, double tol) {
  std::vector<std::vector<double>> probs(instance.num_balls());
  for (int t = 0; t < instance.num_balls(); ++t) {
    for (const Realization& r : instance.balls[t].realizations) {
      probs[t].push_back(r.prob);
    }
    if (probs[t].empty()) probs[t].push_back(0.0);
  }
  FeasibilityReport report;
  check_rows(y, probs, instance.num_bins, tol, report);
  return report;
}

std::string write_lp_format(const LpProblem& problem) {
  std::ostringstream os;
  os.precision(17);
  auto var_name = [&](int col) {
    const LpVariable& v = problem.variables[col];
    std::string name = (v.realization >= 0 ? "y" : "x");
    name += "_" + std::to_string(v.bin + 1) + "_" + std::to_string(v.ball + 1);
    if (v.realization >= 0) name += "_" + std::to_string(v.realization + 1);
    return name;
  };
  os << "Maximize\n obj:";
  bool first = true;
  for (int j = 0; j < problem.num_vars; ++j) {
    if (problem.objective[j] == 0.0) continue;
    os << (first ? " " : " + ") << problem.objective[j] << " " << var_name(j);
    first = false;
  }
  if (first) os << " 0 " << var_name(0);
  os << "\nSubject To\n";
  for (std::size_t r = 0; r < problem.constraints.size(); ++r) {
    const LpConstraint& row = problem.constraints[r];
    os << " c" << r + 1 << ":";
    for (std::size_t k = 0; k < row.terms.size(); ++k) {
      os << (k == 0 ? " " : " + ") << row.terms[k].second << " "
         << var_name(row.terms[k].first);
    }
    os << " <= " << row.bound << "\n";
  }
  os << "Bounds\n";
  for (int j = 0; j < problem.num_vars; ++j) os << " 0 <= " << var_name(j) << "\n";
  os << "End\n";
  return os.str();
}

}  // namespace ridehail
