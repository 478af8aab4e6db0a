#include "ridehail/ssat.hpp"

#include <cmath>
#include <sstream>

namespace ridehail {

std::vector<std::string> validate(const SsatInstance& phi) {
  std::vector<std::string> out;
  if (phi.num_vars < 1) out.push_back("num_vars must be at least 1");
  if (phi.num_vars % 2 != 0) out.push_back("num_vars must be even");
  for (int c = 0; c < phi.num_clauses(); ++c) {
    const auto& lits = phi.clauses[c].literals;
    std::string where = "clauses[" + std::to_string(c + 1) + "]";
    if (lits.empty() || lits.size() > 3) {
      out.push_back(where + ": clause size must be 1..3, got " +
                    std::to_string(lits.size()));
    }
    for (const SsatLiteral& lit : lits) {
      if (lit.var < 1 || lit.var > phi.num_vars) {
        out.push_back(where + ": variable " + std::to_string(lit.var) +
                      " out of range [1, " + std::to_string(phi.num_vars) + "]");
      }
    }
  }
  return out;
}

bool random_vars_nonnegated(const SsatInstance& phi) {
  for (const SsatClause& clause : phi.clauses) {
    for (const SsatLiteral& lit : clause.literals) {
      if (lit.negated && lit.var % 2 == 0) return false;
    }
  }
  return true;
}

namespace {

int count_satisfied(const SsatInstance& phi, std::uint32_t assignment) {
  int count = 0;
  for (const SsatClause& clause : phi.clauses) {
    for (const SsatLiteral& lit : clause.literals) {
      const bool value = (assignment >> (lit.var - 1)) & 1;
      if (value != lit.negated) {
        ++count;
        break;
      }
    }
  }
  return count;
}

}  // namespace

double ssat_opt_online(const SsatInstance& phi, const OracleCaps& caps) {
  if (auto report = validate(phi); !report.empty()) {
    throw std::invalid_argument("invalid SSAT instance: " + report.front());
  }
  const int n = phi.num_vars;
  if (n > caps.max_ssat_vars) {
    throw CapExceeded("SSAT instance has " + std::to_string(n) +
                      " variables, cap is " + std::to_string(caps.max_ssat_vars));
  }
  // Leaf layer, then collapse one variable per round from the back.
  std::vector<double> layer(std::size_t{1} << n);
  for (std::uint32_t a = 0; a < layer.size(); ++a) {
    layer[a] = count_satisfied(phi, a);
  }
  for (int v = n; v >= 1; --v) {
    const std::size_t half = std::size_t{1} << (v - 1);
    for (std::size_t a = 0; a < half; ++a) {
      const double lo = layer[a];             // variable v set False
      const double hi = layer[a | half];      // variable v set True
      layer[a] = (v % 2 == 1) ? std::max(lo, hi) : 0.5 * (lo + hi);
    }
    layer.resize(half);
  }
  return layer[0];
}

ReductionParams reduction_params(const SsatInstance& phi) {
  ReductionParams params;
  params.num_clauses = phi.num_clauses();
  std::vector<int> occurrences(phi.num_vars + 1, 0);
  for (const SsatClause& clause : phi.clauses) {
    for (const SsatLiteral& lit : clause.literals) ++occurrences[lit.var];
  }
  params.max_occurrence = 1;
  for (int v = 1; v <= phi.num_vars; ++v) {
    params.max_occurrence = std::max(params.max_occurrence, occurrences[v]);
  }
  const double m = params.num_clauses;
  const double k = params.max_occurrence;
  params.clause_arrival_prob = std::pow(m, -4.0);
  params.clause_ball_weight = std::pow(m, 4.0) / (2.0 * k);
  params.gamma =
      std::pow(1.0 - params.clause_arrival_prob, m - 1.0) / (2.0 * k);
  return params;
}

int literal_bin(const SsatLiteral& lit) {
  return 2 * (lit.var - 1) + (lit.negated ? 1 : 0);
}

namespace {

Instance reduce(const SsatInstance& phi, bool unweighted) {
  if (auto report = validate(phi); !report.empty()) {
    throw std::invalid_argument("invalid SSAT instance: " + report.front());
  }
  if (phi.num_clauses() == 0) {
    throw std::invalid_argument("reduction needs at least one clause");
  }
  const int n = phi.num_vars;
  const ReductionParams params = reduction_params(phi);

  Instance out;
  out.num_bins = 2 * n;
  // Literal balls, one per variable in index order.
  for (int v = 1; v <= n; ++v) {
    Ball ball;
    ball.weights.assign(out.num_bins, 0.0);
    if (v % 2 == 1) {
      ball.arrival_prob = 1.0;
      ball.weights[literal_bin({v, false})] = 1.0;
      ball.weights[literal_bin({v, true})] = 1.0;
    } else {
      ball.arrival_prob = 0.5;
      ball.weights[literal_bin({v, false})] = 1.0;
    }
    out.balls.push_back(std::move(ball));
  }
  // Clause balls.
  const double w = unweighted ? 1.0 : params.clause_ball_weight;
  for (const SsatClause& clause : phi.clauses) {
    Ball ball;
    ball.arrival_prob = params.clause_arrival_prob;
    ball.weights.assign(out.num_bins, 0.0);
    for (const SsatLiteral& lit : clause.literals) {
      ball.weights[literal_bin(lit)] = w;
    }
    out.balls.push_back(std::move(ball));
  }
  return out;
}

}  // namespace

Instance reduce_to_ridehail(const SsatInstance& phi) { return reduce(phi, false); }

Instance reduce_to_ridehail_unweighted(const SsatInstance& phi) {
  return reduce(phi, true);
}

SsatInstance parse_dimacs(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  SsatInstance phi;
  int declared_clauses = -1;
  int line_no = 0;
  std::vector<int> pending;

  auto fail = [&](const std::string& msg) {
    throw ParseError("line " + std::to_string(line_no) + ": " + msg);
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == 'c') continue;
    if (line[0] == 'p') {
      std::istringstream header(line);
      std::string p, fmt;
      if (!(header >> p >> fmt >> phi.num_vars >> declared_clauses) ||
          fmt != "cnf") {
        fail("malformed problem line, expected \"p cnf <vars> <clauses>\"");
      }
      continue;
    }
    if (declared_clauses < 0) fail("clause before problem line");
    std::istringstream body(line);
    int lit;
    while (body >> lit) {
      if (lit == 0) {
        if (pending.empty()) fail("empty clause");
        if (pending.size() > 3) fail("clause has more than 3 literals");
        SsatClause clause;
        for (int l : pending) {
          clause.literals.push_back({std::abs(l), l < 0});
        }
        phi.clauses.push_back(std::move(clause));
        pending.clear();
      } else {
        if (std::abs(lit) > phi.num_vars) {
          fail("literal " + std::to_string(lit) + " out of range");
        }
        pending.push_back(lit);
      }
    }
    if (body.fail() && !body.eof()) fail("unreadable token");
  }
  if (declared_clauses < 0) {
    ++line_no;
    fail("missing problem line");
  }
  if (!pending.empty()) fail("last clause not terminated by 0");
  if (phi.num_clauses() != declared_clauses) {
    fail("declared " + std::to_string(declared_clauses) + " clauses, found " +
         std::to_string(phi.num_clauses()));
  }
  return phi;
}

std::string write_dimacs(const SsatInstance& phi) {
  std::ostringstream os;
  os << "p cnf " << phi.num_vars << " " << phi.num_clauses() << "\n";
  for (const SsatClause& clause : phi.clauses) {
    for (const SsatLiteral& lit : clause.literals) {
      os << (lit.negated ? -lit.var : lit.var) << " ";
    }
    os << "0\n";
  }
  return os.str();
}

}  // namespace ridehail
