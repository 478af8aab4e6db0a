#pragma once

#include <string>
#include <vector>

#include "ridehail/instance.hpp"
#include "ridehail/oracles.hpp"

namespace ridehail {

// Stochastic SAT: variables are set in index order, odd indices (1-based)
// chosen by the player, even indices set uniformly at random by nature. The
// objective is the expected number of satisfied clauses.
struct SsatLiteral {
  int var = 0;  // 1-based
  bool negated = false;

  bool operator==(const SsatLiteral&) const = default;
};

struct SsatClause {
  std::vector<SsatLiteral> literals;

  bool operator==(const SsatClause&) const = default;
};

struct SsatInstance {
  int num_vars = 0;  // must be even
  std::vector<SsatClause> clauses;

  int num_clauses() const { return static_cast<int>(clauses.size()); }

  bool operator==(const SsatInstance&) const = default;
};

std::vector<std::string> validate(const SsatInstance& phi);

// Whether no random (even-indexed) variable appears negated; the gadget
// construction below is only faithful on such formulas.
bool random_vars_nonnegated(const SsatInstance& phi);

// Exact value of optimal play: max over the player's choice at odd depths,
// average over nature's coin at even depths, satisfied-clause count at the
// leaves. Exponential in num_vars, guarded by caps.max_ssat_vars.
double ssat_opt_online(const SsatInstance& phi, const OracleCaps& caps = {});

struct ReductionParams {
  int max_occurrence = 0;  // k: most clauses any single variable appears in
  int num_clauses = 0;
  double clause_ball_weight = 0.0;   // m^4 / (2k)
  double clause_arrival_prob = 0.0;  // m^-4
  double gamma = 0.0;                // (1 - m^-4)^(m-1) / (2k)
};

ReductionParams reduction_params(const SsatInstance& phi);

// Matching-instance gadget encoding phi:
//   - 2n bins, one per literal, ordered x1, !x1, x2, !x2, ...;
//   - n literal balls: odd t arrives surely with weight 1 on bins x_t and
//     !x_t, even t arrives with probability 1/2 with weight 1 on bin x_t;
//   - m clause balls of weight m^4/(2k) arriving with probability m^-4,
//     adjacent to the bins of their clause's literals.
// Optimal online play on the gadget is worth 0.75 n + gamma * OPT(phi) +
// delta for some delta in [0, 2/m]. Negative bins of even variables are kept
// (edge-free unless a clause names them) to preserve the 2n-bin shape.
Instance reduce_to_ridehail(const SsatInstance& phi);

// Same topology with every ball of weight 1; the clause-ball gain is then
// m^-4 * ((1 - m^-4)^(m-1) * OPT(phi) + delta') with delta' in [0, 2/m].
Instance reduce_to_ridehail_unweighted(const SsatInstance& phi);

// Bin index of a literal in the reduced instance.
int literal_bin(const SsatLiteral& lit);

// CNF interchange text. Variable parity decides the player/nature split.
SsatInstance parse_dimacs(const std::string& text);
std::string write_dimacs(const SsatInstance& phi);

}  // namespace ridehail
