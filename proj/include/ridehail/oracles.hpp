#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "ridehail/instance.hpp"
#include "ridehail/policy.hpp"

namespace ridehail {

struct OracleCaps {
  int max_bins = 20;                        // state space is 2^bins
  std::uint64_t max_offline_profiles = 1u << 20;
  int max_ssat_vars = 20;
};

struct CapExceeded : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Probability mass over occupied-bin subsets, one dense layer per time step.
// Layer t is the distribution seen by ball t on arrival; the final layer is
// the end-of-run distribution. Dummy slots never block anything and are not
// part of the mask.
struct StateDistribution {
  int num_bins = 0;
  std::vector<std::vector<double>> mass;  // [time][mask]
};

// Exact law of the two-pick rounding policy, computed by forward DP over the
// occupied-set distribution. All probabilities are exact up to floating
// rounding; nothing here is sampled.
struct OracleResult {
  double value = 0.0;
  // Pr[(i,t) matched on first / second pick, realization j]; basic model
  // uses j = 0.
  std::vector<std::vector<std::vector<double>>> first_pick;   // [t][j][i]
  std::vector<std::vector<std::vector<double>>> second_pick;  // [t][j][i]
  std::vector<std::vector<double>> dummy_first_pick;          // [t][j]
  std::vector<std::vector<double>> vacancy;                   // [t][i]
  // Joint vacancy Pr[bin i and bin j both free at time t], i < j, indexed by
  // pair_index(i, j) below.
  std::vector<std::vector<double>> vacancy_pair;              // [t][pair]
  StateDistribution states;  // populated when keep_states is set

  double match_prob(int t, int j, int i) const {
    return first_pick[t][j][i] + second_pick[t][j][i];
  }
  static int pair_index(int i, int j, int num_bins);
  double covariance(int t, int i, int j, int num_bins) const;
};

OracleResult exact_policy_marginals(const PreparedPolicy& prepared,
                                    const Instance& instance,
                                    const OracleCaps& caps = {},
                                    bool keep_states = false);
OracleResult exact_policy_marginals(const PreparedGeneralPolicy& prepared,
                                    const GeneralInstance& instance,
                                    const OracleCaps& caps = {},
                                    bool keep_states = false);

// Optimal online play by backward induction over free-bin subsets:
//   V(t, S) = sum_j p[t][j] * max(V(t+1, S), max_{i in S} w[i][t][j] +
//             V(t+1, S minus i)) + (1 - sum_j p[t][j]) * V(t+1, S).
// decisions[t][mask][j] holds the matched bin, or -1 for "leave unmatched".
// A ball is matched only when doing so is strictly better than skipping;
// ties between bins go to the lowest bin index.
struct OptOnlineResult {
  double value = 0.0;
  std::vector<std::vector<std::vector<std::int8_t>>> decisions;
};

OptOnlineResult opt_online(const Instance& instance, const OracleCaps& caps = {});
OptOnlineResult opt_online(const GeneralInstance& instance,
                           const OracleCaps& caps = {});

// Per-edge match probabilities of the optimal online policy, obtained by a
// forward pass of the decision table. Also exposes the visited free-set
// distribution, which is what "reachable state" means downstream.
struct OptOnlineMarginals {
  double value = 0.0;
  std::vector<std::vector<std::vector<double>>> marginals;  // [t][j][i]
  std::vector<std::vector<double>> state_mass;              // [t][occupied mask]
};

OptOnlineMarginals opt_online_marginals(const Instance& instance,
                                        const OracleCaps& caps = {});
OptOnlineMarginals opt_online_marginals(const GeneralInstance& instance,
                                        const OracleCaps& caps = {});

// Prophet benchmark: expected max-weight matching over all realization
// profiles. Exact when the profile count fits the cap, otherwise a seeded
// Monte-Carlo estimate with its standard error.
struct OptOfflineResult {
  double value = 0.0;
  bool exact = true;
  double std_error = 0.0;
  std::uint64_t profiles = 0;  // enumerated profiles, or samples drawn
};

OptOfflineResult opt_offline(const Instance& instance, const OracleCaps& caps = {},
                             std::uint64_t mc_samples = 200000,
                             std::uint64_t mc_seed = 1);
OptOfflineResult opt_offline(const GeneralInstance& instance,
                             const OracleCaps& caps = {},
                             std::uint64_t mc_samples = 200000,
                             std::uint64_t mc_seed = 1);

// Exact max-weight bipartite matching (potential-based assignment method).
// weights[a][b] is the weight of pairing row a with column b; rows and
// columns may go unmatched at zero value.
double max_weight_matching(const std::vector<std::vector<double>>& weights);

}  // namespace ridehail
