#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ridehail/instance.hpp"
#include "ridehail/policy.hpp"

namespace ridehail {

struct SimOptions {
  std::uint64_t episodes = 0;
  std::uint64_t master_seed = 0;
  int threads = 1;  // <= 0 picks hardware concurrency
};

struct CellStat {
  double mean = 0.0;
  double std_error = 0.0;  // sample sd / sqrt(T)
};

// Sample-average estimates of everything the exact oracle computes, from T
// independent episodes. Episode e always uses RNG substream e of the master
// seed and episodes are aggregated in fixed blocks, so the report is a pure
// function of (prepared policy, instance, episodes, master_seed) regardless
// of thread count.
struct SimReport {
  std::uint64_t episodes = 0;
  std::uint64_t master_seed = 0;
  std::string rng_algorithm;  // seed manifest for reproducing the streams
  int num_bins = 0;

  CellStat value;
  // Almost-sure bound on a single episode's value (max-weight matching of
  // the per-edge maximum weights); the scale in Hoeffding-style tail bounds.
  double value_upper_bound = 0.0;

  std::vector<std::vector<std::vector<CellStat>>> first_pick;   // [t][j][i]
  std::vector<std::vector<std::vector<CellStat>>> second_pick;  // [t][j][i]
  std::vector<std::vector<std::vector<CellStat>>> match;        // [t][j][i]
  std::vector<std::vector<CellStat>> dummy_first;               // [t][j]
  std::vector<std::vector<CellStat>> vacancy;                   // [t][i]
  // Plug-in covariance of the vacancy indicators of bin pairs (i < j), with
  // the asymptotic standard error of the sample covariance.
  std::vector<std::vector<CellStat>> vacancy_cov;               // [t][pair]
};

SimReport simulate(const PreparedPolicy& prepared, const Instance& instance,
                   const SimOptions& options);
SimReport simulate(const PreparedGeneralPolicy& prepared,
                   const GeneralInstance& instance, const SimOptions& options);

struct CovEstimate {
  int bin_i = 0;
  int bin_j = 0;
  CellStat cov;
};

// Covariance estimates for all bin pairs at one time step (the state seen by
// the ball at time_index). Uses the same episode substreams as simulate.
std::vector<CovEstimate> estimate_covariances(const PreparedPolicy& prepared,
                                              const Instance& instance,
                                              std::uint64_t episodes,
                                              std::uint64_t master_seed,
                                              int time_index, int threads = 1);
std::vector<CovEstimate> estimate_covariances(
    const PreparedGeneralPolicy& prepared, const GeneralInstance& instance,
    std::uint64_t episodes, std::uint64_t master_seed, int time_index,
    int threads = 1);

std::string report_to_json(const SimReport& report);
std::string report_to_csv(const SimReport& report);

}  // namespace ridehail
