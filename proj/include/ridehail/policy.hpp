#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ridehail/instance.hpp"
#include "ridehail/rng.hpp"

namespace ridehail {
class Rng;

struct PolicyConfig {
  // Margin above 1/2 targeted by the per-edge match guarantee. Must lie in
  // [0, 1/2) for the acceptance probabilities to be well defined; the full
  // invariant chain is only claimed at the default 0.01.
  double slack = 0.01;
  std::uint64_t seed = 0;
};

// Per-ball state after preprocessing an LP solution:
//  - values clamped to >= 0 and each row rescaled so it sums to at most p_t,
//  - a zero-weight dummy slot absorbing p_t - sum_i x[i][t],
//  - acceptance probability q[i] = min(1, (1/2+c) / (1 - prefix[i]*(1/2+c))),
//  - an edge is late once prefix[i] exceeds (1/2-c)/(1/2+c).
struct PreparedBall {
  bool skip = false;  // p_t = 0, or no mass on real bins
  double arrival_prob = 0.0;
  std::vector<double> x;       // per real bin
  double dummy_x = 0.0;
  std::vector<double> prefix;  // sum over earlier balls, per real bin
  std::vector<double> accept;  // q, per real bin
  std::vector<std::uint8_t> late;
};

struct PreparedPolicy {
  int num_bins = 0;
  double slack = 0.0;
  double late_threshold = 0.0;
  double dummy_accept = 0.0;  // q of a fresh dummy slot, (1/2+c)
  std::vector<PreparedBall> balls;
};

// General-model analogue; pick rows are per realization while q and the
// late flag depend only on (bin, ball).
struct PreparedGeneralBall {
  bool skip = false;
  std::vector<double> realization_prob;
  std::vector<std::vector<double>> y;  // [realization][bin]
  std::vector<double> dummy_y;         // [realization]
  std::vector<double> prefix;
  std::vector<double> accept;
  std::vector<std::uint8_t> late;
};

struct PreparedGeneralPolicy {
  int num_bins = 0;
  double slack = 0.0;
  double late_threshold = 0.0;
  double dummy_accept = 0.0;
  std::vector<PreparedGeneralBall> balls;
};

// Both throw std::invalid_argument if the solution fails the online
// feasibility check or the config is out of range.
PreparedPolicy prepare(const std::vector<std::vector<double>>& x,
                       const Instance& instance, const PolicyConfig& config = {});
PreparedGeneralPolicy prepare_general(
    const std::vector<std::vector<std::vector<double>>>& y,
    const GeneralInstance& instance, const PolicyConfig& config = {});

struct MatchEvent {
  int ball = 0;
  int bin = 0;  // == num_bins for a dummy match
  bool dummy = false;
  int pick = 1;  // 1 or 2
  bool late = false;
  int realization = 0;
  double weight = 0.0;
};

struct MatchTrace {
  std::vector<MatchEvent> events;
  std::vector<int> arrivals;  // realization index per ball, -1 if absent
  double total_weight = 0.0;
};

// One simulated episode. Deterministic given the prepared policy and the
// RNG stream; draws are consumed in ball order (arrival/realization, first
// pick, acceptance coin if the picked bin is vacant, second pick).
MatchTrace run_once(const PreparedPolicy& prepared, const Instance& instance,
                    Rng& rng);
MatchTrace run_general_once(const PreparedGeneralPolicy& prepared,
                            const GeneralInstance& instance, Rng& rng);

std::string trace_to_json(const MatchTrace& trace);

// Lossless online rounding for single-bin instances: match the arriving
// ball, realized as (t, j), with probability
//   y[t][j] / (p[t][j] * (1 - sum over earlier balls of their y mass)),
// which stays in [0, 1] by the online LP constraint. The expected value of
// the induced policy equals the LP objective.
struct SingleBinPolicy {
  std::vector<std::vector<double>> accept;  // [ball][realization]
  double expected_value = 0.0;
};

SingleBinPolicy single_bin_policy(const std::vector<std::vector<double>>& x,
                                  const Instance& instance);
SingleBinPolicy single_bin_policy(
    const std::vector<std::vector<std::vector<double>>>& y,
    const GeneralInstance& instance);

}  // namespace ridehail
