#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace ridehail {

// Offline vertices are "bins", online vertices are "balls". A basic ball
// either arrives (probability arrival_prob) with its fixed weight vector or
// does not arrive at all.
struct Ball {
  double arrival_prob = 0.0;
  std::vector<double> weights;  // indexed by bin

  bool operator==(const Ball&) const = default;
};

struct Instance {
  int num_bins = 0;
  std::vector<Ball> balls;

  int num_balls() const { return static_cast<int>(balls.size()); }

  bool operator==(const Instance&) const = default;
};

// One possible weight vector of a ball, drawn with probability `prob`.
struct Realization {
  double prob = 0.0;
  std::vector<double> weights;

  bool operator==(const Realization&) const = default;
};

// A general ball carries an explicit discrete joint distribution over weight
// vectors. Realization probabilities may sum to less than one; the remaining
// mass stands for the all-zero weight vector (no effective arrival).
struct GeneralBall {
  std::vector<Realization> realizations;

  bool operator==(const GeneralBall&) const = default;
};

struct GeneralInstance {
  int num_bins = 0;
  std::vector<GeneralBall> balls;

  int num_balls() const { return static_cast<int>(balls.size()); }

  bool operator==(const GeneralInstance&) const = default;
};

// Slack allowed when checking that a general ball's realization probabilities
// sum to at most 1 (exact rational inputs survive the trip through doubles).
inline constexpr double kProbSumTolerance = 1e-12;

// Returns every invariant violation, one human-readable line each, with
// 1-based ball/bin indices. Empty means the instance is well formed.
std::vector<std::string> validate(const Instance& instance);
std::vector<std::string> validate(const GeneralInstance& instance);

// Embeds a basic instance: each ball becomes a single-realization general
// ball, the non-arrival mass staying implicit. Throws std::invalid_argument
// if the input fails validation.
GeneralInstance lift_to_general(const Instance& instance);

// The 2-bin, 3-ball instance whose LP optimum (2) exceeds the best online
// value (7/4) by a factor of 8/7.
GeneralInstance gap_instance();

// Deterministic generator: arrival probabilities uniform in (0,1], weights
// uniform in [0, weight_scale]. Same arguments, same instance.
Instance random_instance(int num_bins, int num_balls, std::uint64_t seed,
                         double weight_scale = 1.0);

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using AnyInstance = std::variant<Instance, GeneralInstance>;

// JSON document {"model": "basic"|"general", "num_bins": n, "balls": [...]}.
// Probabilities and weights accept plain numbers or exact rationals written
// as strings "a/b". Throws ParseError naming the offending path, or on an
// instance that fails validation.
AnyInstance read_instance(const std::string& bytes);
std::string write_instance(const Instance& instance);
std::string write_instance(const GeneralInstance& instance);

}  // namespace ridehail
