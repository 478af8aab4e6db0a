#include <set>

#include "doctest.h"
#include "ridehail/lp.hpp"
#include "ridehail/oracles.hpp"
#include "ridehail/policy.hpp"
#include "test_util.hpp"

using namespace ridehail;

namespace {

PreparedPolicy prepare_from_lp(const Instance& inst,
                               const PolicyConfig& config = {}) {
  const LpProblem lp = build_lp_match(inst);
  const LpSolution sol = solve_lp(lp);
  return prepare(x_matrix(lp, sol.values), inst, config);
}

// One bin filled to a chosen prefix by an opening ball, so the second ball's
// edge sits exactly where we want it on the early/late axis.
Instance prefix_instance(double prefix, double tail_mass) {
  return Instance{1, {{prefix, {1.0}}, {tail_mass, {1.0}}}};
}

}  // namespace

TEST_CASE("acceptance probability follows the prefix formula") {
  // Fresh bin: q = min(1, 0.51 / 1) = 0.51.
  {
    const PreparedPolicy prepared = prepare_from_lp(Instance{1, {{1.0, {1.0}}}});
    CHECK(prepared.balls[0].accept[0] == doctest::Approx(0.51).epsilon(1e-12));
    CHECK(prepared.balls[0].late[0] == 0);
  }
  // Saturated bin: q = min(1, 0.51 / 0.49) = 1.
  {
    const PreparedPolicy prepared = prepare_from_lp(prefix_instance(1.0, 0.5));
    CHECK(prepared.balls[1].prefix[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(prepared.balls[1].accept[0] == 1.0);
    CHECK(prepared.balls[1].late[0] == 1);
  }
  // Prefix 0.97 sits above the late threshold 0.49/0.51.
  {
    const PreparedPolicy prepared = prepare_from_lp(prefix_instance(0.97, 0.9));
    CHECK(prepared.late_threshold == doctest::Approx(0.49 / 0.51).epsilon(1e-15));
    CHECK(prepared.balls[1].late[0] == 1);
    CHECK(prepared.balls[1].accept[0] == 1.0);
  }
  // Exactly at the threshold counts as early, and q computes to one.
  {
    const double threshold = (0.5 - 0.01) / (0.5 + 0.01);  // as prepare does
    std::vector<std::vector<double>> x = {{threshold}, {0.01}};
    const PreparedPolicy prepared =
        prepare(x, Instance{1, {{1.0, {1.0}}, {1.0, {1.0}}}});
    CHECK(prepared.balls[1].late[0] == 0);
    CHECK(prepared.balls[1].accept[0] == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("q strictly below one only happens on early edges") {
  const Instance inst = testutil::rough_basic_instance(3, 8, 99, 2.0);
  const PreparedPolicy prepared = prepare_from_lp(inst);
  for (const PreparedBall& ball : prepared.balls) {
    for (int i = 0; i < prepared.num_bins; ++i) {
      if (ball.accept[i] < 1.0) CHECK(ball.late[i] == 0);
      if (ball.late[i]) CHECK(ball.accept[i] == 1.0);
    }
  }
}

TEST_CASE("dummy mass completes every row to the arrival probability") {
  for (int k = 0; k < 6; ++k) {
    const Instance inst = testutil::rough_basic_instance(2 + k, 5 + k, 300 + k, 2.0);
    const PreparedPolicy prepared = prepare_from_lp(inst);
    for (std::size_t t = 0; t < prepared.balls.size(); ++t) {
      const PreparedBall& ball = prepared.balls[t];
      double total = ball.dummy_x;
      for (double v : ball.x) total += v;
      CHECK(std::abs(total - ball.arrival_prob) <= 1e-12);
    }
  }
}

TEST_CASE("infeasible solutions are rejected") {
  Instance inst{1, {{0.5, {1.0}}}};
  std::vector<std::vector<double>> x = {{0.8}};
  CHECK_THROWS_AS(prepare(x, inst), std::invalid_argument);
  CHECK_THROWS_AS(prepare({{0.1}}, inst, PolicyConfig{0.5, 0}),
                  std::invalid_argument);
}

TEST_CASE("no arrivals means an empty trace") {
  Instance inst{2, {{0.0, {1.0, 1.0}}, {0.0, {1.0, 1.0}}}};
  const PreparedPolicy prepared = prepare_from_lp(inst);
  Rng rng(7);
  const MatchTrace trace = run_once(prepared, inst, rng);
  CHECK(trace.events.empty());
  CHECK(trace.total_weight == 0.0);
  CHECK(trace.arrivals == std::vector<int>{-1, -1});
}

TEST_CASE("traces are reproducible for a fixed stream") {
  const Instance inst = testutil::rough_basic_instance(3, 6, 42, 2.0);
  const PreparedPolicy prepared = prepare_from_lp(inst);
  Rng rng1 = Rng::substream(5, 0);
  Rng rng2 = Rng::substream(5, 0);
  const MatchTrace a = run_once(prepared, inst, rng1);
  const MatchTrace b = run_once(prepared, inst, rng2);
  CHECK(a.total_weight == b.total_weight);
  CHECK(a.arrivals == b.arrivals);
  REQUIRE(a.events.size() == b.events.size());
  for (std::size_t e = 0; e < a.events.size(); ++e) {
    CHECK(a.events[e].bin == b.events[e].bin);
    CHECK(a.events[e].pick == b.events[e].pick);
  }
}

TEST_CASE("single saturated edge matches at frequency one half plus slack") {
  Instance inst{1, {{1.0, {1.0}}}};
  const PreparedPolicy prepared = prepare_from_lp(inst);
  const int episodes = 1000000;
  int matched = 0;
  for (int e = 0; e < episodes; ++e) {
    Rng rng = Rng::substream(2024, e);
    const MatchTrace trace = run_once(prepared, inst, rng);
    if (!trace.events.empty() && !trace.events[0].dummy) ++matched;
  }
  const double freq = static_cast<double>(matched) / episodes;
  CHECK(std::abs(freq - 0.51) < 0.002);
}

TEST_CASE("every trace is a matching and second picks are late-only") {
  const auto corpus = testutil::mixed_corpus(12, 808);
  for (const auto& entry : corpus) {
    if (!std::holds_alternative<Instance>(entry)) continue;
    const Instance& inst = std::get<Instance>(entry);
    const PreparedPolicy prepared = prepare_from_lp(inst);
    for (int e = 0; e < 200; ++e) {
      Rng rng = Rng::substream(17, e);
      const MatchTrace trace = run_once(prepared, inst, rng);
      std::set<int> bins, balls;
      double total = 0.0;
      for (const MatchEvent& ev : trace.events) {
        CHECK(balls.insert(ev.ball).second);
        if (!ev.dummy) {
          CHECK(bins.insert(ev.bin).second);
        } else {
          CHECK(ev.weight == 0.0);
          CHECK(ev.pick == 1);  // dummies are never late
        }
        if (ev.pick == 2) CHECK(ev.late);
        CHECK(trace.arrivals[ev.ball] >= 0);
        total += ev.weight;
      }
      CHECK(total == doctest::Approx(trace.total_weight));
    }
  }
}

TEST_CASE("general sampler on deterministic single realizations mirrors basic") {
  // Every ball has one realization with probability one, so both samplers
  // face the same decision sequence.
  GeneralInstance gen{2, {{{{1.0, {1.0, 0.5}}}}, {{{1.0, {0.3, 0.9}}}}}};
  const LpProblem lp = build_lp_match_gen(gen);
  const LpSolution sol = solve_lp(lp);
  const PreparedGeneralPolicy prepared =
      prepare_general(y_tensor(lp, sol.values), gen);
  int matches = 0;
  for (int e = 0; e < 2000; ++e) {
    Rng rng = Rng::substream(3, e);
    const MatchTrace trace = run_general_once(prepared, gen, rng);
    CHECK(trace.arrivals[0] == 0);
    CHECK(trace.arrivals[1] == 0);
    for (const MatchEvent& ev : trace.events) {
      if (ev.pick == 2) CHECK(ev.late);
      if (!ev.dummy) ++matches;
    }
  }
  CHECK(matches > 0);
}

TEST_CASE("trace serializes to a JSON object") {
  Instance inst{1, {{1.0, {1.0}}}};
  const PreparedPolicy prepared = prepare_from_lp(inst);
  Rng rng(1);
  const std::string line = trace_to_json(run_once(prepared, inst, rng));
  CHECK(line.find("\"total_weight\"") != std::string::npos);
  CHECK(line.find("\"events\"") != std::string::npos);
}

TEST_CASE("single-bin rounding is lossless against LP and optimal play") {
  // Two balls: a sure unit and a half-chance double.
  Instance inst{1, {{1.0, {1.0}}, {0.5, {2.0}}}};
  const LpProblem lp = build_lp_match(inst);
  const LpSolution sol = solve_lp(lp);
  const SingleBinPolicy policy = single_bin_policy(x_matrix(lp, sol.values), inst);
  CHECK(policy.expected_value == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(policy.expected_value == doctest::Approx(sol.objective).epsilon(1e-9));
  CHECK(policy.expected_value ==
        doctest::Approx(opt_online(inst).value).epsilon(1e-9));
  for (const auto& row : policy.accept) {
    for (double a : row) {
      CHECK(a >= 0.0);
      CHECK(a <= 1.0);
    }
  }
}

TEST_CASE("single-bin policy accepts a sure ball outright") {
  Instance inst{1, {{1.0, {1.0}}}};
  const LpProblem lp = build_lp_match(inst);
  const LpSolution sol = solve_lp(lp);
  const SingleBinPolicy policy = single_bin_policy(x_matrix(lp, sol.values), inst);
  CHECK(policy.accept[0][0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(policy.expected_value == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("single-bin policy rejects multi-bin instances") {
  Instance inst{2, {{1.0, {1.0, 1.0}}}};
  CHECK_THROWS_AS(single_bin_policy({{0.5, 0.5}}, inst), std::invalid_argument);
}
