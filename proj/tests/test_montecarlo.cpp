#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "ridehail/lp.hpp"
#include "ridehail/montecarlo.hpp"
#include "ridehail/oracles.hpp"
#include "test_util.hpp"

using namespace ridehail;

namespace {

PreparedPolicy prepared_for(const Instance& inst) {
  const LpProblem lp = build_lp_match(inst);
  const LpSolution sol = solve_lp(lp);
  return prepare(x_matrix(lp, sol.values), inst);
}

bool within(const CellStat& stat, double exact, double sigmas) {
  return std::abs(stat.mean - exact) <= sigmas * stat.std_error + 1e-9;
}

}  // namespace

TEST_CASE("zero weights give an exactly zero sample mean") {
  Instance inst{2, {{0.8, {0.0, 0.0}}, {0.4, {0.0, 0.0}}}};
  const SimReport report = simulate(prepared_for(inst), inst, {5000, 1, 1});
  CHECK(report.value.mean == 0.0);
  CHECK(report.value.std_error == 0.0);
}

TEST_CASE("sample statistics track the exact law on the gap instance") {
  const GeneralInstance gap = gap_instance();
  const LpProblem lp = build_lp_match_gen(gap);
  const LpSolution sol = solve_lp(lp);
  const PreparedGeneralPolicy prepared =
      prepare_general(y_tensor(lp, sol.values), gap);

  const OracleResult law = exact_policy_marginals(prepared, gap);
  const SimReport report = simulate(prepared, gap, {200000, 99, 2});

  CHECK(within(report.value, law.value, 4.0));
  for (int t = 0; t < gap.num_balls(); ++t) {
    for (std::size_t j = 0; j < gap.balls[t].realizations.size(); ++j) {
      for (int i = 0; i < 2; ++i) {
        CHECK(within(report.first_pick[t][j][i], law.first_pick[t][j][i], 4.5));
        CHECK(within(report.second_pick[t][j][i], law.second_pick[t][j][i], 4.5));
      }
    }
    for (int i = 0; i < 2; ++i) {
      CHECK(within(report.vacancy[t][i], law.vacancy[t][i], 4.5));
    }
    CHECK(within(report.vacancy_cov[t][0], law.covariance(t, 0, 1, 2), 4.5));
  }
}

TEST_CASE("identical seeds give bit-identical reports across thread counts") {
  const Instance inst = testutil::rough_basic_instance(4, 8, 22, 2.0);
  const PreparedPolicy prepared = prepared_for(inst);
  const SimReport one = simulate(prepared, inst, {20000, 7, 1});
  const SimReport four = simulate(prepared, inst, {20000, 7, 4});
  CHECK(report_to_json(one) == report_to_json(four));
  const SimReport other_seed = simulate(prepared, inst, {20000, 8, 1});
  CHECK(report_to_json(one) != report_to_json(other_seed));
}

TEST_CASE("episode values never exceed the reported bound") {
  const Instance inst = testutil::rough_basic_instance(3, 6, 77, 5.0);
  const PreparedPolicy prepared = prepared_for(inst);
  const SimReport report = simulate(prepared, inst, {2000, 5, 1});
  for (int e = 0; e < 2000; ++e) {
    Rng rng = Rng::substream(5, e);
    const MatchTrace trace = run_once(prepared, inst, rng);
    CHECK(trace.total_weight <= report.value_upper_bound + 1e-12);
  }
}

TEST_CASE("covariance estimates stay near the exact values and the cap") {
  Instance inst{2, {{0.9, {1.0, 0.2}}, {0.8, {0.3, 1.0}}, {1.0, {1.0, 1.0}}}};
  const PreparedPolicy prepared = prepared_for(inst);
  const OracleResult law = exact_policy_marginals(prepared, inst);
  for (int t = 0; t < inst.num_balls(); ++t) {
    const auto estimates = estimate_covariances(prepared, inst, 100000, 12, t, 2);
    REQUIRE(estimates.size() == 1);
    const double exact = law.covariance(t, 0, 1, 2);
    CHECK(within(estimates[0].cov, exact, 4.5));
    CHECK(estimates[0].cov.mean <= 0.12 + 4.0 * estimates[0].cov.std_error);
  }
  CHECK_THROWS_AS(estimate_covariances(prepared, inst, 10, 1, 99, 1),
                  std::invalid_argument);
}

TEST_CASE("independent bins have covariance estimates near zero") {
  Instance inst{2, {{0.6, {1.0, 0.0}}, {0.7, {0.0, 1.0}}}};
  const PreparedPolicy prepared = prepared_for(inst);
  const auto estimates = estimate_covariances(prepared, inst, 50000, 3, 1, 1);
  CHECK(within(estimates[0].cov, 0.0, 4.0));
}

TEST_CASE("csv rendering emits one row per edge") {
  const Instance inst = testutil::rough_basic_instance(2, 3, 5, 1.0);
  const SimReport report = simulate(prepared_for(inst), inst, {100, 1, 1});
  const std::string csv = report_to_csv(report);
  const auto rows = std::count(csv.begin(), csv.end(), '\n');
  CHECK(rows == 1 + 2 * 3);  // header + bins x balls
  CHECK(csv.find("first_pick") != std::string::npos);
}

TEST_CASE("report JSON carries the seed manifest") {
  const Instance inst = testutil::rough_basic_instance(2, 2, 9, 1.0);
  const SimReport report = simulate(prepared_for(inst), inst, {100, 42, 1});
  const std::string doc = report_to_json(report);
  CHECK(doc.find("\"master_seed\": 42") != std::string::npos);
  CHECK(doc.find("splitmix64") != std::string::npos);
}
