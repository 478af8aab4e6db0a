#include <fstream>
#include <sstream>

#include "doctest.h"
#include "ridehail/instance.hpp"
#include "ridehail/lp.hpp"
#include "ridehail/oracles.hpp"
#include "test_util.hpp"

using namespace ridehail;

namespace {

std::string read_data_file(const std::string& name) {
  std::ifstream in(std::string(RIDEHAIL_TEST_DATA_DIR) + "/" + name,
                   std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

TEST_CASE("validate accepts a well-formed basic instance") {
  Instance inst{2, {{0.5, {1.0, 0.0}}}};
  CHECK(validate(inst).empty());
}

TEST_CASE("validate reports arrival probability out of bounds") {
  Instance inst{2, {{1.5, {1.0, 0.0}}}};
  const auto report = validate(inst);
  REQUIRE(report.size() == 1);
  CHECK(report[0].find("arrival_prob") != std::string::npos);
}

TEST_CASE("validate reports negative weights") {
  Instance inst{1, {{0.5, {-1.0}}}};
  const auto report = validate(inst);
  REQUIRE(report.size() == 1);
  CHECK(report[0].find("non-negative") != std::string::npos);
}

TEST_CASE("validate reports wrong weight vector length and bad prob sums") {
  Instance inst{3, {{0.5, {1.0, 2.0}}}};
  CHECK(validate(inst).size() == 1);

  GeneralInstance gen{1, {{{{0.7, {1.0}}, {0.5, {2.0}}}}}};
  const auto report = validate(gen);
  REQUIRE(report.size() == 1);
  CHECK(report[0].find("sum") != std::string::npos);
}

TEST_CASE("lift_to_general wraps each ball as a single realization") {
  Instance inst{2, {{0.5, {1.0, 0.0}}, {1.0, {2.0, 2.0}}}};
  const GeneralInstance gen = lift_to_general(inst);
  REQUIRE(gen.num_balls() == 2);
  REQUIRE(gen.balls[0].realizations.size() == 1);
  CHECK(gen.balls[0].realizations[0].prob == 0.5);
  CHECK(gen.balls[0].realizations[0].weights == std::vector<double>{1.0, 0.0});
  CHECK(gen.balls[1].realizations[0].prob == 1.0);

  CHECK_THROWS_AS(lift_to_general(Instance{1, {{2.0, {1.0}}}}),
                  std::invalid_argument);
}

TEST_CASE("gap instance has the expected shape") {
  const GeneralInstance gap = gap_instance();
  CHECK(gap.num_bins == 2);
  CHECK(gap.num_balls() == 3);
  CHECK(validate(gap).empty());
  CHECK(opt_online(gap).value == doctest::Approx(1.75).epsilon(1e-12));
}

TEST_CASE("random_instance is a pure function of its arguments") {
  const Instance a = random_instance(3, 5, 7);
  const Instance b = random_instance(3, 5, 7);
  CHECK(a == b);
  CHECK(a.num_bins == 3);
  CHECK(a.num_balls() == 5);
  CHECK(validate(a).empty());
  const Instance c = random_instance(3, 5, 8);
  CHECK(a != c);
}

TEST_CASE("instance JSON round trip over random corpora") {
  for (int k = 0; k < 25; ++k) {
    const Instance inst = testutil::rough_basic_instance(1 + k % 6, 1 + k % 9,
                                                         900 + k, 3.0);
    const AnyInstance back = read_instance(write_instance(inst));
    REQUIRE(std::holds_alternative<Instance>(back));
    CHECK(std::get<Instance>(back) == inst);

    const GeneralInstance gen =
        testutil::rough_general_instance(1 + k % 5, 1 + k % 7, 1700 + k, 2.0);
    const AnyInstance gback = read_instance(write_instance(gen));
    REQUIRE(std::holds_alternative<GeneralInstance>(gback));
    CHECK(std::get<GeneralInstance>(gback) == gen);
  }
}

TEST_CASE("read_instance accepts rational strings") {
  const std::string doc = R"({
    "model": "basic",
    "num_bins": 2,
    "balls": [{"p": "1/2", "w": ["1/1", 0]}]
  })";
  const AnyInstance any = read_instance(doc);
  const Instance& inst = std::get<Instance>(any);
  CHECK(inst.balls[0].arrival_prob == 0.5);
  CHECK(inst.balls[0].weights[0] == 1.0);
}

TEST_CASE("read_instance errors name the offending path") {
  CHECK_THROWS_WITH_AS(
      read_instance(R"({"model": "general", "num_bins": 1, "balls": [{}]})"),
      "balls[1]: missing field \"realizations\"", ParseError);
  CHECK_THROWS_AS(
      read_instance(R"({"model": "hybrid", "num_bins": 1, "balls": []})"),
      ParseError);
  CHECK_THROWS_AS(read_instance("not json"), ParseError);
  // Structurally fine but invariant-breaking content is also rejected.
  CHECK_THROWS_AS(
      read_instance(
          R"({"model": "basic", "num_bins": 1, "balls": [{"p": 2, "w": [1]}]})"),
      ParseError);
}

TEST_CASE("gap instance serialization matches the golden file") {
  CHECK(write_instance(gap_instance()) == read_data_file("gap_instance.json"));
}

TEST_CASE("lift preserves the LP optimum and the policy law") {
  for (int k = 0; k < 8; ++k) {
    const Instance inst = testutil::rough_basic_instance(2 + k % 3, 4 + k % 4,
                                                         4400 + k, 2.0);
    const GeneralInstance lifted = lift_to_general(inst);

    const LpProblem basic_lp = build_lp_match(inst);
    const LpSolution basic_sol = solve_lp(basic_lp);
    const LpProblem gen_lp = build_lp_match_gen(lifted);
    const LpSolution gen_sol = solve_lp(gen_lp);
    CHECK(basic_sol.objective ==
          doctest::Approx(gen_sol.objective).epsilon(1e-9));

    CHECK(opt_online(inst).value ==
          doctest::Approx(opt_online(lifted).value).epsilon(1e-9));

    // Same solution pushed through both policy pipelines gives the same law.
    const auto x = x_matrix(basic_lp, basic_sol.values);
    std::vector<std::vector<std::vector<double>>> y(x.size());
    for (std::size_t t = 0; t < x.size(); ++t) y[t] = {x[t]};
    const auto basic_law = exact_policy_marginals(prepare(x, inst), inst);
    const auto gen_law =
        exact_policy_marginals(prepare_general(y, lifted), lifted);
    CHECK(basic_law.value == doctest::Approx(gen_law.value).epsilon(1e-9));
    for (int t = 0; t < inst.num_balls(); ++t) {
      for (int i = 0; i < inst.num_bins; ++i) {
        CHECK(basic_law.match_prob(t, 0, i) ==
              doctest::Approx(gen_law.match_prob(t, 0, i)).epsilon(1e-9));
      }
    }
  }
}
