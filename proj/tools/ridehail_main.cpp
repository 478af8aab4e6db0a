// Command-line front end: generate instances, solve the LP relaxation,
// compare the rounding policy against the exact benchmarks, and run the
// Monte-Carlo harness.
//
// Exit codes: 0 success, 1 usage error, 2 validation failure, 3 guarantee
// violation (policy value fell below (1/2+c) times the LP bound), 4 oracle
// cap exceeded.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <variant>

#include "CLI11.hpp"
#include "json.hpp"
#include "ridehail/instance.hpp"
#include "ridehail/lp.hpp"
#include "ridehail/montecarlo.hpp"
#include "ridehail/oracles.hpp"
#include "ridehail/policy.hpp"
#include "ridehail/rng.hpp"
#include "ridehail/ssat.hpp"

namespace {

using namespace ridehail;

constexpr int kExitUsage = 1;
constexpr int kExitValidation = 2;
constexpr int kExitGuarantee = 3;
constexpr int kExitCap = 4;

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// Files land in --out if given, otherwise under $RIDEHAIL_OUT_DIR (falling
// back to the working directory).
std::string resolve_out(const std::string& out, const std::string& fallback) {
  if (!out.empty()) return out;
  std::filesystem::path dir = ".";
  if (const char* env = std::getenv("RIDEHAIL_OUT_DIR")) dir = env;
  return (dir / fallback).string();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
}

AnyInstance load_instance(const std::string& path) {
  return read_instance(read_file(path));
}

struct InstanceSummary {
  int bins = 0;
  int balls = 0;
  double max_weight = 0.0;
};

InstanceSummary summarize(const AnyInstance& any) {
  InstanceSummary s;
  if (const auto* basic = std::get_if<Instance>(&any)) {
    s.bins = basic->num_bins;
    s.balls = basic->num_balls();
    for (const Ball& b : basic->balls) {
      for (double w : b.weights) s.max_weight = std::max(s.max_weight, w);
    }
  } else {
    const auto& gen = std::get<GeneralInstance>(any);
    s.bins = gen.num_bins;
    s.balls = gen.num_balls();
    for (const GeneralBall& b : gen.balls) {
      for (const Realization& r : b.realizations) {
        for (double w : r.weights) s.max_weight = std::max(s.max_weight, w);
      }
    }
  }
  return s;
}

void print_summary(const std::string& path, const AnyInstance& any) {
  const InstanceSummary s = summarize(any);
  std::cout << "wrote " << path << ": bins=" << s.bins << " balls=" << s.balls
            << " max_weight=" << fmt(s.max_weight) << "\n";
}

struct LpOutcome {
  LpProblem problem;
  LpSolution solution;
};

LpOutcome solve_instance_lp(const AnyInstance& any) {
  LpOutcome out;
  if (const auto* basic = std::get_if<Instance>(&any)) {
    out.problem = build_lp_match(*basic);
  } else {
    out.problem = build_lp_match_gen(std::get<GeneralInstance>(any));
  }
  out.solution = solve_lp(out.problem);
  return out;
}

int cmd_gen(const std::string& kind, int bins, int balls, std::uint64_t seed,
            double weight_scale, const std::string& cnf_path,
            const std::string& out) {
  std::string path;
  if (kind == "gap") {
    const GeneralInstance inst = gap_instance();
    path = resolve_out(out, "gap_instance.json");
    write_file(path, write_instance(inst));
    print_summary(path, inst);
  } else if (kind == "random") {
    const Instance inst = random_instance(bins, balls, seed, weight_scale);
    path = resolve_out(out, "random_instance.json");
    write_file(path, write_instance(inst));
    print_summary(path, inst);
  } else {
    const SsatInstance phi = parse_dimacs(read_file(cnf_path));
    const Instance inst = kind == "ssat-reduce" ? reduce_to_ridehail(phi)
                                                : reduce_to_ridehail_unweighted(phi);
    path = resolve_out(out, kind + ".json");
    write_file(path, write_instance(inst));
    print_summary(path, inst);
    const ReductionParams params = reduction_params(phi);
    std::cout << "reduction: m=" << params.num_clauses
              << " k=" << params.max_occurrence << " gamma=" << fmt(params.gamma)
              << "\n";
  }
  return 0;
}

int cmd_lp(const std::string& instance_path, const std::string& out,
           const std::string& dump_lp) {
  const AnyInstance any = load_instance(instance_path);
  LpOutcome lp = solve_instance_lp(any);
  if (!dump_lp.empty()) write_file(dump_lp, write_lp_format(lp.problem));

  nlohmann::json doc;
  doc["objective"] = lp.solution.objective;
  doc["status"] = lp.solution.status == SolveStatus::Optimal ? "optimal"
                                                             : "iteration_limit";
  doc["iterations"] = lp.solution.iterations;
  if (std::holds_alternative<Instance>(any)) {
    doc["model"] = "basic";
    doc["x"] = x_matrix(lp.problem, lp.solution.values);
  } else {
    doc["model"] = "general";
    doc["y"] = y_tensor(lp.problem, lp.solution.values);
  }
  const std::string path = resolve_out(out, "lp_solution.json");
  write_file(path, doc.dump(2) + "\n");
  std::cout << "objective " << fmt(lp.solution.objective) << "\n";
  std::cout << "wrote " << path << "\n";
  return 0;
}

int cmd_compare(const std::string& instance_path, double slack,
                std::uint64_t mc_episodes, std::uint64_t seed, int threads,
                int max_bins, std::uint64_t max_profiles, const std::string& out) {
  const AnyInstance any = load_instance(instance_path);
  OracleCaps caps;
  caps.max_bins = max_bins;
  caps.max_offline_profiles = max_profiles;
  PolicyConfig config;
  config.slack = slack;
  config.seed = seed;

  LpOutcome lp = solve_instance_lp(any);
  double opt_on = 0.0, alg_exact = 0.0;
  OptOfflineResult off;
  std::optional<SimReport> mc;

  if (const auto* basic = std::get_if<Instance>(&any)) {
    opt_on = opt_online(*basic, caps).value;
    off = opt_offline(*basic, caps, 200000, seed);
    const PreparedPolicy prepared =
        prepare(x_matrix(lp.problem, lp.solution.values), *basic, config);
    alg_exact = exact_policy_marginals(prepared, *basic, caps).value;
    if (mc_episodes > 0) {
      mc = simulate(prepared, *basic, {mc_episodes, seed, threads});
    }
  } else {
    const auto& gen = std::get<GeneralInstance>(any);
    opt_on = opt_online(gen, caps).value;
    off = opt_offline(gen, caps, 200000, seed);
    const PreparedGeneralPolicy prepared =
        prepare_general(y_tensor(lp.problem, lp.solution.values), gen, config);
    alg_exact = exact_policy_marginals(prepared, gen, caps).value;
    if (mc_episodes > 0) {
      mc = simulate(prepared, gen, {mc_episodes, seed, threads});
    }
  }

  const double lp_value = lp.solution.objective;
  nlohmann::json doc;
  doc["lp"] = lp_value;
  doc["opt_online"] = opt_on;
  doc["opt_offline"] = off.value;
  doc["opt_offline_exact"] = off.exact;
  if (!off.exact) doc["opt_offline_se"] = off.std_error;
  doc["alg_exact"] = alg_exact;
  if (mc) {
    doc["alg_mc"] = mc->value.mean;
    doc["alg_mc_se"] = mc->value.std_error;
  }
  doc["slack"] = slack;
  if (opt_on > 0.0) doc["ratio_alg_opt_online"] = alg_exact / opt_on;
  if (lp_value > 0.0) doc["ratio_alg_lp"] = alg_exact / lp_value;
  if (off.value > 0.0) doc["ratio_opt_online_opt_offline"] = opt_on / off.value;

  const std::string path = resolve_out(out, "compare.json");
  write_file(path, doc.dump(2) + "\n");
  std::cout << "LP        " << fmt(lp_value) << "\n"
            << "OPT_on    " << fmt(opt_on) << "\n"
            << "OPT_off   " << fmt(off.value) << (off.exact ? "" : " (sampled)")
            << "\n"
            << "ALG exact " << fmt(alg_exact) << "\n";
  if (mc) {
    std::cout << "ALG mc    " << fmt(mc->value.mean) << " +- "
              << fmt(mc->value.std_error) << "\n";
  }
  std::cout << "wrote " << path << "\n";

  const double guarantee = (0.5 + slack) * lp_value;
  if (alg_exact < guarantee - 1e-6) {
    std::cerr << "guarantee violation: ALG " << fmt(alg_exact) << " < "
              << fmt(guarantee) << "\n";
    return kExitGuarantee;
  }
  return 0;
}

int cmd_simulate(const std::string& instance_path, std::uint64_t episodes,
                 std::uint64_t seed, double slack, int threads,
                 const std::string& format, const std::string& out,
                 std::uint64_t dump_traces) {
  const AnyInstance any = load_instance(instance_path);
  PolicyConfig config;
  config.slack = slack;
  config.seed = seed;
  LpOutcome lp = solve_instance_lp(any);

  SimReport report;
  std::string traces;
  if (const auto* basic = std::get_if<Instance>(&any)) {
    const PreparedPolicy prepared =
        prepare(x_matrix(lp.problem, lp.solution.values), *basic, config);
    report = simulate(prepared, *basic, {episodes, seed, threads});
    for (std::uint64_t e = 0; e < dump_traces; ++e) {
      Rng rng = Rng::substream(seed, e);
      traces += trace_to_json(run_once(prepared, *basic, rng)) + "\n";
    }
  } else {
    const auto& gen = std::get<GeneralInstance>(any);
    const PreparedGeneralPolicy prepared =
        prepare_general(y_tensor(lp.problem, lp.solution.values), gen, config);
    report = simulate(prepared, gen, {episodes, seed, threads});
    for (std::uint64_t e = 0; e < dump_traces; ++e) {
      Rng rng = Rng::substream(seed, e);
      traces += trace_to_json(run_general_once(prepared, gen, rng)) + "\n";
    }
  }

  const std::string path =
      resolve_out(out, format == "csv" ? "sim_report.csv" : "sim_report.json");
  write_file(path, format == "csv" ? report_to_csv(report)
                                   : report_to_json(report));
  if (dump_traces > 0) write_file(path + ".traces.jsonl", traces);
  std::cout << "episodes  " << report.episodes << "\n"
            << "mean      " << fmt(report.value.mean) << " +- "
            << fmt(report.value.std_error) << "\n"
            << "bound     " << fmt(report.value_upper_bound) << "\n"
            << "wrote " << path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Online stochastic bipartite matching: LP bound, two-pick "
               "rounding policy, exact oracles, Monte-Carlo harness"};
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "generate an instance file");
  std::string gen_kind;
  int gen_bins = 4, gen_balls = 8;
  std::uint64_t gen_seed = 1;
  double gen_scale = 1.0;
  std::string gen_cnf, gen_out;
  gen->add_option("kind", gen_kind, "random | gap | ssat-reduce | ssat-reduce-unweighted")
      ->required()
      ->check(CLI::IsMember({"random", "gap", "ssat-reduce", "ssat-reduce-unweighted"}));
  gen->add_option("--bins", gen_bins, "bins (random)");
  gen->add_option("--balls", gen_balls, "balls (random)");
  gen->add_option("--seed", gen_seed, "generator seed (random)");
  gen->add_option("--weight-scale", gen_scale, "weight scale (random)");
  gen->add_option("--cnf", gen_cnf, "CNF file (ssat-reduce*)");
  gen->add_option("--out", gen_out, "output path");

  // lp
  auto* lp = app.add_subcommand("lp", "solve the LP relaxation");
  std::string lp_instance, lp_out, lp_dump;
  lp->add_option("--instance", lp_instance, "instance JSON")->required();
  lp->add_option("--out", lp_out, "solution output path");
  lp->add_option("--dump-lp", lp_dump, "write the LP in interchange text form");

  // compare
  auto* cmp = app.add_subcommand(
      "compare", "LP vs optimal online vs prophet vs rounding policy");
  std::string cmp_instance, cmp_out;
  double cmp_slack = 0.01;
  std::uint64_t cmp_mc = 0, cmp_seed = 1;
  int cmp_threads = 1, cmp_max_bins = 20;
  std::uint64_t cmp_max_profiles = 1u << 20;
  cmp->add_option("--instance", cmp_instance, "instance JSON")->required();
  cmp->add_option("-c,--slack", cmp_slack, "policy slack constant")
      ->check(CLI::Range(0.0, 0.499999));
  cmp->add_option("--mc-episodes", cmp_mc, "also Monte-Carlo with this many episodes");
  cmp->add_option("--seed", cmp_seed, "seed for sampled estimates");
  cmp->add_option("--threads", cmp_threads, "simulation threads");
  cmp->add_option("--max-bins", cmp_max_bins, "oracle bin cap");
  cmp->add_option("--max-profiles", cmp_max_profiles, "prophet enumeration cap");
  cmp->add_option("--out", cmp_out, "report output path");

  // simulate
  auto* sim = app.add_subcommand("simulate", "Monte-Carlo episode harness");
  std::string sim_instance, sim_out, sim_format = "json";
  std::uint64_t sim_T = 100000, sim_seed = 1, sim_dump = 0;
  double sim_slack = 0.01;
  int sim_threads = 1;
  sim->add_option("--instance", sim_instance, "instance JSON")->required();
  sim->add_option("-T,--episodes", sim_T, "episode count");
  sim->add_option("--seed", sim_seed, "master seed");
  sim->add_option("-c,--slack", sim_slack, "policy slack constant")
      ->check(CLI::Range(0.0, 0.499999));
  sim->add_option("--threads", sim_threads, "worker threads (0 = hardware)");
  sim->add_option("--format", sim_format, "json | csv")
      ->check(CLI::IsMember({"json", "csv"}));
  sim->add_option("--out", sim_out, "report output path");
  sim->add_option("--dump-traces", sim_dump, "also write the first N episode traces");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (gen->parsed()) {
      if ((gen_kind == "ssat-reduce" || gen_kind == "ssat-reduce-unweighted") &&
          gen_cnf.empty()) {
        std::cerr << "gen " << gen_kind << " requires --cnf\n";
        return kExitUsage;
      }
      return cmd_gen(gen_kind, gen_bins, gen_balls, gen_seed, gen_scale, gen_cnf,
                     gen_out);
    }
    if (lp->parsed()) return cmd_lp(lp_instance, lp_out, lp_dump);
    if (cmp->parsed()) {
      return cmd_compare(cmp_instance, cmp_slack, cmp_mc, cmp_seed, cmp_threads,
                         cmp_max_bins, cmp_max_profiles, cmp_out);
    }
    if (sim->parsed()) {
      return cmd_simulate(sim_instance, sim_T, sim_seed, sim_slack, sim_threads,
                          sim_format, sim_out, sim_dump);
    }
  } catch (const CapExceeded& e) {
    std::cerr << "cap exceeded: " << e.what() << "\n";
    return kExitCap;
  } catch (const ParseError& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
