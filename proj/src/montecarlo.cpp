#include "ridehail/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <functional>
#include <thread>
#include <type_traits>

#include "json.hpp"
#include "ridehail/oracles.hpp"
#include "ridehail/rng.hpp"

namespace ridehail {

namespace {

constexpr std::uint64_t kBlockSize = 4096;
constexpr const char* kRngManifest =
    "xoshiro256++; episode k seeded with splitmix64(master + (k+1)*0x9E3779B97F4A7C15)";

struct Shape {
  int num_bins = 0;
  int num_balls = 0;
  std::vector<int> realizations;  // per ball, >= 1
  int num_pairs() const { return num_bins * (num_bins - 1) / 2; }
};

struct Counts {
  double value_sum = 0.0;
  double value_sq_sum = 0.0;
  std::vector<std::vector<std::vector<std::uint64_t>>> m1, m2;  // [t][j][i]
  std::vector<std::vector<std::uint64_t>> dummy1;               // [t][j]
  std::vector<std::vector<std::uint64_t>> vac;                  // [t][i]
  std::vector<std::vector<std::uint64_t>> vac_pair;             // [t][pair]

  explicit Counts(const Shape& shape) {
    m1.resize(shape.num_balls);
    m2.resize(shape.num_balls);
    dummy1.resize(shape.num_balls);
    for (int t = 0; t < shape.num_balls; ++t) {
      m1[t].assign(shape.realizations[t],
                   std::vector<std::uint64_t>(shape.num_bins, 0));
      m2[t] = m1[t];
      dummy1[t].assign(shape.realizations[t], 0);
    }
    vac.assign(shape.num_balls, std::vector<std::uint64_t>(shape.num_bins, 0));
    vac_pair.assign(shape.num_balls,
                    std::vector<std::uint64_t>(shape.num_pairs(), 0));
  }

  void add(const Counts& other) {
    value_sum += other.value_sum;
    value_sq_sum += other.value_sq_sum;
    for (std::size_t t = 0; t < m1.size(); ++t) {
      for (std::size_t j = 0; j < m1[t].size(); ++j) {
        for (std::size_t i = 0; i < m1[t][j].size(); ++i) {
          m1[t][j][i] += other.m1[t][j][i];
          m2[t][j][i] += other.m2[t][j][i];
        }
        dummy1[t][j] += other.dummy1[t][j];
      }
      for (std::size_t i = 0; i < vac[t].size(); ++i) vac[t][i] += other.vac[t][i];
      for (std::size_t p = 0; p < vac_pair[t].size(); ++p) {
        vac_pair[t][p] += other.vac_pair[t][p];
      }
    }
  }
};

void tally_episode(const MatchTrace& trace, const Shape& shape, Counts& counts) {
  const int m = shape.num_bins;
  std::vector<std::uint8_t> occupied(m, 0);
  std::size_t next_event = 0;
  for (int t = 0; t < shape.num_balls; ++t) {
    for (int i = 0, pair = 0; i < m; ++i) {
      const bool vi = !occupied[i];
      if (vi) ++counts.vac[t][i];
      for (int j = i + 1; j < m; ++j, ++pair) {
        if (vi && !occupied[j]) ++counts.vac_pair[t][pair];
      }
    }
    while (next_event < trace.events.size() &&
           trace.events[next_event].ball == t) {
      const MatchEvent& e = trace.events[next_event++];
      if (e.dummy) {
        ++counts.dummy1[t][e.realization];
      } else {
        occupied[e.bin] = 1;
        auto& table = (e.pick == 1) ? counts.m1 : counts.m2;
        ++table[t][e.realization][e.bin];
      }
    }
  }
  counts.value_sum += trace.total_weight;
  counts.value_sq_sum += trace.total_weight * trace.total_weight;
}

// Runs all episode blocks, possibly on several threads, and reduces the
// per-block tallies in block order so the result does not depend on the
// thread count.
Counts run_blocks(const Shape& shape, const SimOptions& options,
                  const std::function<MatchTrace(Rng&)>& episode) {
  const std::uint64_t T = options.episodes;
  const std::uint64_t num_blocks = (T + kBlockSize - 1) / kBlockSize;
  int threads = options.threads;
  if (threads <= 0) {
    threads = static_cast<int>(std::thread::hardware_concurrency());
    if (threads <= 0) threads = 1;
  }
  threads = static_cast<int>(
      std::min<std::uint64_t>(threads, std::max<std::uint64_t>(num_blocks, 1)));

  std::vector<Counts> block_totals(num_blocks, Counts(shape));
  auto run_block = [&](std::uint64_t b) {
    Counts& counts = block_totals[b];
    const std::uint64_t begin = b * kBlockSize;
    const std::uint64_t end = std::min(T, begin + kBlockSize);
    for (std::uint64_t e = begin; e < end; ++e) {
      Rng rng = Rng::substream(options.master_seed, e);
      tally_episode(episode(rng), shape, counts);
    }
  };

  if (threads <= 1) {
    for (std::uint64_t b = 0; b < num_blocks; ++b) run_block(b);
  } else {
    std::atomic<std::uint64_t> next_block{0};
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int w = 0; w < threads; ++w) {
      pool.emplace_back([&] {
        while (true) {
          const std::uint64_t b = next_block.fetch_add(1);
          if (b >= num_blocks) return;
          run_block(b);
        }
      });
    }
    for (std::thread& th : pool) th.join();
  }

  Counts total(shape);
  for (const Counts& block : block_totals) total.add(block);
  return total;
}

CellStat freq_stat(std::uint64_t count, std::uint64_t T) {
  const double mean = static_cast<double>(count) / static_cast<double>(T);
  double se = 0.0;
  if (T > 1) {
    const double var = mean * (1.0 - mean) * static_cast<double>(T) /
                       static_cast<double>(T - 1);
    se = std::sqrt(var / static_cast<double>(T));
  }
  return {mean, se};
}

// Plug-in covariance of two indicators with the asymptotic standard error
// of the sample covariance, both computable from the 2x2 joint counts.
CellStat cov_stat(std::uint64_t ci, std::uint64_t cj, std::uint64_t cij,
                  std::uint64_t T) {
  const double n = static_cast<double>(T);
  const double pi = static_cast<double>(ci) / n;
  const double pj = static_cast<double>(cj) / n;
  const double pij = static_cast<double>(cij) / n;
  const double cov = pij - pi * pj;

  const double n11 = static_cast<double>(cij);
  const double n10 = static_cast<double>(ci - cij);
  const double n01 = static_cast<double>(cj - cij);
  const double n00 = n - n11 - n10 - n01;
  auto sq = [](double x) { return x * x; };
  const double second_moment =
      (n11 * sq(1 - pi) * sq(1 - pj) + n10 * sq(1 - pi) * sq(pj) +
       n01 * sq(pi) * sq(1 - pj) + n00 * sq(pi) * sq(pj)) /
      n;
  const double var = std::max(0.0, second_moment - cov * cov);
  return {cov, std::sqrt(var / n)};
}

SimReport build_report(const Shape& shape, const SimOptions& options,
                       const Counts& counts, double value_bound) {
  const std::uint64_t T = options.episodes;
  SimReport report;
  report.episodes = T;
  report.master_seed = options.master_seed;
  report.rng_algorithm = kRngManifest;
  report.num_bins = shape.num_bins;
  report.value_upper_bound = value_bound;

  report.value.mean = counts.value_sum / static_cast<double>(T);
  if (T > 1) {
    const double var = std::max(
        0.0, (counts.value_sq_sum - report.value.mean * counts.value_sum) /
                 static_cast<double>(T - 1));
    report.value.std_error = std::sqrt(var / static_cast<double>(T));
  }

  report.first_pick.resize(shape.num_balls);
  report.second_pick.resize(shape.num_balls);
  report.match.resize(shape.num_balls);
  report.dummy_first.resize(shape.num_balls);
  report.vacancy.resize(shape.num_balls);
  report.vacancy_cov.resize(shape.num_balls);
  for (int t = 0; t < shape.num_balls; ++t) {
    const int J = shape.realizations[t];
    report.first_pick[t].resize(J);
    report.second_pick[t].resize(J);
    report.match[t].resize(J);
    report.dummy_first[t].resize(J);
    for (int j = 0; j < J; ++j) {
      report.first_pick[t][j].resize(shape.num_bins);
      report.second_pick[t][j].resize(shape.num_bins);
      report.match[t][j].resize(shape.num_bins);
      for (int i = 0; i < shape.num_bins; ++i) {
        report.first_pick[t][j][i] = freq_stat(counts.m1[t][j][i], T);
        report.second_pick[t][j][i] = freq_stat(counts.m2[t][j][i], T);
        report.match[t][j][i] =
            freq_stat(counts.m1[t][j][i] + counts.m2[t][j][i], T);
      }
      report.dummy_first[t][j] = freq_stat(counts.dummy1[t][j], T);
    }
    report.vacancy[t].resize(shape.num_bins);
    for (int i = 0; i < shape.num_bins; ++i) {
      report.vacancy[t][i] = freq_stat(counts.vac[t][i], T);
    }
    report.vacancy_cov[t].resize(shape.num_pairs());
    for (int i = 0, pair = 0; i < shape.num_bins; ++i) {
      for (int j = i + 1; j < shape.num_bins; ++j, ++pair) {
        report.vacancy_cov[t][pair] =
            cov_stat(counts.vac[t][i], counts.vac[t][j],
                     counts.vac_pair[t][pair], T);
      }
    }
  }
  return report;
}

double episode_value_bound(const std::vector<std::vector<double>>& max_weights) {
  if (max_weights.empty()) return 0.0;
  return max_weight_matching(max_weights);
}

}  // namespace

SimReport simulate(const PreparedPolicy& prepared, const Instance& instance,
                   const SimOptions& options) {
  if (options.episodes < 1) {
    throw std::invalid_argument("simulate needs at least one episode");
  }
  Shape shape;
  shape.num_bins = instance.num_bins;
  shape.num_balls = instance.num_balls();
  shape.realizations.assign(shape.num_balls, 1);

  std::vector<std::vector<double>> max_w;
  for (const Ball& ball : instance.balls) max_w.push_back(ball.weights);

  const Counts counts = run_blocks(shape, options, [&](Rng& rng) {
    return run_once(prepared, instance, rng);
  });
  return build_report(shape, options, counts, episode_value_bound(max_w));
}

SimReport simulate(const PreparedGeneralPolicy& prepared,
                   const GeneralInstance& instance, const SimOptions& options) {
  if (options.episodes < 1) {
    throw std::invalid_argument("simulate needs at least one episode");
  }
  Shape shape;
  shape.num_bins = instance.num_bins;
  shape.num_balls = instance.num_balls();
  shape.realizations.resize(shape.num_balls);
  std::vector<std::vector<double>> max_w;
  for (int t = 0; t < shape.num_balls; ++t) {
    const auto& reals = instance.balls[t].realizations;
    shape.realizations[t] = std::max<int>(1, static_cast<int>(reals.size()));
    std::vector<double> row(instance.num_bins, 0.0);
    for (const Realization& r : reals) {
      for (int i = 0; i < instance.num_bins; ++i) {
        row[i] = std::max(row[i], r.weights[i]);
      }
    }
    max_w.push_back(std::move(row));
  }

  const Counts counts = run_blocks(shape, options, [&](Rng& rng) {
    return run_general_once(prepared, instance, rng);
  });
  return build_report(shape, options, counts, episode_value_bound(max_w));
}

namespace {

template <typename Prepared, typename Inst, typename RunFn>
std::vector<CovEstimate> covariances_at(const Prepared& prepared,
                                        const Inst& instance,
                                        std::uint64_t episodes,
                                        std::uint64_t master_seed,
                                        int time_index, int threads,
                                        const RunFn& run) {
  if (time_index < 0 || time_index >= instance.num_balls()) {
    throw std::invalid_argument("time_index outside horizon");
  }
  SimOptions options;
  options.episodes = episodes;
  options.master_seed = master_seed;
  options.threads = threads;
  Shape shape;
  shape.num_bins = instance.num_bins;
  shape.num_balls = instance.num_balls();
  shape.realizations.assign(shape.num_balls, 1);  // match stats unused here
  const Counts counts = run_blocks(shape, options, [&](Rng& rng) {
    MatchTrace trace = run(prepared, instance, rng);
    for (MatchEvent& e : trace.events) e.realization = 0;
    return trace;
  });

  std::vector<CovEstimate> out;
  for (int i = 0, pair = 0; i < shape.num_bins; ++i) {
    for (int j = i + 1; j < shape.num_bins; ++j, ++pair) {
      out.push_back({i, j,
                     cov_stat(counts.vac[time_index][i], counts.vac[time_index][j],
                              counts.vac_pair[time_index][pair], episodes)});
    }
  }
  return out;
}

}  // namespace

std::vector<CovEstimate> estimate_covariances(const PreparedPolicy& prepared,
                                              const Instance& instance,
                                              std::uint64_t episodes,
                                              std::uint64_t master_seed,
                                              int time_index, int threads) {
  return covariances_at(prepared, instance, episodes, master_seed, time_index,
                        threads,
                        [](const PreparedPolicy& p, const Instance& inst,
                           Rng& rng) { return run_once(p, inst, rng); });
}

std::vector<CovEstimate> estimate_covariances(
    const PreparedGeneralPolicy& prepared, const GeneralInstance& instance,
    std::uint64_t episodes, std::uint64_t master_seed, int time_index,
    int threads) {
  return covariances_at(
      prepared, instance, episodes, master_seed, time_index, threads,
      [](const PreparedGeneralPolicy& p, const GeneralInstance& inst, Rng& rng) {
        return run_general_once(p, inst, rng);
      });
}

namespace {

nlohmann::json stat_json(const CellStat& stat) {
  return {{"mean", stat.mean}, {"se", stat.std_error}};
}

template <typename Table>
nlohmann::json nested_json(const Table& table) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& row : table) {
    if constexpr (std::is_same_v<std::decay_t<decltype(row)>, CellStat>) {
      out.push_back(stat_json(row));
    } else {
      out.push_back(nested_json(row));
    }
  }
  return out;
}

}  // namespace

std::string report_to_json(const SimReport& report) {
  nlohmann::json doc;
  doc["episodes"] = report.episodes;
  doc["master_seed"] = report.master_seed;
  doc["rng"] = report.rng_algorithm;
  doc["num_bins"] = report.num_bins;
  doc["value"] = stat_json(report.value);
  doc["value_upper_bound"] = report.value_upper_bound;
  doc["first_pick"] = nested_json(report.first_pick);
  doc["second_pick"] = nested_json(report.second_pick);
  doc["match"] = nested_json(report.match);
  doc["dummy_first"] = nested_json(report.dummy_first);
  doc["vacancy"] = nested_json(report.vacancy);
  doc["vacancy_cov"] = nested_json(report.vacancy_cov);
  return doc.dump(2) + "\n";
}

std::string report_to_csv(const SimReport& report) {
  std::string out =
      "ball,realization,bin,first_pick,first_pick_se,second_pick,second_pick_se,"
      "match,match_se,vacancy,vacancy_se\n";
  char line[256];
  for (std::size_t t = 0; t < report.match.size(); ++t) {
    for (std::size_t j = 0; j < report.match[t].size(); ++j) {
      for (std::size_t i = 0; i < report.match[t][j].size(); ++i) {
        std::snprintf(line, sizeof(line),
                      "%zu,%zu,%zu,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g\n",
                      t + 1, j + 1, i + 1, report.first_pick[t][j][i].mean,
                      report.first_pick[t][j][i].std_error,
                      report.second_pick[t][j][i].mean,
                      report.second_pick[t][j][i].std_error,
                      report.match[t][j][i].mean, report.match[t][j][i].std_error,
                      report.vacancy[t][i].mean, report.vacancy[t][i].std_error);
        out += line;
      }
    }
  }
  return out;
}

}  // namespace ridehail
