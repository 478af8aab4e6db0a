#include "ridehail/policy.hpp"

#include <cmath>
#include <stdexcept>

#include "json.hpp"
#include "ridehail/lp.hpp"

namespace ridehail {

namespace {

constexpr double kDummyCutoff = 1e-12;

void check_config(const PolicyConfig& config) {
  if (!(config.slack >= 0.0 && config.slack < 0.5)) {
    throw std::invalid_argument("policy slack must lie in [0, 0.5)");
  }
}

void require_feasible(const FeasibilityReport& report) {
  if (!report.feasible()) {
    throw std::invalid_argument("LP solution fails online feasibility: " +
                                report.violations.front().constraint);
  }
}

}  // namespace

PreparedPolicy prepare(const std::vector<std::vector<double>>& x,
                       const Instance& instance, const PolicyConfig& config) {
  check_config(config);
  require_feasible(check_online_feasible(x, instance));

  const int m = instance.num_bins;
  const int n = instance.num_balls();
  const double boost = 0.5 + config.slack;

  PreparedPolicy out;
  out.num_bins = m;
  out.slack = config.slack;
  out.late_threshold = (0.5 - config.slack) / boost;
  out.dummy_accept = boost;
  out.balls.resize(n);

  std::vector<double> prefix(m, 0.0);
  for (int t = 0; t < n; ++t) {
    PreparedBall& ball = out.balls[t];
    const double p = instance.balls[t].arrival_prob;
    ball.arrival_prob = p;
    ball.x.assign(m, 0.0);
    double row_sum = 0.0;
    for (int i = 0; i < m; ++i) {
      ball.x[i] = std::max(x[t][i], 0.0);
      row_sum += ball.x[i];
    }
    if (row_sum > p && row_sum > 0.0) {
      const double scale = p / row_sum;
      for (double& v : ball.x) v *= scale;
      row_sum = p;
    }
    ball.dummy_x = p - row_sum;
    if (ball.dummy_x < kDummyCutoff) ball.dummy_x = 0.0;
    ball.skip = (p <= 0.0) || (row_sum <= 0.0);

    ball.prefix = prefix;
    ball.accept.resize(m);
    ball.late.resize(m);
    for (int i = 0; i < m; ++i) {
      ball.accept[i] = std::min(1.0, boost / (1.0 - prefix[i] * boost));
      ball.late[i] = prefix[i] > out.late_threshold ? 1 : 0;
      prefix[i] += ball.x[i];
    }
  }
  return out;
}

PreparedGeneralPolicy prepare_general(
    const std::vector<std::vector<std::vector<double>>>& y,
    const GeneralInstance& instance, const PolicyConfig& config) {
  check_config(config);
  require_feasible(check_online_feasible(y, instance));

  const int m = instance.num_bins;
  const int n = instance.num_balls();
  const double boost = 0.5 + config.slack;

  PreparedGeneralPolicy out;
  out.num_bins = m;
  out.slack = config.slack;
  out.late_threshold = (0.5 - config.slack) / boost;
  out.dummy_accept = boost;
  out.balls.resize(n);

  std::vector<double> prefix(m, 0.0);
  for (int t = 0; t < n; ++t) {
    PreparedGeneralBall& ball = out.balls[t];
    const auto& reals = instance.balls[t].realizations;
    const int J = static_cast<int>(reals.size());
    ball.realization_prob.resize(J);
    ball.y.assign(J, std::vector<double>(m, 0.0));
    ball.dummy_y.assign(J, 0.0);
    double real_mass = 0.0;
    for (int j = 0; j < J; ++j) {
      const double p = reals[j].prob;
      ball.realization_prob[j] = p;
      double row_sum = 0.0;
      for (int i = 0; i < m; ++i) {
        ball.y[j][i] = std::max(y[t][j][i], 0.0);
        row_sum += ball.y[j][i];
      }
      if (row_sum > p && row_sum > 0.0) {
        const double scale = p / row_sum;
        for (double& v : ball.y[j]) v *= scale;
        row_sum = p;
      }
      ball.dummy_y[j] = p - row_sum;
      if (ball.dummy_y[j] < kDummyCutoff) ball.dummy_y[j] = 0.0;
      real_mass += row_sum;
    }
    ball.skip = (real_mass <= 0.0);

    ball.prefix = prefix;
    ball.accept.resize(m);
    ball.late.resize(m);
    for (int i = 0; i < m; ++i) {
      ball.accept[i] = std::min(1.0, boost / (1.0 - prefix[i] * boost));
      ball.late[i] = prefix[i] > out.late_threshold ? 1 : 0;
      for (int j = 0; j < J; ++j) prefix[i] += ball.y[j][i];
    }
  }
  return out;
}

namespace {

// Inverse-CDF pick over a ball's mass row in fixed bin order, dummy last.
// Returns the real bin index, or num_bins for the dummy slot.
int sample_pick(const std::vector<double>& row, double total, double u) {
  const int m = static_cast<int>(row.size());
  double acc = 0.0;
  for (int i = 0; i < m; ++i) {
    acc += row[i] / total;
    if (u < acc) return i;
  }
  return m;
}

}  // namespace

MatchTrace run_once(const PreparedPolicy& prepared, const Instance& instance,
                    Rng& rng) {
  const int m = prepared.num_bins;
  MatchTrace trace;
  trace.arrivals.assign(prepared.balls.size(), -1);
  std::vector<std::uint8_t> occupied(m, 0);

  for (std::size_t t = 0; t < prepared.balls.size(); ++t) {
    const PreparedBall& ball = prepared.balls[t];
    const double p = ball.arrival_prob;
    if (p <= 0.0) continue;
    if (rng.next_double() >= p) continue;
    trace.arrivals[t] = 0;
    if (ball.skip) continue;

    bool matched = false;
    const int first = sample_pick(ball.x, p, rng.next_double());
    if (first == m) {
      if (rng.next_double() < prepared.dummy_accept) {
        trace.events.push_back({static_cast<int>(t), m, true, 1, false, 0, 0.0});
        matched = true;
      }
    } else if (!occupied[first]) {
      if (rng.next_double() < ball.accept[first]) {
        occupied[first] = 1;
        const double w = instance.balls[t].weights[first];
        trace.events.push_back({static_cast<int>(t), first, false, 1,
                                ball.late[first] != 0, 0, w});
        trace.total_weight += w;
        matched = true;
      }
    }
    if (matched) continue;

    const int second = sample_pick(ball.x, p, rng.next_double());
    if (second < m && !occupied[second] && ball.late[second]) {
      occupied[second] = 1;
      const double w = instance.balls[t].weights[second];
      trace.events.push_back({static_cast<int>(t), second, false, 2, true, 0, w});
      trace.total_weight += w;
    }
  }
  return trace;
}

MatchTrace run_general_once(const PreparedGeneralPolicy& prepared,
                            const GeneralInstance& instance, Rng& rng) {
  const int m = prepared.num_bins;
  MatchTrace trace;
  trace.arrivals.assign(prepared.balls.size(), -1);
  std::vector<std::uint8_t> occupied(m, 0);

  for (std::size_t t = 0; t < prepared.balls.size(); ++t) {
    const PreparedGeneralBall& ball = prepared.balls[t];
    const int J = static_cast<int>(ball.realization_prob.size());
    if (J == 0) continue;

    const double u = rng.next_double();
    double acc = 0.0;
    int realized = -1;
    for (int j = 0; j < J; ++j) {
      acc += ball.realization_prob[j];
      if (u < acc) {
        realized = j;
        break;
      }
    }
    if (realized < 0) continue;
    trace.arrivals[t] = realized;
    if (ball.skip) continue;
    const double p = ball.realization_prob[realized];
    if (p <= 0.0) continue;

    bool matched = false;
    const int first =
        sample_pick(ball.y[realized], p, rng.next_double());
    if (first == m) {
      if (rng.next_double() < prepared.dummy_accept) {
        trace.events.push_back(
            {static_cast<int>(t), m, true, 1, false, realized, 0.0});
        matched = true;
      }
    } else if (!occupied[first]) {
      if (rng.next_double() < ball.accept[first]) {
        occupied[first] = 1;
        const double w = instance.balls[t].realizations[realized].weights[first];
        trace.events.push_back({static_cast<int>(t), first, false, 1,
                                ball.late[first] != 0, realized, w});
        trace.total_weight += w;
        matched = true;
      }
    }
    if (matched) continue;

    const int second =
        sample_pick(ball.y[realized], p, rng.next_double());
    if (second < m && !occupied[second] && ball.late[second]) {
      occupied[second] = 1;
      const double w = instance.balls[t].realizations[realized].weights[second];
      trace.events.push_back(
          {static_cast<int>(t), second, false, 2, true, realized, w});
      trace.total_weight += w;
    }
  }
  return trace;
}

std::string trace_to_json(const MatchTrace& trace) {
  nlohmann::json doc;
  doc["total_weight"] = trace.total_weight;
  doc["arrivals"] = trace.arrivals;
  nlohmann::json events = nlohmann::json::array();
  for (const MatchEvent& e : trace.events) {
    events.push_back({{"ball", e.ball},
                      {"bin", e.bin},
                      {"dummy", e.dummy},
                      {"pick", e.pick},
                      {"late", e.late},
                      {"realization", e.realization},
                      {"weight", e.weight}});
  }
  doc["events"] = std::move(events);
  return doc.dump();
}

namespace {

SingleBinPolicy single_bin_from_rows(
    const std::vector<std::vector<double>>& mass,          // [ball][realization]
    const std::vector<std::vector<double>>& probs,         // [ball][realization]
    const std::vector<std::vector<double>>& weights) {     // [ball][realization]
  SingleBinPolicy out;
  out.accept.resize(mass.size());
  double vacant = 1.0;  // probability the bin is still free
  for (std::size_t t = 0; t < mass.size(); ++t) {
    out.accept[t].resize(mass[t].size());
    double matched_here = 0.0;
    for (std::size_t j = 0; j < mass[t].size(); ++j) {
      const double denom = probs[t][j] * vacant;
      double a = denom > 1e-15 ? mass[t][j] / denom : 0.0;
      a = std::min(std::max(a, 0.0), 1.0);
      out.accept[t][j] = a;
      const double match_prob = probs[t][j] * vacant * a;
      out.expected_value += weights[t][j] * match_prob;
      matched_here += match_prob;
    }
    vacant -= matched_here;
  }
  return out;
}

}  // namespace

SingleBinPolicy single_bin_policy(const std::vector<std::vector<double>>& x,
                                  const Instance& instance) {
  if (instance.num_bins != 1) {
    throw std::invalid_argument("single_bin_policy requires exactly one bin");
  }
  require_feasible(check_online_feasible(x, instance));
  const int n = instance.num_balls();
  std::vector<std::vector<double>> mass(n), probs(n), weights(n);
  for (int t = 0; t < n; ++t) {
    mass[t] = {std::max(x[t][0], 0.0)};
    probs[t] = {instance.balls[t].arrival_prob};
    weights[t] = {instance.balls[t].weights[0]};
  }
  return single_bin_from_rows(mass, probs, weights);
}

SingleBinPolicy single_bin_policy(
    const std::vector<std::vector<std::vector<double>>>& y,
    const GeneralInstance& instance) {
  if (instance.num_bins != 1) {
    throw std::invalid_argument("single_bin_policy requires exactly one bin");
  }
  require_feasible(check_online_feasible(y, instance));
  const int n = instance.num_balls();
  std::vector<std::vector<double>> mass(n), probs(n), weights(n);
  for (int t = 0; t < n; ++t) {
    const auto& reals = instance.balls[t].realizations;
    for (std::size_t j = 0; j < reals.size(); ++j) {
      mass[t].push_back(std::max(y[t][j][0], 0.0));
      probs[t].push_back(reals[j].prob);
      weights[t].push_back(reals[j].weights[0]);
    }
  }
  return single_bin_from_rows(mass, probs, weights);
}

}  // namespace ridehail
