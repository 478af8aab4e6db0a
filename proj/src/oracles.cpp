#include "ridehail/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ridehail/rng.hpp"

namespace ridehail {

namespace {

// Pair statistics cost 2^m * m^2 per step, so they are only collected up to
// this many bins; the marginal DP itself runs to the configured cap.
constexpr int kMaxPairBins = 16;

void check_bin_cap(int num_bins, const OracleCaps& caps) {
  if (num_bins > caps.max_bins) {
    throw CapExceeded("instance has " + std::to_string(num_bins) +
                      " bins, oracle cap is " + std::to_string(caps.max_bins));
  }
}

// Model-independent view of one prepared ball, as consumed by the exact DP.
struct NormalBall {
  bool skip = false;
  std::vector<double> probs;                 // arrival mass per realization
  std::vector<std::vector<double>> mass;     // pick mass, [realization][bin]
  std::vector<double> dummy;                 // [realization]
  std::vector<std::vector<double>> weights;  // [realization][bin]
  std::vector<double> accept;                // [bin]
  std::vector<std::uint8_t> late;            // [bin]
};

std::vector<NormalBall> to_normal(const PreparedPolicy& prepared,
                                  const Instance& instance) {
  std::vector<NormalBall> out(prepared.balls.size());
  for (std::size_t t = 0; t < prepared.balls.size(); ++t) {
    const PreparedBall& ball = prepared.balls[t];
    NormalBall& nb = out[t];
    nb.skip = ball.skip;
    nb.probs = {ball.arrival_prob};
    nb.mass = {ball.x};
    nb.dummy = {ball.dummy_x};
    nb.weights = {instance.balls[t].weights};
    nb.accept = ball.accept;
    nb.late = ball.late;
  }
  return out;
}

std::vector<NormalBall> to_normal(const PreparedGeneralPolicy& prepared,
                                  const GeneralInstance& instance) {
  std::vector<NormalBall> out(prepared.balls.size());
  for (std::size_t t = 0; t < prepared.balls.size(); ++t) {
    const PreparedGeneralBall& ball = prepared.balls[t];
    NormalBall& nb = out[t];
    nb.skip = ball.skip;
    nb.probs = ball.realization_prob;
    nb.mass = ball.y;
    nb.dummy = ball.dummy_y;
    for (const Realization& r : instance.balls[t].realizations) {
      nb.weights.push_back(r.weights);
    }
    nb.accept = ball.accept;
    nb.late = ball.late;
  }
  return out;
}

OracleResult run_policy_dp(const std::vector<NormalBall>& balls, int m,
                           double dummy_accept, const OracleCaps& caps,
                           bool keep_states) {
  check_bin_cap(m, caps);
  const int n = static_cast<int>(balls.size());
  const std::size_t num_masks = std::size_t{1} << m;
  const bool track_pairs = m <= kMaxPairBins;
  const int num_pairs = m * (m - 1) / 2;

  OracleResult result;
  result.first_pick.resize(n);
  result.second_pick.resize(n);
  result.dummy_first_pick.resize(n);
  result.vacancy.assign(n, std::vector<double>(m, 0.0));
  if (track_pairs) {
    result.vacancy_pair.assign(n, std::vector<double>(num_pairs, 0.0));
  }
  if (keep_states) {
    result.states.num_bins = m;
    result.states.mass.reserve(n + 1);
  }

  std::vector<double> dist(num_masks, 0.0), next(num_masks, 0.0);
  dist[0] = 1.0;

  for (int t = 0; t < n; ++t) {
    const NormalBall& ball = balls[t];
    const int J = static_cast<int>(ball.probs.size());
    result.first_pick[t].assign(J, std::vector<double>(m, 0.0));
    result.second_pick[t].assign(J, std::vector<double>(m, 0.0));
    result.dummy_first_pick[t].assign(J, 0.0);
    if (keep_states) result.states.mass.push_back(dist);

    for (std::size_t mask = 0; mask < num_masks; ++mask) {
      const double mass = dist[mask];
      if (mass == 0.0) continue;
      for (int i = 0; i < m; ++i) {
        if (!(mask >> i & 1)) result.vacancy[t][i] += mass;
      }
      if (track_pairs) {
        for (int i = 0, pair = 0; i < m; ++i) {
          const bool vi = !(mask >> i & 1);
          for (int j = i + 1; j < m; ++j, ++pair) {
            if (vi && !(mask >> j & 1)) result.vacancy_pair[t][pair] += mass;
          }
        }
      }
    }

    if (ball.skip) continue;

    std::fill(next.begin(), next.end(), 0.0);
    double p_none = 1.0;
    for (int j = 0; j < J; ++j) p_none -= ball.probs[j];
    if (p_none < 0.0) p_none = 0.0;

    for (std::size_t mask = 0; mask < num_masks; ++mask) {
      const double mass = dist[mask];
      if (mass == 0.0) continue;
      double stay = p_none;
      for (int j = 0; j < J; ++j) {
        const double p = ball.probs[j];
        if (p <= 0.0) continue;
        const std::vector<double>& row = ball.mass[j];
        // First pick: joint probability of "realization j, pick i, bin free,
        // coin accepts" is row[i] * q[i]; the arrival probability cancels
        // against the pick distribution row[i] / p.
        double first_total = 0.0;
        for (int i = 0; i < m; ++i) {
          if (mask >> i & 1) continue;
          const double f = row[i] * ball.accept[i];
          if (f <= 0.0) continue;
          first_total += f;
          result.first_pick[t][j][i] += mass * f;
          next[mask | (std::size_t{1} << i)] += mass * f;
        }
        const double dummy_match = ball.dummy[j] * dummy_accept;
        result.dummy_first_pick[t][j] += mass * dummy_match;
        // Everything that did not match on the first pick re-picks; the
        // second pick only lands on a vacant late bin.
        const double unmatched = p - first_total - dummy_match;
        double second_total = 0.0;
        if (unmatched > 0.0) {
          for (int i = 0; i < m; ++i) {
            if ((mask >> i & 1) || !ball.late[i]) continue;
            const double s = unmatched * row[i] / p;
            if (s <= 0.0) continue;
            second_total += s;
            result.second_pick[t][j][i] += mass * s;
            next[mask | (std::size_t{1} << i)] += mass * s;
          }
        }
        stay += p - first_total - second_total;
      }
      next[mask] += mass * stay;
    }
    dist.swap(next);
  }

  if (keep_states) result.states.mass.push_back(dist);

  double value = 0.0;
  for (int t = 0; t < n; ++t) {
    for (std::size_t j = 0; j < balls[t].probs.size(); ++j) {
      for (int i = 0; i < m; ++i) {
        value += balls[t].weights[j][i] *
                 (result.first_pick[t][j][i] + result.second_pick[t][j][i]);
      }
    }
  }
  result.value = value;
  return result;
}

}  // namespace

int OracleResult::pair_index(int i, int j, int num_bins) {
  if (i > j) std::swap(i, j);
  return i * num_bins - i * (i + 1) / 2 + (j - i - 1);
}

double OracleResult::covariance(int t, int i, int j, int num_bins) const {
  const double joint = vacancy_pair[t][pair_index(i, j, num_bins)];
  return joint - vacancy[t][i] * vacancy[t][j];
}

OracleResult exact_policy_marginals(const PreparedPolicy& prepared,
                                    const Instance& instance,
                                    const OracleCaps& caps, bool keep_states) {
  return run_policy_dp(to_normal(prepared, instance), prepared.num_bins,
                       prepared.dummy_accept, caps, keep_states);
}

OracleResult exact_policy_marginals(const PreparedGeneralPolicy& prepared,
                                    const GeneralInstance& instance,
                                    const OracleCaps& caps, bool keep_states) {
  return run_policy_dp(to_normal(prepared, instance), prepared.num_bins,
                       prepared.dummy_accept, caps, keep_states);
}

// --------------------------------------------------------------------------
// Optimal online policy.
// --------------------------------------------------------------------------

OptOnlineResult opt_online(const GeneralInstance& instance,
                           const OracleCaps& caps) {
  check_bin_cap(instance.num_bins, caps);
  const int m = instance.num_bins;
  const int n = instance.num_balls();
  const std::size_t num_masks = std::size_t{1} << m;

  OptOnlineResult result;
  result.decisions.resize(n);
  std::vector<double> after(num_masks, 0.0), current(num_masks, 0.0);

  for (int t = n - 1; t >= 0; --t) {
    const auto& reals = instance.balls[t].realizations;
    const int J = static_cast<int>(reals.size());
    result.decisions[t].assign(num_masks, std::vector<std::int8_t>(J, -1));
    double p_none = 1.0;
    for (const Realization& r : reals) p_none -= r.prob;
    if (p_none < 0.0) p_none = 0.0;

    for (std::size_t mask = 0; mask < num_masks; ++mask) {
      double v = p_none * after[mask];
      for (int j = 0; j < J; ++j) {
        const double skip_value = after[mask];
        double best = skip_value;
        int best_bin = -1;
        for (int i = 0; i < m; ++i) {
          if (mask >> i & 1) continue;
          const double candidate =
              reals[j].weights[i] + after[mask | (std::size_t{1} << i)];
          if (candidate > best) {
            best = candidate;
            best_bin = i;
          }
        }
        result.decisions[t][mask][j] = static_cast<std::int8_t>(best_bin);
        v += reals[j].prob * best;
      }
      current[mask] = v;
    }
    after.swap(current);
  }
  result.value = after[0];
  return result;
}

OptOnlineResult opt_online(const Instance& instance, const OracleCaps& caps) {
  return opt_online(lift_to_general(instance), caps);
}

OptOnlineMarginals opt_online_marginals(const GeneralInstance& instance,
                                        const OracleCaps& caps) {
  const OptOnlineResult table = opt_online(instance, caps);
  const int m = instance.num_bins;
  const int n = instance.num_balls();
  const std::size_t num_masks = std::size_t{1} << m;

  OptOnlineMarginals out;
  out.marginals.resize(n);
  out.state_mass.resize(n);
  std::vector<double> dist(num_masks, 0.0), next(num_masks, 0.0);
  dist[0] = 1.0;

  for (int t = 0; t < n; ++t) {
    const auto& reals = instance.balls[t].realizations;
    const int J = static_cast<int>(reals.size());
    out.marginals[t].assign(std::max(J, 1), std::vector<double>(m, 0.0));
    out.state_mass[t] = dist;
    std::fill(next.begin(), next.end(), 0.0);
    double p_none = 1.0;
    for (const Realization& r : reals) p_none -= r.prob;
    if (p_none < 0.0) p_none = 0.0;

    for (std::size_t mask = 0; mask < num_masks; ++mask) {
      const double mass = dist[mask];
      if (mass == 0.0) continue;
      next[mask] += mass * p_none;
      for (int j = 0; j < J; ++j) {
        const double p = reals[j].prob;
        if (p <= 0.0) continue;
        const int decision = table.decisions[t][mask][j];
        if (decision < 0) {
          next[mask] += mass * p;
        } else {
          out.marginals[t][j][decision] += mass * p;
          out.value += mass * p * reals[j].weights[decision];
          next[mask | (std::size_t{1} << decision)] += mass * p;
        }
      }
    }
    dist.swap(next);
  }
  return out;
}

OptOnlineMarginals opt_online_marginals(const Instance& instance,
                                        const OracleCaps& caps) {
  return opt_online_marginals(lift_to_general(instance), caps);
}

// --------------------------------------------------------------------------
// Prophet benchmark.
// --------------------------------------------------------------------------

namespace {

// Max-weight matching of arrived balls into free bins by subset DP; used on
// narrow instances where it beats the assignment method.
double matching_dp(const std::vector<const std::vector<double>*>& rows, int m) {
  const std::size_t num_masks = std::size_t{1} << m;
  std::vector<double> best(num_masks, 0.0);
  for (const std::vector<double>* row : rows) {
    if (!row) continue;
    // Ascending mask order: best[mask | bit] is a strictly larger index, so
    // it still holds the previous ball's layer when read, and each ball is
    // used at most once.
    for (std::size_t mask = 0; mask < num_masks; ++mask) {
      double v = best[mask];
      for (int i = 0; i < m; ++i) {
        if (mask >> i & 1) continue;
        const double candidate = (*row)[i] + best[mask | (std::size_t{1} << i)];
        if (candidate > v) v = candidate;
      }
      best[mask] = v;
    }
  }
  return best[0];
}

struct ProfileOption {
  double prob;
  const std::vector<double>* weights;  // nullptr for "no arrival"
};

OptOfflineResult offline_general(const GeneralInstance& instance,
                                 const OracleCaps& caps,
                                 std::uint64_t mc_samples, std::uint64_t mc_seed) {
  check_bin_cap(instance.num_bins, caps);
  const int m = instance.num_bins;
  const int n = instance.num_balls();

  std::vector<std::vector<ProfileOption>> options(n);
  double total_profiles = 1.0;
  for (int t = 0; t < n; ++t) {
    double p_none = 1.0;
    for (const Realization& r : instance.balls[t].realizations) {
      p_none -= r.prob;
      if (r.prob > 0.0) options[t].push_back({r.prob, &r.weights});
    }
    if (p_none > kProbSumTolerance) options[t].push_back({p_none, nullptr});
    if (options[t].empty()) options[t].push_back({1.0, nullptr});
    total_profiles *= static_cast<double>(options[t].size());
  }

  OptOfflineResult result;
  const bool use_dp = m <= 12;

  auto profile_value = [&](const std::vector<int>& choice) {
    std::vector<const std::vector<double>*> rows(n);
    for (int t = 0; t < n; ++t) rows[t] = options[t][choice[t]].weights;
    if (use_dp) return matching_dp(rows, m);
    std::vector<std::vector<double>> w;
    for (const auto* row : rows) {
      if (row) w.push_back(*row);
    }
    return w.empty() ? 0.0 : max_weight_matching(w);
  };

  if (total_profiles <= static_cast<double>(caps.max_offline_profiles)) {
    result.exact = true;
    std::vector<int> choice(n, 0);
    std::uint64_t count = 0;
    while (true) {
      double prob = 1.0;
      for (int t = 0; t < n; ++t) prob *= options[t][choice[t]].prob;
      if (prob > 0.0) result.value += prob * profile_value(choice);
      ++count;
      int t = n - 1;
      while (t >= 0 && ++choice[t] == static_cast<int>(options[t].size())) {
        choice[t--] = 0;
      }
      if (t < 0) break;
    }
    result.profiles = count;
    return result;
  }

  // Too many profiles to enumerate: seeded sample average with its standard
  // error, flagged as inexact.
  result.exact = false;
  result.profiles = mc_samples;
  Rng rng(mc_seed);
  double sum = 0.0, sum_sq = 0.0;
  std::vector<int> choice(n, 0);
  for (std::uint64_t s = 0; s < mc_samples; ++s) {
    for (int t = 0; t < n; ++t) {
      const double u = rng.next_double();
      double acc = 0.0;
      int pick = static_cast<int>(options[t].size()) - 1;
      for (std::size_t k = 0; k < options[t].size(); ++k) {
        acc += options[t][k].prob;
        if (u < acc) {
          pick = static_cast<int>(k);
          break;
        }
      }
      choice[t] = pick;
    }
    const double v = profile_value(choice);
    sum += v;
    sum_sq += v * v;
  }
  const double mean = sum / static_cast<double>(mc_samples);
  const double var =
      std::max(0.0, (sum_sq - mean * sum) / std::max<double>(1.0, mc_samples - 1));
  result.value = mean;
  result.std_error = std::sqrt(var / static_cast<double>(mc_samples));
  return result;
}

}  // namespace

OptOfflineResult opt_offline(const GeneralInstance& instance,
                             const OracleCaps& caps, std::uint64_t mc_samples,
                             std::uint64_t mc_seed) {
  return offline_general(instance, caps, mc_samples, mc_seed);
}

OptOfflineResult opt_offline(const Instance& instance, const OracleCaps& caps,
                             std::uint64_t mc_samples, std::uint64_t mc_seed) {
  return offline_general(lift_to_general(instance), caps, mc_samples, mc_seed);
}

// --------------------------------------------------------------------------
// Assignment method (potential form, O(rows^2 * cols)).
// --------------------------------------------------------------------------

double max_weight_matching(const std::vector<std::vector<double>>& weights) {
  if (weights.empty() || weights.front().empty()) return 0.0;
  int rows = static_cast<int>(weights.size());
  int cols = static_cast<int>(weights.front().size());
  // The sweep below needs rows <= cols; transpose if necessary.
  const bool transposed = rows > cols;
  if (transposed) std::swap(rows, cols);
  auto cost = [&](int r, int c) {
    return transposed ? -weights[c][r] : -weights[r][c];
  };

  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(rows + 1, 0.0), v(cols + 1, 0.0);
  std::vector<int> assigned(cols + 1, 0), way(cols + 1, 0);
  for (int r = 1; r <= rows; ++r) {
    assigned[0] = r;
    int j0 = 0;
    std::vector<double> minv(cols + 1, inf);
    std::vector<char> used(cols + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = assigned[j0];
      double delta = inf;
      int j1 = -1;
      for (int j = 1; j <= cols; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= cols; ++j) {
        if (used[j]) {
          u[assigned[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (assigned[j0] != 0);
    do {
      const int j1 = way[j0];
      assigned[j0] = assigned[j1];
      j0 = j1;
    } while (j0);
  }

  double total = 0.0;
  for (int j = 1; j <= cols; ++j) {
    if (assigned[j] != 0) total -= cost(assigned[j] - 1, j - 1);
  }
  return total;
}

}  // namespace ridehail
