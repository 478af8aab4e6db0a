#include "ridehail/instance.hpp"

#include <cmath>
#include <cstdlib>
#include <limits>
#include <sstream>

#include "json.hpp"
#include "ridehail/rng.hpp"

namespace ridehail {
namespace {

using nlohmann::json;

bool finite_nonneg(double v) { return std::isfinite(v) && v >= 0.0; }

void check_weights(const std::vector<double>& w, int num_bins,
                   const std::string& where, std::vector<std::string>& out) {
  if (static_cast<int>(w.size()) != num_bins) {
    std::ostringstream os;
    os << where << ": weight vector has length " << w.size() << ", expected "
       << num_bins;
    out.push_back(os.str());
  }
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (!finite_nonneg(w[i])) {
      std::ostringstream os;
      os << where << ".w[" << i + 1 << "]: weight " << w[i]
         << " must be finite and non-negative";
      out.push_back(os.str());
    }
  }
}

void check_prob(double p, const std::string& where,
                std::vector<std::string>& out) {
  if (!(std::isfinite(p) && p >= 0.0 && p <= 1.0)) {
    std::ostringstream os;
    os << where << ": arrival_prob " << p << " outside [0, 1]";
    out.push_back(os.str());
  }
}

}  // namespace

std::vector<std::string> validate(const Instance& instance) {
  std::vector<std::string> out;
  if (instance.num_bins < 1) out.push_back("num_bins must be at least 1");
  for (int t = 0; t < instance.num_balls(); ++t) {
    const Ball& ball = instance.balls[t];
    std::string where = "balls[" + std::to_string(t + 1) + "]";
    check_prob(ball.arrival_prob, where, out);
    check_weights(ball.weights, instance.num_bins, where, out);
  }
  return out;
}

std::vector<std::string> validate(const GeneralInstance& instance) {
  std::vector<std::string> out;
  if (instance.num_bins < 1) out.push_back("num_bins must be at least 1");
  for (int t = 0; t < instance.num_balls(); ++t) {
    const GeneralBall& ball = instance.balls[t];
    std::string where = "balls[" + std::to_string(t + 1) + "]";
    double total = 0.0;
    for (std::size_t j = 0; j < ball.realizations.size(); ++j) {
      const Realization& r = ball.realizations[j];
      std::string rwhere = where + ".realizations[" + std::to_string(j + 1) + "]";
      check_prob(r.prob, rwhere, out);
      check_weights(r.weights, instance.num_bins, rwhere, out);
      total += r.prob;
    }
    if (total > 1.0 + kProbSumTolerance) {
      std::ostringstream os;
      os << where << ": realization probabilities sum to " << total
         << ", exceeding 1";
      out.push_back(os.str());
    }
  }
  return out;
}

GeneralInstance lift_to_general(const Instance& instance) {
  if (auto report = validate(instance); !report.empty()) {
    throw std::invalid_argument("lift_to_general: invalid instance: " +
                                report.front());
  }
  GeneralInstance out;
  out.num_bins = instance.num_bins;
  out.balls.reserve(instance.balls.size());
  for (const Ball& ball : instance.balls) {
    GeneralBall g;
    g.realizations.push_back({ball.arrival_prob, ball.weights});
    out.balls.push_back(std::move(g));
  }
  return out;
}

GeneralInstance gap_instance() {
  GeneralInstance out;
  out.num_bins = 2;
  out.balls.push_back({{{0.5, {1.0, 0.0}}}});
  out.balls.push_back({{{0.5, {0.0, 1.0}}}});
  out.balls.push_back({{{1.0, {1.0, 1.0}}}});
  return out;
}

Instance random_instance(int num_bins, int num_balls, std::uint64_t seed,
                         double weight_scale) {
  if (num_bins < 1 || num_balls < 1) {
    throw std::invalid_argument("random_instance: need at least 1 bin and 1 ball");
  }
  Rng rng(seed);
  Instance out;
  out.num_bins = num_bins;
  out.balls.resize(num_balls);
  for (Ball& ball : out.balls) {
    ball.arrival_prob = rng.next_double_open_closed();
    ball.weights.resize(num_bins);
    for (double& w : ball.weights) w = rng.next_double() * weight_scale;
  }
  return out;
}

namespace {

double parse_number_or_rational(const json& node, const std::string& path) {
  if (node.is_number()) return node.get<double>();
  if (node.is_string()) {
    const std::string s = node.get<std::string>();
    const auto slash = s.find('/');
    if (slash == std::string::npos || slash == 0 || slash + 1 == s.size()) {
      throw ParseError(path + ": expected rational string \"a/b\", got \"" + s +
                       "\"");
    }
    char* end = nullptr;
    const double num = std::strtod(s.substr(0, slash).c_str(), &end);
    const std::string den_str = s.substr(slash + 1);
    const double den = std::strtod(den_str.c_str(), &end);
    if (den == 0.0) throw ParseError(path + ": zero denominator in \"" + s + "\"");
    return num / den;
  }
  throw ParseError(path + ": expected number or rational string");
}

std::vector<double> parse_weight_list(const json& node, const std::string& path) {
  if (!node.is_array()) throw ParseError(path + ": expected array");
  std::vector<double> out;
  out.reserve(node.size());
  for (std::size_t i = 0; i < node.size(); ++i) {
    out.push_back(
        parse_number_or_rational(node[i], path + "[" + std::to_string(i + 1) + "]"));
  }
  return out;
}

const json& require_field(const json& node, const char* key,
                          const std::string& path) {
  auto it = node.find(key);
  if (it == node.end()) throw ParseError(path + ": missing field \"" + key + "\"");
  return *it;
}

template <typename T>
void check_valid_or_throw(const T& instance) {
  if (auto report = validate(instance); !report.empty()) {
    throw ParseError("instance fails validation: " + report.front());
  }
}

}  // namespace

AnyInstance read_instance(const std::string& bytes) {
  json doc;
  try {
    doc = json::parse(bytes);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError("top level: expected object");
  const std::string model =
      require_field(doc, "model", "top level").get<std::string>();
  const json& bins_node = require_field(doc, "num_bins", "top level");
  if (!bins_node.is_number_integer()) {
    throw ParseError("num_bins: expected integer");
  }
  const int num_bins = bins_node.get<int>();
  const json& balls = require_field(doc, "balls", "top level");
  if (!balls.is_array()) throw ParseError("balls: expected array");

  if (model == "basic") {
    Instance out;
    out.num_bins = num_bins;
    for (std::size_t t = 0; t < balls.size(); ++t) {
      const std::string path = "balls[" + std::to_string(t + 1) + "]";
      Ball ball;
      ball.arrival_prob =
          parse_number_or_rational(require_field(balls[t], "p", path), path + ".p");
      ball.weights = parse_weight_list(require_field(balls[t], "w", path), path + ".w");
      out.balls.push_back(std::move(ball));
    }
    check_valid_or_throw(out);
    return out;
  }
  if (model == "general") {
    GeneralInstance out;
    out.num_bins = num_bins;
    for (std::size_t t = 0; t < balls.size(); ++t) {
      const std::string path = "balls[" + std::to_string(t + 1) + "]";
      const json& reals = require_field(balls[t], "realizations", path);
      if (!reals.is_array()) throw ParseError(path + ".realizations: expected array");
      GeneralBall ball;
      for (std::size_t j = 0; j < reals.size(); ++j) {
        const std::string rpath =
            path + ".realizations[" + std::to_string(j + 1) + "]";
        Realization r;
        r.prob = parse_number_or_rational(require_field(reals[j], "p", rpath),
                                          rpath + ".p");
        r.weights =
            parse_weight_list(require_field(reals[j], "w", rpath), rpath + ".w");
        ball.realizations.push_back(std::move(r));
      }
      out.balls.push_back(std::move(ball));
    }
    check_valid_or_throw(out);
    return out;
  }
  throw ParseError("model: unknown tag \"" + model + "\"");
}

std::string write_instance(const Instance& instance) {
  json doc;
  doc["model"] = "basic";
  doc["num_bins"] = instance.num_bins;
  json balls = json::array();
  for (const Ball& ball : instance.balls) {
    balls.push_back({{"p", ball.arrival_prob}, {"w", ball.weights}});
  }
  doc["balls"] = std::move(balls);
  return doc.dump(2) + "\n";
}

std::string write_instance(const GeneralInstance& instance) {
  json doc;
  doc["model"] = "general";
  doc["num_bins"] = instance.num_bins;
  json balls = json::array();
  for (const GeneralBall& ball : instance.balls) {
    json reals = json::array();
    for (const Realization& r : ball.realizations) {
      reals.push_back({{"p", r.prob}, {"w", r.weights}});
    }
    balls.push_back({{"realizations", std::move(reals)}});
  }
  doc["balls"] = std::move(balls);
  return doc.dump(2) + "\n";
}

}  // namespace ridehail
