#include "drbandit/discrete_dgp.hpp"

#include <cmath>
#include <stdexcept>

namespace drbandit {

void DiscreteDgp::validate() const {
  auto check_row = [](const std::vector<double>& row, const char* what) {
    double s = 0.0;
    for (double p : row) {
      if (p < 0.0) throw std::invalid_argument(std::string(what) + ": negative probability");
      s += p;
    }
    if (std::abs(s - 1.0) > 1e-12)
      throw std::invalid_argument(std::string(what) + ": row does not sum to 1");
  };
  check_row(context_prob, "context distribution");
  for (int x = 0; x < num_contexts(); ++x) {
    check_row(logging.at(x), "exploration policy");
    for (int a = 0; a < num_actions(); ++a) {
      double s = 0.0;
      for (const auto& atom : reward[x][a]) {
        if (atom.value < 0.0 || atom.value > 1.0)
          throw std::invalid_argument("reward support outside [0,1]");
        if (atom.prob < 0.0) throw std::invalid_argument("negative reward probability");
        s += atom.prob;
      }
      if (std::abs(s - 1.0) > 1e-12)
        throw std::invalid_argument("reward law does not sum to 1");
    }
  }
}

double DiscreteDgp::policy_value_exact(const PolicyTable& nu) const {
  double v = 0.0;
  for (int x = 0; x < num_contexts(); ++x)
    for (int a = 0; a < num_actions(); ++a)
      for (const auto& atom : reward[x][a])
        v += context_prob[x] * nu[x][a] * atom.prob * atom.value;
  return v;
}

double DiscreteDgp::policy_value_exact(const StationaryPolicy& nu) const {
  return policy_value_exact(tabulate(nu));
}

PolicyTable DiscreteDgp::tabulate(const StationaryPolicy& nu) const {
  PolicyTable t(num_contexts());
  for (int x = 0; x < num_contexts(); ++x) t[x] = nu.distribution(features_of(x));
  return t;
}

LogEvent DiscreteDgp::sample_event(Rng& rng) const {
  const int x = static_cast<int>(rng.categorical(context_prob));
  const int a = static_cast<int>(rng.categorical(logging[x]));
  std::vector<double> probs;
  probs.reserve(reward[x][a].size());
  for (const auto& atom : reward[x][a]) probs.push_back(atom.prob);
  const double r = reward[x][a][rng.categorical(probs)].value;
  LogEvent e;
  e.context.features = features_of(x);
  e.action = a;
  e.outcome = r;
  e.propensity = logging[x][a];
  return e;
}

DiscreteDgp make_discrete_dgp(const DgpSpec& spec) {
  if (spec.num_contexts < 1 || spec.num_contexts > 16)
    throw std::invalid_argument("num_contexts must be in [1,16]");
  if (spec.num_actions < 1 || spec.num_actions > 8)
    throw std::invalid_argument("num_actions must be in [1,8]");
  if (spec.reward_support < 1 || spec.reward_support > 4)
    throw std::invalid_argument("reward_support must be in [1,4]");

  Rng rng(spec.seed);
  DiscreteDgp dgp;

  auto random_simplex = [&rng](int n, double floor) {
    std::vector<double> v(n);
    double s = 0.0;
    for (double& p : v) {
      p = floor + rng.uniform01();
      s += p;
    }
    for (double& p : v) p /= s;
    return v;
  };

  dgp.context_prob = random_simplex(spec.num_contexts, 0.1);
  dgp.logging.resize(spec.num_contexts);
  dgp.reward.resize(spec.num_contexts);
  for (int x = 0; x < spec.num_contexts; ++x) {
    // Floor keeps every logged propensity bounded away from zero so that
    // importance weights stay moderate in sampled logs.
    dgp.logging[x] = random_simplex(spec.num_actions, 0.2);
    dgp.reward[x].resize(spec.num_actions);
    for (int a = 0; a < spec.num_actions; ++a) {
      auto probs = random_simplex(spec.reward_support, 0.1);
      auto& atoms = dgp.reward[x][a];
      atoms.resize(spec.reward_support);
      for (int s = 0; s < spec.reward_support; ++s) {
        atoms[s].value = rng.uniform01();
        atoms[s].prob = probs[s];
      }
    }
  }
  dgp.validate();
  return dgp;
}

std::vector<LogEvent> sample_log(const DiscreteDgp& dgp, std::size_t n,
                                 std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("sample_log: n must be >= 1");
  Rng rng(seed);
  std::vector<LogEvent> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(dgp.sample_event(rng));
  return out;
}

}  // namespace drbandit
