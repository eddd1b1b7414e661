#include "drbandit/nonstat.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "drbandit/rng.hpp"

namespace drbandit {

nlohmann::json DrnsResult::to_json() const {
  nlohmann::json j;
  j["success"] = success;
  j["V_drns"] = V_drns;
  j["V_avg"] = V_avg;
  j["events_consumed"] = events_consumed;
  j["blocks"] = nlohmann::json::array();
  for (const auto& b : blocks)
    j["blocks"].push_back({{"c_t", b.c_t}, {"size", b.size}});
  return j;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Nearest-rank lower quantile of a sorted multiset: the max(1, ceil(rho*n))-th
// smallest element.
double quantile_nearest_rank(const std::vector<double>& sorted, double rho) {
  const std::size_t n = sorted.size();
  std::size_t rank = static_cast<std::size_t>(
      std::ceil(rho * static_cast<double>(n) - 1e-12));
  rank = std::clamp<std::size_t>(rank, 1, n);
  return sorted[rank - 1];
}

enum class RunMode { kAdaptive, kFixedC, kRejectionSampling };

DrnsResult engine(const std::vector<LogEvent>& events, std::size_t start,
                  const NonstationaryPolicy& target,
                  const RewardModel& reward_model, double rho, double c_init,
                  double c_max, int T, std::uint64_t seed, RunMode mode,
                  bool retain_policies) {
  if (events.empty()) throw std::domain_error("empty event stream");
  if (T < 1) throw std::invalid_argument("T must be >= 1");
  if (!(c_max > 0.0 && c_max <= 1.0))
    throw std::invalid_argument("c_max must be in (0,1]");
  if (mode == RunMode::kAdaptive && !(rho >= 0.0 && rho <= 1.0))
    throw std::invalid_argument("rho must be in [0,1]");

  auto policy = target.clone();
  Rng rng(seed);
  DrnsResult res;
  double c = c_init;
  std::vector<double> ratios;  // sorted multiset Q
  std::size_t block_size = 0;
  int t = 1;
  if (retain_policies)
    res.block_policies.emplace_back(policy->clone());

  for (std::size_t k = start; k < events.size(); ++k) {
    const LogEvent& e = events[k];
    validate_event(e);
    ++res.events_consumed;
    ++block_size;

    const auto dist = policy->distribution(e.context.features);
    const double pi = dist[e.action];
    if (mode == RunMode::kRejectionSampling) {
      res.C += c;
    } else {
      const double baseline = reward_model.predict_policy(e.context.features, dist);
      const double rhat_a = reward_model.predict(e.context.features, e.action);
      const double vhat = baseline + (pi / e.propensity) * (e.outcome - rhat_a);
      res.V_drns += c * vhat;
      res.C += c;
      const double ratio = pi > 0.0 ? e.propensity / pi : kInf;
      ratios.insert(std::lower_bound(ratios.begin(), ratios.end(), ratio), ratio);
    }

    const double u = rng.uniform01();
    if (u <= c * pi / e.propensity) {
      if (mode == RunMode::kRejectionSampling) res.V_drns += e.outcome;
      res.blocks.push_back({c, block_size});
      block_size = 0;
      policy->observe(e.context.features, e.action, e.outcome);
      ++t;
      if (t == T + 1) {
        res.success = true;
        break;
      }
      if (retain_policies) res.block_policies.emplace_back(policy->clone());
      if (mode == RunMode::kAdaptive)
        c = std::min(c_max, quantile_nearest_rank(ratios, rho));
    }
  }
  if (mode == RunMode::kRejectionSampling) {
    res.V_avg = res.success ? res.V_drns / T : 0.0;
  } else {
    res.V_avg = res.C > 0.0 ? res.V_drns / res.C : 0.0;
  }
  if (!res.success && retain_policies) res.block_policies.clear();
  return res;
}

}  // namespace

DrnsResult drns_run(const std::vector<LogEvent>& events,
                    const NonstationaryPolicy& target,
                    const RewardModel& reward_model, const DrnsConfig& config,
                    std::uint64_t seed, bool retain_policies) {
  return engine(events, 0, target, reward_model, config.rho, config.c_max,
                config.c_max, config.T, seed, RunMode::kAdaptive,
                retain_policies);
}

DrnsResult rs_run(const std::vector<LogEvent>& events,
                  const NonstationaryPolicy& target, double c, int T,
                  std::uint64_t seed) {
  if (!(c > 0.0 && c <= 1.0))
    throw std::invalid_argument("c must be in (0,1]");
  ZeroRewardModel zero;
  return engine(events, 0, target, zero, 0.0, c, c, T, seed,
                RunMode::kRejectionSampling, false);
}

DrnsResult wc_run(const std::vector<LogEvent>& events,
                  const NonstationaryPolicy& target,
                  const RewardModel& reward_model, double min_propensity, int T,
                  std::uint64_t seed, bool retain_policies) {
  if (!(min_propensity > 0.0 && min_propensity <= 1.0))
    throw std::invalid_argument("min propensity must be in (0,1]");
  return engine(events, 0, target, reward_model, 0.0, min_propensity,
                min_propensity, T, seed, RunMode::kFixedC, retain_policies);
}

DrnsReplicated drns_replicated(const std::vector<LogEvent>& events,
                               const NonstationaryPolicy& target,
                               const RewardModel& reward_model,
                               const DrnsConfig& config, std::uint64_t seed) {
  DrnsReplicated out;
  std::size_t start = 0;
  std::uint64_t replicate = 0;
  while (start < events.size()) {
    DrnsResult r =
        engine(events, start, target, reward_model, config.rho, config.c_max,
               config.c_max, config.T, replicate_seed(seed, replicate),
               RunMode::kAdaptive, false);
    start += r.events_consumed;
    ++replicate;
    if (!r.success) break;
    out.replicates.push_back(std::move(r));
  }
  if (!out.replicates.empty()) {
    for (const auto& r : out.replicates) {
      out.mean_V_drns += r.V_drns;
      out.mean_V_avg += r.V_avg;
    }
    out.mean_V_drns /= static_cast<double>(out.replicates.size());
    out.mean_V_avg /= static_cast<double>(out.replicates.size());
  }
  return out;
}

std::size_t failure_sample_requirement(int T, double alpha, double delta,
                                       int m) {
  if (!(alpha > 0.0 && alpha <= 1.0))
    throw std::domain_error("alpha must be in (0,1]");
  if (!(delta > 0.0 && delta < 1.0))
    throw std::domain_error("delta must be in (0,1)");
  if (T < 1 || m < 1) throw std::invalid_argument("T and m must be >= 1");
  const double need =
      (static_cast<double>(m) * T + 1.0 + std::log(1.0 / delta)) / alpha;
  return static_cast<std::size_t>(std::ceil(need - 1e-12));
}

double bias_mass_exact(const DiscreteDgp& dgp, const PolicyTable& pi, double c) {
  double p_pi = 0.0, p_mu = 0.0;
  for (int x = 0; x < dgp.num_contexts(); ++x)
    for (int a = 0; a < dgp.num_actions(); ++a)
      if (c * pi[x][a] > dgp.logging[x][a]) {
        p_pi += dgp.context_prob[x] * pi[x][a];
        p_mu += dgp.context_prob[x] * dgp.logging[x][a];
      }
  return p_pi - p_mu / c;
}

double theorem51_bound(double eps, int T) {
  if (!(eps >= 0.0 && eps < 1.0))
    throw std::domain_error("eps must be in [0,1)");
  if (T < 1) throw std::invalid_argument("T must be >= 1");
  return 0.5 * T * (T + 1.0) * eps / (1.0 - eps);
}

namespace {

// Shared recursion for enumerate_drns_bias: walks all accepted histories,
// carrying the probability of the prefix under the algorithm-induced law
// (p_alg) and under direct sampling from the target (p_target).
struct Enumerator {
  const DiscreteDgp* dgp;
  double c;
  int T;
  EnumerationCheck out;

  void visit(const NonstationaryPolicy& policy, int depth, double p_alg,
             double p_target) {
    if (depth == T) {
      out.tv += 0.5 * std::abs(p_alg - p_target);
      return;
    }
    PolicyTable pi(dgp->num_contexts());
    for (int x = 0; x < dgp->num_contexts(); ++x)
      pi[x] = policy.distribution(dgp->features_of(x));

    const double eps = bias_mass_exact(*dgp, pi, c);
    out.eps_max = std::max(out.eps_max, eps);

    double e_pi_r = 0.0;
    for (int x = 0; x < dgp->num_contexts(); ++x)
      for (int a = 0; a < dgp->num_actions(); ++a)
        e_pi_r += dgp->context_prob[x] * pi[x][a] * dgp->rstar(x, a);
    out.target_value += p_target * e_pi_r;
    out.expected_estimate += p_alg * e_pi_r / (1.0 - eps);

    for (int x = 0; x < dgp->num_contexts(); ++x)
      for (int a = 0; a < dgp->num_actions(); ++a) {
        // algorithm: event ~ mu, accepted w.p. min{1, c*pi/mu}
        const double accept = dgp->context_prob[x] *
                              std::min(dgp->logging[x][a], c * pi[x][a]);
        const double child_alg = p_alg * accept / (c * (1.0 - eps));
        const double child_target = p_target * dgp->context_prob[x] * pi[x][a];
        if (child_alg == 0.0 && child_target == 0.0) continue;
        auto child = policy.clone();
        child->observe(dgp->features_of(x), a, dgp->rstar(x, a));
        visit(*child, depth + 1, child_alg, child_target);
      }
  }
};

}  // namespace

EnumerationCheck enumerate_drns_bias(const DiscreteDgp& dgp,
                                     const NonstationaryPolicy& target, double c,
                                     int T) {
  if (!(c > 0.0 && c <= 1.0)) throw std::invalid_argument("c must be in (0,1]");
  if (T < 0) throw std::invalid_argument("T must be >= 0");
  for (int x = 0; x < dgp.num_contexts(); ++x)
    for (int a = 0; a < dgp.num_actions(); ++a)
      if (dgp.reward[x][a].size() != 1)
        throw std::invalid_argument(
            "enumeration requires deterministic rewards");
  const double pairs =
      static_cast<double>(dgp.num_contexts()) * dgp.num_actions();
  if (std::pow(pairs, T) > 1e6)
    throw std::runtime_error("instance too large to enumerate");

  Enumerator en{&dgp, c, T, {}};
  en.visit(target, 0, 1.0, 1.0);
  en.out.bias_bound = theorem51_bound(en.out.eps_max, std::max(T, 1));
  en.out.tv_bound = 2.0 * en.out.eps_max * T / (1.0 - en.out.eps_max);
  return en.out;
}

namespace {

class PvMixturePolicy final : public StationaryPolicy {
 public:
  PvMixturePolicy(std::vector<std::shared_ptr<const NonstationaryPolicy>> parts,
                  std::vector<double> weights)
      : parts_(std::move(parts)), weights_(std::move(weights)) {}
  int num_actions() const override { return parts_.front()->num_actions(); }
  std::vector<double> distribution(const Features& x) const override {
    std::vector<double> d(num_actions(), 0.0);
    for (std::size_t t = 0; t < parts_.size(); ++t) {
      const auto part = parts_[t]->distribution(x);
      for (std::size_t a = 0; a < part.size(); ++a)
        d[a] += weights_[t] * part[a];
    }
    return d;
  }

 private:
  std::vector<std::shared_ptr<const NonstationaryPolicy>> parts_;
  std::vector<double> weights_;
};

}  // namespace

std::vector<double> progressive_validation_weights(const DrnsResult& result) {
  if (!result.success)
    throw std::domain_error("progressive validation needs a successful run");
  std::vector<double> weights(result.blocks.size());
  double partial = 0.0;
  for (std::size_t t = 0; t + 1 < result.blocks.size(); ++t) {
    weights[t] = result.blocks[t].c_t *
                 static_cast<double>(result.blocks[t].size) / result.C;
    partial += weights[t];
  }
  // The residual differs from c_T |B(T)| / C by at most a few ulps but makes
  // the mixture an exact probability distribution: fl(partial + (1 - partial))
  // is 1.0 for any partial in [0, 2] (Sterbenz for partial >= 0.5, sub-ulp
  // rounding otherwise).
  weights.back() = 1.0 - partial;
  return weights;
}

std::shared_ptr<StationaryPolicy> progressive_validation_policy(
    const DrnsResult& result) {
  if (!result.success)
    throw std::domain_error("progressive validation needs a successful run");
  if (result.block_policies.size() != result.blocks.size())
    throw std::domain_error("run did not retain per-block policies");
  return std::make_shared<PvMixturePolicy>(
      result.block_policies, progressive_validation_weights(result));
}

double progressive_validation_bound(std::size_t n_events, double c_max, double C,
                                    double weight_bound, double e_rhat,
                                    double v_r, double delta) {
  if (!(delta > 0.0 && delta < 1.0))
    throw std::domain_error("delta must be in (0,1)");
  const double n = static_cast<double>(n_events);
  const double log_term = std::log(2.0 / delta);
  const double dev =
      2.0 * std::max((1.0 + weight_bound) * log_term / n,
                     std::sqrt((v_r + weight_bound * e_rhat) * log_term / n));
  return (n * c_max / C) * dev;
}

}  // namespace drbandit
