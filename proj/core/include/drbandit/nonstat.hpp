#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "drbandit/discrete_dgp.hpp"
#include "drbandit/types.hpp"

#include <json.hpp>

namespace drbandit {

// Rejection-sampling evaluator parameters. rho is the quantile parameter of
// the adaptive acceptance multiplier; quantile method is fixed to
// nearest-rank lower (rho = 0 -> minimum of the observed ratios).
struct DrnsConfig {
  double rho = 0.05;
  double c_max = 1.0;
  int T = 1;
};

struct BlockInfo {
  double c_t = 0.0;
  std::size_t size = 0;  // events processed in the block, acceptance included
};

struct DrnsResult {
  bool success = false;
  double V_drns = 0.0;  // cumulative estimate, sum of c_t * Vhat_k
  double V_avg = 0.0;   // V_drns / C
  double C = 0.0;       // sum of c_t over processed events
  std::size_t events_consumed = 0;
  std::vector<BlockInfo> blocks;
  // Frozen policy state at the start of each block (h_0 .. h_{T-1}); kept
  // only when requested, for the progressive validation policy.
  std::vector<std::shared_ptr<const NonstationaryPolicy>> block_policies;

  nlohmann::json to_json() const;
};

// The adaptive rejection-sampling evaluator. Per event: form the
// doubly-robust term for the current policy state, add c_t * Vhat_k to the
// running estimate, record the ratio p_k / pi_t(a_k|x_k), and accept the
// event with probability c_t * pi_t(a_k|x_k) / p_k. Each acceptance advances
// the policy, completes a block, and refreshes c_t to
// min{c_max, rho-quantile of the recorded ratios}. Fails if the stream is
// exhausted before T acceptances.
DrnsResult drns_run(const std::vector<LogEvent>& events,
                    const NonstationaryPolicy& target,
                    const RewardModel& reward_model, const DrnsConfig& config,
                    std::uint64_t seed, bool retain_policies = false);

// Plain rejection sampling ("replay") with a fixed multiplier c: the
// estimate is the sum of accepted rewards only. Unbiased for the target's
// cumulative reward when c * pi_t(a|x) <= p_k always.
DrnsResult rs_run(const std::vector<LogEvent>& events,
                  const NonstationaryPolicy& target, double c, int T,
                  std::uint64_t seed);

// Worst-case variant: drns_run semantics with the multiplier frozen at the
// dataset-wide minimum logging probability (unbiased, conservative).
DrnsResult wc_run(const std::vector<LogEvent>& events,
                  const NonstationaryPolicy& target,
                  const RewardModel& reward_model, double min_propensity, int T,
                  std::uint64_t seed, bool retain_policies = false);

// Restart-on-success mode: run drns_run repeatedly on the unconsumed tail of
// the stream with fresh state, until a run fails or the stream ends.
struct DrnsReplicated {
  std::vector<DrnsResult> replicates;  // successful runs only
  double mean_V_drns = 0.0;
  double mean_V_avg = 0.0;
};

DrnsReplicated drns_replicated(const std::vector<LogEvent>& events,
                               const NonstationaryPolicy& target,
                               const RewardModel& reward_model,
                               const DrnsConfig& config, std::uint64_t seed);

// Minimum stream length that keeps the failure probability of m trajectories
// of T acceptances below delta when every event is accepted with probability
// at least alpha: ceil((m T + ln(e/delta)) / alpha).
std::size_t failure_sample_requirement(int T, double alpha, double delta,
                                       int m = 1);

// Per-step bias mass on an enumerable instance:
//   eps = P_{(x,a)~pi}[E] - P_{(x,a)~mu}[E] / c,
// where E = {(x,a): c * pi(a|x) > mu(a|x)} collects the pairs whose
// acceptance probability is clipped.
double bias_mass_exact(const DiscreteDgp& dgp, const PolicyTable& pi, double c);

// Cumulative-estimate bias cap: T(T+1)/2 * eps / (1 - eps).
double theorem51_bound(double eps, int T);

// Exhaustive enumeration over T-step accepted histories with a fixed
// multiplier c and deterministic rewards. Compares the algorithm-induced
// history law against direct sampling from the target.
struct EnumerationCheck {
  double tv = 0.0;            // total variation between the two history laws
  double eps_max = 0.0;       // largest per-step bias mass encountered
  double expected_estimate = 0.0;  // E[sum_t c * Vhat over block t]
  double target_value = 0.0;       // E_pi[sum_t r_t]
  double bias_bound = 0.0;         // theorem51_bound(eps_max, T)
  double tv_bound = 0.0;           // 2 * eps_max * T / (1 - eps_max)
};

EnumerationCheck enumerate_drns_bias(const DiscreteDgp& dgp,
                                     const NonstationaryPolicy& target, double c,
                                     int T);

// Mixture weights c_t |B(t)| / C of a successful run. The last weight absorbs
// the accumulated rounding residual so the weights sum to exactly 1.0.
std::vector<double> progressive_validation_weights(const DrnsResult& result);

// The blended offline policy of a successful run:
//   pi_PV(a|x) = sum_t (c_t |B(t)| / C) * pi(a|x, h_{t-1}).
// Requires block policies retained by the run.
std::shared_ptr<StationaryPolicy> progressive_validation_policy(
    const DrnsResult& result);

// Deviation bound for |V_avg - value(pi_PV)| over N consumed exploration
// events: (N c_max / C) * 2 max{(1+M) ln(2/delta)/N,
// sqrt((v_r + M e_rhat) ln(2/delta) / N)}.
double progressive_validation_bound(std::size_t n_events, double c_max, double C,
                                    double weight_bound, double e_rhat,
                                    double v_r, double delta);

}  // namespace drbandit
