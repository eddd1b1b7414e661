#pragma once

#include <optional>
#include <string>
#include <vector>

#include "drbandit/types.hpp"

namespace drbandit {

enum class EstimatorMethod { kDm, kIps, kDr };

const char* method_name(EstimatorMethod m);

// One V_hat_k, decomposed. value == baseline + correction as computed.
struct TermValue {
  double value = 0.0;
  double importance_weight = 0.0;  // nu(a_k|x_k) / mu_hat_k(a_k|x_k)
  double baseline = 0.0;           // r_hat(x_k, nu)
  double correction = 0.0;         // weight * (r_k - r_hat(x_k, a_k))
};

struct EstimateReport {
  EstimatorMethod method = EstimatorMethod::kDr;
  double estimate = 0.0;
  std::size_t n = 0;
  std::optional<std::vector<TermValue>> term_values;
  std::optional<double> ci_half_width;

  std::string to_json() const;
};

struct EstimatorOptions {
  bool retain_terms = false;
  // Cap nu/mu_hat at weight_cap when set (the M knob of Lemma 3.1); off by
  // default.
  std::optional<double> weight_cap;
};

// The single term of Eq. (1). propensity_estimate may be +infinity, in which
// case the correction is exactly 0 (the DM special case).
TermValue dr_term(const LogEvent& event, const std::vector<double>& policy_dist,
                  const RewardModel& reward_model, double propensity_estimate,
                  std::optional<double> weight_cap = std::nullopt);

EstimateReport dm_estimate(const std::vector<LogEvent>& events,
                           const StationaryPolicy& policy,
                           const RewardModel& reward_model,
                           const EstimatorOptions& opt = {});

EstimateReport ips_estimate(const std::vector<LogEvent>& events,
                            const StationaryPolicy& policy,
                            const PropensityModel& propensity_model,
                            const EstimatorOptions& opt = {});

// Event-order compensated summation: DR(r_hat==0) equals IPS and
// DR(mu_hat==inf) equals DM bit-for-bit, not just approximately.
EstimateReport dr_estimate(const std::vector<LogEvent>& events,
                           const StationaryPolicy& policy,
                           const RewardModel& reward_model,
                           const PropensityModel& propensity_model,
                           const EstimatorOptions& opt = {});

// Lemma 3.1: |V_hat_k| <= 1 + M when weights are bounded by M.
inline double term_range_bound(double weight_bound) { return 1.0 + weight_bound; }

}  // namespace drbandit
