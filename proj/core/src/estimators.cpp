#include "drbandit/estimators.hpp"

#include <cmath>
#include <stdexcept>

#include <json.hpp>

namespace drbandit {

const char* method_name(EstimatorMethod m) {
  switch (m) {
    case EstimatorMethod::kDm: return "DM";
    case EstimatorMethod::kIps: return "IPS";
    case EstimatorMethod::kDr: return "DR";
  }
  return "?";
}

std::string EstimateReport::to_json() const {
  nlohmann::json j{{"method", method_name(method)}, {"estimate", estimate}, {"n", n}};
  if (ci_half_width) j["ci_half_width"] = *ci_half_width;
  return j.dump();
}

namespace {

// Kahan accumulator; fixed event-order summation keeps the special-case
// identities (DR==IPS, DR==DM) bit-exact.
struct Kahan {
  double sum = 0.0;
  double comp = 0.0;
  void add(double v) {
    const double y = v - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
};

template <typename TermFn>
EstimateReport accumulate(EstimatorMethod method, std::size_t n,
                          const EstimatorOptions& opt, TermFn&& term_of) {
  if (n == 0) throw std::domain_error("estimator requires at least one event");
  EstimateReport rep;
  rep.method = method;
  rep.n = n;
  if (opt.retain_terms) rep.term_values.emplace();
  Kahan acc;
  for (std::size_t k = 0; k < n; ++k) {
    TermValue t = term_of(k);
    acc.add(t.value);
    if (rep.term_values) rep.term_values->push_back(t);
  }
  rep.estimate = acc.sum / static_cast<double>(n);
  return rep;
}

}  // namespace

TermValue dr_term(const LogEvent& event, const std::vector<double>& policy_dist,
                  const RewardModel& reward_model, double propensity_estimate,
                  std::optional<double> weight_cap) {
  if (!(propensity_estimate > 0.0))
    throw std::domain_error("propensity estimate must be positive (or +inf)");
  TermValue t;
  t.baseline = reward_model.predict_policy(event.context.features, policy_dist);
  if (std::isinf(propensity_estimate)) {
    t.importance_weight = 0.0;
    t.correction = 0.0;  // exactly, by the +inf convention
  } else {
    double w = policy_dist.at(event.action) / propensity_estimate;
    if (weight_cap && w > *weight_cap) w = *weight_cap;
    t.importance_weight = w;
    t.correction =
        w * (event.outcome - reward_model.predict(event.context.features, event.action));
  }
  t.value = t.baseline + t.correction;
  return t;
}

EstimateReport dm_estimate(const std::vector<LogEvent>& events,
                           const StationaryPolicy& policy,
                           const RewardModel& reward_model,
                           const EstimatorOptions& opt) {
  return accumulate(EstimatorMethod::kDm, events.size(), opt, [&](std::size_t k) {
    const auto dist = policy.distribution(events[k].context.features);
    return dr_term(events[k], dist, reward_model, kInfPropensity, opt.weight_cap);
  });
}

EstimateReport ips_estimate(const std::vector<LogEvent>& events,
                            const StationaryPolicy& policy,
                            const PropensityModel& propensity_model,
                            const EstimatorOptions& opt) {
  static const ZeroRewardModel zero;
  return accumulate(EstimatorMethod::kIps, events.size(), opt, [&](std::size_t k) {
    const auto& e = events[k];
    const double mu_hat = propensity_model.estimate(e.context.features, e.action, k);
    if (std::isinf(mu_hat))
      throw std::domain_error("IPS requires finite propensity estimates");
    const auto dist = policy.distribution(e.context.features);
    return dr_term(e, dist, zero, mu_hat, opt.weight_cap);
  });
}

EstimateReport dr_estimate(const std::vector<LogEvent>& events,
                           const StationaryPolicy& policy,
                           const RewardModel& reward_model,
                           const PropensityModel& propensity_model,
                           const EstimatorOptions& opt) {
  return accumulate(EstimatorMethod::kDr, events.size(), opt, [&](std::size_t k) {
    const auto& e = events[k];
    const double mu_hat = propensity_model.estimate(e.context.features, e.action, k);
    const auto dist = policy.distribution(e.context.features);
    return dr_term(e, dist, reward_model, mu_hat, opt.weight_cap);
  });
}

}  // namespace drbandit
