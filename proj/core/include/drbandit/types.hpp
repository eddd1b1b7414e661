#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace drbandit {

// Sparse feature vector: (index, value) pairs with strictly increasing
// indices and finite values.
using Features = std::vector<std::pair<std::uint32_t, double>>;

inline double dot(const Features& x, const std::vector<double>& w) {
  double s = 0.0;
  for (const auto& [i, v] : x)
    if (i < w.size()) s += w[i] * v;
  return s;
}

inline void validate_features(const Features& x) {
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i].second))
      throw std::invalid_argument("feature value not finite");
    if (i > 0 && x[i].first <= x[i - 1].first)
      throw std::invalid_argument("feature indices not strictly increasing");
  }
}

// Payload attached by data generators: the full label set and per-action
// scores of the source example. Exploration policies may read it; target
// policies and reward models only ever receive Features, so they cannot.
struct HiddenPayload {
  std::vector<int> labels;
  std::vector<double> scores;
};

struct Context {
  Features features;
  std::shared_ptr<const HiddenPayload> hidden;  // null for most data
};

// One exploration record. `outcome` is a reward or a loss depending on the
// dataset's mode flag; estimators do not care which.
struct LogEvent {
  Context context;
  int action = 0;
  double outcome = 0.0;     // in [0,1]
  double propensity = 1.0;  // recorded p_k = mu_k(a_k|x_k), in (0,1]
};

inline void validate_event(const LogEvent& e, int num_actions = -1) {
  if (!(e.outcome >= 0.0 && e.outcome <= 1.0))
    throw std::invalid_argument("outcome outside [0,1]");
  if (!(e.propensity > 0.0 && e.propensity <= 1.0))
    throw std::invalid_argument("propensity outside (0,1]");
  if (e.action < 0 || (num_actions > 0 && e.action >= num_actions))
    throw std::invalid_argument("action id out of range");
}

enum class OutcomeMode { kReward, kLoss };

// Conditional distribution over actions given a context's features.
class StationaryPolicy {
 public:
  virtual ~StationaryPolicy() = default;
  virtual int num_actions() const = 0;
  // Non-negative, sums to 1 within 1e-9.
  virtual std::vector<double> distribution(const Features& x) const = 0;
};

// Policy that adapts to the history it is fed through observe(). The history
// state is internal; clone() yields an independent copy with identical state,
// which is what makes replayed runs reproducible.
class NonstationaryPolicy {
 public:
  virtual ~NonstationaryPolicy() = default;
  virtual int num_actions() const = 0;
  virtual std::vector<double> distribution(const Features& x) const = 0;
  virtual void observe(const Features& x, int action, double outcome) = 0;
  virtual std::unique_ptr<NonstationaryPolicy> clone() const = 0;
};

// r_hat(x,a) plug-in; predictions are clamped to [0,1] by implementations.
class RewardModel {
 public:
  virtual ~RewardModel() = default;
  virtual double predict(const Features& x, int action) const = 0;

  // Policy-weighted prediction r_hat(x, nu) = sum_a nu(a|x) r_hat(x,a).
  double predict_policy(const Features& x, const std::vector<double>& dist) const {
    double s = 0.0;
    for (std::size_t a = 0; a < dist.size(); ++a)
      if (dist[a] > 0.0) s += dist[a] * predict(x, static_cast<int>(a));
    return s;
  }
};

// mu_hat_k(a|x) plug-in. +infinity means "no importance correction" and maps
// to importance weight exactly 0 downstream.
class PropensityModel {
 public:
  virtual ~PropensityModel() = default;
  virtual double estimate(const Features& x, int action, std::size_t event_index) const = 0;
};

constexpr double kInfPropensity = std::numeric_limits<double>::infinity();

// --- Simple reusable implementations -------------------------------------

class ZeroRewardModel final : public RewardModel {
 public:
  double predict(const Features&, int) const override { return 0.0; }
};

class ConstantRewardModel final : public RewardModel {
 public:
  explicit ConstantRewardModel(double c) : c_(c) {}
  double predict(const Features&, int) const override { return c_; }

 private:
  double c_;
};

// Uses the propensity recorded in the log (perfect logging).
class LoggedPropensityModel final : public PropensityModel {
 public:
  explicit LoggedPropensityModel(const std::vector<LogEvent>& events)
      : events_(&events) {}
  double estimate(const Features&, int, std::size_t k) const override {
    return (*events_)[k].propensity;
  }

 private:
  const std::vector<LogEvent>* events_;
};

class InfinitePropensityModel final : public PropensityModel {
 public:
  double estimate(const Features&, int, std::size_t) const override {
    return kInfPropensity;
  }
};

// Deterministic classifier viewed as a point-mass policy.
class ArgmaxPolicy final : public StationaryPolicy {
 public:
  ArgmaxPolicy(int num_actions, std::function<int(const Features&)> pick)
      : k_(num_actions), pick_(std::move(pick)) {}
  int num_actions() const override { return k_; }
  std::vector<double> distribution(const Features& x) const override {
    std::vector<double> d(k_, 0.0);
    d[pick_(x)] = 1.0;
    return d;
  }

 private:
  int k_;
  std::function<int(const Features&)> pick_;
};

class UniformPolicy final : public StationaryPolicy {
 public:
  explicit UniformPolicy(int num_actions) : k_(num_actions) {}
  int num_actions() const override { return k_; }
  std::vector<double> distribution(const Features&) const override {
    return std::vector<double>(k_, 1.0 / k_);
  }

 private:
  int k_;
};

// Ties broken by lowest action id everywhere.
inline int argmax_lowest(const std::vector<double>& scores) {
  int best = 0;
  for (int a = 1; a < static_cast<int>(scores.size()); ++a)
    if (scores[a] > scores[best]) best = a;
  return best;
}

}  // namespace drbandit
