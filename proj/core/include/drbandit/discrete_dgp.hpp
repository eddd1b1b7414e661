#pragma once

#include <cstdint>
#include <vector>

#include "drbandit/rng.hpp"
#include "drbandit/types.hpp"

namespace drbandit {

// Probability table over K actions per context: table[x][a].
using PolicyTable = std::vector<std::vector<double>>;

// A fully enumerable ground-truth environment: finite context set with an
// explicit context distribution, finite-support reward law per (x,a), and a
// stationary exploration policy table. All the closed-form evaluators in
// analysis.hpp take one of these, because the formulas need the whole joint
// law, not samples.
struct DiscreteDgp {
  struct RewardAtom {
    double value = 0.0;  // in [0,1]
    double prob = 0.0;
  };

  std::vector<double> context_prob;                          // |X|
  std::vector<std::vector<std::vector<RewardAtom>>> reward;  // [x][a] -> atoms
  PolicyTable logging;                                       // mu[x][a]

  int num_contexts() const { return static_cast<int>(context_prob.size()); }
  int num_actions() const {
    return reward.empty() ? 0 : static_cast<int>(reward[0].size());
  }

  // Features handed to policies/models: one-hot on the context id.
  Features features_of(int x) const {
    return Features{{static_cast<std::uint32_t>(x), 1.0}};
  }
  // Inverse of features_of for events sampled from this DGP.
  static int context_of(const Features& f) {
    return static_cast<int>(f.at(0).first);
  }

  // r*(x,a) = E[r | x,a]
  double rstar(int x, int a) const {
    double s = 0.0;
    for (const auto& atom : reward[x][a]) s += atom.value * atom.prob;
    return s;
  }
  // Var[r | x,a]
  double reward_variance(int x, int a) const {
    const double m = rstar(x, a);
    double s = 0.0;
    for (const auto& atom : reward[x][a])
      s += atom.prob * (atom.value - m) * (atom.value - m);
    return s;
  }

  // Checks row sums to 1 within 1e-12 and reward support within [0,1].
  void validate() const;

  // Exact V(nu) as the triple sum over contexts, actions, reward support.
  double policy_value_exact(const PolicyTable& nu) const;
  double policy_value_exact(const StationaryPolicy& nu) const;

  // Materialize any StationaryPolicy as a table over this DGP's contexts.
  PolicyTable tabulate(const StationaryPolicy& nu) const;

  LogEvent sample_event(Rng& rng) const;
};

// Random normalized tables; capacity-limited so everything stays enumerable.
struct DgpSpec {
  int num_contexts = 4;   // <= 16
  int num_actions = 3;    // <= 8
  int reward_support = 2; // <= 4; 1 -> deterministic rewards
  std::uint64_t seed = 0;
};

DiscreteDgp make_discrete_dgp(const DgpSpec& spec);

// IID draws with recorded exact propensities (perfect logging).
std::vector<LogEvent> sample_log(const DiscreteDgp& dgp, std::size_t n,
                                 std::uint64_t seed);

// Tabular stationary policy over a DGP's one-hot contexts.
class TabularPolicy final : public StationaryPolicy {
 public:
  explicit TabularPolicy(PolicyTable table) : table_(std::move(table)) {}
  int num_actions() const override {
    return table_.empty() ? 0 : static_cast<int>(table_[0].size());
  }
  std::vector<double> distribution(const Features& x) const override {
    return table_.at(DiscreteDgp::context_of(x));
  }
  const PolicyTable& table() const { return table_; }

 private:
  PolicyTable table_;
};

// Tabular reward model over a DGP's one-hot contexts, clamped to [0,1].
class TabularRewardModel final : public RewardModel {
 public:
  explicit TabularRewardModel(std::vector<std::vector<double>> table)
      : table_(std::move(table)) {}
  double predict(const Features& x, int a) const override {
    double v = table_.at(DiscreteDgp::context_of(x)).at(a);
    return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
  }
  const std::vector<std::vector<double>>& table() const { return table_; }

 private:
  std::vector<std::vector<double>> table_;
};

// Tabular propensity model; entries may be +infinity.
class TabularPropensityModel final : public PropensityModel {
 public:
  explicit TabularPropensityModel(std::vector<std::vector<double>> table)
      : table_(std::move(table)) {}
  double estimate(const Features& x, int a, std::size_t) const override {
    return table_.at(DiscreteDgp::context_of(x)).at(a);
  }
  const std::vector<std::vector<double>>& table() const { return table_; }

 private:
  std::vector<std::vector<double>> table_;
};

}  // namespace drbandit
