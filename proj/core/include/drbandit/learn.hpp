#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "drbandit/datagen.hpp"
#include "drbandit/types.hpp"

#include <json.hpp>

namespace drbandit {

// One linear scoring head: w.x + b.
struct LinearHead {
  std::vector<double> weights;
  double intercept = 0.0;

  double predict(const Features& x) const { return intercept + dot(x, weights); }
};

// Per-action linear model; predictions are head scores, the induced
// classifier is argmax (ties -> lowest action id).
struct LinearModel {
  std::vector<LinearHead> heads;

  int num_actions() const { return static_cast<int>(heads.size()); }
  std::vector<double> scores(const Features& x) const;
  int pick(const Features& x) const { return argmax_lowest(scores(x)); }

  nlohmann::json to_json(const std::string& type) const;
  static LinearModel from_json(const nlohmann::json& j);
};

struct CostMatrixExample {
  Features features;
  std::vector<double> costs;  // one per action
};

// Ridge regression min_w sum (w.x - y)^2 + lambda ||w||^2; intercept stays 0.
// Normal equations (Cholesky) for dims <= 512, conjugate gradients to
// residual 1e-8 otherwise.
LinearHead ridge_fit(const std::vector<std::pair<Features, double>>& examples,
                     double lambda);

// K ridge heads, each trained on its own action's events with targets
// centered at that action's mean outcome. Actions with no events fall back
// to the global mean. Predictions are clamped to [0,1].
class PerActionRewardModel final : public RewardModel {
 public:
  PerActionRewardModel(std::vector<LinearHead> heads) : model_{std::move(heads)} {}
  double predict(const Features& x, int action) const override;
  const LinearModel& model() const { return model_; }

 private:
  LinearModel model_;
};

std::shared_ptr<PerActionRewardModel> fit_reward_model_per_action(
    const std::vector<LogEvent>& events, int num_actions, double lambda);

// Fill in the unrevealed per-action losses of one event:
//   l_{a'} = l_hat(x,a') + (l - l_hat(x,a')) / mu_hat  if a' is the logged
//   action, else l_hat(x,a'). Pass a ZeroRewardModel for the IPS variant.
CostMatrixExample impute_costs(const LogEvent& event, const RewardModel& loss_model,
                               double propensity_estimate, int num_actions);

// Direct loss minimization ("toward-better" updates), batch gradient style:
// per iteration t, for every example raise the head of
// a1 = argmax{score - eps*cost} and lower the head of a2 = argmax{score},
// learning rate t^{-0.3}/2; stop at max weight change < 1e-6 or 500 batches;
// best of `restarts` perturbed starts by training cost.
LinearModel dlm_train(const std::vector<CostMatrixExample>& examples,
                      int num_actions, double epsilon = 0.1, int restarts = 20,
                      std::uint64_t seed = 0);

double dlm_training_cost(const LinearModel& model,
                         const std::vector<CostMatrixExample>& examples);

// --- Filter tree -----------------------------------------------------------

struct WeightedBinaryExample {
  Features features;
  int label = 0;  // 0 or 1
  double weight = 1.0;
};

using BinaryClassifier = std::function<int(const Features&)>;
using BinaryLearner =
    std::function<BinaryClassifier(const std::vector<WeightedBinaryExample>&)>;

// Balanced binary tournament over the K actions, trained bottom-up on
// filtered examples; prediction descends root-to-leaf.
class FilterTree {
 public:
  struct Node {
    int leaf_action = -1;  // >= 0 iff leaf
    BinaryClassifier classifier;  // 1 -> left subtree wins
    std::unique_ptr<Node> left, right;
  };

  int predict(const Features& x) const;
  int num_actions() const { return num_actions_; }
  int node_count() const;   // internal nodes
  int depth() const;        // classifier queries per prediction

 private:
  std::unique_ptr<Node> root_;
  int num_actions_ = 0;

  friend FilterTree filter_tree_train(const std::vector<CostMatrixExample>&,
                                      int, const BinaryLearner&, std::uint64_t);
};

FilterTree filter_tree_train(const std::vector<CostMatrixExample>& examples,
                             int num_actions, const BinaryLearner& base_learner,
                             std::uint64_t seed = 0);

// Best single-feature threshold split by weighted error (both polarities,
// plus the constant stumps), so weighted error <= 0.5 always.
BinaryClassifier decision_stump_learner(
    const std::vector<WeightedBinaryExample>& examples);

// --- Logistic regression ----------------------------------------------------

// Full-batch gradient descent on mean logistic loss + (l2/2)||w||^2 (intercept
// unregularized), step 0.5/(1+epoch). Deterministic given seed.
LinearHead logistic_fit(const std::vector<std::pair<Features, int>>& examples,
                        double l2, int epochs = 200, std::uint64_t seed = 0);

// --- Epsilon-greedy adaptive policy -----------------------------------------

// K logistic heads scoring "action is a correct label"; acts
// (1-eps)-greedily on the argmax, retrains every `retrain_period` observes
// on the warm-start data plus its own buffered feedback.
class EpsilonGreedyPolicy final : public NonstationaryPolicy {
 public:
  EpsilonGreedyPolicy(const MultilabelDataset& warm_start, double epsilon = 0.1,
                      int retrain_period = 15, std::uint64_t seed = 0);

  int num_actions() const override { return num_actions_; }
  std::vector<double> distribution(const Features& x) const override;
  void observe(const Features& x, int action, double outcome) override;
  std::unique_ptr<NonstationaryPolicy> clone() const override;

 private:
  void retrain();

  int num_actions_;
  double epsilon_;
  int retrain_period_;
  std::uint64_t seed_;
  // warm-start binary examples per head, fixed at construction
  std::vector<std::vector<std::pair<Features, int>>> warm_;
  struct Observation {
    Features x;
    int action;
    double loss;
  };
  std::vector<Observation> buffer_;
  std::size_t observes_ = 0;
  LinearModel model_;
};

}  // namespace drbandit
