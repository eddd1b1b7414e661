#include "drbandit/learn.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

#include "drbandit/rng.hpp"

namespace drbandit {

std::vector<double> LinearModel::scores(const Features& x) const {
  std::vector<double> s(heads.size());
  for (std::size_t a = 0; a < heads.size(); ++a) s[a] = heads[a].predict(x);
  return s;
}

nlohmann::json LinearModel::to_json(const std::string& type) const {
  nlohmann::json j;
  j["type"] = type;
  j["k"] = num_actions();
  j["heads"] = nlohmann::json::array();
  for (const auto& h : heads)
    j["heads"].push_back({{"w", h.weights}, {"b", h.intercept}});
  return j;
}

LinearModel LinearModel::from_json(const nlohmann::json& j) {
  LinearModel m;
  for (const auto& h : j.at("heads")) {
    LinearHead head;
    head.weights = h.at("w").get<std::vector<double>>();
    head.intercept = h.at("b").get<double>();
    m.heads.push_back(std::move(head));
  }
  return m;
}

namespace {

std::size_t dims_of(const std::vector<std::pair<Features, double>>& examples) {
  std::size_t d = 0;
  for (const auto& [x, y] : examples)
    for (const auto& [i, v] : x) d = std::max<std::size_t>(d, i + 1);
  return d;
}

// Apply w -> X^T X w + lambda w without materializing X^T X.
std::vector<double> ridge_apply(
    const std::vector<std::pair<Features, double>>& examples, double lambda,
    const std::vector<double>& w) {
  std::vector<double> out(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) out[i] = lambda * w[i];
  for (const auto& [x, y] : examples) {
    const double p = dot(x, w);
    for (const auto& [i, v] : x) out[i] += v * p;
  }
  return out;
}

std::vector<double> solve_cholesky(std::vector<std::vector<double>> a,
                                   std::vector<double> b) {
  const std::size_t n = b.size();
  // in-place LL^T factorization
  for (std::size_t j = 0; j < n; ++j) {
    double d = a[j][j];
    for (std::size_t k = 0; k < j; ++k) d -= a[j][k] * a[j][k];
    if (d <= 0.0) throw std::runtime_error("ridge system not positive definite");
    a[j][j] = std::sqrt(d);
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a[i][j];
      for (std::size_t k = 0; k < j; ++k) s -= a[i][k] * a[j][k];
      a[i][j] = s / a[j][j];
    }
  }
  for (std::size_t i = 0; i < n; ++i) {  // L y = b
    for (std::size_t k = 0; k < i; ++k) b[i] -= a[i][k] * b[k];
    b[i] /= a[i][i];
  }
  for (std::size_t i = n; i-- > 0;) {  // L^T w = y
    for (std::size_t k = i + 1; k < n; ++k) b[i] -= a[k][i] * b[k];
    b[i] /= a[i][i];
  }
  return b;
}

std::vector<double> solve_cg(
    const std::vector<std::pair<Features, double>>& examples, double lambda,
    const std::vector<double>& b) {
  std::vector<double> w(b.size(), 0.0), r = b, p = b;
  double rr = std::inner_product(r.begin(), r.end(), r.begin(), 0.0);
  for (std::size_t iter = 0; iter < 2 * b.size() + 10 && std::sqrt(rr) > 1e-8;
       ++iter) {
    const auto ap = ridge_apply(examples, lambda, p);
    const double pap = std::inner_product(p.begin(), p.end(), ap.begin(), 0.0);
    if (pap <= 0.0) break;
    const double alpha = rr / pap;
    for (std::size_t i = 0; i < w.size(); ++i) {
      w[i] += alpha * p[i];
      r[i] -= alpha * ap[i];
    }
    const double rr_new = std::inner_product(r.begin(), r.end(), r.begin(), 0.0);
    for (std::size_t i = 0; i < p.size(); ++i)
      p[i] = r[i] + (rr_new / rr) * p[i];
    rr = rr_new;
  }
  return w;
}

}  // namespace

LinearHead ridge_fit(const std::vector<std::pair<Features, double>>& examples,
                     double lambda) {
  if (examples.empty()) throw std::domain_error("ridge_fit: no examples");
  if (!(lambda > 0.0)) throw std::invalid_argument("ridge_fit: lambda must be > 0");
  const std::size_t d = dims_of(examples);
  LinearHead head;
  head.weights.assign(d, 0.0);
  if (d == 0) return head;

  std::vector<double> b(d, 0.0);  // X^T y
  for (const auto& [x, y] : examples)
    for (const auto& [i, v] : x) b[i] += v * y;

  if (d <= 512) {
    std::vector<std::vector<double>> a(d, std::vector<double>(d, 0.0));
    for (const auto& [x, y] : examples)
      for (const auto& [i, vi] : x)
        for (const auto& [j, vj] : x) a[i][j] += vi * vj;
    for (std::size_t i = 0; i < d; ++i) a[i][i] += lambda;
    head.weights = solve_cholesky(std::move(a), std::move(b));
  } else {
    head.weights = solve_cg(examples, lambda, b);
  }
  return head;
}

double PerActionRewardModel::predict(const Features& x, int action) const {
  return std::clamp(model_.heads[action].predict(x), 0.0, 1.0);
}

std::shared_ptr<PerActionRewardModel> fit_reward_model_per_action(
    const std::vector<LogEvent>& events, int num_actions, double lambda) {
  if (events.empty()) throw std::domain_error("no events");
  double global_sum = 0.0;
  for (const auto& e : events) global_sum += e.outcome;
  const double global_mean = global_sum / static_cast<double>(events.size());

  std::vector<LinearHead> heads(num_actions);
  for (int a = 0; a < num_actions; ++a) {
    std::vector<std::pair<Features, double>> own;
    double sum = 0.0;
    for (const auto& e : events)
      if (e.action == a) {
        own.emplace_back(e.context.features, e.outcome);
        sum += e.outcome;
      }
    if (own.empty()) {
      heads[a].intercept = global_mean;
      continue;
    }
    // center targets so the head's intercept carries the action mean and
    // the ridge penalty only shrinks the residual fit
    const double mean = sum / static_cast<double>(own.size());
    for (auto& [x, y] : own) y -= mean;
    heads[a] = ridge_fit(own, lambda);
    heads[a].intercept = mean;
  }
  return std::make_shared<PerActionRewardModel>(std::move(heads));
}

CostMatrixExample impute_costs(const LogEvent& event, const RewardModel& loss_model,
                               double propensity_estimate, int num_actions) {
  if (!(propensity_estimate > 0.0))
    throw std::domain_error("impute_costs: nonpositive propensity");
  CostMatrixExample ex;
  ex.features = event.context.features;
  ex.costs.resize(num_actions);
  for (int a = 0; a < num_actions; ++a) {
    const double lhat = loss_model.predict(event.context.features, a);
    ex.costs[a] = lhat;
    if (a == event.action)
      ex.costs[a] += (event.outcome - lhat) / propensity_estimate;
  }
  return ex;
}

double dlm_training_cost(const LinearModel& model,
                         const std::vector<CostMatrixExample>& examples) {
  double total = 0.0;
  for (const auto& ex : examples) total += ex.costs[model.pick(ex.features)];
  return total / static_cast<double>(examples.size());
}

namespace {

std::size_t dims_of_costs(const std::vector<CostMatrixExample>& examples) {
  std::size_t d = 0;
  for (const auto& ex : examples)
    for (const auto& [i, v] : ex.features) d = std::max<std::size_t>(d, i + 1);
  return d;
}

LinearModel dlm_run(const std::vector<CostMatrixExample>& examples,
                    int num_actions, double epsilon, Rng& rng, std::size_t d) {
  LinearModel model;
  model.heads.resize(num_actions);
  for (auto& h : model.heads) {
    h.weights.resize(d);
    for (double& w : h.weights) w = 0.01 * rng.gaussian();
  }

  std::vector<std::vector<double>> delta(num_actions, std::vector<double>(d));
  for (int t = 1; t <= 500; ++t) {
    const double eta = 0.5 * std::pow(static_cast<double>(t), -0.3);
    for (auto& row : delta) std::fill(row.begin(), row.end(), 0.0);
    for (const auto& ex : examples) {
      const auto s = model.scores(ex.features);
      std::vector<double> shifted(s);
      for (int a = 0; a < num_actions; ++a) shifted[a] -= epsilon * ex.costs[a];
      const int a1 = argmax_lowest(shifted);
      const int a2 = argmax_lowest(s);
      if (a1 == a2) continue;
      for (const auto& [i, v] : ex.features) {
        delta[a1][i] += eta * v;
        delta[a2][i] -= eta * v;
      }
    }
    double max_change = 0.0;
    for (int a = 0; a < num_actions; ++a)
      for (std::size_t i = 0; i < d; ++i) {
        model.heads[a].weights[i] += delta[a][i];
        max_change = std::max(max_change, std::abs(delta[a][i]));
      }
    if (max_change < 1e-6) break;
  }
  return model;
}

}  // namespace

LinearModel dlm_train(const std::vector<CostMatrixExample>& examples,
                      int num_actions, double epsilon, int restarts,
                      std::uint64_t seed) {
  if (num_actions < 2) throw std::invalid_argument("dlm_train: need K >= 2");
  if (examples.empty()) throw std::domain_error("dlm_train: no examples");
  const std::size_t d = dims_of_costs(examples);

  LinearModel best;
  double best_cost = std::numeric_limits<double>::infinity();
  for (int r = 0; r < restarts; ++r) {
    Rng rng(replicate_seed(seed, static_cast<std::uint64_t>(r)));
    LinearModel m = dlm_run(examples, num_actions, epsilon, rng, d);
    const double cost = dlm_training_cost(m, examples);
    if (cost < best_cost) {
      best_cost = cost;
      best = std::move(m);
    }
  }
  return best;
}

// --- Filter tree -------------------------------------------------------------

int FilterTree::predict(const Features& x) const {
  const Node* node = root_.get();
  while (node->leaf_action < 0)
    node = node->classifier(x) ? node->left.get() : node->right.get();
  return node->leaf_action;
}

int FilterTree::node_count() const {
  int count = 0;
  std::function<void(const Node*)> walk = [&](const Node* n) {
    if (n->leaf_action >= 0) return;
    ++count;
    walk(n->left.get());
    walk(n->right.get());
  };
  walk(root_.get());
  return count;
}

int FilterTree::depth() const {
  std::function<int(const Node*)> walk = [&](const Node* n) -> int {
    if (n->leaf_action >= 0) return 0;
    return 1 + std::max(walk(n->left.get()), walk(n->right.get()));
  };
  return walk(root_.get());
}

namespace {

// Train the subtree over actions [lo, hi); returns the node and fills
// winner[i] with the surviving action of example i.
std::unique_ptr<FilterTree::Node> train_subtree(
    const std::vector<CostMatrixExample>& examples, int lo, int hi,
    const BinaryLearner& base_learner, std::vector<int>& winner);

}  // namespace

FilterTree filter_tree_train(const std::vector<CostMatrixExample>& examples,
                             int num_actions, const BinaryLearner& base_learner,
                             std::uint64_t /*seed*/) {
  if (num_actions < 2) throw std::invalid_argument("filter tree: need K >= 2");
  if (examples.empty()) throw std::domain_error("filter tree: no examples");
  FilterTree tree;
  tree.num_actions_ = num_actions;
  std::vector<int> winner(examples.size());
  tree.root_ = train_subtree(examples, 0, num_actions, base_learner, winner);
  return tree;
}

namespace {

std::unique_ptr<FilterTree::Node> train_subtree(
    const std::vector<CostMatrixExample>& examples, int lo, int hi,
    const BinaryLearner& base_learner, std::vector<int>& winner) {
  auto node = std::make_unique<FilterTree::Node>();
  if (hi - lo == 1) {
    node->leaf_action = lo;
    std::fill(winner.begin(), winner.end(), lo);
    return node;
  }
  const int mid = lo + (hi - lo + 1) / 2;
  std::vector<int> left_winner(examples.size()), right_winner(examples.size());
  node->left = train_subtree(examples, lo, mid, base_learner, left_winner);
  node->right = train_subtree(examples, mid, hi, base_learner, right_winner);

  std::vector<WeightedBinaryExample> binary;
  binary.reserve(examples.size());
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const double cl = examples[i].costs[left_winner[i]];
    const double cr = examples[i].costs[right_winner[i]];
    if (cl == cr) continue;  // regret 0: filtered out
    binary.push_back({examples[i].features, cl < cr ? 1 : 0, std::abs(cl - cr)});
  }
  if (binary.empty()) {
    // no signal at this node; prefer the left (lower action ids)
    node->classifier = [](const Features&) { return 1; };
  } else {
    node->classifier = base_learner(binary);
  }
  for (std::size_t i = 0; i < examples.size(); ++i)
    winner[i] = node->classifier(examples[i].features) ? left_winner[i]
                                                       : right_winner[i];
  return node;
}

}  // namespace

BinaryClassifier decision_stump_learner(
    const std::vector<WeightedBinaryExample>& examples) {
  if (examples.empty())
    throw std::domain_error("decision_stump_learner: no examples");

  double total = 0.0, positive = 0.0;
  for (const auto& e : examples) {
    total += e.weight;
    if (e.label == 1) positive += e.weight;
  }
  // constant stumps as the baseline: predict the weighted majority
  double best_error = std::min(positive, total - positive);
  const int majority = positive >= total - positive ? 1 : 0;
  std::uint32_t best_feature = 0;
  double best_threshold = 0.0;
  int best_polarity = 0;  // 0 = constant stump
  int best_high_label = 1;

  std::map<std::uint32_t, std::vector<std::pair<double, std::size_t>>> by_feature;
  for (std::size_t k = 0; k < examples.size(); ++k)
    for (const auto& [i, v] : examples[k].features)
      by_feature[i].emplace_back(v, k);

  for (auto& [feature, vals] : by_feature) {
    // implicit zeros for examples that lack the feature
    std::vector<std::pair<double, std::size_t>> column = vals;
    std::vector<char> present(examples.size(), 0);
    for (const auto& [v, k] : vals) present[k] = 1;
    for (std::size_t k = 0; k < examples.size(); ++k)
      if (!present[k]) column.emplace_back(0.0, k);
    std::sort(column.begin(), column.end());

    // sweep thresholds between distinct values; err = weight of label-1 at or
    // below the threshold plus weight of label-0 above it (for "high -> 1")
    double below_pos = 0.0, below_neg = 0.0;
    const double all_pos = positive, all_neg = total - positive;
    for (std::size_t k = 0; k + 1 <= column.size(); ++k) {
      const auto& [v, idx] = column[k];
      if (examples[idx].label == 1)
        below_pos += examples[idx].weight;
      else
        below_neg += examples[idx].weight;
      if (k + 1 < column.size() && column[k + 1].first == v) continue;
      const double threshold =
          k + 1 < column.size() ? 0.5 * (v + column[k + 1].first) : v + 1.0;
      const double err_high1 = below_pos + (all_neg - below_neg);
      const double err_high0 = below_neg + (all_pos - below_pos);
      if (err_high1 < best_error) {
        best_error = err_high1;
        best_feature = feature;
        best_threshold = threshold;
        best_polarity = 1;
        best_high_label = 1;
      }
      if (err_high0 < best_error) {
        best_error = err_high0;
        best_feature = feature;
        best_threshold = threshold;
        best_polarity = 1;
        best_high_label = 0;
      }
    }
  }

  if (best_polarity == 0)
    return [majority](const Features&) { return majority; };
  const std::uint32_t f = best_feature;
  const double t = best_threshold;
  const int high = best_high_label;
  return [f, t, high](const Features& x) {
    double v = 0.0;
    for (const auto& [i, val] : x)
      if (i == f) {
        v = val;
        break;
      }
    return v > t ? high : 1 - high;
  };
}

// --- Logistic regression -------------------------------------------------------

LinearHead logistic_fit(const std::vector<std::pair<Features, int>>& examples,
                        double l2, int epochs, std::uint64_t /*seed*/) {
  if (examples.empty()) throw std::domain_error("logistic_fit: no examples");
  if (l2 < 0.0) throw std::invalid_argument("logistic_fit: l2 must be >= 0");
  std::size_t d = 0;
  for (const auto& [x, y] : examples)
    for (const auto& [i, v] : x) d = std::max<std::size_t>(d, i + 1);

  LinearHead head;
  head.weights.assign(d, 0.0);
  const double inv_n = 1.0 / static_cast<double>(examples.size());
  std::vector<double> grad(d);
  for (int epoch = 0; epoch < epochs; ++epoch) {
    const double step = 0.5 / (1.0 + epoch);
    std::fill(grad.begin(), grad.end(), 0.0);
    double grad_b = 0.0;
    for (const auto& [x, y] : examples) {
      const double p = 1.0 / (1.0 + std::exp(-head.predict(x)));
      const double residual = (p - y) * inv_n;
      for (const auto& [i, v] : x) grad[i] += residual * v;
      grad_b += residual;
    }
    for (std::size_t i = 0; i < d; ++i)
      head.weights[i] -= step * (grad[i] + l2 * head.weights[i]);
    head.intercept -= step * grad_b;
  }
  return head;
}

// --- Epsilon-greedy adaptive policy -------------------------------------------

EpsilonGreedyPolicy::EpsilonGreedyPolicy(const MultilabelDataset& warm_start,
                                         double epsilon, int retrain_period,
                                         std::uint64_t seed)
    : num_actions_(warm_start.num_classes),
      epsilon_(epsilon),
      retrain_period_(retrain_period),
      seed_(seed) {
  if (warm_start.examples.empty())
    throw std::invalid_argument("epsilon-greedy: warm-start set is empty");
  warm_.resize(num_actions_);
  for (const auto& ex : warm_start.examples)
    for (int a = 0; a < num_actions_; ++a) {
      const int label = std::find(ex.labels.begin(), ex.labels.end(), a) !=
                                ex.labels.end()
                            ? 1
                            : 0;
      warm_[a].emplace_back(ex.features, label);
    }
  retrain();
}

std::vector<double> EpsilonGreedyPolicy::distribution(const Features& x) const {
  std::vector<double> d(num_actions_, epsilon_ / num_actions_);
  d[model_.pick(x)] += 1.0 - epsilon_;
  return d;
}

void EpsilonGreedyPolicy::observe(const Features& x, int action, double outcome) {
  buffer_.push_back({x, action, outcome});
  ++observes_;
  if (observes_ % static_cast<std::size_t>(retrain_period_) == 0) retrain();
}

std::unique_ptr<NonstationaryPolicy> EpsilonGreedyPolicy::clone() const {
  return std::make_unique<EpsilonGreedyPolicy>(*this);
}

void EpsilonGreedyPolicy::retrain() {
  model_.heads.assign(num_actions_, LinearHead{});
  for (int a = 0; a < num_actions_; ++a) {
    std::vector<std::pair<Features, int>> data = warm_[a];
    for (const auto& obs : buffer_)
      if (obs.action == a)
        data.emplace_back(obs.x, obs.loss == 0.0 ? 1 : 0);
    model_.heads[a] = logistic_fit(data, 1e-3, 200,
                                   replicate_seed(seed_, static_cast<std::uint64_t>(a)));
  }
}

}  // namespace drbandit
