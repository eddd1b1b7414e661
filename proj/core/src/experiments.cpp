#include "drbandit/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "drbandit/estimators.hpp"
#include "drbandit/learn.hpp"
#include "drbandit/nonstat.hpp"
#include "drbandit/rng.hpp"

namespace drbandit {

void parallel_for(std::size_t n, int workers,
                  const std::function<void(std::size_t)>& fn) {
  if (workers <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  const int count = std::min<int>(workers, static_cast<int>(n));
  std::exception_ptr error;
  std::mutex error_mutex;
  for (int w = 0; w < count; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

void ExperimentConfig::validate() const {
  if (mode != "eval-stationary" && mode != "optimize" &&
      mode != "covariate-shift" && mode != "drns")
    throw std::invalid_argument("unknown mode: " + mode);
  if (replicates < 1) throw std::invalid_argument("replicates must be >= 1");
  if (!(eval_split > 0.0 && eval_split < 1.0))
    throw std::invalid_argument("eval_split must be in (0,1)");
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw std::invalid_argument("train_fraction must be in (0,1)");
  if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be > 0");
  if (workers < 1) throw std::invalid_argument("workers must be >= 1");
  if (num_classes < 2) throw std::invalid_argument("need >= 2 classes");
  if (n < 10) throw std::invalid_argument("dataset too small");
  for (double f : fractions)
    if (!(f > 0.0 && f <= 1.0))
      throw std::invalid_argument("fractions must be in (0,1]");
  for (double rho : rho_grid)
    if (!(rho >= 0.0 && rho <= 1.0))
      throw std::invalid_argument("rho values must be in [0,1]");
  if (!(c_max > 0.0 && c_max <= 1.0))
    throw std::invalid_argument("c_max must be in (0,1]");
  if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");
  if (ground_truth_sims < 1)
    throw std::invalid_argument("ground_truth_sims must be >= 1");
  if (!(target_epsilon >= 0.0 && target_epsilon <= 1.0))
    throw std::invalid_argument("target_epsilon must be in [0,1]");
}

nlohmann::json ExperimentConfig::to_json() const {
  return nlohmann::json{{"mode", mode},
                        {"dataset_path", dataset_path},
                        {"csv_header", csv_header},
                        {"n", n},
                        {"num_classes", num_classes},
                        {"dim", dim},
                        {"label_noise", label_noise},
                        {"replicates", replicates},
                        {"lambda", lambda},
                        {"seed", seed},
                        {"workers", workers},
                        {"out_dir", out_dir},
                        {"eval_split", eval_split},
                        {"train_fraction", train_fraction},
                        {"fractions", fractions},
                        {"rho_grid", rho_grid},
                        {"c_max", c_max},
                        {"horizon", horizon},
                        {"ground_truth_sims", ground_truth_sims},
                        {"warm_start", warm_start},
                        {"target_epsilon", target_epsilon}};
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  c.mode = j.value("mode", c.mode);
  c.dataset_path = j.value("dataset_path", c.dataset_path);
  c.csv_header = j.value("csv_header", c.csv_header);
  c.n = j.value("n", c.n);
  c.num_classes = j.value("num_classes", c.num_classes);
  c.dim = j.value("dim", c.dim);
  c.label_noise = j.value("label_noise", c.label_noise);
  c.replicates = j.value("replicates", c.replicates);
  c.lambda = j.value("lambda", c.lambda);
  c.seed = j.value("seed", c.seed);
  c.workers = j.value("workers", c.workers);
  c.out_dir = j.value("out_dir", c.out_dir);
  c.eval_split = j.value("eval_split", c.eval_split);
  c.train_fraction = j.value("train_fraction", c.train_fraction);
  c.fractions = j.value("fractions", c.fractions);
  c.rho_grid = j.value("rho_grid", c.rho_grid);
  c.c_max = j.value("c_max", c.c_max);
  c.horizon = j.value("horizon", c.horizon);
  c.ground_truth_sims = j.value("ground_truth_sims", c.ground_truth_sims);
  c.warm_start = j.value("warm_start", c.warm_start);
  c.target_epsilon = j.value("target_epsilon", c.target_epsilon);
  return c;
}

std::uint64_t ExperimentConfig::config_hash() const {
  // FNV-1a over the canonical JSON dump; config_hash ignores out_dir and
  // workers because they do not affect results.
  nlohmann::json j = to_json();
  j.erase("out_dir");
  j.erase("workers");
  const std::string s = j.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

ReplicateSummary ReplicateSummary::from_errors(const std::string& name,
                                               double ground_truth,
                                               const std::vector<double>& errors) {
  ReplicateSummary s;
  s.name = name;
  s.ground_truth = ground_truth;
  s.replicates = static_cast<int>(errors.size());
  if (errors.empty()) return s;
  double sum = 0.0, sum_sq = 0.0;
  for (double e : errors) {
    sum += e;
    sum_sq += e * e;
  }
  const double r = static_cast<double>(errors.size());
  s.bias = sum / r;
  s.rmse = std::sqrt(sum_sq / r);
  if (errors.size() > 1) {
    double ss = 0.0;
    for (double e : errors) ss += (e - s.bias) * (e - s.bias);
    s.std_dev = std::sqrt(ss / (r - 1.0));
  }
  return s;
}

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

MulticlassDataset multiclass_data(const ExperimentConfig& cfg) {
  if (!cfg.dataset_path.empty())
    return load_multiclass_csv(cfg.dataset_path, cfg.csv_header);
  return make_synthetic_multiclass(cfg.n, cfg.num_classes, cfg.dim,
                                   cfg.label_noise, replicate_seed(cfg.seed, 1));
}

MulticlassDataset take(const MulticlassDataset& data,
                       const std::vector<std::size_t>& idx, std::size_t lo,
                       std::size_t hi) {
  MulticlassDataset out;
  out.num_classes = data.num_classes;
  for (std::size_t i = lo; i < hi; ++i)
    out.examples.push_back(data.examples[idx[i]]);
  return out;
}

std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  for (std::size_t i = n; i > 1; --i)
    std::swap(idx[i - 1], idx[rng.uniform_index(i)]);
  return idx;
}

std::vector<CostMatrixExample> full_info_costs(const MulticlassDataset& data) {
  std::vector<CostMatrixExample> out;
  out.reserve(data.examples.size());
  for (const auto& [x, y] : data.examples) {
    CostMatrixExample ex;
    ex.features = x;
    ex.costs.assign(data.num_classes, 1.0);
    ex.costs[y] = 0.0;
    out.push_back(std::move(ex));
  }
  return out;
}

double test_error(const std::function<int(const Features&)>& pick,
                  const MulticlassDataset& data) {
  std::size_t wrong = 0;
  for (const auto& [x, y] : data.examples)
    if (pick(x) != y) ++wrong;
  return static_cast<double>(wrong) / static_cast<double>(data.examples.size());
}

}  // namespace

// --- eval-stationary ------------------------------------------------------------

EvalStationaryResult run_eval_stationary(const ExperimentConfig& cfg) {
  cfg.validate();
  const MulticlassDataset data = multiclass_data(cfg);
  const int k = data.num_classes;
  const auto idx =
      shuffled_indices(data.examples.size(), replicate_seed(cfg.seed, 2));
  const std::size_t cut = static_cast<std::size_t>(
      cfg.eval_split * static_cast<double>(data.examples.size()));
  const MulticlassDataset train = take(data, idx, 0, cut);
  const MulticlassDataset eval = take(data, idx, cut, data.examples.size());
  if (train.examples.empty() || eval.examples.empty())
    throw std::invalid_argument("split leaves an empty half");

  const LinearModel target = dlm_train(full_info_costs(train), k, 0.1, 20,
                                       replicate_seed(cfg.seed, 3));
  const ArgmaxPolicy policy(k, [&target](const Features& x) {
    return target.pick(x);
  });

  EvalStationaryResult res;
  res.ground_truth =
      test_error([&target](const Features& x) { return target.pick(x); }, eval);

  const int r_count = cfg.replicates;
  std::vector<double> err_dm(r_count), err_ips(r_count), err_dr(r_count);
  parallel_for(static_cast<std::size_t>(r_count), cfg.workers, [&](std::size_t r) {
    // clean split: the loss model trains on a partial-feedback pass over the
    // training half, never on the evaluation events
    const auto bandit_train =
        multiclass_to_bandit(train, replicate_seed(cfg.seed, 100 + 2 * r));
    const auto model = fit_reward_model_per_action(bandit_train, k, cfg.lambda);
    const auto bandit_eval =
        multiclass_to_bandit(eval, replicate_seed(cfg.seed, 101 + 2 * r));
    const LoggedPropensityModel prop(bandit_eval);
    err_dm[r] = dm_estimate(bandit_eval, policy, *model).estimate - res.ground_truth;
    err_ips[r] =
        ips_estimate(bandit_eval, policy, prop).estimate - res.ground_truth;
    err_dr[r] =
        dr_estimate(bandit_eval, policy, *model, prop).estimate - res.ground_truth;
  });
  res.summaries.push_back(
      ReplicateSummary::from_errors("dm", res.ground_truth, err_dm));
  res.summaries.push_back(
      ReplicateSummary::from_errors("ips", res.ground_truth, err_ips));
  res.summaries.push_back(
      ReplicateSummary::from_errors("dr", res.ground_truth, err_dr));
  return res;
}

std::string EvalStationaryResult::to_csv() const {
  std::string out = "estimator,ground_truth,bias,rmse,std,replicates\n";
  for (const auto& s : summaries)
    out += s.name + "," + fmt(s.ground_truth) + "," + fmt(s.bias) + "," +
           fmt(s.rmse) + "," + fmt(s.std_dev) + "," +
           std::to_string(s.replicates) + "\n";
  return out;
}

nlohmann::json EvalStationaryResult::to_json() const {
  nlohmann::json j;
  j["ground_truth"] = ground_truth;
  j["summaries"] = nlohmann::json::array();
  for (const auto& s : summaries)
    j["summaries"].push_back({{"estimator", s.name},
                              {"bias", s.bias},
                              {"rmse", s.rmse},
                              {"std", s.std_dev},
                              {"replicates", s.replicates}});
  return j;
}

// --- optimize ---------------------------------------------------------------------

const OptimizeResult::Cell& OptimizeResult::cell(
    const std::string& learner, const std::string& imputation) const {
  for (const auto& c : cells)
    if (c.learner == learner && c.imputation == imputation) return c;
  throw std::out_of_range("no such cell: " + learner + "/" + imputation);
}

OptimizeResult run_optimize(const ExperimentConfig& cfg) {
  cfg.validate();
  const MulticlassDataset data = multiclass_data(cfg);
  const int k = data.num_classes;
  const int r_count = cfg.replicates;

  struct Row {
    double dlm_dr, dlm_ips, ft_dr, ft_ips, dlm_full;
  };
  std::vector<Row> rows(r_count);

  parallel_for(static_cast<std::size_t>(r_count), cfg.workers, [&](std::size_t r) {
    const auto idx = shuffled_indices(data.examples.size(),
                                      replicate_seed(cfg.seed, 200 + r));
    const std::size_t cut = static_cast<std::size_t>(
        cfg.train_fraction * static_cast<double>(data.examples.size()));
    const MulticlassDataset train = take(data, idx, 0, cut);
    const MulticlassDataset test = take(data, idx, cut, data.examples.size());

    const auto bandit =
        multiclass_to_bandit(train, replicate_seed(cfg.seed, 500 + r));
    // as in the source protocol, the loss model is fitted on the same
    // partial-feedback data it then imputes
    const auto model = fit_reward_model_per_action(bandit, k, cfg.lambda);
    const ZeroRewardModel zero;

    std::vector<CostMatrixExample> dr_costs, ips_costs;
    dr_costs.reserve(bandit.size());
    ips_costs.reserve(bandit.size());
    for (const auto& e : bandit) {
      dr_costs.push_back(impute_costs(e, *model, e.propensity, k));
      ips_costs.push_back(impute_costs(e, zero, e.propensity, k));
    }
    const auto full_costs = full_info_costs(train);

    const std::uint64_t lseed = replicate_seed(cfg.seed, 800 + r);
    const LinearModel m_dr = dlm_train(dr_costs, k, 0.1, 20, lseed);
    const LinearModel m_ips = dlm_train(ips_costs, k, 0.1, 20, lseed);
    const LinearModel m_full = dlm_train(full_costs, k, 0.1, 20, lseed);
    const FilterTree t_dr =
        filter_tree_train(dr_costs, k, decision_stump_learner, lseed);
    const FilterTree t_ips =
        filter_tree_train(ips_costs, k, decision_stump_learner, lseed);

    rows[r].dlm_dr =
        test_error([&](const Features& x) { return m_dr.pick(x); }, test);
    rows[r].dlm_ips =
        test_error([&](const Features& x) { return m_ips.pick(x); }, test);
    rows[r].dlm_full =
        test_error([&](const Features& x) { return m_full.pick(x); }, test);
    rows[r].ft_dr =
        test_error([&](const Features& x) { return t_dr.predict(x); }, test);
    rows[r].ft_ips =
        test_error([&](const Features& x) { return t_ips.predict(x); }, test);
  });

  auto make_cell = [&](const std::string& learner, const std::string& imp,
                       double Row::* field) {
    OptimizeResult::Cell c;
    c.learner = learner;
    c.imputation = imp;
    for (const auto& row : rows) c.per_replicate.push_back(row.*field);
    double sum = 0.0;
    for (double v : c.per_replicate) sum += v;
    c.mean_test_error = sum / static_cast<double>(c.per_replicate.size());
    if (c.per_replicate.size() > 1) {
      double ss = 0.0;
      for (double v : c.per_replicate)
        ss += (v - c.mean_test_error) * (v - c.mean_test_error);
      c.std_dev =
          std::sqrt(ss / (static_cast<double>(c.per_replicate.size()) - 1.0));
    }
    return c;
  };

  OptimizeResult res;
  res.cells.push_back(make_cell("dlm", "dr", &Row::dlm_dr));
  res.cells.push_back(make_cell("dlm", "ips", &Row::dlm_ips));
  res.cells.push_back(make_cell("dlm", "full", &Row::dlm_full));
  res.cells.push_back(make_cell("filter-tree", "dr", &Row::ft_dr));
  res.cells.push_back(make_cell("filter-tree", "ips", &Row::ft_ips));
  return res;
}

std::string OptimizeResult::to_csv() const {
  std::string out = "learner,imputation,mean_test_error,std,replicates\n";
  for (const auto& c : cells)
    out += c.learner + "," + c.imputation + "," + fmt(c.mean_test_error) + "," +
           fmt(c.std_dev) + "," + std::to_string(c.per_replicate.size()) + "\n";
  return out;
}

nlohmann::json OptimizeResult::to_json() const {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& c : cells)
    j.push_back({{"learner", c.learner},
                 {"imputation", c.imputation},
                 {"mean_test_error", c.mean_test_error},
                 {"std", c.std_dev},
                 {"per_replicate", c.per_replicate}});
  return j;
}

// --- covariate-shift ---------------------------------------------------------------

namespace {

// r_hat for the reveal task: action 1 predicts a ridge fit of the revealed
// responses, action 0 is known to pay 0.
class RevealRewardModel final : public RewardModel {
 public:
  explicit RevealRewardModel(LinearHead head) : head_(std::move(head)) {}
  double predict(const Features& x, int action) const override {
    if (action != 1) return 0.0;
    return std::clamp(head_.predict(x), 0.0, 1.0);
  }

 private:
  LinearHead head_;
};

}  // namespace

CovariateShiftExperiment run_covariate_shift(const ExperimentConfig& cfg) {
  cfg.validate();
  const RegressionDataset data =
      make_synthetic_regression(cfg.n, cfg.dim, replicate_seed(cfg.seed, 10));
  double response_max = 0.0, response_sum = 0.0;
  for (const auto& [x, v] : data.examples) {
    response_max = std::max(response_max, v);
    response_sum += v;
  }
  CovariateShiftExperiment res;
  res.ground_truth =
      response_sum / response_max / static_cast<double>(data.examples.size());

  const ArgmaxPolicy always_reveal(2, [](const Features&) { return 1; });

  for (double f : cfg.fractions) {
    const std::size_t m = std::max<std::size_t>(
        2, static_cast<std::size_t>(f * static_cast<double>(data.examples.size())));
    std::vector<double> err_ips(cfg.replicates), err_dr(cfg.replicates);
    std::vector<char> ok(cfg.replicates, 0);
    parallel_for(
        static_cast<std::size_t>(cfg.replicates), cfg.workers,
        [&](std::size_t r) {
          const std::uint64_t rs =
              replicate_seed(cfg.seed, 3000 + 1000 * static_cast<std::uint64_t>(
                                                         f * 1e6) + r);
          const auto idx = shuffled_indices(data.examples.size(), rs);
          RegressionDataset sub;
          for (std::size_t i = 0; i < m; ++i)
            sub.examples.push_back(data.examples[idx[i]]);
          CovariateShiftResult shift;
          try {
            shift = covariate_shift_transform(sub, splitmix64(rs), response_max);
          } catch (const std::exception&) {
            return;  // degenerate subsample: skipped and counted
          }
          std::vector<std::pair<Features, double>> revealed;
          for (const auto& e : shift.events)
            if (e.action == 1)
              revealed.emplace_back(e.context.features, e.outcome);
          if (revealed.empty()) return;

          const RevealRewardModel model(ridge_fit(revealed, cfg.lambda));
          const LoggedPropensityModel prop(shift.events);
          err_ips[r] = ips_estimate(shift.events, always_reveal, prop).estimate -
                       res.ground_truth;
          err_dr[r] =
              dr_estimate(shift.events, always_reveal, model, prop).estimate -
              res.ground_truth;
          ok[r] = 1;
        });

    CovariateShiftResultRow row;
    row.fraction = f;
    row.subsample = m;
    std::vector<double> kept_ips, kept_dr;
    for (int r = 0; r < cfg.replicates; ++r) {
      if (!ok[r]) {
        ++row.skipped;
        continue;
      }
      kept_ips.push_back(err_ips[r]);
      kept_dr.push_back(err_dr[r]);
    }
    row.ips = ReplicateSummary::from_errors("ips", res.ground_truth, kept_ips);
    row.dr = ReplicateSummary::from_errors("dr", res.ground_truth, kept_dr);
    res.rows.push_back(std::move(row));
  }
  return res;
}

std::string CovariateShiftExperiment::to_csv() const {
  std::string out =
      "fraction,subsample,estimator,ground_truth,bias,rmse,std,replicates,"
      "skipped\n";
  for (const auto& row : rows)
    for (const ReplicateSummary* s : {&row.ips, &row.dr})
      out += fmt(row.fraction) + "," + std::to_string(row.subsample) + "," +
             s->name + "," + fmt(s->ground_truth) + "," + fmt(s->bias) + "," +
             fmt(s->rmse) + "," + fmt(s->std_dev) + "," +
             std::to_string(s->replicates) + "," + std::to_string(row.skipped) +
             "\n";
  return out;
}

nlohmann::json CovariateShiftExperiment::to_json() const {
  nlohmann::json j;
  j["ground_truth"] = ground_truth;
  j["rows"] = nlohmann::json::array();
  for (const auto& row : rows)
    j["rows"].push_back({{"fraction", row.fraction},
                         {"subsample", row.subsample},
                         {"skipped", row.skipped},
                         {"ips", {{"bias", row.ips.bias}, {"rmse", row.ips.rmse}}},
                         {"dr", {{"bias", row.dr.bias}, {"rmse", row.dr.rmse}}}});
  return j;
}

// --- drns sweep ------------------------------------------------------------------

namespace {

DrnsSweepRow summarize_sweep(const std::string& method, double rho,
                             const std::vector<double>& estimates,
                             int total_replicates, double truth) {
  DrnsSweepRow row;
  row.method = method;
  row.rho = rho;
  row.replicates = static_cast<int>(estimates.size());
  row.failures = total_replicates - row.replicates;
  if (estimates.empty()) return row;
  std::vector<double> errors(estimates.size());
  for (std::size_t i = 0; i < estimates.size(); ++i)
    errors[i] = estimates[i] - truth;
  const auto s = ReplicateSummary::from_errors(method, truth, errors);
  row.bias = s.bias;
  row.rmse = s.rmse;
  row.std_dev = s.std_dev;
  // 95% CI on rmse by the delta method over the squared errors
  if (errors.size() > 1 && row.rmse > 0.0) {
    double mean_sq = row.rmse * row.rmse, ss = 0.0;
    for (double e : errors) ss += (e * e - mean_sq) * (e * e - mean_sq);
    const double sd_sq =
        std::sqrt(ss / (static_cast<double>(errors.size()) - 1.0));
    row.rmse_ci = 1.96 * sd_sq /
                  (2.0 * row.rmse * std::sqrt(static_cast<double>(errors.size())));
  }
  return row;
}

}  // namespace

DrnsSweepResult run_drns_sweep(const ExperimentConfig& cfg) {
  cfg.validate();
  const MultilabelDataset data = make_synthetic_multilabel(
      cfg.n, cfg.num_classes, cfg.dim, replicate_seed(cfg.seed, 20));
  if (cfg.warm_start + 10 > data.examples.size())
    throw std::invalid_argument("warm_start leaves too little data");
  MultilabelDataset warm, rest;
  warm.num_classes = rest.num_classes = data.num_classes;
  warm.examples.assign(data.examples.begin(),
                       data.examples.begin() + cfg.warm_start);
  rest.examples.assign(data.examples.begin() + cfg.warm_start,
                       data.examples.end());

  const EpsilonGreedyPolicy prototype(warm, cfg.target_epsilon, 15,
                                      replicate_seed(cfg.seed, 21));
  const int T = cfg.horizon;

  DrnsSweepResult res;
  // ground truth: direct simulation of the adaptive policy
  {
    std::vector<double> vals(cfg.ground_truth_sims);
    parallel_for(
        static_cast<std::size_t>(cfg.ground_truth_sims), cfg.workers,
        [&](std::size_t s) {
          Rng rng(replicate_seed(cfg.seed, 40000 + s));
          auto policy = prototype.clone();
          double total = 0.0;
          for (int t = 0; t < T; ++t) {
            const auto& ex = rest.examples[rng.uniform_index(rest.examples.size())];
            const auto dist = policy->distribution(ex.features);
            const int a = static_cast<int>(rng.categorical(dist));
            const double loss =
                std::find(ex.labels.begin(), ex.labels.end(), a) == ex.labels.end()
                    ? 1.0
                    : 0.0;
            policy->observe(ex.features, a, loss);
            total += loss;
          }
          vals[s] = total / static_cast<double>(T);
        });
    double sum = 0.0;
    for (double v : vals) sum += v;
    res.ground_truth = sum / static_cast<double>(vals.size());
  }

  const int r_count = cfg.replicates;
  const std::size_t n_methods = 3 + cfg.rho_grid.size();
  // estimate matrix [method][replicate], NaN = failed
  std::vector<std::vector<double>> est(
      n_methods,
      std::vector<double>(r_count, std::numeric_limits<double>::quiet_NaN()));

  parallel_for(static_cast<std::size_t>(r_count), cfg.workers, [&](std::size_t r) {
    // fresh shuffled exploration stream per replicate
    MultilabelDataset stream;
    stream.num_classes = rest.num_classes;
    const auto idx =
        shuffled_indices(rest.examples.size(), replicate_seed(cfg.seed, 50000 + r));
    for (std::size_t i : idx) stream.examples.push_back(rest.examples[i]);
    const auto events =
        multilabel_biased_logger(stream, replicate_seed(cfg.seed, 60000 + r));
    double min_prop = 1.0;
    for (const auto& e : events) min_prop = std::min(min_prop, e.propensity);
    const auto model =
        fit_reward_model_per_action(events, data.num_classes, cfg.lambda);

    // DM: model-based simulation of the policy over the logged contexts
    {
      Rng rng(replicate_seed(cfg.seed, 70000 + r));
      auto policy = prototype.clone();
      double total = 0.0;
      for (int t = 0; t < T && static_cast<std::size_t>(t) < events.size(); ++t) {
        const Features& x = events[t].context.features;
        const auto dist = policy->distribution(x);
        const int a = static_cast<int>(rng.categorical(dist));
        const double loss_hat = model->predict(x, a);
        policy->observe(x, a, loss_hat);
        total += loss_hat;
      }
      est[0][r] = total / static_cast<double>(T);
    }
    const std::uint64_t run_seed = replicate_seed(cfg.seed, 80000 + r);
    {
      const auto rs = rs_run(events, prototype, min_prop, T, run_seed);
      if (rs.success) est[1][r] = rs.V_avg;
    }
    {
      const auto wc = wc_run(events, prototype, *model, min_prop, T, run_seed);
      if (wc.success) est[2][r] = wc.V_avg;
    }
    for (std::size_t g = 0; g < cfg.rho_grid.size(); ++g) {
      DrnsConfig dc;
      dc.rho = cfg.rho_grid[g];
      dc.c_max = cfg.c_max;
      dc.T = T;
      const auto run = drns_run(events, prototype, *model, dc, run_seed);
      if (run.success) est[3 + g][r] = run.V_avg;
    }
  });

  auto collect = [&](std::size_t m) {
    std::vector<double> v;
    for (int r = 0; r < r_count; ++r)
      if (!std::isnan(est[m][r])) v.push_back(est[m][r]);
    return v;
  };
  res.rows.push_back(
      summarize_sweep("dm", -1.0, collect(0), r_count, res.ground_truth));
  res.rows.push_back(
      summarize_sweep("rs", -1.0, collect(1), r_count, res.ground_truth));
  res.rows.push_back(
      summarize_sweep("wc", -1.0, collect(2), r_count, res.ground_truth));
  for (std::size_t g = 0; g < cfg.rho_grid.size(); ++g)
    res.rows.push_back(summarize_sweep("drns", cfg.rho_grid[g], collect(3 + g),
                                       r_count, res.ground_truth));
  return res;
}

std::string DrnsSweepResult::to_csv() const {
  std::string out =
      "method,rho,ground_truth,rmse,rmse_ci95,bias,std,replicates,failures\n";
  for (const auto& row : rows)
    out += row.method + "," + (row.rho < 0.0 ? std::string("") : fmt(row.rho)) +
           "," + fmt(ground_truth) + "," + fmt(row.rmse) + "," +
           fmt(row.rmse_ci) + "," + fmt(row.bias) + "," + fmt(row.std_dev) +
           "," + std::to_string(row.replicates) + "," +
           std::to_string(row.failures) + "\n";
  return out;
}

nlohmann::json DrnsSweepResult::to_json() const {
  nlohmann::json j;
  j["ground_truth"] = ground_truth;
  j["rows"] = nlohmann::json::array();
  for (const auto& row : rows)
    j["rows"].push_back({{"method", row.method},
                         {"rho", row.rho},
                         {"rmse", row.rmse},
                         {"rmse_ci95", row.rmse_ci},
                         {"bias", row.bias},
                         {"std", row.std_dev},
                         {"replicates", row.replicates},
                         {"failures", row.failures}});
  return j;
}

// --- report ----------------------------------------------------------------------

std::vector<std::string> run_and_report(const ExperimentConfig& cfg) {
  cfg.validate();
  std::filesystem::create_directories(cfg.out_dir);

  std::string csv;
  nlohmann::json result;
  if (cfg.mode == "eval-stationary") {
    const auto r = run_eval_stationary(cfg);
    csv = r.to_csv();
    result = r.to_json();
  } else if (cfg.mode == "optimize") {
    const auto r = run_optimize(cfg);
    csv = r.to_csv();
    result = r.to_json();
  } else if (cfg.mode == "covariate-shift") {
    const auto r = run_covariate_shift(cfg);
    csv = r.to_csv();
    result = r.to_json();
  } else {
    const auto r = run_drns_sweep(cfg);
    csv = r.to_csv();
    result = r.to_json();
  }

  const std::string csv_path =
      (std::filesystem::path(cfg.out_dir) / (cfg.mode + ".csv")).string();
  const std::string manifest_path =
      (std::filesystem::path(cfg.out_dir) / "manifest.json").string();
  {
    std::ofstream out(csv_path, std::ios::binary);
    // every row is regenerated by (config, seed); both live in the manifest
    out << "# seed=" << cfg.seed << " config_hash=" << std::hex
        << cfg.config_hash() << std::dec << "\n"
        << csv;
  }
  {
    nlohmann::json manifest;
    manifest["config"] = cfg.to_json();
    manifest["config_hash"] = cfg.config_hash();
    manifest["seed"] = cfg.seed;
    manifest["result"] = result;
    std::ofstream out(manifest_path, std::ios::binary);
    out << manifest.dump(2) << "\n";
  }
  return {csv_path, manifest_path};
}

}  // namespace drbandit
