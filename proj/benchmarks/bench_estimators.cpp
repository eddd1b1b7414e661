#include <benchmark/benchmark.h>

#include "drbandit/discrete_dgp.hpp"
#include "drbandit/estimators.hpp"
#include "drbandit/learn.hpp"
#include "drbandit/nonstat.hpp"

namespace {

using namespace drbandit;

struct Fixture {
  DiscreteDgp dgp;
  std::vector<LogEvent> events;
  TabularPolicy target;
  TabularRewardModel rhat;

  explicit Fixture(std::size_t n)
      : dgp(make_discrete_dgp({8, 4, 2, 11})),
        events(sample_log(dgp, n, 17)),
        target(make_discrete_dgp({8, 4, 2, 23}).logging),
        rhat([this] {
          std::vector<std::vector<double>> t(dgp.num_contexts());
          for (int x = 0; x < dgp.num_contexts(); ++x)
            for (int a = 0; a < dgp.num_actions(); ++a)
              t[x].push_back(dgp.rstar(x, a) * 0.9);
          return t;
        }()) {}
};

void BM_DrEstimate(benchmark::State& state) {
  Fixture f(static_cast<std::size_t>(state.range(0)));
  const LoggedPropensityModel prop(f.events);
  for (auto _ : state) {
    auto rep = dr_estimate(f.events, f.target, f.rhat, prop);
    benchmark::DoNotOptimize(rep.estimate);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_DrEstimate)->Arg(1000)->Arg(10000)->Arg(100000);

void BM_IpsEstimate(benchmark::State& state) {
  Fixture f(static_cast<std::size_t>(state.range(0)));
  const LoggedPropensityModel prop(f.events);
  for (auto _ : state) {
    auto rep = ips_estimate(f.events, f.target, prop);
    benchmark::DoNotOptimize(rep.estimate);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_IpsEstimate)->Arg(1000)->Arg(10000)->Arg(100000);

// A trivially adaptive policy: tracks per-action mean reward, acts greedily
// with a little exploration. Keeps the benchmark about the evaluator, not
// the learner.
class GreedyCounter final : public NonstationaryPolicy {
 public:
  explicit GreedyCounter(int k) : sums_(k, 0.0), counts_(k, 1.0) {}
  int num_actions() const override { return static_cast<int>(sums_.size()); }
  std::vector<double> distribution(const Features&) const override {
    std::vector<double> means(sums_.size());
    for (std::size_t a = 0; a < sums_.size(); ++a) means[a] = sums_[a] / counts_[a];
    std::vector<double> d(sums_.size(), 0.1 / sums_.size());
    d[argmax_lowest(means)] += 0.9;
    return d;
  }
  void observe(const Features&, int action, double outcome) override {
    sums_[action] += outcome;
    counts_[action] += 1.0;
  }
  std::unique_ptr<NonstationaryPolicy> clone() const override {
    return std::make_unique<GreedyCounter>(*this);
  }

 private:
  std::vector<double> sums_, counts_;
};

void BM_DrnsRun(benchmark::State& state) {
  Fixture f(static_cast<std::size_t>(state.range(0)));
  const GreedyCounter target(f.dgp.num_actions());
  DrnsConfig cfg;
  cfg.rho = 0.05;
  cfg.c_max = 1.0;
  cfg.T = static_cast<int>(state.range(0) / 20);
  for (auto _ : state) {
    auto res = drns_run(f.events, target, f.rhat, cfg, 3);
    benchmark::DoNotOptimize(res.V_drns);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_DrnsRun)->Arg(1000)->Arg(10000);

}  // namespace

BENCHMARK_MAIN();
