#include <doctest.h>

#include <cmath>

#include "drbandit/discrete_dgp.hpp"
#include "drbandit/nonstat.hpp"
#include "drbandit/rng.hpp"

using namespace drbandit;

namespace {

// A stationary table exposed through the nonstationary interface.
class FrozenPolicy final : public NonstationaryPolicy {
 public:
  explicit FrozenPolicy(PolicyTable table) : table_(std::move(table)) {}
  int num_actions() const override {
    return static_cast<int>(table_.at(0).size());
  }
  std::vector<double> distribution(const Features& x) const override {
    return table_.at(DiscreteDgp::context_of(x));
  }
  void observe(const Features&, int, double) override {}
  std::unique_ptr<NonstationaryPolicy> clone() const override {
    return std::make_unique<FrozenPolicy>(table_);
  }

 private:
  PolicyTable table_;
};

// Learns per-action outcome means and plays 0.9-greedy on them; context-blind
// on purpose so the adaptation path stays easy to reason about.
class GreedyCounter final : public NonstationaryPolicy {
 public:
  explicit GreedyCounter(int k) : sum_(k, 0.0), count_(k, 0.0) {}
  int num_actions() const override { return static_cast<int>(sum_.size()); }
  std::vector<double> distribution(const Features&) const override {
    const int k = num_actions();
    std::vector<double> means(k, 0.0);
    for (int a = 0; a < k; ++a)
      if (count_[a] > 0.0) means[a] = sum_[a] / count_[a];
    std::vector<double> d(k, 0.1 / k);
    d[argmax_lowest(means)] += 0.9;
    return d;
  }
  void observe(const Features&, int action, double outcome) override {
    sum_[action] += outcome;
    count_[action] += 1.0;
  }
  std::unique_ptr<NonstationaryPolicy> clone() const override {
    return std::make_unique<GreedyCounter>(*this);
  }

 private:
  std::vector<double> sum_, count_;
};

std::vector<LogEvent> uniform_log(const DiscreteDgp& dgp, std::size_t n,
                                  std::uint64_t seed) {
  return sample_log(dgp, n, seed);
}

}  // namespace

TEST_CASE("self-evaluation accepts every event and reproduces the log") {
  // target == logger with unit propensities: accept prob is c*pi/p = 1
  DiscreteDgp dgp = make_discrete_dgp({3, 4, 2, 7});
  for (int x = 0; x < dgp.num_contexts(); ++x)
    for (int a = 0; a < dgp.num_actions(); ++a)
      dgp.logging[x][a] = a == 1 ? 1.0 : 0.0;
  const auto events = sample_log(dgp, 12, 3);
  PolicyTable pi(dgp.num_contexts(),
                 std::vector<double>{0.0, 1.0, 0.0, 0.0});
  const FrozenPolicy target(pi);
  const ZeroRewardModel zero;

  const DrnsResult res = drns_run(events, target, zero, {0.0, 1.0, 12}, 99);
  REQUIRE(res.success);
  CHECK(res.events_consumed == 12);
  CHECK(res.blocks.size() == 12);
  double total = 0.0;
  for (const auto& e : events) total += e.outcome;
  CHECK(res.V_drns == doctest::Approx(total).epsilon(1e-12));
  CHECK(res.C == doctest::Approx(12.0).epsilon(1e-12));
  for (const auto& b : res.blocks) {
    CHECK(b.c_t == 1.0);
    CHECK(b.size == 1);
  }
}

TEST_CASE("a too-short stream reports failure with the whole stream consumed") {
  const DiscreteDgp dgp = make_discrete_dgp({2, 3, 2, 11});
  const auto events = uniform_log(dgp, 20, 5);
  const GreedyCounter target(dgp.num_actions());
  const ZeroRewardModel zero;
  const DrnsResult res = drns_run(events, target, zero, {0.05, 1.0, 500}, 1);
  CHECK_FALSE(res.success);
  CHECK(res.events_consumed == events.size());
  CHECK(res.V_avg == doctest::Approx(res.V_drns / res.C));
}

TEST_CASE("the adaptive run matches a straight-line replica on a short stream") {
  const DiscreteDgp dgp = make_discrete_dgp({3, 3, 2, 13});
  const auto events = uniform_log(dgp, 40, 17);
  GreedyCounter proto(dgp.num_actions());
  const TabularRewardModel model(
      {{0.2, 0.5, 0.8}, {0.1, 0.9, 0.4}, {0.6, 0.3, 0.7}});
  const double rho = 0.25, c_max = 1.0;
  const int T = 4;
  const std::uint64_t seed = 4242;

  // test-side replica written as one literal loop
  auto policy = proto.clone();
  Rng rng(seed);
  double V = 0.0, C = 0.0, c = c_max;
  std::vector<double> ratios;
  std::vector<double> expected_c{c_max};
  std::size_t consumed = 0;
  int accepted = 0;
  for (const auto& e : events) {
    ++consumed;
    const auto dist = policy->distribution(e.context.features);
    const double pi = dist[e.action];
    double baseline = 0.0;
    for (std::size_t a = 0; a < dist.size(); ++a)
      baseline += dist[a] * model.predict(e.context.features, (int)a);
    V += c * (baseline + pi / e.propensity *
                             (e.outcome - model.predict(e.context.features,
                                                        e.action)));
    C += c;
    ratios.push_back(pi > 0.0 ? e.propensity / pi
                              : std::numeric_limits<double>::infinity());
    if (rng.uniform01() <= c * pi / e.propensity) {
      policy->observe(e.context.features, e.action, e.outcome);
      if (++accepted == T) break;
      std::vector<double> sorted = ratios;
      std::sort(sorted.begin(), sorted.end());
      const std::size_t rank = std::max<std::size_t>(
          1, static_cast<std::size_t>(
                 std::ceil(rho * static_cast<double>(sorted.size()) - 1e-12)));
      c = std::min(c_max, sorted[rank - 1]);
      expected_c.push_back(c);
    }
  }
  REQUIRE(accepted == T);

  const DrnsResult res =
      drns_run(events, proto, model, {rho, c_max, T}, seed);
  REQUIRE(res.success);
  CHECK(res.V_drns == V);  // bitwise: same arithmetic path
  CHECK(res.C == C);
  CHECK(res.events_consumed == consumed);
  REQUIRE(res.blocks.size() == static_cast<std::size_t>(T));
  for (int t = 0; t < T; ++t) CHECK(res.blocks[t].c_t == expected_c[t]);
  CHECK(res.V_avg == res.V_drns / res.C);

  // byte determinism across repeated runs
  const DrnsResult again = drns_run(events, proto, model, {rho, c_max, T}, seed);
  CHECK(again.V_drns == res.V_drns);
  CHECK(again.events_consumed == res.events_consumed);
}

TEST_CASE("rejection sampling sums accepted outcomes only") {
  DiscreteDgp dgp = make_discrete_dgp({3, 4, 2, 19});
  for (auto& row : dgp.logging)
    row.assign(row.size(), 1.0 / dgp.num_actions());
  const auto events = sample_log(dgp, 400, 23);

  GreedyCounter proto(dgp.num_actions());
  const int T = 10;
  const double c = 1.0 / dgp.num_actions();
  const DrnsResult res = rs_run(events, proto, c, T, 55);

  // replay the acceptance draws and the policy updates by hand
  auto policy = proto.clone();
  Rng rng(55);
  double expected = 0.0;
  int matched = 0;
  std::size_t consumed = 0;
  for (const auto& e : events) {
    ++consumed;
    const auto dist = policy->distribution(e.context.features);
    if (rng.uniform01() <= c * dist[e.action] / e.propensity) {
      expected += e.outcome;
      policy->observe(e.context.features, e.action, e.outcome);
      if (++matched == T) break;
    }
  }
  REQUIRE(matched == T);
  REQUIRE(res.success);
  CHECK(res.V_drns == expected);
  CHECK(res.events_consumed == consumed);
  CHECK(res.C == doctest::Approx(c * consumed).epsilon(1e-12));
  CHECK(res.V_avg == doctest::Approx(expected / T));
}

TEST_CASE("the worst-case run equals the adaptive run at rho = 0") {
  // uniform logging: every ratio p/pi of a uniform target is 1, so the
  // rho = 0 quantile stays at 1 and both runs freeze c at min propensity.
  DiscreteDgp dgp = make_discrete_dgp({2, 4, 2, 29});
  for (auto& row : dgp.logging) row.assign(row.size(), 0.25);
  const auto events = sample_log(dgp, 4000, 31);
  const FrozenPolicy target(
      PolicyTable(dgp.num_contexts(), std::vector<double>(4, 0.25)));
  const TabularRewardModel model({{0.3, 0.3, 0.3, 0.3}, {0.6, 0.6, 0.6, 0.6}});

  const DrnsResult wc = wc_run(events, target, model, 0.25, 6, 77);
  const DrnsResult ad = drns_run(events, target, model, {0.0, 0.25, 6}, 77);
  REQUIRE(wc.success);
  REQUIRE(ad.success);
  CHECK(wc.V_drns == ad.V_drns);
  CHECK(wc.C == ad.C);
  CHECK(wc.events_consumed == ad.events_consumed);
}

TEST_CASE("replicated runs restart on the unconsumed tail") {
  const DiscreteDgp dgp = make_discrete_dgp({2, 3, 2, 37});
  const auto events = sample_log(dgp, 600, 41);
  GreedyCounter target(dgp.num_actions());
  const ZeroRewardModel zero;
  const DrnsConfig cfg{0.05, 1.0, 3};
  const DrnsReplicated rep = drns_replicated(events, target, zero, cfg, 9);
  REQUIRE(!rep.replicates.empty());
  std::size_t start = 0;
  double sum_v = 0.0;
  for (std::size_t i = 0; i < rep.replicates.size(); ++i) {
    // each replicate reproduces a fresh run on the tail with its own seed
    std::vector<LogEvent> tail(events.begin() + start, events.end());
    const DrnsResult solo =
        drns_run(tail, target, zero, cfg, replicate_seed(9, i));
    CHECK(solo.V_drns == rep.replicates[i].V_drns);
    start += rep.replicates[i].events_consumed;
    sum_v += rep.replicates[i].V_drns;
  }
  CHECK(rep.mean_V_drns ==
        doctest::Approx(sum_v / rep.replicates.size()).epsilon(1e-12));
}

TEST_CASE("failure sample requirement arithmetic") {
  // ceil((T + 1 + ln(1/delta)) / alpha)
  CHECK(failure_sample_requirement(10, 0.5, 0.05) ==
        static_cast<std::size_t>(
            std::ceil((10.0 + 1.0 + std::log(20.0)) / 0.5)));
  CHECK(failure_sample_requirement(1, 1.0, 0.5) ==
        static_cast<std::size_t>(std::ceil(2.0 + std::log(2.0))));
  // m trajectories scale the mT term only
  CHECK(failure_sample_requirement(5, 0.25, 0.1, 4) ==
        static_cast<std::size_t>(
            std::ceil((20.0 + 1.0 + std::log(10.0)) / 0.25)));
  // halving alpha doubles the requirement (up to rounding)
  const auto lo = failure_sample_requirement(8, 0.2, 0.01);
  const auto hi = failure_sample_requirement(8, 0.1, 0.01);
  CHECK(hi >= 2 * lo - 1);
  CHECK(hi <= 2 * lo + 1);
  CHECK_THROWS_AS(failure_sample_requirement(3, 0.0, 0.1), std::domain_error);
  CHECK_THROWS_AS(failure_sample_requirement(3, 0.5, 1.0), std::domain_error);
  CHECK_THROWS_AS(failure_sample_requirement(0, 0.5, 0.1),
                  std::invalid_argument);
}

TEST_CASE("bias mass on a hand-built two-by-two instance") {
  DiscreteDgp dgp;
  dgp.context_prob = {0.5, 0.5};
  dgp.logging = {{0.8, 0.2}, {0.5, 0.5}};
  dgp.reward = {{{{1.0, 1.0}}, {{0.0, 1.0}}}, {{{0.5, 1.0}}, {{1.0, 1.0}}}};
  const PolicyTable pi{{0.1, 0.9}, {0.5, 0.5}};
  // c = 0.9: clipped pairs are exactly {(x0,a1)} since 0.9*0.9 > 0.2;
  // eps = 0.5*0.9 - (0.5*0.2)/0.9
  const double eps = bias_mass_exact(dgp, pi, 0.9);
  CHECK(eps == doctest::Approx(0.45 - 0.1 / 0.9).epsilon(1e-12));
  // small enough c clips nothing
  CHECK(bias_mass_exact(dgp, pi, 0.2) == doctest::Approx(0.0));
  // the clipped mass is never negative
  for (double c : {0.3, 0.5, 0.7, 1.0})
    CHECK(bias_mass_exact(dgp, pi, c) >= -1e-15);
}

TEST_CASE("cumulative bias cap arithmetic") {
  CHECK(theorem51_bound(0.0, 7) == 0.0);
  CHECK(theorem51_bound(0.1, 3) == doctest::Approx(6.0 * 0.1 / 0.9));
  CHECK(theorem51_bound(0.5, 1) == doctest::Approx(1.0));
  CHECK_THROWS_AS(theorem51_bound(1.0, 2), std::domain_error);
  CHECK_THROWS_AS(theorem51_bound(0.1, 0), std::invalid_argument);
}

TEST_CASE("history enumeration: no clipping means no bias and no divergence") {
  // deterministic rewards, c at the global min of mu/pi so nothing clips
  DiscreteDgp dgp = make_discrete_dgp({2, 2, 1, 43});
  GreedyCounter target(2);
  double c_safe = 1.0;
  // mu >= c * pi for every pair when c <= min mu (pi <= 1)
  for (const auto& row : dgp.logging)
    for (double m : row) c_safe = std::min(c_safe, m);
  const EnumerationCheck chk = enumerate_drns_bias(dgp, target, c_safe, 3);
  CHECK(chk.eps_max == doctest::Approx(0.0));
  CHECK(chk.tv <= 1e-9);
  CHECK(std::abs(chk.expected_estimate - chk.target_value) <= 1e-9);
  CHECK(chk.bias_bound <= 1e-9);
  CHECK(chk.tv_bound <= 1e-9);
}

TEST_CASE("history enumeration: clipping bias stays inside both caps") {
  DiscreteDgp dgp = make_discrete_dgp({2, 2, 1, 47});
  GreedyCounter target(2);
  const EnumerationCheck chk = enumerate_drns_bias(dgp, target, 1.0, 2);
  CHECK(chk.eps_max > 0.0);  // c = 1 clips whenever pi > mu somewhere
  CHECK(std::abs(chk.expected_estimate - chk.target_value) <=
        chk.bias_bound + 1e-12);
  CHECK(chk.tv <= chk.tv_bound + 1e-12);
  CHECK(chk.tv >= 0.0);
}

TEST_CASE("history enumeration guards its preconditions") {
  const DiscreteDgp stochastic = make_discrete_dgp({2, 2, 2, 51});
  GreedyCounter target(2);
  CHECK_THROWS_AS(enumerate_drns_bias(stochastic, target, 0.5, 2),
                  std::invalid_argument);
  const DiscreteDgp big = make_discrete_dgp({16, 8, 1, 53});
  CHECK_THROWS_AS(enumerate_drns_bias(big, target, 0.5, 4),
                  std::runtime_error);
  // T = 0 compares two empty histories
  const DiscreteDgp det = make_discrete_dgp({2, 2, 1, 57});
  CHECK(enumerate_drns_bias(det, target, 0.5, 0).tv == 0.0);
}

TEST_CASE("the progressive validation policy blends the block policies") {
  const DiscreteDgp dgp = make_discrete_dgp({3, 3, 2, 59});
  const auto events = sample_log(dgp, 2000, 61);
  GreedyCounter target(dgp.num_actions());
  const ZeroRewardModel zero;

  // T = 1: the blend is exactly the initial policy
  const DrnsResult one =
      drns_run(events, target, zero, {0.05, 1.0, 1}, 63, true);
  REQUIRE(one.success);
  const auto pv1 = progressive_validation_policy(one);
  const Features probe = dgp.features_of(1);
  CHECK(pv1->distribution(probe) == target.distribution(probe));

  // longer run: mixture weights c_t |B(t)| / C sum to one, distributions valid
  const DrnsResult many =
      drns_run(events, target, zero, {0.05, 1.0, 8}, 65, true);
  REQUIRE(many.success);
  double wsum = 0.0;
  for (const auto& b : many.blocks) wsum += b.c_t * b.size;
  CHECK(wsum / many.C == doctest::Approx(1.0).epsilon(1e-12));
  const auto weights = progressive_validation_weights(many);
  REQUIRE(weights.size() == many.blocks.size());
  double exact_sum = 0.0;
  for (std::size_t t = 0; t < weights.size(); ++t) {
    exact_sum += weights[t];
    CHECK(weights[t] ==
          doctest::Approx(many.blocks[t].c_t * many.blocks[t].size / many.C)
              .epsilon(1e-12));
  }
  CHECK(exact_sum == 1.0);  // the last weight absorbs the rounding residual
  const auto pv = progressive_validation_policy(many);
  for (int x = 0; x < dgp.num_contexts(); ++x) {
    const auto d = pv->distribution(dgp.features_of(x));
    double s = 0.0;
    for (double p : d) {
      CHECK(p >= 0.0);
      s += p;
    }
    CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
  }

  // failed or unretained runs are rejected
  const DrnsResult fail =
      drns_run(std::vector<LogEvent>(events.begin(), events.begin() + 2),
               target, zero, {0.05, 1.0, 50}, 67, true);
  CHECK_FALSE(fail.success);
  CHECK_THROWS_AS(progressive_validation_policy(fail), std::domain_error);
  const DrnsResult bare = drns_run(events, target, zero, {0.05, 1.0, 2}, 69);
  CHECK_THROWS_AS(progressive_validation_policy(bare), std::domain_error);
}

TEST_CASE("progressive validation bound arithmetic") {
  // range branch: huge (1+M) log term dominates
  const double b1 = progressive_validation_bound(10, 1.0, 10.0, 99.0, 0.0, 0.0,
                                                 0.05);
  CHECK(b1 == doctest::Approx(2.0 * 100.0 * std::log(40.0) / 10.0));
  // variance branch with the N c_max / C prefactor
  const std::size_t n = 100000;
  const double b2 =
      progressive_validation_bound(n, 0.5, 0.25 * n, 1.0, 0.01, 0.04, 0.05);
  CHECK(b2 == doctest::Approx(2.0 * 2.0 *
                              std::sqrt(0.05 * std::log(40.0) / n)));
  CHECK_THROWS_AS(progressive_validation_bound(10, 1.0, 5.0, 1.0, 0.0, 0.0, 0.0),
                  std::domain_error);
}
