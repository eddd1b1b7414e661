#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numeric>

#include "drbandit/datagen.hpp"
#include "drbandit/rng.hpp"

using namespace drbandit;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("multiclass transform preserves order and hides the label") {
  const MulticlassDataset data = make_synthetic_multiclass(500, 4, 6, 0.0, 3);
  const auto events = multiclass_to_bandit(data, 11);
  REQUIRE(events.size() == data.examples.size());
  std::vector<double> action_counts(4, 0.0);
  for (std::size_t i = 0; i < events.size(); ++i) {
    CHECK(events[i].context.features == data.examples[i].first);
    CHECK(events[i].propensity == doctest::Approx(0.25));
    const double expected_loss =
        events[i].action == data.examples[i].second ? 0.0 : 1.0;
    CHECK(events[i].outcome == expected_loss);
    action_counts[events[i].action] += 1.0;
  }
  // actions are drawn uniformly
  for (double c : action_counts) {
    const double p = c / events.size();
    CHECK(std::abs(p - 0.25) < 4.0 * std::sqrt(0.25 * 0.75 / events.size()));
  }
}

TEST_CASE("biased logger distribution follows the stated mixture") {
  const std::vector<double> scores{0.5, 0.1, 0.4};
  const auto dist = biased_logger_distribution({0}, scores, 3);
  CHECK(dist[0] == doctest::Approx(0.3 * 0.5 + 0.7));
  CHECK(dist[1] == doctest::Approx(0.3 * 0.1));
  CHECK(dist[2] == doctest::Approx(0.3 * 0.4));
  CHECK(std::accumulate(dist.begin(), dist.end(), 0.0) ==
        doctest::Approx(1.0).epsilon(1e-12));

  const auto two = biased_logger_distribution({0, 2}, scores, 3);
  CHECK(two[0] == doctest::Approx(0.15 + 0.35));
  CHECK(two[2] == doctest::Approx(0.12 + 0.35));
}

TEST_CASE("multilabel logger records its own propensity") {
  const MultilabelDataset data = make_synthetic_multilabel(300, 5, 6, 17);
  const auto events = multilabel_biased_logger(data, 19);
  REQUIRE(events.size() == data.examples.size());
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto& e = events[i];
    REQUIRE(e.context.hidden != nullptr);
    // recompute the logger's distribution from the event's hidden payload
    const auto dist = biased_logger_distribution(e.context.hidden->labels,
                                                 e.context.hidden->scores, 5);
    CHECK(e.propensity == doctest::Approx(dist[e.action]).epsilon(1e-12));
    const auto& labels = data.examples[i].labels;
    const bool correct =
        std::find(labels.begin(), labels.end(), e.action) != labels.end();
    CHECK(e.outcome == (correct ? 0.0 : 1.0));
  }
}

TEST_CASE("covariate shift construction is internally consistent") {
  const RegressionDataset data = make_synthetic_regression(400, 5, 23);
  const CovariateShiftResult res = covariate_shift_transform(data, 29);

  double norm = 0.0;
  for (double v : res.principal_component) norm += v * v;
  CHECK(std::sqrt(norm) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(res.density_mean ==
        doctest::Approx(res.proj_min + (res.proj_mean - res.proj_min) / 3.0));
  CHECK(res.density_sd ==
        doctest::Approx((res.proj_mean - res.proj_min) / 4.0));

  REQUIRE(res.events.size() == data.examples.size());
  for (std::size_t i = 0; i < res.events.size(); ++i) {
    const auto& e = res.events[i];
    CHECK((e.action == 0 || e.action == 1));
    CHECK(e.propensity > 0.0);
    CHECK(e.propensity <= 1.0);
    if (e.action == 1) {
      CHECK(e.outcome ==
            doctest::Approx(data.examples[i].second / res.response_max));
    } else {
      CHECK(e.outcome == 0.0);
    }
  }
  // the reveal probability is the capped normal density of the projection
  for (std::size_t i = 0; i < res.events.size(); ++i) {
    double proj = 0.0;
    for (const auto& [j, v] : data.examples[i].first)
      proj += v * res.principal_component[j];
    const double z = (proj - res.density_mean) / res.density_sd;
    const double phi = std::exp(-0.5 * z * z) /
                       (res.density_sd * std::sqrt(2.0 * std::acos(-1.0)));
    const double reveal = std::min(phi, 1.0);
    const double p = res.events[i].action == 1 ? reveal : 1.0 - reveal;
    CHECK(res.events[i].propensity == doctest::Approx(p).epsilon(1e-9));
  }
}

TEST_CASE("covariate shift rejects degenerate inputs") {
  RegressionDataset flat;
  for (int i = 0; i < 10; ++i) flat.examples.push_back({{{0, 1.0}}, 0.5});
  CHECK_THROWS(covariate_shift_transform(flat, 1));  // all projections equal

  RegressionDataset zero;
  for (int i = 0; i < 10; ++i)
    zero.examples.push_back({{{0, static_cast<double>(i)}}, 0.0});
  CHECK_THROWS(covariate_shift_transform(zero, 1));  // all responses zero
}

TEST_CASE("response max override keeps subsamples on a fixed scale") {
  const RegressionDataset data = make_synthetic_regression(200, 4, 31);
  double full_max = 0.0;
  for (const auto& [x, v] : data.examples) full_max = std::max(full_max, v);
  RegressionDataset sub;
  sub.examples.assign(data.examples.begin(), data.examples.begin() + 50);
  const auto res = covariate_shift_transform(sub, 5, full_max);
  CHECK(res.response_max == full_max);
  for (std::size_t i = 0; i < sub.examples.size(); ++i)
    if (res.events[i].action == 1)
      CHECK(res.events[i].outcome ==
            doctest::Approx(sub.examples[i].second / full_max));
  // an override smaller than the observed max is an error
  CHECK_THROWS_AS(covariate_shift_transform(sub, 5, full_max / 1000.0),
                  std::invalid_argument);
}

TEST_CASE("synthetic generators satisfy their contracts") {
  const MulticlassDataset mc = make_synthetic_multiclass(200, 3, 5, 0.2, 7);
  CHECK(mc.examples.size() == 200);
  CHECK(mc.num_classes == 3);
  for (const auto& [x, y] : mc.examples) {
    CHECK(y >= 0);
    CHECK(y < 3);
    CHECK(x.size() == 5);
  }

  const MultilabelDataset ml = make_synthetic_multilabel(200, 4, 5, 7);
  for (const auto& ex : ml.examples) {
    CHECK(!ex.labels.empty());
    for (int y : ex.labels) {
      CHECK(y >= 0);
      CHECK(y < 4);
    }
  }

  const RegressionDataset rg = make_synthetic_regression(200, 4, 7);
  for (const auto& [x, v] : rg.examples) CHECK(v >= 0.0);

  // determinism
  const MulticlassDataset again = make_synthetic_multiclass(200, 3, 5, 0.2, 7);
  CHECK(again.examples == mc.examples);
}

TEST_CASE("csv loader reads features and labels") {
  const std::string path = temp_path("drbandit_data.csv");
  {
    FILE* f = std::fopen(path.c_str(), "w");
    std::fputs("f0,f1,label\n", f);
    std::fputs("1.5,0.0,0\n", f);
    std::fputs("0.0,2.25,2\n", f);
    std::fclose(f);
  }
  const MulticlassDataset data = load_multiclass_csv(path, true);
  REQUIRE(data.examples.size() == 2);
  CHECK(data.num_classes == 3);
  CHECK(data.examples[0].first == Features{{0, 1.5}});  // zeros are sparse
  CHECK(data.examples[0].second == 0);
  CHECK(data.examples[1].first == Features{{1, 2.25}});
  CHECK(data.examples[1].second == 2);
  std::filesystem::remove(path);
}

TEST_CASE("sparse multilabel loader parses labels and indexed values") {
  const std::string path = temp_path("drbandit_data.ml");
  {
    FILE* f = std::fopen(path.c_str(), "w");
    std::fputs("0,2 1:0.5 4:1.25\n", f);
    std::fputs("1 0:2.0\n", f);
    std::fclose(f);
  }
  const MultilabelDataset data = load_multilabel_sparse(path);
  REQUIRE(data.examples.size() == 2);
  CHECK(data.num_classes == 3);
  CHECK(data.examples[0].labels == std::vector<int>{0, 2});
  CHECK(data.examples[0].features == Features{{1, 0.5}, {4, 1.25}});
  CHECK(data.examples[1].labels == std::vector<int>{1});
  std::filesystem::remove(path);

  const std::string bad = temp_path("drbandit_bad.ml");
  {
    FILE* f = std::fopen(bad.c_str(), "w");
    std::fputs("0 nonsense\n", f);
    std::fclose(f);
  }
  CHECK_THROWS(load_multilabel_sparse(bad));
  std::filesystem::remove(bad);
}
