#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "drbandit/discrete_dgp.hpp"
#include "drbandit/types.hpp"

namespace drbandit {

struct MulticlassDataset {
  std::vector<std::pair<Features, int>> examples;  // (features, label)
  int num_classes = 0;
};

struct MultilabelDataset {
  struct Example {
    Features features;
    std::vector<int> labels;  // nonempty subset of 0..K-1
  };
  std::vector<Example> examples;
  int num_classes = 0;
};

struct RegressionDataset {
  std::vector<std::pair<Features, double>> examples;  // (features, response >= 0)
};

// Full -> partial feedback: per example draw a ~ uniform(K), emit
// (x, a, loss = 1[a != y], p = 1/K). Preserves example count and order.
std::vector<LogEvent> multiclass_to_bandit(const MulticlassDataset& data,
                                           std::uint64_t seed);

// Logger biased toward correct answers: per example draw s(a) ~ U[0.1,1]
// per action, mu(a|x,Y,s) = 0.3 s(a)/sum s + 0.7 1[a in Y]/|Y|. The label
// set and scores travel as the event's hidden payload.
std::vector<LogEvent> multilabel_biased_logger(const MultilabelDataset& data,
                                               std::uint64_t seed);

// The per-example selection probabilities of the biased logger for fixed
// scores; exposed for direct checks.
std::vector<double> biased_logger_distribution(const std::vector<int>& labels,
                                               const std::vector<double>& scores,
                                               int num_classes);

// Covariate shift construction: reveal probability is a normal density of
// the projection onto the first principal component, capped at 1. Action 1
// reveals r = v (rescaled by the dataset max), action 0 conceals (r = 0).
struct CovariateShiftResult {
  std::vector<LogEvent> events;
  std::vector<double> principal_component;  // unit norm
  double proj_min = 0.0;                    // m
  double proj_mean = 0.0;                   // m-bar
  double density_mean = 0.0;                // m + (m-bar - m)/3
  double density_sd = 0.0;                  // (m-bar - m)/4
  double response_max = 0.0;                // rescaling constant
  double ground_truth_mean = 0.0;           // mean of rescaled responses
  double min_reveal_prob = 0.0;
};

// response_max_override > 0 fixes the rescaling constant (so subsamples of a
// larger dataset stay on the full dataset's scale); 0 uses the data's max.
CovariateShiftResult covariate_shift_transform(const RegressionDataset& data,
                                               std::uint64_t seed,
                                               double response_max_override = 0.0);

// --- Synthetic datasets (the bundled CI stand-ins) ------------------------

// Multiclass task whose Bayes boundary is quadratic, so a linear loss model
// is misspecified by construction.
MulticlassDataset make_synthetic_multiclass(std::size_t n, int num_classes,
                                            int dim, double label_noise,
                                            std::uint64_t seed);

// Multilabel analog with linear per-class score thresholds.
MultilabelDataset make_synthetic_multilabel(std::size_t n, int num_classes,
                                            int dim, std::uint64_t seed);

// Regression with a linear (learnable) response plus noise, response >= 0.
RegressionDataset make_synthetic_regression(std::size_t n, int dim,
                                            std::uint64_t seed);

// --- File loaders ----------------------------------------------------------

// CSV with numeric feature columns and an integer label in the last column.
MulticlassDataset load_multiclass_csv(const std::string& path, bool has_header);

// Sparse multilabel lines: "l1,l2,...  idx:val idx:val ..." (svmlight-style,
// labels 0-based).
MultilabelDataset load_multilabel_sparse(const std::string& path);

}  // namespace drbandit
