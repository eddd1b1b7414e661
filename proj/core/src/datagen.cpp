#include "drbandit/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "drbandit/rng.hpp"

namespace drbandit {

std::vector<LogEvent> multiclass_to_bandit(const MulticlassDataset& data,
                                           std::uint64_t seed) {
  if (data.num_classes < 1) throw std::invalid_argument("need K >= 1");
  Rng rng(seed);
  const int k = data.num_classes;
  std::vector<LogEvent> out;
  out.reserve(data.examples.size());
  for (const auto& [x, y] : data.examples) {
    LogEvent e;
    e.context.features = x;
    e.action = k == 1 ? 0 : static_cast<int>(rng.uniform_index(k));
    e.outcome = e.action == y ? 0.0 : 1.0;  // loss mode
    e.propensity = 1.0 / k;
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<double> biased_logger_distribution(const std::vector<int>& labels,
                                               const std::vector<double>& scores,
                                               int num_classes) {
  std::vector<double> dist(num_classes, 0.0);
  const double score_sum = std::accumulate(scores.begin(), scores.end(), 0.0);
  for (int a = 0; a < num_classes; ++a) dist[a] = 0.3 * scores[a] / score_sum;
  for (int y : labels) dist[y] += 0.7 / static_cast<double>(labels.size());
  return dist;
}

std::vector<LogEvent> multilabel_biased_logger(const MultilabelDataset& data,
                                               std::uint64_t seed) {
  if (data.num_classes < 2) throw std::invalid_argument("need K >= 2");
  Rng rng(seed);
  const int k = data.num_classes;
  std::vector<LogEvent> out;
  out.reserve(data.examples.size());
  for (const auto& ex : data.examples) {
    if (ex.labels.empty()) throw std::invalid_argument("label set must be nonempty");
    auto payload = std::make_shared<HiddenPayload>();
    payload->labels = ex.labels;
    payload->scores.resize(k);
    for (double& s : payload->scores) s = rng.uniform(0.1, 1.0);
    const auto dist = biased_logger_distribution(ex.labels, payload->scores, k);
    const int a = static_cast<int>(rng.categorical(dist));
    LogEvent e;
    e.context.features = ex.features;
    e.context.hidden = payload;
    e.action = a;
    e.outcome = std::find(ex.labels.begin(), ex.labels.end(), a) == ex.labels.end()
                    ? 1.0
                    : 0.0;  // loss = 1[a not in Y]
    e.propensity = dist[a];
    out.push_back(std::move(e));
  }
  return out;
}

namespace {

std::size_t dense_dim(const RegressionDataset& data) {
  std::size_t d = 0;
  for (const auto& [x, v] : data.examples)
    for (const auto& [i, val] : x) d = std::max<std::size_t>(d, i + 1);
  return d;
}

// First principal component by power iteration on the centered Gram
// operator C v = (1/N) sum_i (x_i - mean) <x_i - mean, v>.
std::vector<double> first_principal_component(const RegressionDataset& data,
                                              Rng& rng) {
  const std::size_t d = dense_dim(data);
  const std::size_t n = data.examples.size();
  std::vector<double> mean(d, 0.0);
  for (const auto& [x, v] : data.examples)
    for (const auto& [i, val] : x) mean[i] += val;
  for (double& m : mean) m /= static_cast<double>(n);

  std::vector<double> v(d);
  for (double& c : v) c = rng.gaussian();
  auto normalize = [](std::vector<double>& u) {
    double norm = 0.0;
    for (double c : u) norm += c * c;
    norm = std::sqrt(norm);
    if (norm > 0.0)
      for (double& c : u) c /= norm;
    return norm;
  };
  normalize(v);

  std::vector<double> next(d);
  for (int iter = 0; iter < 200; ++iter) {
    std::fill(next.begin(), next.end(), 0.0);
    double mean_dot_v = 0.0;
    for (std::size_t i = 0; i < d; ++i) mean_dot_v += mean[i] * v[i];
    double sum_proj = 0.0;
    for (const auto& [x, resp] : data.examples) {
      double proj = -mean_dot_v;
      for (const auto& [i, val] : x) proj += val * v[i];
      sum_proj += proj;
      for (const auto& [i, val] : x) next[i] += val * proj;
    }
    // subtract mean * sum(proj) to complete (x_i - mean) outer products
    for (std::size_t i = 0; i < d; ++i) next[i] -= mean[i] * sum_proj;
    for (std::size_t i = 0; i < d; ++i) next[i] /= static_cast<double>(n);
    const double norm = normalize(next);
    if (norm == 0.0) throw std::runtime_error("degenerate principal component");
    double change = 0.0;
    for (std::size_t i = 0; i < d; ++i) change += (next[i] - v[i]) * (next[i] - v[i]);
    // sign flips count as converged too
    double change_neg = 0.0;
    for (std::size_t i = 0; i < d; ++i)
      change_neg += (next[i] + v[i]) * (next[i] + v[i]);
    v = next;
    if (std::min(change, change_neg) < 1e-10 * 1e-10) break;
  }
  return v;
}

}  // namespace

CovariateShiftResult covariate_shift_transform(const RegressionDataset& data,
                                               std::uint64_t seed,
                                               double response_max_override) {
  if (data.examples.size() < 2)
    throw std::invalid_argument("need at least 2 examples");
  Rng rng(seed);
  CovariateShiftResult res;
  res.principal_component = first_principal_component(data, rng);

  std::vector<double> proj(data.examples.size());
  for (std::size_t i = 0; i < data.examples.size(); ++i) {
    double p = 0.0;
    for (const auto& [j, val] : data.examples[i].first)
      p += val * res.principal_component[j];
    proj[i] = p;
  }
  // The principal direction's sign is arbitrary; orient it so the tail far
  // from the density mean (which sits below the projection mean) is the
  // short one. This keeps every context within a few density widths.
  {
    const auto [lo, hi] = std::minmax_element(proj.begin(), proj.end());
    const double mean = std::accumulate(proj.begin(), proj.end(), 0.0) /
                        static_cast<double>(proj.size());
    if (*hi - mean > mean - *lo) {
      for (double& c : res.principal_component) c = -c;
      for (double& p : proj) p = -p;
    }
  }
  res.proj_min = *std::min_element(proj.begin(), proj.end());
  res.proj_mean = std::accumulate(proj.begin(), proj.end(), 0.0) /
                  static_cast<double>(proj.size());
  const double spread = res.proj_mean - res.proj_min;
  if (!(spread > 0.0))
    throw std::runtime_error("degenerate principal component: all projections equal");
  res.density_mean = res.proj_min + spread / 3.0;
  res.density_sd = spread / 4.0;

  res.response_max = 0.0;
  for (const auto& [x, v] : data.examples) {
    if (v < 0.0) throw std::invalid_argument("responses must be >= 0");
    res.response_max = std::max(res.response_max, v);
  }
  if (response_max_override > 0.0) res.response_max = response_max_override;
  if (!(res.response_max > 0.0))
    throw std::invalid_argument("all responses are zero");
  for (const auto& [x, v] : data.examples)
    if (v > res.response_max)
      throw std::invalid_argument("response exceeds the rescaling constant");

  res.min_reveal_prob = 1.0;
  res.events.reserve(data.examples.size());
  double truth = 0.0;
  for (std::size_t i = 0; i < data.examples.size(); ++i) {
    const double z = (proj[i] - res.density_mean) / res.density_sd;
    const double phi = std::exp(-0.5 * z * z) /
                       (res.density_sd * std::sqrt(2.0 * M_PI));
    const double reveal = std::min(phi, 1.0);
    res.min_reveal_prob = std::min(res.min_reveal_prob, reveal);
    const double v = data.examples[i].second / res.response_max;
    truth += v;
    LogEvent e;
    e.context.features = data.examples[i].first;
    const bool pick_reveal = rng.uniform01() < reveal;
    e.action = pick_reveal ? 1 : 0;
    e.outcome = pick_reveal ? v : 0.0;  // r = a * v
    e.propensity = pick_reveal ? reveal : 1.0 - reveal;
    res.events.push_back(std::move(e));
  }
  res.ground_truth_mean = truth / static_cast<double>(data.examples.size());
  return res;
}

MulticlassDataset make_synthetic_multiclass(std::size_t n, int num_classes,
                                            int dim, double label_noise,
                                            std::uint64_t seed) {
  if (num_classes < 2 || dim < 2) throw std::invalid_argument("bad sizes");
  Rng rng(seed);
  // Fixed per-class linear and quadratic weights; the quadratic part makes a
  // purely linear model of the loss misspecified.
  Rng wrng(splitmix64(seed ^ 0xabcdefULL));
  std::vector<std::vector<double>> w_lin(num_classes, std::vector<double>(dim));
  std::vector<std::vector<double>> w_quad(num_classes, std::vector<double>(dim));
  for (int a = 0; a < num_classes; ++a)
    for (int j = 0; j < dim; ++j) {
      w_lin[a][j] = wrng.gaussian();
      w_quad[a][j] = 1.5 * wrng.gaussian();
    }

  MulticlassDataset out;
  out.num_classes = num_classes;
  out.examples.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Features x;
    x.reserve(dim);
    for (int j = 0; j < dim; ++j)
      x.emplace_back(static_cast<std::uint32_t>(j), rng.gaussian());
    std::vector<double> scores(num_classes, 0.0);
    for (int a = 0; a < num_classes; ++a)
      for (int j = 0; j < dim; ++j) {
        const double v = x[j].second;
        scores[a] += w_lin[a][j] * v + w_quad[a][j] * (v * v - 1.0);
      }
    int y = argmax_lowest(scores);
    if (label_noise > 0.0 && rng.uniform01() < label_noise)
      y = static_cast<int>(rng.uniform_index(num_classes));
    out.examples.emplace_back(std::move(x), y);
  }
  return out;
}

MultilabelDataset make_synthetic_multilabel(std::size_t n, int num_classes,
                                            int dim, std::uint64_t seed) {
  if (num_classes < 2 || dim < 1) throw std::invalid_argument("bad sizes");
  Rng rng(seed);
  Rng wrng(splitmix64(seed ^ 0x5eedULL));
  std::vector<std::vector<double>> w(num_classes, std::vector<double>(dim));
  std::vector<double> bias(num_classes);
  for (int a = 0; a < num_classes; ++a) {
    bias[a] = -0.4;
    for (int j = 0; j < dim; ++j) w[a][j] = wrng.gaussian();
  }

  MultilabelDataset out;
  out.num_classes = num_classes;
  out.examples.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    MultilabelDataset::Example ex;
    ex.features.reserve(dim);
    std::vector<double> scores(num_classes, 0.0);
    for (int j = 0; j < dim; ++j) {
      const double v = rng.gaussian();
      ex.features.emplace_back(static_cast<std::uint32_t>(j), v);
      for (int a = 0; a < num_classes; ++a) scores[a] += w[a][j] * v / std::sqrt(dim);
    }
    for (int a = 0; a < num_classes; ++a)
      if (scores[a] + bias[a] > 0.0) ex.labels.push_back(a);
    if (ex.labels.empty()) ex.labels.push_back(argmax_lowest(scores));
    out.examples.push_back(std::move(ex));
  }
  return out;
}

RegressionDataset make_synthetic_regression(std::size_t n, int dim,
                                            std::uint64_t seed) {
  if (dim < 2) throw std::invalid_argument("bad sizes");
  Rng rng(seed);
  Rng wrng(splitmix64(seed ^ 0x7e9ULL));
  // A dominant shared factor keeps the principal projection bounded; the
  // 1 - u^8 law piles most of the mass near the top with a thin tail toward
  // 0, so no context is more than a few density widths from the rest.
  std::vector<double> dir(dim);
  for (double& c : dir) c = 0.5 + wrng.uniform01();

  RegressionDataset out;
  out.examples.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = rng.uniform01();
    const double s = 1.0 - u * u * u * u * u * u * u * u;
    Features x;
    x.reserve(dim);
    double score = 0.0;
    for (int j = 0; j < dim; ++j) {
      const double v = 0.1 * (s * dir[j] + 0.05 * rng.gaussian());
      x.emplace_back(static_cast<std::uint32_t>(j), v);
      score += v;
    }
    const double response =
        std::max(0.0, 2.0 + 10.0 * score / dim + 0.2 * rng.gaussian());
    out.examples.emplace_back(std::move(x), response);
  }
  return out;
}

MulticlassDataset load_multiclass_csv(const std::string& path, bool has_header) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open csv: " + path);
  MulticlassDataset out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno == 1 && has_header) continue;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> values;
    while (std::getline(ss, cell, ',')) values.push_back(std::stod(cell));
    if (values.size() < 2)
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": need at least one feature and a label");
    const int label = static_cast<int>(values.back());
    if (label < 0)
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": negative label");
    Features x;
    for (std::size_t j = 0; j + 1 < values.size(); ++j)
      if (values[j] != 0.0) x.emplace_back(static_cast<std::uint32_t>(j), values[j]);
    out.examples.emplace_back(std::move(x), label);
    out.num_classes = std::max(out.num_classes, label + 1);
  }
  if (out.examples.empty()) throw std::runtime_error("empty csv: " + path);
  return out;
}

MultilabelDataset load_multilabel_sparse(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  MultilabelDataset out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string tok;
    ss >> tok;
    MultilabelDataset::Example ex;
    std::stringstream labels(tok);
    std::string lab;
    while (std::getline(labels, lab, ','))
      ex.labels.push_back(std::stoi(lab));
    if (ex.labels.empty())
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": no labels");
    while (ss >> tok) {
      const auto colon = tok.find(':');
      if (colon == std::string::npos)
        throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                 ": expected idx:val, got " + tok);
      ex.features.emplace_back(
          static_cast<std::uint32_t>(std::stoul(tok.substr(0, colon))),
          std::stod(tok.substr(colon + 1)));
    }
    std::sort(ex.features.begin(), ex.features.end());
    for (int y : ex.labels) out.num_classes = std::max(out.num_classes, y + 1);
    out.examples.push_back(std::move(ex));
  }
  if (out.examples.empty()) throw std::runtime_error("empty file: " + path);
  return out;
}

}  // namespace drbandit
