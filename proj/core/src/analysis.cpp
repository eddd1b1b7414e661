#include "drbandit/analysis.hpp"

#include <cmath>
#include <stdexcept>

namespace drbandit {

namespace {

double clamp01(double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); }

// E_{(x,a)~nu}[ f(x,a) ]
template <typename F>
double expect_nu(const DiscreteDgp& dgp, const PolicyTable& nu, F&& f) {
  double s = 0.0;
  for (int x = 0; x < dgp.num_contexts(); ++x)
    for (int a = 0; a < dgp.num_actions(); ++a) {
      const double w = dgp.context_prob[x] * nu[x][a];
      if (w > 0.0) s += w * f(x, a);
    }
  return s;
}

// r*(x, nu) for one context.
double rstar_nu(const DiscreteDgp& dgp, const PolicyTable& nu, int x) {
  double s = 0.0;
  for (int a = 0; a < dgp.num_actions(); ++a) s += nu[x][a] * dgp.rstar(x, a);
  return s;
}

double var_x_rstar_nu(const DiscreteDgp& dgp, const PolicyTable& nu) {
  double mean = 0.0;
  for (int x = 0; x < dgp.num_contexts(); ++x)
    mean += dgp.context_prob[x] * rstar_nu(dgp, nu, x);
  double var = 0.0;
  for (int x = 0; x < dgp.num_contexts(); ++x) {
    const double v = rstar_nu(dgp, nu, x) - mean;
    var += dgp.context_prob[x] * v * v;
  }
  return var;
}

// nu(a|x)/mu_hat(a|x), 0 when mu_hat is infinite.
double weight_of(const ErrorDecomposition& d, const PolicyTable& nu, int x, int a) {
  const double mh = d.mu_hat[x][a];
  return std::isinf(mh) ? 0.0 : nu[x][a] / mh;
}

bool policy_deterministic(const PolicyTable& nu) {
  for (const auto& row : nu)
    for (double p : row)
      if (p != 0.0 && p != 1.0) return false;
  return true;
}

}  // namespace

ErrorDecomposition ErrorDecomposition::make(
    const DiscreteDgp& dgp, const std::vector<std::vector<double>>& rhat,
    const std::vector<std::vector<double>>& mu_hat) {
  ErrorDecomposition d;
  const int X = dgp.num_contexts();
  const int K = dgp.num_actions();
  d.rhat.assign(X, std::vector<double>(K, 0.0));
  d.mu_hat.assign(X, std::vector<double>(K, 0.0));
  d.delta.assign(X, std::vector<double>(K, 0.0));
  d.rho.assign(X, std::vector<double>(K, 0.0));
  for (int x = 0; x < X; ++x)
    for (int a = 0; a < K; ++a) {
      const double rh = clamp01(rhat.at(x).at(a));
      const double mh = mu_hat.at(x).at(a);
      if (!(mh > 0.0)) throw std::invalid_argument("mu_hat must be positive or +inf");
      d.rhat[x][a] = rh;
      d.mu_hat[x][a] = mh;
      d.delta[x][a] = rh - dgp.rstar(x, a);
      d.rho[x][a] = std::isinf(mh) ? 0.0 : dgp.logging[x][a] / mh;
    }
  return d;
}

ErrorDecomposition ErrorDecomposition::exact(const DiscreteDgp& dgp) {
  const int X = dgp.num_contexts();
  const int K = dgp.num_actions();
  std::vector<std::vector<double>> rhat(X, std::vector<double>(K, 0.0));
  for (int x = 0; x < X; ++x)
    for (int a = 0; a < K; ++a) rhat[x][a] = dgp.rstar(x, a);
  return make(dgp, rhat, dgp.logging);
}

double term_expectation_exact(const DiscreteDgp& dgp, const PolicyTable& nu,
                              const ErrorDecomposition& d) {
  return expect_nu(dgp, nu, [&](int x, int a) {
    return dgp.rstar(x, a) + (1.0 - d.rho[x][a]) * d.delta[x][a];
  });
}

double term_variance_exact(const DiscreteDgp& dgp, const PolicyTable& nu,
                           const ErrorDecomposition& d) {
  const int X = dgp.num_contexts();
  const int K = dgp.num_actions();

  // Term 1: Var_{x~D}[ E_{a~nu}[ r* + (1-rho) delta ] ]
  double mean1 = 0.0;
  std::vector<double> inner(X, 0.0);
  for (int x = 0; x < X; ++x) {
    double s = 0.0;
    for (int a = 0; a < K; ++a)
      s += nu[x][a] * (dgp.rstar(x, a) + (1.0 - d.rho[x][a]) * d.delta[x][a]);
    inner[x] = s;
    mean1 += dgp.context_prob[x] * s;
  }
  double t1 = 0.0;
  for (int x = 0; x < X; ++x) {
    const double v = inner[x] - mean1;
    t1 += dgp.context_prob[x] * v * v;
  }

  // Term 2: - E_{x~D}[ E_{a~nu}[rho delta]^2 ]
  double t2 = 0.0;
  for (int x = 0; x < X; ++x) {
    double s = 0.0;
    for (int a = 0; a < K; ++a) s += nu[x][a] * d.rho[x][a] * d.delta[x][a];
    t2 += dgp.context_prob[x] * s * s;
  }

  // Term 3: + E_nu[ (nu/mu_hat) rho Var_r ]
  const double t3 = expect_nu(dgp, nu, [&](int x, int a) {
    return weight_of(d, nu, x, a) * d.rho[x][a] * dgp.reward_variance(x, a);
  });

  // Term 4: + E_nu[ (nu/mu_hat) rho delta^2 ]
  const double t4 = expect_nu(dgp, nu, [&](int x, int a) {
    return weight_of(d, nu, x, a) * d.rho[x][a] * d.delta[x][a] * d.delta[x][a];
  });

  return t1 - t2 + t3 + t4;
}

double term_variance_bound(const DiscreteDgp& dgp, const PolicyTable& nu,
                           const ErrorDecomposition& d) {
  double m = 0.0;
  for (int x = 0; x < dgp.num_contexts(); ++x)
    for (int a = 0; a < dgp.num_actions(); ++a)
      if (dgp.context_prob[x] > 0.0) m = std::max(m, weight_of(d, nu, x, a));

  const double term2 = 2.0 * expect_nu(dgp, nu, [&](int x, int a) {
    return std::abs((1.0 - d.rho[x][a]) * d.delta[x][a]);
  });
  const double term3 = m * expect_nu(dgp, nu, [&](int x, int a) {
    // E_r[(r - r_hat)^2] = Var_r + delta^2 since E_r[r] = r*.
    return d.rho[x][a] * (dgp.reward_variance(x, a) + d.delta[x][a] * d.delta[x][a]);
  });
  return var_x_rstar_nu(dgp, nu) + term2 + term3;
}

double dr_bias_exact(const DiscreteDgp& dgp, const PolicyTable& nu,
                     const ErrorDecomposition& d) {
  return std::abs(expect_nu(dgp, nu, [&](int x, int a) {
    return (1.0 - d.rho[x][a]) * d.delta[x][a];
  }));
}

double dm_bias_exact(const DiscreteDgp& dgp, const PolicyTable& nu,
                     const ErrorDecomposition& d) {
  return std::abs(expect_nu(dgp, nu, [&](int x, int a) { return d.delta[x][a]; }));
}

double ips_bias_exact(const DiscreteDgp& dgp, const PolicyTable& nu,
                      const ErrorDecomposition& d) {
  return std::abs(expect_nu(dgp, nu, [&](int x, int a) {
    return dgp.rstar(x, a) * (1.0 - d.rho[x][a]);
  }));
}

double dr_variance_deterministic_target(const DiscreteDgp& dgp,
                                        const PolicyTable& nu,
                                        const ErrorDecomposition& d) {
  if (!policy_deterministic(nu))
    throw std::domain_error("Theorem 3.5 requires a deterministic target policy");

  // Var_{(x,a)~nu}[ r* + (1-rho) delta ]
  const double mean = expect_nu(dgp, nu, [&](int x, int a) {
    return dgp.rstar(x, a) + (1.0 - d.rho[x][a]) * d.delta[x][a];
  });
  const double t1 = expect_nu(dgp, nu, [&](int x, int a) {
    const double v = dgp.rstar(x, a) + (1.0 - d.rho[x][a]) * d.delta[x][a] - mean;
    return v * v;
  });
  const double t2 = expect_nu(dgp, nu, [&](int x, int a) {
    const double mh = d.mu_hat[x][a];
    return std::isinf(mh) ? 0.0
                          : d.rho[x][a] * dgp.reward_variance(x, a) / mh;
  });
  const double t3 = expect_nu(dgp, nu, [&](int x, int a) {
    const double mh = d.mu_hat[x][a];
    if (std::isinf(mh)) return 0.0;
    return (1.0 - dgp.logging[x][a]) / mh * d.rho[x][a] * d.delta[x][a] * d.delta[x][a];
  });
  return t1 + t2 + t3;
}

double ips_variance_deterministic_target(const DiscreteDgp& dgp,
                                         const PolicyTable& nu,
                                         const ErrorDecomposition& d) {
  // IPS is DR with r_hat == 0, i.e. delta == -r*.
  ErrorDecomposition zero = d;
  for (int x = 0; x < dgp.num_contexts(); ++x)
    for (int a = 0; a < dgp.num_actions(); ++a) {
      zero.rhat[x][a] = 0.0;
      zero.delta[x][a] = -dgp.rstar(x, a);
    }
  return dr_variance_deterministic_target(dgp, nu, zero);
}

double dm_variance_exact(const DiscreteDgp& dgp, const PolicyTable& nu,
                         const ErrorDecomposition& d) {
  const double mean = expect_nu(dgp, nu, [&](int x, int a) {
    return dgp.rstar(x, a) + d.delta[x][a];
  });
  return expect_nu(dgp, nu, [&](int x, int a) {
    const double v = dgp.rstar(x, a) + d.delta[x][a] - mean;
    return v * v;
  });
}

AssumptionBounds compute_assumption_bounds(const DiscreteDgp& dgp,
                                           const PolicyTable& nu,
                                           const ErrorDecomposition& d) {
  AssumptionBounds b;
  for (int x = 0; x < dgp.num_contexts(); ++x) {
    if (dgp.context_prob[x] <= 0.0) continue;
    for (int a = 0; a < dgp.num_actions(); ++a) {
      b.weight_bound = std::max(b.weight_bound, weight_of(d, nu, x, a));
      b.delta_rho = std::max(b.delta_rho, std::abs(1.0 - d.rho[x][a]));
      b.rho_max = std::max(b.rho_max, d.rho[x][a]);
    }
  }
  b.delta_delta =
      expect_nu(dgp, nu, [&](int x, int a) { return std::abs(d.delta[x][a]); });
  b.e_rhat = expect_nu(dgp, nu, [&](int x, int a) {
    return dgp.reward_variance(x, a) + d.delta[x][a] * d.delta[x][a];
  });
  b.variance_term = var_x_rstar_nu(dgp, nu);
  return b;
}

double freedman_half_width(std::size_t n, double range_bound,
                           double variance_bound, double delta) {
  if (n < 1) throw std::domain_error("n must be >= 1");
  if (!(range_bound > 0.0)) throw std::domain_error("range bound must be positive");
  if (variance_bound < 0.0) throw std::domain_error("variance bound must be >= 0");
  if (!(delta > 0.0 && delta < 1.0)) throw std::domain_error("delta must be in (0,1)");
  const double ln_term = std::log(2.0 / delta);
  const double nn = static_cast<double>(n);
  return 2.0 * std::max(range_bound * ln_term / nn,
                        std::sqrt(variance_bound * ln_term / nn));
}

double finite_sample_bound(const AssumptionBounds& b, std::size_t n, double delta) {
  const double bias = b.delta_rho * b.delta_delta;
  const double variance =
      b.variance_term + 2.0 * bias + b.weight_bound * b.rho_max * b.e_rhat;
  return bias + freedman_half_width(n, 1.0 + b.weight_bound, variance, delta);
}

namespace {

// ||f||_{p,nu}; p may be +infinity (sup over the support of nu x D).
template <typename F>
double lp_norm(const DiscreteDgp& dgp, const PolicyTable& nu, double p, F&& f) {
  if (std::isinf(p)) {
    double m = 0.0;
    for (int x = 0; x < dgp.num_contexts(); ++x) {
      if (dgp.context_prob[x] <= 0.0) continue;
      for (int a = 0; a < dgp.num_actions(); ++a)
        if (nu[x][a] > 0.0) m = std::max(m, std::abs(f(x, a)));
    }
    return m;
  }
  const double s = expect_nu(
      dgp, nu, [&](int x, int a) { return std::pow(std::abs(f(x, a)), p); });
  return std::pow(s, 1.0 / p);
}

}  // namespace

MomentBounds compute_moment_bounds(const DiscreteDgp& dgp, const PolicyTable& nu,
                                   const ErrorDecomposition& d, double p,
                                   double q) {
  MomentBounds b;
  b.p = p;
  b.q = q;
  AssumptionBounds sup = compute_assumption_bounds(dgp, nu, d);
  b.weight_bound = sup.weight_bound;
  b.variance_term = sup.variance_term;
  b.delta_delta = lp_norm(dgp, nu, q, [&](int x, int a) { return d.delta[x][a]; });
  b.delta_rho = lp_norm(dgp, nu, p, [&](int x, int a) { return 1.0 - d.rho[x][a]; });
  b.rho_max = lp_norm(dgp, nu, p, [&](int x, int a) { return d.rho[x][a]; });
  b.e_rhat = lp_norm(dgp, nu, q, [&](int x, int a) {
    return dgp.reward_variance(x, a) + d.delta[x][a] * d.delta[x][a];
  });
  return b;
}

double finite_sample_bound_moments(const MomentBounds& b, std::size_t n,
                                   double delta) {
  const double inv_p = std::isinf(b.p) ? 0.0 : 1.0 / b.p;
  const double inv_q = std::isinf(b.q) ? 0.0 : 1.0 / b.q;
  if (std::abs(inv_p + inv_q - 1.0) > 1e-12)
    throw std::domain_error("p and q must be conjugate exponents");
  const double bias = b.delta_rho * b.delta_delta;
  const double variance =
      b.variance_term + 2.0 * bias + b.weight_bound * b.rho_max * b.e_rhat;
  return bias + freedman_half_width(n, 1.0 + b.weight_bound, variance, delta);
}

}  // namespace drbandit
