#pragma once

#include <vector>

#include "drbandit/discrete_dgp.hpp"
#include "drbandit/types.hpp"

namespace drbandit {

// Model errors against a DiscreteDgp’s ground truth:
//   delta(x,a) = r_hat(x,a) - r*(x,a)     (additive error of the reward model)
//   rho(x,a)   = mu(a|x) / mu_hat(a|x)    (multiplicative error of the
//                                          propensity model; 0 if mu_hat=inf)
// The mu_hat table itself is retained because the variance expressions also
// need nu/mu_hat.
struct ErrorDecomposition {
  std::vector<std::vector<double>> rhat;    // clamped to [0,1]
  std::vector<std::vector<double>> mu_hat;  // entries in (0, +inf]
  std::vector<std::vector<double>> delta;
  std::vector<std::vector<double>> rho;

  static ErrorDecomposition make(const DiscreteDgp& dgp,
                                 const std::vector<std::vector<double>>& rhat,
                                 const std::vector<std::vector<double>>& mu_hat);

  // Exact tables for both models (delta == 0, rho == 1).
  static ErrorDecomposition exact(const DiscreteDgp& dgp);
};

// Lemma 3.2: E[V_hat_k] = E_{(x,a)~nu}[ r*(x,a) + (1-rho(x,a)) delta(x,a) ].
double term_expectation_exact(const DiscreteDgp& dgp, const PolicyTable& nu,
                              const ErrorDecomposition& d);

// Lemma 3.3(i), the four-term exact variance of a single term.
double term_variance_exact(const DiscreteDgp& dgp, const PolicyTable& nu,
                           const ErrorDecomposition& d);

// Lemma 3.3(ii), the upper bound; weight_bound M defaults to the realized
// max of nu/mu_hat over the support.
double term_variance_bound(const DiscreteDgp& dgp, const PolicyTable& nu,
                           const ErrorDecomposition& d);

// Theorem 3.4 (stationary exploration): |E_nu[(1-rho) delta]|.
double dr_bias_exact(const DiscreteDgp& dgp, const PolicyTable& nu,
                     const ErrorDecomposition& d);
// Companion biases from the same theorem's discussion.
double dm_bias_exact(const DiscreteDgp& dgp, const PolicyTable& nu,
                     const ErrorDecomposition& d);
double ips_bias_exact(const DiscreteDgp& dgp, const PolicyTable& nu,
                      const ErrorDecomposition& d);

// Theorem 3.5: per-sample variance (n * Var of the estimator) for a
// deterministic target policy under stationary exploration.
double dr_variance_deterministic_target(const DiscreteDgp& dgp,
                                        const PolicyTable& nu,
                                        const ErrorDecomposition& d);
// Same expression with r_hat == 0 (the IPS special case).
double ips_variance_deterministic_target(const DiscreteDgp& dgp,
                                         const PolicyTable& nu,
                                         const ErrorDecomposition& d);
// DM special case: Var_{(x,a)~nu}[r* + delta].
double dm_variance_exact(const DiscreteDgp& dgp, const PolicyTable& nu,
                         const ErrorDecomposition& d);

// Constants of Assumptions 1-2 plus the Var_x[r*(x,nu)] term used by the
// finite-sample bound.
struct AssumptionBounds {
  double weight_bound = 0.0;   // M: sup nu/mu_hat
  double delta_delta = 0.0;    // E_nu[|delta|]
  double delta_rho = 0.0;      // sup |1 - rho|
  double rho_max = 0.0;        // sup rho
  double e_rhat = 0.0;         // E_nu[ E_r[(r_hat - r)^2] ]
  double variance_term = 0.0;  // Var_{x~D}[r*(x,nu)]
};

AssumptionBounds compute_assumption_bounds(const DiscreteDgp& dgp,
                                           const PolicyTable& nu,
                                           const ErrorDecomposition& d);

// Appendix B: half-width 2*max{ D ln(2/delta)/n, sqrt(V ln(2/delta)/n) }
// (the sum-form inequality divided by n for a mean of n terms).
double freedman_half_width(std::size_t n, double range_bound,
                           double variance_bound, double delta);

// Theorem 3.7: with probability >= 1-delta,
// |V_hat_DR - V| <= delta_rho*delta_delta
//   + 2 max{ (1+M) ln(2/d)/n,
//            sqrt((Var_x[r*] + 2 delta_rho*delta_delta + M rho_max e_rhat)
//                 * ln(2/d) / n) }.
double finite_sample_bound(const AssumptionBounds& b, std::size_t n, double delta);

// Appendix C: the same bound shape with L_p/L_q moment constants,
// 1/p + 1/q = 1. p or q may be +infinity.
struct MomentBounds {
  double p = 2.0;
  double q = 2.0;
  double weight_bound = 0.0;  // M (still a sup bound)
  double delta_delta = 0.0;   // ||delta||_{q,nu}
  double delta_rho = 0.0;     // ||1-rho||_{p,nu}
  double rho_max = 0.0;       // ||rho||_{p,nu}
  double e_rhat = 0.0;        // E_nu[ E_r[(r_hat-r)^2]^q ]^{1/q}
  double variance_term = 0.0; // Var_x[r*(x,nu)]
};

MomentBounds compute_moment_bounds(const DiscreteDgp& dgp, const PolicyTable& nu,
                                   const ErrorDecomposition& d, double p, double q);

double finite_sample_bound_moments(const MomentBounds& b, std::size_t n,
                                   double delta);

}  // namespace drbandit
