#pragma once

// Independent reference computations for the tests. Nothing here calls the
// truncated-normal routines or the fitter's own algebra.

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "mttm/core.hpp"

namespace oracle {

struct TnMoments {
  double log_normalizer;
  double mean;
  double second_moment;
  double variance;
  double entropy;
};

/// Moments of TN(mu, sigma, bound) by adaptive Gauss-Kronrod quadrature of
/// the density, with -f log f integrated directly for the entropy.
TnMoments tn_quadrature(double mu, double sigma, const mttm::CensoringBound& bound);

/// Censored-data log-likelihood of a single-target model, from Boost's normal
/// distribution: log pdf for observed cells, log of the cdf difference for
/// censored ones.
double censored_loglik(const Eigen::VectorXd& w, double beta, const mttm::Dataset& data);

/// The regularized multi-target objective with every censored entry's
/// moments and entropy taken from quadrature of its stored density; cross
/// terms are expanded through the independence of the factors.
double objective_quadrature(const mttm::ModelParams& p, const mttm::VariationalState& q,
                            const mttm::Dataset& data, double lambda_reg);

/// Nelder-Mead (GSL nmsimplex2) maximization of f from x0.
Eigen::VectorXd nelder_mead_max(const std::function<double(const Eigen::VectorXd&)>& f,
                                Eigen::VectorXd x0, double step, double size_tol, int max_iter);

/// Central differences with step h.
Eigen::VectorXd central_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                                 const Eigen::VectorXd& x, double h);

enum class Sides { LeftOnly, Mixed };

/// Random dataset: x standard normal, targets from a random coupled model with
/// noise precision 4, each cell censored with probability `censor_prob`
/// using a window that contains its value.
mttm::Dataset random_dataset(std::mt19937_64& rng, std::size_t m, std::size_t n, std::size_t d,
                             double censor_prob, Sides sides = Sides::Mixed);

/// Random parameters with coupling entries in [-0.4, 0.4].
mttm::ModelParams random_params(std::mt19937_64& rng, std::size_t m, std::size_t d);

/// Flattened (a row-major, w row-major, beta) and back.
Eigen::VectorXd flatten(const mttm::ModelParams& p);
mttm::ModelParams unflatten(const Eigen::VectorXd& v, std::size_t m, std::size_t d);

}  // namespace oracle
