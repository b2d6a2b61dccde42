#pragma once

// Truncated normal distribution TN(mu, sigma, lower, upper): the normal
// N(mu, sigma^2) restricted and renormalized to [lower, upper]. Every entry
// point takes a two-sided window; one-sided truncation is the case of an
// infinite limit.

#include "mttm/core.hpp"

namespace mttm::tn {

// Standard normal helpers.
double std_pdf(double x);
double std_cdf(double x);
double log_std_cdf(double x);

/// Mills ratio Phi(-x) / phi(x). Finite and positive for every finite x >= 0;
/// for x > 5 evaluated by continued fraction, so it stays accurate far past
/// the point where phi(x) underflows.
double mills_ratio(double x);

/// phi(x) / Phi(x), stable for x down to -1e8.
double inverse_mills(double x);

struct Moments {
  double log_normalizer = 0.0;  // log(Phi(beta) - Phi(alpha))
  double mean = 0.0;            // E[X]
  double variance = 0.0;        // Var[X]
  double second_moment = 0.0;   // E[X^2]
  double entropy = 0.0;         // -E[log f(X)]
};

/// All moments in one pass. Throws std::domain_error when sigma is not a
/// positive finite number or the window is invalid.
Moments moments(double mu, double sigma, const CensoringBound& bound);

double log_normalizer(double mu, double sigma, const CensoringBound& bound);
double mean(double mu, double sigma, const CensoringBound& bound);
double second_moment(double mu, double sigma, const CensoringBound& bound);
double entropy(double mu, double sigma, const CensoringBound& bound);

}  // namespace mttm::tn
