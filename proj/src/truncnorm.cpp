#include "mttm/truncnorm.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <boost/math/quadrature/gauss.hpp>

namespace mttm::tn {

namespace {

constexpr double kLogSqrt2Pi = 0.918938533204672741780329736406;
constexpr double kInvSqrt2Pi = 0.398942280401432677939946059934;
constexpr double kSqrt2Pi = 2.50662827463100050241576528481;
constexpr double kInvSqrt2 = 0.707106781186547524400844362105;
constexpr double kHalfLog2PiE = 1.41893853320467274178032973641;

// Above this argument the Mills ratio switches from erfc to the continued
// fraction.
constexpr double kMillsSwitch = 5.0;

// Moments of the standard normal restricted to [a, b].
struct StdMoments {
  double log_z = 0.0;
  double m1 = 0.0;
  double var = 1.0;
  double entropy = kHalfLog2PiE;
};

// Window entirely above zero: 0 <= a < b <= +inf. Everything is expressed
// relative to phi(a) so nothing underflows in the far tail:
//   Z / phi(a) = R(a) - exp(-delta) R(b),  delta = (b^2 - a^2) / 2.
StdMoments upper_tail(double a, double b) {
  const double ra = mills_ratio(a);
  double e = 0.0;
  double rb = 0.0;
  if (std::isfinite(b)) {
    const double delta = 0.5 * (b - a) * (b + a);
    e = std::exp(-delta);
    rb = e > 0.0 ? mills_ratio(b) : 0.0;
  }
  const double dz = ra - e * rb;
  StdMoments s;
  s.log_z = -0.5 * a * a - kLogSqrt2Pi + std::log(dz);
  const double one_minus_e = std::isfinite(b) ? -std::expm1(-0.5 * (b - a) * (b + a)) : 1.0;
  s.m1 = one_minus_e / dz;
  const double b_term = e > 0.0 ? b * e : 0.0;
  const double m2 = 1.0 + (a - b_term) / dz;
  s.var = std::max(m2 - s.m1 * s.m1, 0.0);
  s.entropy = std::log(dz) + 0.5 * (m2 - a * a);
  return s;
}

// Window containing zero in its interior: a < 0 < b.
StdMoments straddle(double a, double b) {
  const double z = 0.5 * ((std::isfinite(a) ? std::erf(-a * kInvSqrt2) : 1.0) +
                          (std::isfinite(b) ? std::erf(b * kInvSqrt2) : 1.0));
  const double pa = std::isfinite(a) ? std_pdf(a) / z : 0.0;
  const double pb = std::isfinite(b) ? std_pdf(b) / z : 0.0;
  StdMoments s;
  s.log_z = std::log(z);
  if (std::isfinite(a) && std::isfinite(b)) {
    // factor out the endpoint nearer zero so the exponent is never positive
    s.m1 = -a <= b ? -pa * std::expm1(-0.5 * (b - a) * (b + a))
                   : pb * std::expm1(-0.5 * (b - a) * (-b - a));
  } else {
    s.m1 = pa - pb;
  }
  const double m2 = 1.0 + (std::isfinite(a) ? a * pa : 0.0) - (std::isfinite(b) ? b * pb : 0.0);
  s.var = std::max(m2 - s.m1 * s.m1, 0.0);
  s.entropy = s.log_z + kLogSqrt2Pi + 0.5 * m2;
  return s;
}

// Narrow finite window centred at c with half width h and |c| h <= 2. The
// closed forms lose digits to cancellation here, so integrate the tilted
// density exp(-c t - t^2 / 2) on [-h, h] directly; it is entire and a fixed
// Gauss-Legendre rule resolves it to rounding.
StdMoments narrow_window(double c, double h) {
  using Rule = boost::math::quadrature::gauss<double, 30>;
  auto g = [c](double t) { return std::exp(-c * t - 0.5 * t * t); };
  const double i0 = Rule::integrate(g, -h, h);
  const double tbar = Rule::integrate([&](double t) { return t * g(t); }, -h, h) / i0;
  const double var =
      Rule::integrate([&](double t) { return (t - tbar) * (t - tbar) * g(t); }, -h, h) / i0;
  StdMoments s;
  s.log_z = -0.5 * c * c - kLogSqrt2Pi + std::log(i0);
  s.m1 = c + tbar;
  s.var = var;
  s.entropy = std::log(i0) + c * tbar + 0.5 * (tbar * tbar + var);
  return s;
}

StdMoments standardized(double a, double b, double width, double centre) {
  if (!std::isfinite(a) && !std::isfinite(b)) return {};
  if (std::isfinite(a) && std::isfinite(b) && width <= 2.0 && std::abs(centre) * width <= 4.0) {
    return narrow_window(centre, 0.5 * width);
  }
  if (a >= 0.0) return upper_tail(a, b);
  if (b <= 0.0) {
    StdMoments s = upper_tail(-b, -a);
    s.m1 = -s.m1;
    return s;
  }
  return straddle(a, b);
}

void check_arguments(double mu, double sigma, const CensoringBound& bound) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw std::domain_error("truncated normal: sigma must be positive and finite");
  }
  if (!std::isfinite(mu)) throw std::domain_error("truncated normal: mu must be finite");
  if (!bound.valid()) throw std::domain_error("truncated normal: invalid window");
}

}  // namespace

double std_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

double std_cdf(double x) { return 0.5 * std::erfc(-x * kInvSqrt2); }

double log_std_cdf(double x) {
  if (x < -kMillsSwitch) return -0.5 * x * x - kLogSqrt2Pi + std::log(mills_ratio(-x));
  if (x > kMillsSwitch) return std::log1p(-0.5 * std::erfc(x * kInvSqrt2));
  return std::log(std_cdf(x));
}

double mills_ratio(double x) {
  if (std::isnan(x)) return x;
  if (x == kInf) return 0.0;
  if (x < kMillsSwitch) {
    if (x < -38.0) return kInf;
    return 0.5 * std::erfc(x * kInvSqrt2) * kSqrt2Pi * std::exp(0.5 * x * x);
  }
  // Laplace continued fraction R(x) = 1 / (x + 1/(x + 2/(x + 3/(x + ...)))),
  // evaluated by the modified Lentz method.
  constexpr double tiny = 1e-300;
  double f = x;
  double c = x;
  double d = 0.0;
  for (int j = 1; j < 500; ++j) {
    d = x + j * d;
    if (d == 0.0) d = tiny;
    d = 1.0 / d;
    c = x + j / c;
    if (c == 0.0) c = tiny;
    const double delta = c * d;
    f *= delta;
    if (std::abs(delta - 1.0) < 1e-16) break;
  }
  return 1.0 / f;
}

double inverse_mills(double x) {
  if (x < 0.0) return 1.0 / mills_ratio(-x);
  return std_pdf(x) / std_cdf(x);
}

Moments moments(double mu, double sigma, const CensoringBound& bound) {
  check_arguments(mu, sigma, bound);
  const double a = (bound.lower - mu) / sigma;
  const double b = (bound.upper - mu) / sigma;
  double width = kInf;
  double centre = 0.0;
  if (std::isfinite(a) && std::isfinite(b)) {
    width = (bound.upper - bound.lower) / sigma;
    centre = (0.5 * bound.lower + 0.5 * bound.upper - mu) / sigma;
  }
  const StdMoments s = standardized(a, b, width, centre);

  Moments out;
  out.log_normalizer = std::min(s.log_z, 0.0);
  out.mean = std::clamp(mu + sigma * s.m1, bound.lower, bound.upper);
  out.variance = sigma * sigma * s.var;
  out.second_moment = out.mean * out.mean + out.variance;
  out.entropy = s.entropy + std::log(sigma);
  return out;
}

double log_normalizer(double mu, double sigma, const CensoringBound& bound) {
  return moments(mu, sigma, bound).log_normalizer;
}

double mean(double mu, double sigma, const CensoringBound& bound) {
  return moments(mu, sigma, bound).mean;
}

double second_moment(double mu, double sigma, const CensoringBound& bound) {
  return moments(mu, sigma, bound).second_moment;
}

double entropy(double mu, double sigma, const CensoringBound& bound) {
  return moments(mu, sigma, bound).entropy;
}

}  // namespace mttm::tn
