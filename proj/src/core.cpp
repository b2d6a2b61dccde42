#include "mttm/core.hpp"

#include <algorithm>
#include <sstream>

#include "mttm/truncnorm.hpp"

namespace mttm {

double bound_fill(const CensoringBound& b) {
  const bool lo = std::isfinite(b.lower);
  const bool hi = std::isfinite(b.upper);
  if (lo && hi) return 0.5 * b.lower + 0.5 * b.upper;
  if (hi) return b.upper;
  if (lo) return b.lower;
  return 0.0;
}

std::size_t TargetMatrix::censored_count() const {
  return static_cast<std::size_t>(std::count_if(cells_.begin(), cells_.end(), is_censored));
}

std::vector<EntryIndex> Dataset::visible_entries() const {
  std::vector<EntryIndex> out;
  for (std::size_t k = 0; k < m(); ++k)
    for (std::size_t i = 0; i < n(); ++i)
      if (!is_censored(y(k, i))) out.push_back({k, i});
  return out;
}

std::vector<EntryIndex> Dataset::hidden_entries() const {
  std::vector<EntryIndex> out;
  for (std::size_t k = 0; k < m(); ++k)
    for (std::size_t i = 0; i < n(); ++i)
      if (is_censored(y(k, i))) out.push_back({k, i});
  return out;
}

Dataset with_intercept(const Dataset& data) {
  Dataset out = data;
  const auto n = static_cast<Eigen::Index>(data.n());
  out.x.conservativeResize(n, data.x.cols() + 1);
  out.x.col(out.x.cols() - 1).setOnes();
  out.feature_names.emplace_back(kInterceptName);
  return out;
}

ValidationResult dataset_validate(const Dataset& data) {
  ValidationResult r;
  const std::size_t m = data.m();
  const std::size_t n = data.n();
  if (n < 1) r.errors.emplace_back("n >= 1 required");
  if (m < 1) r.errors.emplace_back("m >= 1 required");
  if (static_cast<std::size_t>(data.x.rows()) != n) {
    std::ostringstream os;
    os << "dimension mismatch: x has " << data.x.rows() << " rows but y has " << n << " columns";
    r.errors.push_back(os.str());
  }
  if (!data.target_names.empty() && data.target_names.size() != m)
    r.errors.emplace_back("dimension mismatch: target_names length differs from m");
  if (!data.feature_names.empty() && data.feature_names.size() != data.d())
    r.errors.emplace_back("dimension mismatch: feature_names length differs from d");
  if (!data.x.allFinite()) r.errors.emplace_back("non-finite value in x");

  for (std::size_t k = 0; k < m; ++k) {
    std::size_t hidden_in_row = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const TargetEntry& e = data.y(k, i);
      if (const auto* obs = std::get_if<Observed>(&e)) {
        ++r.visible;
        if (!std::isfinite(obs->value)) {
          std::ostringstream os;
          os << "non-finite observed value at (" << k << ", " << i << ")";
          r.errors.push_back(os.str());
        }
        continue;
      }
      ++r.hidden;
      ++hidden_in_row;
      const CensoringBound& b = std::get<Censored>(e).bound;
      if (!b.valid() || !b.has_finite_side()) {
        std::ostringstream os;
        os << "degenerate bound at (" << k << ", " << i << "): [" << b.lower << ", " << b.upper << "]";
        r.errors.push_back(os.str());
      }
    }
    if (n > 0 && hidden_in_row == n) {
      std::ostringstream os;
      os << "target row " << k;
      if (k < data.target_names.size()) os << " (" << data.target_names[k] << ")";
      os << " is entirely censored";
      r.warnings.push_back(os.str());
    }
  }
  return r;
}

void require_valid(const Dataset& data) {
  const ValidationResult r = dataset_validate(data);
  if (r.ok()) return;
  std::ostringstream os;
  os << "invalid dataset:";
  for (const auto& e : r.errors) os << "\n  " << e;
  throw ValidationError(os.str());
}

ModelParams ModelParams::zeros(std::size_t m, std::size_t d, double beta) {
  ModelParams p;
  const auto mi = static_cast<Eigen::Index>(m);
  p.a = Eigen::MatrixXd::Zero(mi, m > 0 ? mi - 1 : 0);
  p.w = Eigen::MatrixXd::Zero(mi, static_cast<Eigen::Index>(d));
  p.beta = beta;
  return p;
}

Eigen::MatrixXd ModelParams::coupling_matrix() const {
  const auto mi = static_cast<Eigen::Index>(m());
  Eigen::MatrixXd c = Eigen::MatrixXd::Identity(mi, mi);
  for (Eigen::Index k = 0; k < mi; ++k)
    for (Eigen::Index j = 0; j < mi; ++j)
      if (j != k) c(k, j) = -a(k, j < k ? j : j - 1);
  return c;
}

void ModelParams::check_dimensions(const Dataset& data) const {
  const auto m = static_cast<Eigen::Index>(data.m());
  if (w.rows() != m || w.cols() != static_cast<Eigen::Index>(data.d()) || a.rows() != m ||
      a.cols() != std::max<Eigen::Index>(m - 1, 0)) {
    throw std::invalid_argument("model parameters do not match dataset dimensions");
  }
  if (!(beta > 0.0)) throw std::domain_error("beta must be positive");
}

VariationalState VariationalState::from_dataset(const Dataset& data, double sigma) {
  VariationalState q;
  q.m_ = data.m();
  q.n_ = data.n();
  q.cells_.resize(q.m_ * q.n_);
  for (std::size_t k = 0; k < q.m_; ++k) {
    for (std::size_t i = 0; i < q.n_; ++i) {
      QEntry& e = q.cells_[k * q.n_ + i];
      if (const auto* obs = std::get_if<Observed>(&data.y(k, i))) {
        e.mean = obs->value;
        e.second_moment = obs->value * obs->value;
        continue;
      }
      e.censored = true;
      e.bound = std::get<Censored>(data.y(k, i)).bound;
      q.set_truncated_normal(k, i, bound_fill(e.bound), sigma);
    }
  }
  return q;
}

const QEntry& VariationalState::set_truncated_normal(std::size_t k, std::size_t i, double mu,
                                                     double sigma) {
  QEntry& e = cells_[k * n_ + i];
  if (!e.censored) throw std::domain_error("cannot assign a truncated normal to an observed entry");
  const tn::Moments mom = tn::moments(mu, sigma, e.bound);
  e.mu = mu;
  e.sigma = sigma;
  e.mean = mom.mean;
  e.second_moment = mom.second_moment;
  e.variance = mom.variance;
  e.entropy = mom.entropy;
  return e;
}

double VariationalState::max_cache_error() const {
  auto rel = [](double got, double want) {
    return std::abs(got - want) / std::max(std::abs(want), 1e-300);
  };
  double worst = 0.0;
  for (const QEntry& e : cells_) {
    if (!e.censored) {
      worst = std::max(worst, rel(e.second_moment, e.mean * e.mean));
      continue;
    }
    const tn::Moments mom = tn::moments(e.mu, e.sigma, e.bound);
    worst = std::max({worst, rel(e.mean, mom.mean), rel(e.second_moment, mom.second_moment),
                      rel(e.variance, mom.variance), rel(e.entropy, mom.entropy)});
  }
  return worst;
}

Eigen::MatrixXd VariationalState::means() const {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(m_), static_cast<Eigen::Index>(n_));
  for (std::size_t k = 0; k < m_; ++k)
    for (std::size_t i = 0; i < n_; ++i)
      out(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i)) = cells_[k * n_ + i].mean;
  return out;
}

Eigen::MatrixXd VariationalState::variances() const {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(m_), static_cast<Eigen::Index>(n_));
  for (std::size_t k = 0; k < m_; ++k)
    for (std::size_t i = 0; i < n_; ++i)
      out(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i)) = cells_[k * n_ + i].variance;
  return out;
}

void FitConfig::validate() const {
  if (!(lambda_reg >= 0.0) || !std::isfinite(lambda_reg))
    throw std::invalid_argument("lambda_reg must be a nonnegative finite number");
  if (max_sweeps < 1) throw std::invalid_argument("max_sweeps must be positive");
  if (!(rel_tol > 0.0)) throw std::invalid_argument("rel_tol must be positive");
  if (fixed_beta && !(*fixed_beta > 0.0)) throw std::invalid_argument("fixed_beta must be positive");
}

}  // namespace mttm
